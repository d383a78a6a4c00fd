#include "sib/frontier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace sib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLn2 = std::numbers::ln2;

// log2(1 - omega * s), -inf at or beyond omega = 1/s.
double log2_one_minus(double omega, double s) {
  const double arg = 1.0 - omega * s;
  return arg > 0.0 ? std::log2(arg) : -kInf;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

double find_crossing(const std::function<double(double)>& fn, double lo, double hi,
                     double grid_step) {
  if (fn(lo) > 0.0) return lo;
  if (fn(hi) <= 0.0) return hi;
  double a = lo;
  double b = hi;
  if (grid_step > 0.0) {
    for (double x = lo + grid_step; x < hi; x += grid_step) {
      if (fn(x) > 0.0) {
        b = x;
        break;
      }
      a = x;
    }
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (a + b);
    if (mid <= a || mid >= b) break;
    if (fn(mid) > 0.0) b = mid;
    else a = mid;
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Scalar two-stage sweeps

void ScalarTwoStageParams::validate() const {
  if (!(sigma_x > 0.0 && sigma_0 > 0.0 && sigma_si > 0.0))
    throw Error(Errc::validation, "scalar parameters must be positive");
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw Error(Errc::validation, "gamma outside [0, 1]");
  if (!(cond_noise() > 0.0))
    throw Error(Errc::validation, "Sigma_0 - gamma^2 Sigma_si must be positive");
}

double ScalarTwoStageParams::zero_rate_relevance() const {
  return std::log2(1.0 + sigma_x / sigma_si);
}

double ScalarTwoStageParams::relevance(double omega) const {
  const double a = 1.0 - gamma;
  return std::log2(1.0 + (1.0 / sigma_si + a * a * omega) * sigma_x);
}

double ScalarTwoStageParams::rate_term(double omega, double delta) const {
  return delta - log2_one_minus(omega, cond_noise()) - zero_rate_relevance();
}

double ScalarTwoStageParams::omega_for_relevance(double delta) const {
  const double a2 = (1.0 - gamma) * (1.0 - gamma);
  const double need = (std::exp2(delta) - 1.0) / sigma_x - 1.0 / sigma_si;
  if (need <= 0.0) return 0.0;
  if (a2 == 0.0) return kInf;
  return need / a2;
}

GaussianScalableModel ScalarTwoStageParams::model() const {
  return GaussianScalableModel::from_spec(
      scalar_model_spec(sigma_x, sigma_0, {sigma_si, sigma_si}, gamma));
}

TwoStagePoint symmetric_two_stage_point(const ScalarTwoStageParams& params, double omega1,
                                        double omega2) {
  params.validate();
  const double cap = params.omega_cap();
  const double slack = kPsdTolerance;
  if (!(omega1 >= -slack && omega1 <= omega2 + slack && omega2 <= cap + slack))
    throw Error(Errc::infeasible_pair, "need 0 <= omega1 <= omega2 <= " + fmt_double(cap));
  TwoStagePoint p;
  p.delta1 = params.relevance(omega1);
  p.delta2 = params.relevance(omega2);
  p.stage1_rate = std::max(0.0, params.rate_term(omega1, p.delta1));
  p.stage2_half_rate = std::max(0.0, 0.5 * params.rate_term(omega2, p.delta2));
  p.r_sym = std::max(p.stage1_rate, p.stage2_half_rate);
  return p;
}

Delta1Result max_delta1_given(const ScalarTwoStageParams& params, double delta2_target,
                              double r_sym) {
  params.validate();
  if (!(delta2_target < params.max_relevance()))
    throw Error(Errc::delta2_infeasible,
                "delta2 " + fmt_double(delta2_target) + " not below the maximal relevance " +
                    fmt_double(params.max_relevance()));
  Delta1Result out;
  out.omega2 = params.omega_for_relevance(delta2_target);
  out.r_min = std::max(0.0, 0.5 * params.rate_term(out.omega2, delta2_target));
  if (r_sym < out.r_min - 1e-12)
    throw Error(Errc::delta2_infeasible, "symmetric rate " + fmt_double(r_sym) +
                                             " below the minimum " + fmt_double(out.r_min));

  // Relevance bound rises with omega1, the stage-1 rate bound falls.
  const double c = params.zero_rate_relevance();
  const double s = params.cond_noise();
  auto gap = [&](double w) { return params.relevance(w) - (r_sym + log2_one_minus(w, s) + c); };
  out.omega1 = find_crossing(gap, 0.0, out.omega2);
  out.delta1_max = std::min(params.relevance(out.omega1),
                            r_sym + log2_one_minus(out.omega1, s) + c);
  return out;
}

Delta2Result max_delta2_given(const ScalarTwoStageParams& params, double delta1_target,
                              std::optional<double> r_sym) {
  params.validate();
  if (!(delta1_target < params.max_relevance()))
    throw Error(Errc::delta1_infeasible,
                "delta1 " + fmt_double(delta1_target) + " not below the maximal relevance " +
                    fmt_double(params.max_relevance()));
  Delta2Result out;
  out.omega1 = params.omega_for_relevance(delta1_target);
  out.r_min = std::max(0.0, params.rate_term(out.omega1, delta1_target));
  out.r_sym = r_sym.value_or(out.r_min);
  if (out.r_sym < out.r_min - 1e-12)
    throw Error(Errc::delta1_infeasible, "symmetric rate " + fmt_double(out.r_sym) +
                                             " below the minimum " + fmt_double(out.r_min));

  const double c = params.zero_rate_relevance();
  const double s = params.cond_noise();
  const double r2 = 2.0 * out.r_sym;
  auto gap = [&](double w) { return params.relevance(w) - (r2 + log2_one_minus(w, s) + c); };
  out.omega2 = find_crossing(gap, out.omega1, params.omega_cap());
  out.delta2_max =
      std::min(params.relevance(out.omega2), r2 + log2_one_minus(out.omega2, s) + c);
  return out;
}

bool SigmaRange::contains(double sigma_si) const {
  const double slack = 1e-6 * std::max(1.0, std::abs(hi));
  return sigma_si >= lo - 1e-6 * std::max(1.0, lo) && sigma_si <= hi + slack;
}

SigmaRange sigma_si_feasible_range(double sigma_x, double sigma_0, double gamma, double delta1,
                                   double delta2) {
  if (!(sigma_x > 0.0 && sigma_0 > 0.0 && gamma >= 0.0 && gamma <= 1.0 && delta1 > 0.0 &&
        delta2 > 0.0))
    throw Error(Errc::validation, "feasible-range inputs must be positive, gamma in [0, 1]");
  SigmaRange range;
  range.lo = sigma_x / (std::exp2(delta1) - 1.0);

  // Largest relevance available at stage 2 (Omega at Sigma_{0|t}^{-1}) as a
  // function of sigma_si; unimodal with a single minimum.
  const double a2 = (1.0 - gamma) * (1.0 - gamma);
  auto max_rel = [&](double sigma_si) {
    const double cond = sigma_0 - gamma * gamma * sigma_si;
    return std::log2(1.0 + (1.0 / sigma_si + a2 / cond) * sigma_x);
  };
  auto excess = [&](double sigma_si) { return max_rel(sigma_si) - delta2; };

  double cap = kInf;
  if (gamma > 0.0) cap = sigma_0 / (gamma * gamma) * (1.0 - 1e-12);
  if (range.lo >= cap) throw Error(Errc::empty_range, "lower end beyond the validity cap");
  if (excess(range.lo) < 0.0)
    throw Error(Errc::empty_range, "delta2 unreachable at sigma_si = " + fmt_double(range.lo));

  // Golden-section search for the minimizer on [lo, search_hi].
  double search_hi = cap;
  if (!std::isfinite(search_hi)) {
    search_hi = std::max(2.0 * range.lo, 1.0);
    while (search_hi < 1e12 && excess(search_hi) > 0.0) search_hi *= 2.0;
  }
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = range.lo;
  double b = search_hi;
  double x1 = b - inv_phi * (b - a);
  double x2 = a + inv_phi * (b - a);
  double f1 = excess(x1);
  double f2 = excess(x2);
  for (int it = 0; it < 300 && (b - a) > 1e-14 * std::max(1.0, b); ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - inv_phi * (b - a);
      f1 = excess(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + inv_phi * (b - a);
      f2 = excess(x2);
    }
  }
  const double argmin = 0.5 * (a + b);
  // The minimum touches delta2 (up to golden-section accuracy): the range ends there.
  constexpr double kTangency = 1e-12;
  const double at_min = excess(argmin);
  if (std::abs(at_min) <= kTangency) {
    range.hi = argmin;
    return range;
  }
  if (at_min > 0.0) {
    range.hi = cap;
    return range;
  }
  // First point past lo where the maximal relevance falls to delta2.
  auto shortfall = [&](double sigma_si) { return -excess(sigma_si); };
  range.hi = find_crossing(shortfall, range.lo, argmin, 0.0);
  return range;
}

namespace {

std::vector<double> sweep_grid(double r_min, double r_max, std::size_t n_points) {
  if (n_points == 0) throw Error(Errc::usage, "curve needs at least one point");
  if (!(r_max > r_min)) r_max = r_min + 1.0;
  std::vector<double> grid(n_points);
  for (std::size_t i = 0; i < n_points; ++i)
    grid[i] = n_points == 1 ? r_min
                            : r_min + (r_max - r_min) * static_cast<double>(i) /
                                          static_cast<double>(n_points - 1);
  return grid;
}

}  // namespace

FrontierCurve trace_fixed_delta2(const ScalarTwoStageParams& params, double delta2,
                                 std::size_t n_points, double r_max) {
  const double r_min = max_delta1_given(params, delta2, kInf).r_min;
  FrontierCurve curve{"delta2=" + fmt_double(delta2), "R", params.sigma_si, n_points, {}};
  for (double r : sweep_grid(r_min, r_max, n_points)) {
    const auto res = max_delta1_given(params, delta2, std::max(r, r_min));
    FrontierSample sample;
    sample.sweep = r;
    sample.point.deltas = {res.delta1_max, delta2};
    sample.point.cum_rates = {r, 2.0 * r};
    sample.chain = OmegaChain::scalar({res.omega1, res.omega2});
    curve.samples.push_back(std::move(sample));
  }
  return curve;
}

FrontierCurve trace_fixed_delta1(const ScalarTwoStageParams& params, double delta1,
                                 std::size_t n_points, double r_max) {
  const double r_min = max_delta2_given(params, delta1).r_min;
  FrontierCurve curve{"delta1=" + fmt_double(delta1), "R", params.sigma_si, n_points, {}};
  for (double r : sweep_grid(r_min, r_max, n_points)) {
    const auto res = max_delta2_given(params, delta1, std::max(r, r_min));
    FrontierSample sample;
    sample.sweep = r;
    sample.point.deltas = {delta1, res.delta2_max};
    sample.point.cum_rates = {r, 2.0 * r};
    sample.chain = OmegaChain::scalar({res.omega1, res.omega2});
    curve.samples.push_back(std::move(sample));
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Vector boundary solver

namespace {

struct StageTerms {
  Matrix s_inv;         // Sigma_{0|t}^{-1}
  Matrix a;             // I - Sigma_t^{-1} Sigma_t0
  Matrix base;          // Sigma_x^{-1} + Sigma_t^{-1}
  double log2det_sx;    // log2 |Sigma_x|
};

class ChainProblem {
 public:
  ChainProblem(const GaussianScalableModel& model, std::vector<double> targets)
      : model_(model), targets_(std::move(targets)), m_(model.m()), T_(model.stages()) {
    const Matrix sx_inv = spd_inverse(model.sigma_x());
    const double ld = log2det_spd(model.sigma_x());
    for (int t = 1; t <= T_; ++t) {
      StageTerms st;
      st.s_inv = model.conditional_noise_inverse(t);
      st.a = Matrix::Identity(m_, m_) - model.sigma_t_inverse(t) * model.sigma_t0(t);
      st.base = sx_inv + model.sigma_t_inverse(t);
      st.log2det_sx = ld;
      stages_.push_back(std::move(st));
    }
  }

  int stages() const { return T_; }
  Index m() const { return m_; }
  double target(int t) const { return targets_[static_cast<std::size_t>(t)]; }

  std::vector<Matrix> cumulative(const std::vector<Matrix>& inc) const {
    std::vector<Matrix> omegas(inc.size());
    Matrix run = Matrix::Zero(m_, m_);
    for (std::size_t i = 0; i < inc.size(); ++i) {
      run += inc[i];
      omegas[i] = run;
    }
    return omegas;
  }

  // -log2 |I - Omega Sigma_{0|t}| = log2|S^{-1}| - log2|S^{-1} - Omega| ; +inf outside the domain.
  bool code_term(int t, const Matrix& omega, double& value, Matrix* grad) const {
    const auto& st = stages_[static_cast<std::size_t>(t)];
    const Matrix gap = symmetrize(st.s_inv - omega);
    Eigen::LLT<Matrix> llt(gap);
    if (llt.info() != Eigen::Success) return false;
    const auto diag = llt.matrixLLT().diagonal();
    double ld_gap = 0.0;
    for (Index i = 0; i < diag.size(); ++i) {
      if (!(diag(i) > 0.0)) return false;
      ld_gap += 2.0 * std::log2(diag(i));
    }
    value = log2det_spd(st.s_inv) - ld_gap;
    if (grad) *grad = symmetrize(llt.solve(Matrix::Identity(m_, m_))) / kLn2;
    return true;
  }

  // log2 |I + [Sigma_t^{-1} + A Omega A^T] Sigma_x| = log2|base + A Omega A^T| + log2|Sigma_x|.
  double relevance(int t, const Matrix& omega, Matrix* grad) const {
    const auto& st = stages_[static_cast<std::size_t>(t)];
    const Matrix inner = symmetrize(st.base + st.a * omega * st.a.transpose());
    Eigen::LLT<Matrix> llt(inner);
    const auto diag = llt.matrixLLT().diagonal();
    double ld = 0.0;
    for (Index i = 0; i < diag.size(); ++i) ld += 2.0 * std::log2(diag(i));
    if (grad)
      *grad = symmetrize(st.a.transpose() * llt.solve(Matrix::Identity(m_, m_)) * st.a) / kLn2;
    return ld + st.log2det_sx;
  }

  // Augmented-Lagrangian objective on the increments; returns +inf off-domain.
  double objective(const std::vector<Matrix>& inc, const std::vector<double>& lambda, double mu,
                   std::vector<Matrix>* grad_inc) const {
    const auto omegas = cumulative(inc);
    double total = 0.0;
    std::vector<Matrix> grad_omega(static_cast<std::size_t>(T_));
    for (int t = 0; t < T_; ++t) {
      double g = 0.0;
      Matrix gg, gf;
      if (!code_term(t, omegas[static_cast<std::size_t>(t)], g, grad_inc ? &gg : nullptr))
        return kInf;
      const double f = relevance(t, omegas[static_cast<std::size_t>(t)], grad_inc ? &gf : nullptr);
      const double c = f - target(t);
      const double lam = lambda[static_cast<std::size_t>(t)];
      const double shifted = std::max(0.0, lam - mu * c);
      total += g + (shifted * shifted - lam * lam) / (2.0 * mu);
      if (grad_inc) grad_omega[static_cast<std::size_t>(t)] = gg - shifted * gf;
    }
    if (grad_inc) {
      grad_inc->assign(static_cast<std::size_t>(T_), Matrix::Zero(m_, m_));
      Matrix suffix = Matrix::Zero(m_, m_);
      for (int t = T_ - 1; t >= 0; --t) {
        suffix += grad_omega[static_cast<std::size_t>(t)];
        (*grad_inc)[static_cast<std::size_t>(t)] = suffix;
      }
    }
    return total;
  }

  double shortfall(const std::vector<Matrix>& inc) const {
    const auto omegas = cumulative(inc);
    double worst = 0.0;
    for (int t = 0; t < T_; ++t)
      worst = std::max(worst, target(t) - relevance(t, omegas[static_cast<std::size_t>(t)], nullptr));
    return worst;
  }

  double rate_sum(const std::vector<Matrix>& inc) const {
    const auto omegas = cumulative(inc);
    double total = 0.0;
    for (int t = 0; t < T_; ++t) {
      double g = 0.0;
      if (!code_term(t, omegas[static_cast<std::size_t>(t)], g, nullptr)) return kInf;
      total += g;
    }
    return total;
  }

  // Largest generalized eigenvalue of Omega_t against Sigma_{0|t}^{-1}, over t.
  double domain_ratio(const std::vector<Matrix>& inc) const {
    const auto omegas = cumulative(inc);
    double worst = 0.0;
    for (int t = 0; t < T_; ++t) {
      const Matrix s = model_.conditional_noise(t + 1);
      const Matrix root = spd_sqrt(s);
      worst = std::max(worst, max_eigenvalue(root * omegas[static_cast<std::size_t>(t)] * root));
    }
    return worst;
  }

 private:
  const GaussianScalableModel& model_;
  std::vector<double> targets_;
  Index m_;
  int T_;
  std::vector<StageTerms> stages_;
};

double frob_sq(const std::vector<Matrix>& v) {
  double s = 0.0;
  for (const auto& x : v) s += x.squaredNorm();
  return s;
}

double inner(const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i].array() * b[i].array()).sum();
  return s;
}

// Projected gradient with backtracking on the PSD increments.
void minimize_inner(const ChainProblem& prob, std::vector<Matrix>& inc,
                    const std::vector<double>& lambda, double mu, int max_iter) {
  std::vector<Matrix> grad;
  double value = prob.objective(inc, lambda, mu, &grad);
  double step = 1e-2;
  for (int it = 0; it < max_iter; ++it) {
    bool accepted = false;
    std::vector<Matrix> trial(inc.size());
    for (int bt = 0; bt < 80; ++bt) {
      for (std::size_t i = 0; i < inc.size(); ++i) trial[i] = project_psd(inc[i] - step * grad[i]);
      std::vector<Matrix> diff(inc.size());
      for (std::size_t i = 0; i < inc.size(); ++i) diff[i] = trial[i] - inc[i];
      const double tv = prob.objective(trial, lambda, mu, nullptr);
      if (std::isfinite(tv) &&
          tv <= value + inner(grad, diff) + frob_sq(diff) / (2.0 * step) + 1e-15 * std::abs(value)) {
        accepted = true;
        const double moved = std::sqrt(frob_sq(diff));
        inc = trial;
        value = prob.objective(inc, lambda, mu, &grad);
        if (moved / step < 1e-10 || moved < 1e-15) return;
        step *= 1.5;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) return;
  }
}

VectorFrontierResult summarize(const GaussianScalableModel& model, const ChainProblem& prob,
                               const std::vector<Matrix>& inc, const std::vector<double>& targets,
                               double tolerance) {
  VectorFrontierResult out;
  out.chain.omegas = prob.cumulative(inc);
  std::vector<double> lower;
  for (int t = 1; t <= model.stages(); ++t) {
    const Matrix& omega = out.chain.at(t);
    const double rel = relevance_at(model, t, omega);
    out.relevances.push_back(rel);
    const double delta = targets[static_cast<std::size_t>(t - 1)];
    const double offset = rate_offset_at(model, t, omega);
    lower.push_back(std::isinf(offset) ? kInf : std::max(0.0, delta - offset));
  }
  out.cum_rates = cumulative_hull(lower);
  double previous = 0.0;
  for (double c : out.cum_rates) {
    out.stage_rates.push_back(c - previous);
    previous = c;
  }
  out.residual = prob.shortfall(inc);
  out.converged = out.residual <= tolerance;
  return out;
}

}  // namespace

VectorFrontierResult min_sum_rate_vector(const GaussianScalableModel& model,
                                         const std::vector<double>& delta_targets,
                                         const VectorSolverOptions& options) {
  const int T = model.stages();
  if (static_cast<int>(delta_targets.size()) != T)
    throw Error(Errc::dimension_mismatch, "one relevance target per stage required");
  for (int t = 1; t <= T; ++t) {
    const double reachable = relevance_at(model, t, model.conditional_noise_inverse(t));
    if (!(delta_targets[static_cast<std::size_t>(t - 1)] < reachable))
      throw Error(Errc::target_infeasible,
                  "stage " + std::to_string(t) + " target not below " + fmt_double(reachable));
  }

  const ChainProblem prob(model, delta_targets);
  const Index m = model.m();
  std::mt19937_64 rng(options.seed);

  std::optional<std::vector<Matrix>> best;
  double best_rate = kInf;
  double best_shortfall = kInf;
  for (int start = 0; start < std::max(1, options.starts); ++start) {
    std::vector<Matrix> inc(static_cast<std::size_t>(T), Matrix::Zero(m, m));
    if (start > 0) {
      for (auto& p : inc) {
        const Matrix g = random_matrix(m, m, rng);
        p = symmetrize(g * g.transpose()) / static_cast<double>(m * T);
      }
      // Uniform shrink keeps the chain order and pulls it inside the cap.
      const double ratio = prob.domain_ratio(inc);
      if (ratio > 0.5)
        for (auto& p : inc) p *= 0.5 / ratio;
    }

    std::vector<double> lambda(static_cast<std::size_t>(T), 0.0);
    double mu = 10.0;
    double last_violation = kInf;
    for (int outer = 0; outer < options.max_outer; ++outer) {
      minimize_inner(prob, inc, lambda, mu, options.max_inner);
      const auto omegas = prob.cumulative(inc);
      double violation = 0.0;
      for (int t = 0; t < T; ++t) {
        const double c = prob.relevance(t, omegas[static_cast<std::size_t>(t)], nullptr) -
                         delta_targets[static_cast<std::size_t>(t)];
        auto& lam = lambda[static_cast<std::size_t>(t)];
        violation = std::max(violation, std::max(0.0, -c));
        // Complementarity for an inactive multiplier.
        if (lam > 0.0) violation = std::max(violation, std::min(lam, std::abs(c)));
        lam = std::max(0.0, lam - mu * c);
      }
      if (violation <= 1e-11) break;
      if (violation > 0.25 * last_violation) mu = std::min(mu * 4.0, 1e10);
      last_violation = violation;
    }

    const double shortfall = prob.shortfall(inc);
    const double rate = prob.rate_sum(inc);
    const bool ok = shortfall <= options.target_tolerance;
    const bool best_ok = best_shortfall <= options.target_tolerance;
    if (!best || (ok && (!best_ok || rate < best_rate)) || (!ok && !best_ok && shortfall < best_shortfall)) {
      best = inc;
      best_rate = rate;
      best_shortfall = shortfall;
    }
  }

  auto result = summarize(model, prob, *best, delta_targets, options.target_tolerance);
  if (!result.converged)
    throw NonConvergenceError(result, "relevance shortfall " + fmt_double(result.residual));
  return result;
}

}  // namespace sib
