#include "sib/region.hpp"

#include "sib/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sib {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kRelevanceSlack = 1e-12;

void require_square(const GaussianScalableModel& model, const Matrix& omega) {
  if (omega.rows() != model.m() || omega.cols() != model.m())
    throw Error(Errc::dimension_mismatch, "omega matrix is not m x m");
}

void require_feasible(const GaussianScalableModel& model, const OmegaChain& chain) {
  const auto check = check_omega_chain(model, chain);
  if (!check.feasible)
    throw Error(Errc::infeasible_chain,
                "Loewner chain violated by " + std::to_string(check.max_violation()));
}

double log2_abs_det(const Matrix& a) {
  return std::log2(std::abs(a.partialPivLu().determinant()));
}

}  // namespace

double relevance_at(const GaussianScalableModel& model, int t, const Matrix& omega) {
  require_square(model, omega);
  const Matrix a = Matrix::Identity(model.m(), model.m()) - model.sigma_t_inverse(t) * model.sigma_t0(t);
  const Matrix bracket = model.sigma_t_inverse(t) + a * symmetrize(omega) * a.transpose();
  return log2det_identity_plus_sandwich(bracket, model.sigma_x());
}

double zero_rate_relevance(const GaussianScalableModel& model, int t) {
  return log2det_identity_plus_sandwich(model.sigma_t_inverse(t), model.sigma_x());
}

double rate_offset_at(const GaussianScalableModel& model, int t, const Matrix& omega) {
  require_square(model, omega);
  const double code_term =
      log2det_identity_plus_sandwich(symmetrize(omega), model.conditional_noise(t), -1.0);
  return code_term + zero_rate_relevance(model, t);
}

double relevance_bound(const GaussianScalableModel& model, const OmegaChain& chain, int t) {
  require_feasible(model, chain);
  return relevance_at(model, t, chain.at(t));
}

double min_cum_rate(const GaussianScalableModel& model, const OmegaChain& chain, int t,
                    double delta_t) {
  const double bound = relevance_bound(model, chain, t);
  if (delta_t > bound + kRelevanceSlack)
    throw Error(Errc::relevance_exceeds_bound,
                "delta " + std::to_string(delta_t) + " exceeds bound " + std::to_string(bound));
  const double offset = rate_offset_at(model, t, chain.at(t));
  if (std::isinf(offset)) return kInf;
  return std::max(0.0, delta_t - offset);
}

std::vector<double> cumulative_hull(const std::vector<double>& lower_bounds) {
  std::vector<double> hull(lower_bounds.size());
  double running = 0.0;
  for (std::size_t i = 0; i < lower_bounds.size(); ++i) {
    running = std::max(running, lower_bounds[i]);
    hull[i] = running;
  }
  return hull;
}

RegionPoint region_point(const GaussianScalableModel& model, const OmegaChain& chain) {
  RegionPoint point;
  std::vector<double> lower;
  for (int t = 1; t <= model.stages(); ++t) {
    const double delta = relevance_bound(model, chain, t);
    point.deltas.push_back(delta);
    lower.push_back(min_cum_rate(model, chain, t, delta));
  }
  point.cum_rates = cumulative_hull(lower);
  return point;
}

double scalar_T1_with_si(double sigma_x, double sigma_0, double sigma_1, double sigma_01,
                         double delta) {
  const double zero_rate = std::log2(1.0 + sigma_x / sigma_1);
  if (delta <= zero_rate) return 0.0;
  if (sigma_1 == sigma_01)
    throw Error(Errc::delta_infeasible, "side-information noise fully correlated with W_0");
  const double c1 = (sigma_0 * sigma_1 - sigma_01 * sigma_01) /
                    ((sigma_1 - sigma_01) * (sigma_1 - sigma_01));
  const double c2 =
      (sigma_x + sigma_1) * (sigma_x + sigma_1) / (sigma_x * sigma_1) * c1 + sigma_x / sigma_1 + 1.0;
  const double den = std::exp2(-delta) * sigma_x * c2 - (sigma_x + sigma_1) * c1;
  if (!(den > 0.0))
    throw Error(Errc::delta_infeasible,
                "delta " + std::to_string(delta) + " exceeds the achievable relevance");
  return std::max(0.0, std::log2(sigma_x / den));
}

double scalar_T1_no_si(double sigma_x, double sigma_0, double delta) {
  const double den = (sigma_x + sigma_0) * std::exp2(-delta) - sigma_0;
  if (!(den > 0.0))
    throw Error(Errc::delta_infeasible,
                "delta " + std::to_string(delta) + " reaches I(X;Y) = " +
                    std::to_string(std::log2(1.0 + sigma_x / sigma_0)));
  return std::max(0.0, std::log2(sigma_x / den));
}

T1Region vector_T1_region(const GaussianScalableModel& model, const Matrix& omega, double delta) {
  if (model.stages() != 1) throw Error(Errc::dimension_mismatch, "vector_T1_region needs T = 1");
  require_feasible(model, OmegaChain{{omega}});
  const Index m = model.m();
  const Matrix id = Matrix::Identity(m, m);
  const Matrix s1_inv = model.sigma_t_inverse(1);
  const Matrix a = id - s1_inv * model.sigma_t0(1);
  const Matrix bracket = s1_inv + a * omega * a.transpose();

  T1Region out;
  out.delta_bound = log2_abs_det(id + bracket * model.sigma_x());
  if (delta > out.delta_bound + kRelevanceSlack)
    throw Error(Errc::relevance_exceeds_bound, "delta exceeds the T = 1 relevance bound");
  const double code_det = (id - omega * model.conditional_noise(1)).partialPivLu().determinant();
  if (!(code_det > 0.0)) {
    out.rate_bound = kInf;
    return out;
  }
  out.rate_bound = std::max(
      0.0, delta - std::log2(code_det) - log2_abs_det(id + model.sigma_x() * s1_inv));
  return out;
}

T1Region vector_T1_region_no_si(const Matrix& sigma_x, const Matrix& sigma_0, const Matrix& omega,
                                double delta) {
  const Index m = sigma_x.rows();
  if (sigma_0.rows() != m || omega.rows() != m || omega.cols() != m)
    throw Error(Errc::dimension_mismatch, "vector_T1_region_no_si operands differ in size");
  if (min_eigenvalue(omega) < -kPsdTolerance ||
      min_eigenvalue(spd_inverse(sigma_0) - omega) < -kPsdTolerance)
    throw Error(Errc::infeasible_chain, "omega outside [0, sigma_0^{-1}]");
  const Matrix id = Matrix::Identity(m, m);
  T1Region out;
  out.delta_bound = log2_abs_det(id + omega * sigma_x);
  if (delta > out.delta_bound + kRelevanceSlack)
    throw Error(Errc::relevance_exceeds_bound, "delta exceeds log2|I + Omega Sigma_x|");
  const double code_det = (id - omega * sigma_0).partialPivLu().determinant();
  out.rate_bound = code_det > 0.0 ? std::max(0.0, delta - std::log2(code_det)) : kInf;
  return out;
}

}  // namespace sib
