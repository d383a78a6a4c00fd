#include "sib/commands.hpp"

#include "sib/discrete.hpp"
#include "sib/error.hpp"
#include "sib/frontier.hpp"
#include "sib/oracle.hpp"
#include "sib/region.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sib::cli {

namespace {

constexpr double kEquivalenceTolerance = 1e-9;
constexpr double kMcSigmas = 3.0;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// Writes the whole payload at once; "-" or empty means `out`.
void emit(const std::string& path, const std::string& payload, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << payload;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::usage, "cannot write '" + path + "'");
  f << payload;
  if (!f) throw Error(Errc::usage, "failed writing '" + path + "'");
}

GaussianScalableModel validated(const RunConfig& cfg) {
  auto result = validate_model(cfg.spec);
  if (auto* violations = std::get_if<std::vector<Violation>>(&result)) {
    std::string msg;
    for (const auto& v : *violations) msg += (msg.empty() ? "" : "; ") + v.describe();
    throw Error(Errc::validation, msg);
  }
  return std::get<GaussianScalableModel>(std::move(result));
}

OmegaChain chain_from(const RunConfig& cfg, const GaussianScalableModel& model,
                      const std::vector<double>& omegas) {
  if (!omegas.empty()) {
    if (static_cast<int>(omegas.size()) != model.stages())
      throw Error(Errc::usage, "need one omega per stage (" + std::to_string(model.stages()) + ")");
    OmegaChain chain;
    for (double w : omegas) chain.omegas.push_back(w * Matrix::Identity(model.m(), model.m()));
    return chain;
  }
  if (!cfg.chain) throw Error(Errc::usage, "no Omega chain: give --omega or chain.omegas[t] in the config");
  return *cfg.chain;
}

}  // namespace

std::uint64_t default_seed() {
  const char* env = std::getenv("SIB_SEED");
  if (env == nullptr || *env == '\0') return 0;
  const std::string text(env);
  if (text.find_first_not_of("0123456789") != std::string::npos)
    throw Error(Errc::usage, "SIB_SEED must be an unsigned integer, got '" + text + "'");
  try {
    return std::stoull(text);
  } catch (const std::exception&) {
    throw Error(Errc::usage, "SIB_SEED out of range: '" + text + "'");
  }
}

// ---------------------------------------------------------------------------

int cmd_validate(const std::string& config_path, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config_path);
    auto result = validate_model(cfg.spec);
    if (auto* violations = std::get_if<std::vector<Violation>>(&result)) {
      out << "invalid model (" << violations->size() << " violation"
          << (violations->size() == 1 ? "" : "s") << ")\n";
      for (const auto& v : *violations) out << "  " << v.describe() << '\n';
      return exit_code(Errc::validation);
    }
    const auto& model = std::get<GaussianScalableModel>(result);
    out << "valid model: m = " << model.m() << ", T = " << model.stages() << '\n';
    for (int t = 1; t <= model.stages(); ++t)
      out << "  stage " << t << ": zero-rate relevance " << num(zero_rate_relevance(model, t))
          << " bits, max relevance " << num(relevance_at(model, t, model.conditional_noise_inverse(t)))
          << " bits\n";
    if (cfg.chain) {
      const auto check = check_omega_chain(model, *cfg.chain);
      out << "  chain: " << (check.feasible ? "feasible" : "infeasible") << '\n';
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------

void write_fig2_csv(const Fig2Options& opt, std::ostream& csv) {
  if (opt.panel != 'a' && opt.panel != 'b') throw Error(Errc::usage, "panel must be 'a' or 'b'");
  if (opt.sigma_si.empty()) throw Error(Errc::usage, "need at least one sigma_si value");
  if (opt.points < 2) throw Error(Errc::usage, "need at least 2 points per curve");
  const bool panel_a = opt.panel == 'a';
  const double fixed = opt.fixed_delta.value_or(panel_a ? 2.0 : 1.5);
  const double paired = opt.paired_delta.value_or(panel_a ? 1.5 : 2.0);
  const double delta1 = panel_a ? paired : fixed;
  const double delta2 = panel_a ? fixed : paired;
  const auto range = sigma_si_feasible_range(opt.sigma_x, opt.sigma_0, opt.gamma, delta1, delta2);

  std::ostringstream os;
  os << "sigma_si,R,delta\n";
  for (double s : opt.sigma_si) {
    if (!range.contains(s))
      throw Error(Errc::sigma_out_of_range, "sigma_si = " + num(s) + " outside [" + num(range.lo) + ", " +
                                                num(range.hi) + "]");
    const ScalarTwoStageParams params{opt.sigma_x, opt.sigma_0, s, opt.gamma};
    const auto curve = panel_a ? trace_fixed_delta2(params, fixed, opt.points, opt.r_max)
                               : trace_fixed_delta1(params, fixed, opt.points, opt.r_max);
    for (const auto& sample : curve.samples)
      os << num(s) << ',' << num(sample.sweep) << ','
         << num(panel_a ? sample.point.deltas[0] : sample.point.deltas[1]) << '\n';
  }
  csv << os.str();
}

int cmd_fig2(const Fig2Options& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    std::ostringstream csv;
    write_fig2_csv(opt, csv);
    emit(opt.out_path, csv.str(), out);
    if (!opt.gnuplot_path.empty()) {
      const bool to_stdout = opt.out_path.empty() || opt.out_path == "-";
      if (to_stdout) throw Error(Errc::usage, "--gnuplot needs --out <file>");
      std::ostringstream gp;
      gp << "set datafile separator ','\n"
         << "set key autotitle columnhead\n"
         << "set xlabel 'R (bits)'\n"
         << "set ylabel '" << (opt.panel == 'a' ? "Delta_1" : "Delta_2") << " (bits)'\n"
         << "plot ";
      for (std::size_t i = 0; i < opt.sigma_si.size(); ++i)
        gp << (i ? ", \\\n     " : "") << "'" << opt.out_path << "' using (($1 == " << num(opt.sigma_si[i])
           << ") ? $2 : 1/0):3 with lines title 'sigma_si = " << num(opt.sigma_si[i]) << "'";
      gp << '\n';
      emit(opt.gnuplot_path, gp.str(), out);
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------

bool write_oracle_csv(const RunConfig& cfg, const OracleOptions& opt, std::ostream& csv, std::ostream& err) {
  using namespace oracle;
  const auto model = validated(cfg);
  const auto chain = chain_from(cfg, model, opt.omegas);
  const auto joint = build_joint_covariance(model, chain, BoundaryMode::epsilon_shift);
  if (joint.shifted())
    err << "warning: chain on the boundary, moved into the interior by " << kInteriorShift << '\n';
  const int T = model.stages();

  std::ostringstream os;
  os << "quantity,theorem,exact,mc,stderr,pass\n";
  bool all = true;
  auto row = [&](const std::string& name, double theorem, const Group& a, const Group& b, const Group& c,
                 std::uint64_t stream) {
    const double exact = mi_logdet(joint, a, b, c);
    const auto mc = mc_mi_estimate(joint, a, b, c, opt.samples, opt.seed * 1000003ULL + stream);
    const bool pass = std::abs(theorem - exact) <= kEquivalenceTolerance &&
                      std::abs(mc.estimate - exact) <= kMcSigmas * mc.std_error;
    all = all && pass;
    os << name << ',' << num(theorem) << ',' << num(exact) << ',' << num(mc.estimate) << ','
       << num(mc.std_error) << ',' << (pass ? "true" : "false") << '\n';
  };
  for (int t = 1; t <= T; ++t) {
    Group descriptions;
    for (int k = 1; k <= t; ++k) descriptions.push_back(Var::u(k));
    Group with_side = descriptions;
    with_side.push_back(Var::side(t));
    const double delta = relevance_bound(model, chain, t);
    const double rate = delta - rate_offset_at(model, t, chain.at(t));
    row("delta[" + std::to_string(t) + "]", delta, {Var::x()}, with_side, {}, 2 * static_cast<std::uint64_t>(t));
    row("rate[" + std::to_string(t) + "]", rate, {Var::y()}, descriptions, {Var::side(t)},
        2 * static_cast<std::uint64_t>(t) + 1);
  }
  csv << os.str();
  return all;
}

int cmd_oracle(const OracleOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opt.config_path);
    std::ostringstream csv;
    const bool ok = write_oracle_csv(cfg, opt, csv, err);
    emit(opt.out_path, csv.str(), out);
    if (!ok) {
      err << "VerificationFailed: at least one oracle row did not pass\n";
      return exit_code(Errc::verification_failed);
    }
    return 0;
  });
}

// ---------------------------------------------------------------------------

int cmd_discrete_check(const DiscreteCheckOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.n_instances < 1) throw Error(Errc::usage, "--n-instances must be at least 1");
    if (opt.q_draws < 0) throw Error(Errc::usage, "--q-draws must be non-negative");
    const auto r = discrete::variational_sweep(opt.seed, opt.n_instances, opt.q_draws);
    out << "instances: " << r.instances << '\n'
        << "random Q draws: " << r.q_draws << '\n'
        << "max equality residual |L_VB(Q*) - L|: " << num(r.max_equality_residual) << '\n'
        << "min bound slack L_VB(Q) - L: " << num(r.min_bound_slack) << '\n'
        << "max identity residual: " << num(r.max_identity_residual) << '\n'
        << "support-mismatch draws (infinite bound): " << r.infinite_bounds << '\n'
        << "result: " << (r.passed() ? "PASS" : "FAIL") << '\n';
    return r.passed() ? 0 : exit_code(Errc::verification_failed);
  });
}

// ---------------------------------------------------------------------------

int cmd_equivalence(const EquivalenceOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    using namespace oracle;
    if (opt.n_instances < 1) throw Error(Errc::usage, "--n-instances must be at least 1");
    std::ostringstream os;
    os << "instance,m,T,stage,quantity,theorem,exact,abs_error,tolerance,pass\n";
    bool all = true;
    for (int i = 0; i < opt.n_instances; ++i) {
      const std::uint64_t s = opt.seed + static_cast<std::uint64_t>(i);
      const Index m = 1 + static_cast<Index>(s % 4);
      const int T = 1 + static_cast<int>((s / 4) % 3);
      const auto inst = random_instance(m, T, s);
      const auto joint = build_joint_covariance(inst.model, inst.chain);
      const auto hash = instance_hash(inst.model, inst.chain);
      for (int t = 1; t <= T; ++t) {
        Group desc;
        for (int k = 1; k <= t; ++k) desc.push_back(Var::u(k));
        Group with_side = desc;
        with_side.push_back(Var::side(t));
        const double delta = relevance_bound(inst.model, inst.chain, t);
        const double rate = delta - rate_offset_at(inst.model, t, inst.chain.at(t));
        const double exact_delta = mi_logdet(joint, {Var::x()}, with_side);
        const double exact_rate = mi_logdet(joint, {Var::y()}, desc, {Var::side(t)});
        for (auto [name, th, ex] : {std::tuple{"delta", delta, exact_delta}, std::tuple{"rate", rate, exact_rate}}) {
          const double e = std::abs(th - ex);
          const bool pass = e <= kEquivalenceTolerance;
          all = all && pass;
          os << hash << ',' << m << ',' << T << ',' << t << ',' << name << ',' << num(th) << ',' << num(ex)
             << ',' << num(e) << ',' << num(kEquivalenceTolerance) << ',' << (pass ? "true" : "false") << '\n';
        }
      }
    }
    emit(opt.out_path, os.str(), out);
    return all ? 0 : exit_code(Errc::verification_failed);
  });
}

int cmd_fisher(const FisherOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (opt.seeds < 1) throw Error(Errc::usage, "--seeds must be at least 1");
    std::ostringstream os;
    os << "instance,m,seed,fisher_mmse,sandwich,error_cov,estimator,uninverted_p2,tolerance,pass\n";
    bool all = true;
    for (int m : opt.dims) {
      for (int k = 0; k < opt.seeds; ++k) {
        const auto r = oracle::fisher_mmse_check(m, opt.first_seed + static_cast<std::uint64_t>(k));
        const bool pass = r.max_residual() <= kEquivalenceTolerance;
        all = all && pass;
        os << r.instance.substr(r.instance.rfind('=') + 1) << ',' << m << ',' << r.seed << ','
           << num(r.fisher_residual) << ',' << num(r.sandwich_residual) << ',' << num(r.error_cov_residual)
           << ',' << num(r.estimator_residual) << ',' << num(r.uninverted_p2_residual) << ','
           << num(kEquivalenceTolerance) << ',' << (pass ? "true" : "false") << '\n';
      }
    }
    emit(opt.out_path, os.str(), out);
    return all ? 0 : exit_code(Errc::verification_failed);
  });
}

// ---------------------------------------------------------------------------

int cmd_region(const std::string& config_path, const std::vector<double>& omegas, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(config_path);
    const auto model = validated(cfg);
    const auto chain = chain_from(cfg, model, omegas);
    const auto point = region_point(model, chain);
    std::ostringstream os;
    os << "stage,delta_bound,cum_rate\n";
    for (std::size_t i = 0; i < point.deltas.size(); ++i)
      os << i + 1 << ',' << num(point.deltas[i]) << ',' << num(point.cum_rates[i]) << '\n';
    out << os.str();
    return 0;
  });
}

int cmd_min_rate(const MinRateOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const auto cfg = load_config(opt.config_path);
    const auto model = validated(cfg);
    if (static_cast<int>(opt.targets.size()) != model.stages())
      throw Error(Errc::usage, "need one target per stage (" + std::to_string(model.stages()) + ")");
    VectorSolverOptions so;
    so.starts = opt.starts;
    so.seed = opt.seed;
    auto print = [&](const VectorFrontierResult& r) {
      std::ostringstream os;
      os << "stage,target,relevance,cum_rate,stage_rate\n";
      for (std::size_t i = 0; i < r.relevances.size(); ++i)
        os << i + 1 << ',' << num(opt.targets[i]) << ',' << num(r.relevances[i]) << ','
           << num(r.cum_rates[i]) << ',' << num(r.stage_rates[i]) << '\n';
      out << os.str();
    };
    try {
      print(min_sum_rate_vector(model, opt.targets, so));
    } catch (const NonConvergenceError& e) {
      print(e.best());
      throw;
    }
    return 0;
  });
}

}  // namespace sib::cli
