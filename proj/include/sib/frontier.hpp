#pragma once

// Frontier tracing over feasible Omega chains: the scalar two-stage
// symmetric-rate sweeps and a numerical boundary solver for the vector case.

#include "sib/error.hpp"
#include "sib/model.hpp"
#include "sib/region.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sib {

/// Scalar two-stage instance with Sigma_1 = Sigma_2 = sigma_si and
/// Sigma_0t = gamma * sigma_si.
struct ScalarTwoStageParams {
  double sigma_x = 0.0;
  double sigma_0 = 0.0;
  double sigma_si = 0.0;
  double gamma = 0.0;

  /// Throws Error(Errc::validation) unless all positive, gamma in [0, 1] and
  /// sigma_0 - gamma^2 sigma_si > 0.
  void validate() const;

  double cond_noise() const { return sigma_0 - gamma * gamma * sigma_si; }
  double omega_cap() const { return 1.0 / cond_noise(); }
  double zero_rate_relevance() const;
  double max_relevance() const { return relevance(omega_cap()); }
  double relevance(double omega) const;
  /// delta - log2(1 - omega * Sigma_{0|t}) - log2(1 + sigma_x / sigma_si)
  double rate_term(double omega, double delta) const;
  /// Smallest omega >= 0 whose relevance reaches delta (0 below the zero-rate relevance).
  double omega_for_relevance(double delta) const;

  GaussianScalableModel model() const;
};

struct TwoStagePoint {
  double delta1 = 0.0;
  double delta2 = 0.0;
  double stage1_rate = 0.0;       // stage-1 rate bound
  double stage2_half_rate = 0.0;  // half of the cumulative stage-2 bound
  double r_sym = 0.0;             // max of the two
};

/// Throws Errc::infeasible_pair unless 0 <= omega1 <= omega2 <= 1/Sigma_{0|2}.
TwoStagePoint symmetric_two_stage_point(const ScalarTwoStageParams& params, double omega1,
                                        double omega2);

struct Delta1Result {
  double delta1_max = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double r_min = 0.0;  // smallest symmetric rate achieving delta2
};

/// Largest Delta_1 at symmetric rate r_sym with Delta_2 = delta2_target.
/// Throws Errc::delta2_infeasible.
Delta1Result max_delta1_given(const ScalarTwoStageParams& params, double delta2_target,
                              double r_sym);

struct Delta2Result {
  double r_min = 0.0;  // smallest symmetric rate achieving delta1
  double r_sym = 0.0;  // rate used for the maximization
  double delta2_max = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
};

/// Minimum symmetric rate for Delta_1 = delta1_target, then the largest Delta_2
/// at cumulative rate 2R, with R = r_sym or the minimum when not given.
/// Throws Errc::delta1_infeasible.
Delta2Result max_delta2_given(const ScalarTwoStageParams& params, double delta1_target,
                              std::optional<double> r_sym = std::nullopt);

struct SigmaRange {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double sigma_si) const;
};

/// Side-information noise levels for which (delta1, delta2) is a meaningful
/// target pair. Throws Errc::empty_range.
SigmaRange sigma_si_feasible_range(double sigma_x, double sigma_0, double gamma, double delta1,
                                   double delta2);

struct FrontierSample {
  double sweep = 0.0;
  RegionPoint point;
  OmegaChain chain;
};

struct FrontierCurve {
  std::string fixed;  // e.g. "delta2=2"
  std::string swept;  // "R"
  double sigma_si = 0.0;
  std::size_t resolution = 0;
  std::vector<FrontierSample> samples;
};

inline constexpr std::size_t kDefaultCurvePoints = 200;

/// (R, Delta_1) tradeoff with Delta_2 fixed; R from its minimum to r_max.
FrontierCurve trace_fixed_delta2(const ScalarTwoStageParams& params, double delta2,
                                 std::size_t n_points = kDefaultCurvePoints, double r_max = 4.0);

/// (R, Delta_2) tradeoff with Delta_1 fixed; R from its minimum to r_max.
FrontierCurve trace_fixed_delta1(const ScalarTwoStageParams& params, double delta1,
                                 std::size_t n_points = kDefaultCurvePoints, double r_max = 4.0);

struct VectorSolverOptions {
  int starts = 8;
  std::uint64_t seed = 0;
  int max_outer = 40;
  int max_inner = 4000;
  double target_tolerance = 1e-4;
};

struct VectorFrontierResult {
  OmegaChain chain;
  std::vector<double> relevances;
  std::vector<double> cum_rates;    // nondecreasing hull
  std::vector<double> stage_rates;  // hull differences, >= 0
  double residual = 0.0;            // largest relevance shortfall below target
  bool converged = false;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(VectorFrontierResult best, const std::string& what)
      : Error(Errc::non_convergence, what), best_(std::move(best)) {}
  const VectorFrontierResult& best() const { return best_; }

 private:
  VectorFrontierResult best_;
};

/// Feasible chain meeting the per-stage relevance targets with minimal rates.
/// Throws Errc::target_infeasible, or NonConvergenceError with the best point found.
VectorFrontierResult min_sum_rate_vector(const GaussianScalableModel& model,
                                         const std::vector<double>& delta_targets,
                                         const VectorSolverOptions& options = {});

/// Root of an increasing-ish function on [lo, hi]: grid scan with step
/// `grid_step` for the first sign change, then bisection.
double find_crossing(const std::function<double(double)>& fn, double lo, double hi,
                     double grid_step = 1e-3);

}  // namespace sib
