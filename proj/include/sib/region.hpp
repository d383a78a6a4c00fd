#pragma once

// Relevance and cumulative-rate bounds of the vector Gaussian scalable IB
// region, plus the closed-form single-stage special cases. All values in bits.

#include "sib/model.hpp"

#include <vector>

namespace sib {

struct RegionPoint {
  std::vector<double> deltas;     // relevance per stage
  std::vector<double> cum_rates;  // cumulative complexity, nondecreasing
};

/// log2 |I + [Sigma_t^{-1} + A Omega A^T] Sigma_x|,  A = I - Sigma_t^{-1} Sigma_t0.
/// Single-matrix evaluation with no chain feasibility check.
double relevance_at(const GaussianScalableModel& model, int t, const Matrix& omega);

/// log2 |I - Omega Sigma_{0|t}| + log2 |I + Sigma_x Sigma_t^{-1}|.
/// Returns -inf when Omega is at or beyond Sigma_{0|t}^{-1}.
double rate_offset_at(const GaussianScalableModel& model, int t, const Matrix& omega);

/// log2 |I + Sigma_x Sigma_t^{-1}| = I(X; Y_t), the relevance of side information alone.
double zero_rate_relevance(const GaussianScalableModel& model, int t);

/// Upper bound on Delta_t for the given chain. Throws Errc::infeasible_chain.
double relevance_bound(const GaussianScalableModel& model, const OmegaChain& chain, int t);

/// Lower bound on R_1 + ... + R_t for relevance delta_t, clamped at 0.
/// Throws Errc::infeasible_chain or Errc::relevance_exceeds_bound.
double min_cum_rate(const GaussianScalableModel& model, const OmegaChain& chain, int t,
                    double delta_t);

/// Boundary point of the chain: each Delta_t at its bound, cumulative rates as
/// the nondecreasing hull of the per-stage lower bounds.
RegionPoint region_point(const GaussianScalableModel& model, const OmegaChain& chain);

/// Nondecreasing hull (running maximum) of per-stage cumulative lower bounds.
std::vector<double> cumulative_hull(const std::vector<double>& lower_bounds);

/// Scalar single stage with correlated side information, closed form in Delta.
/// Throws Errc::delta_infeasible when the denominator is not positive.
double scalar_T1_with_si(double sigma_x, double sigma_0, double sigma_1, double sigma_01,
                         double delta);

/// Scalar single stage without side information. Throws Errc::delta_infeasible
/// when delta >= log2(1 + sigma_x / sigma_0).
double scalar_T1_no_si(double sigma_x, double sigma_0, double delta);

struct T1Region {
  double delta_bound = 0.0;  // relevance upper bound at omega
  double rate_bound = 0.0;   // rate lower bound at the requested delta (clamped at 0)
};

/// Single-stage region evaluated directly from the T = 1 formulas with
/// LU determinants on the unsymmetrized products (an independent route from
/// relevance_bound / min_cum_rate). Requires a model with T = 1.
T1Region vector_T1_region(const GaussianScalableModel& model, const Matrix& omega, double delta);

/// Single stage without side information:  Delta <= log2|I + Omega Sigma_x|,
/// Delta <= R + log2|I - Omega Sigma_0|.
T1Region vector_T1_region_no_si(const Matrix& sigma_x, const Matrix& sigma_0, const Matrix& omega,
                                double delta);

}  // namespace sib
