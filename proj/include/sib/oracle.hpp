#pragma once

// Independent ground truth for the region formulas: the explicit joint
// covariance of the Gaussian test channel U_t = Y + Z_t, log-det mutual
// information by Schur complements, a sampled estimate, and numerical checks
// of the Fisher information / MMSE identities used by the converse.
//
// Mutual information uses the log-det form without the 1/2 factor,
//   I(A; B | C) = log2|Sigma_{A|C}| - log2|Sigma_{A|B,C}|,
// which is the convention the region formulas are stated in.

#include "sib/model.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sib::oracle {

enum class VarKind { source, observation, side_info, description };

/// One m-dimensional block of the stacked vector (X, Y, Y_1..Y_T, U_1..U_T).
struct Var {
  VarKind kind;
  int stage = 0;  // 1-based for side_info / description

  static Var x() { return {VarKind::source, 0}; }
  static Var y() { return {VarKind::observation, 0}; }
  static Var side(int t) { return {VarKind::side_info, t}; }
  static Var u(int t) { return {VarKind::description, t}; }

  std::string name() const;
  bool operator==(const Var&) const = default;
};

using Group = std::vector<Var>;

enum class BoundaryMode { strict, epsilon_shift };

inline constexpr double kInteriorShift = 1e-8;

class JointCovariance {
 public:
  JointCovariance(Matrix cov, Index m, int stages, bool shifted)
      : cov_(std::move(cov)), m_(m), stages_(stages), shifted_(shifted) {}

  const Matrix& matrix() const { return cov_; }
  Index m() const { return m_; }
  int stages() const { return stages_; }
  /// True when the chain was moved into the strict interior before assembly.
  bool shifted() const { return shifted_; }

  Index offset(const Var& v) const;
  std::vector<Index> indices(const Group& g) const;
  Matrix block(const Var& a, const Var& b) const;

 private:
  Matrix cov_;
  Index m_;
  int stages_;
  bool shifted_;
};

/// Test-channel noise covariances Omega_{z_t} = Omega_t^{-1} - Sigma_{0|t}.
std::vector<Matrix> description_noise(const GaussianScalableModel& model, const OmegaChain& chain);

/// Assembles cov(X, Y, Y_1..Y_T, U_1..U_T) for the degraded test channel
/// (Z_t = Z_{t+1} + independent increment). Side channels are conditionally
/// independent across stages given (X, Y).
/// Throws Errc::chain_not_strictly_interior (strict mode on a boundary chain),
/// Errc::descriptions_not_degraded, Errc::infeasible_chain.
JointCovariance build_joint_covariance(const GaussianScalableModel& model, const OmegaChain& chain,
                                       BoundaryMode mode = BoundaryMode::strict);

/// I(A; B | C) in bits from a covariance matrix and index sets.
double mi_logdet(const Matrix& cov, const std::vector<Index>& a, const std::vector<Index>& b,
                 const std::vector<Index>& c = {});
double mi_logdet(const JointCovariance& joint, const Group& a, const Group& b,
                 const Group& c = {});

struct McEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

inline constexpr std::size_t kMinMcSamples = 10'000;

/// Draws real Gaussian samples of the variables in A, B, C, applies the same
/// log-det functional to the sample covariance and reports a grouped
/// jackknife standard error. Chunk k is seeded from (seed, k), so the result
/// is reproducible and independent of evaluation order.
McEstimate mc_mi_estimate(const JointCovariance& joint, const Group& a, const Group& b,
                          const Group& c, std::size_t n_samples, std::uint64_t seed);
McEstimate mc_mi_estimate(const GaussianScalableModel& model, const OmegaChain& chain,
                          const Group& a, const Group& b, const Group& c, std::size_t n_samples,
                          std::uint64_t seed);

/// Conditional covariance (= MMSE matrix for jointly Gaussian vectors) by Schur complement.
Matrix mmse_matrix(const Matrix& cov, const std::vector<Index>& target,
                   const std::vector<Index>& given);
/// Conditional Fisher information of a Gaussian target: the target block of
/// the joint precision matrix.
Matrix conditional_fisher(const Matrix& cov, const std::vector<Index>& target,
                          const std::vector<Index>& given);

/// mmse(V2 | V1, V2 + Z) against Sigma_z - Sigma_z J(V2 + Z | V1) Sigma_z,
/// Frobenius residual. `cov_v` is the joint covariance of (V1, V2) with the
/// first dim_v1 coordinates belonging to V1 (dim_v1 may be 0).
double fisher_mmse_residual(const Matrix& cov_v, Index dim_v1, const Matrix& sigma_z);

/// Blocks of cov([W_0; W_t])^{-1} from the closed forms (P_2 with Sigma_{0|t}^{-1}).
struct NoisePrecisionBlocks {
  Matrix p1, p2, p3, p4;
};
NoisePrecisionBlocks noise_precision_blocks(const GaussianScalableModel& model, int t);

struct FisherCheckReport {
  Index m = 0;
  std::uint64_t seed = 0;
  double fisher_residual = 0.0;            // Fisher/MMSE connection
  double sandwich_residual = 0.0;          // |log2|J^{-1}| - log2|mmse|| at Gaussian inputs
  double error_cov_residual = 0.0;         // Sigma_{x~t}^{-1} identity vs Schur complement
  double estimator_residual = 0.0;         // conditional-mean coefficients
  double uninverted_p2_residual = 0.0;     // P_2 built from Sigma_{0|t} instead of its inverse; nonzero, for reference
  std::string instance;

  double max_residual() const;
};

/// Random jointly Gaussian instance of dimension m (m <= 6) drawn from `seed`.
FisherCheckReport fisher_mmse_check(Index m, std::uint64_t seed);

// Random instances for sweeps -------------------------------------------------

struct RandomInstance {
  GaussianScalableModel model;
  OmegaChain chain;
};

/// Valid model (m x m, T stages) with a strictly interior chain whose
/// description noises are degraded. With `uncorrelated`, Sigma_0t = 0.
RandomInstance random_instance(Index m, int stages, std::uint64_t seed, bool uncorrelated = false);

/// Stable hash of an instance, used to label CSV rows.
std::string instance_hash(const GaussianScalableModel& model, const OmegaChain& chain);

}  // namespace sib::oracle
