#pragma once

// Vector Gaussian scalable information-bottleneck problem instance.
//
//   Y   = X + W_0,            X ~ N(0, sigma_x)
//   Y_t = X + W_t,            t = 1..T
//   cov([W_0; W_t]) = [[sigma_0, sigma_0t], [sigma_0t^T, sigma_t]]
//
// Stage indices are 1-based throughout the public API.

#include "sib/linalg.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sib {

struct StageNoise {
  Matrix sigma_t;   // side-information noise covariance
  Matrix sigma_0t;  // cross-covariance cov(W_0, W_t); cov(W_t, W_0) is its transpose
};

/// Unvalidated candidate instance, as read from a config or built in code.
struct ModelSpec {
  Matrix sigma_x;
  Matrix sigma_0;
  std::vector<StageNoise> stages;
};

enum class ViolationKind {
  dimension_mismatch,
  non_symmetric,
  not_positive_definite,
  degradedness_violated,
  block_covariance_invalid,
  conditional_noise_singular,
};

struct Violation {
  ViolationKind kind;
  std::string matrix;  // which matrix, e.g. "sigma_t[2]"
  int stage = 0;       // 1-based, 0 when not stage specific
  double eigenvalue = 0.0;

  std::string describe() const;
};

std::string_view to_string(ViolationKind kind);

class GaussianScalableModel {
 public:
  Index m() const { return spec_.sigma_x.rows(); }
  int stages() const { return static_cast<int>(spec_.stages.size()); }

  const ModelSpec& spec() const { return spec_; }
  const Matrix& sigma_x() const { return spec_.sigma_x; }
  const Matrix& sigma_0() const { return spec_.sigma_0; }
  const Matrix& sigma_t(int t) const { return stage(t).sigma_t; }
  const Matrix& sigma_0t(int t) const { return stage(t).sigma_0t; }
  Matrix sigma_t0(int t) const { return stage(t).sigma_0t.transpose(); }

  const Matrix& sigma_t_inverse(int t) const { return derived_.at(index(t)).sigma_t_inv; }
  /// Sigma_{0|t} = cov(W_0 | W_t).
  const Matrix& conditional_noise(int t) const { return derived_.at(index(t)).cond_noise; }
  const Matrix& conditional_noise_inverse(int t) const {
    return derived_.at(index(t)).cond_noise_inv;
  }

  /// Throws Error(Errc::validation) listing every violation.
  static GaussianScalableModel from_spec(ModelSpec spec);

 private:
  friend std::variant<GaussianScalableModel, std::vector<Violation>> validate_model(
      const ModelSpec&);

  struct Derived {
    Matrix sigma_t_inv;
    Matrix cond_noise;
    Matrix cond_noise_inv;
  };

  explicit GaussianScalableModel(ModelSpec spec);
  const StageNoise& stage(int t) const { return spec_.stages.at(index(t)); }
  std::size_t index(int t) const;

  ModelSpec spec_;
  std::vector<Derived> derived_;
};

/// Checks every model invariant; returns the model or all violations found.
std::variant<GaussianScalableModel, std::vector<Violation>> validate_model(const ModelSpec& candidate);
inline const GaussianScalableModel& validate_model(const GaussianScalableModel& model) { return model; }

Matrix conditional_noise_cov(const GaussianScalableModel& model, int t);

/// Loewner-ordered chain 0 <= Omega_1 <= ... <= Omega_T <= Sigma_{0|T}^{-1}.
struct OmegaChain {
  std::vector<Matrix> omegas;

  static OmegaChain zeros(Index m, int stages);
  static OmegaChain scalar(std::initializer_list<double> values);
  int stages() const { return static_cast<int>(omegas.size()); }
  const Matrix& at(int t) const { return omegas.at(static_cast<std::size_t>(t - 1)); }
};

struct ChainCheck {
  bool feasible = false;
  /// Most negative eigenvalue over all difference matrices (>= 0 when feasible).
  double min_eigenvalue = 0.0;
  double max_violation() const { return min_eigenvalue < 0.0 ? -min_eigenvalue : 0.0; }
};

/// Throws Error(Errc::dimension_mismatch) on inconsistent sizes.
ChainCheck check_omega_chain(const GaussianScalableModel& model, const OmegaChain& chain);

/// Convenience scalar instance: Sigma_{0t} = gamma * Sigma_t for every stage.
ModelSpec scalar_model_spec(double sigma_x, double sigma_0, const std::vector<double>& sigma_si,
                            double gamma);

}  // namespace sib
