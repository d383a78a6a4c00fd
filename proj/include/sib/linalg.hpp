#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace sib {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Eigenvalue >= -kPsdTolerance counts as positive semidefinite.
inline constexpr double kPsdTolerance = 1e-10;
// Positive definite requires eigenvalue >= kPdRelativeTolerance * largest eigenvalue.
inline constexpr double kPdRelativeTolerance = 1e-12;
// Determinant arguments asymmetric beyond this (relative) are an internal error.
inline constexpr double kSymmetryTolerance = 1e-8;

bool is_square(const Matrix& a);
bool is_symmetric(const Matrix& a, double rel_tol = kSymmetryTolerance);
Matrix symmetrize(const Matrix& a);

/// Smallest eigenvalue of the symmetric part of `a`.
double min_eigenvalue(const Matrix& a);
double max_eigenvalue(const Matrix& a);

bool is_psd(const Matrix& a);
bool is_positive_definite(const Matrix& a);

/// log2 det of a symmetric positive-definite matrix via Cholesky.
/// Throws Errc::internal if `a` is asymmetric or not positive definite.
double log2det_spd(const Matrix& a);

/// log2 |I + sign * L^T middle L| where outer = L L^T is SPD and `middle` is
/// symmetric. Equals log2 |I + sign * middle * outer| by Sylvester's identity,
/// but is evaluated on a symmetric argument. Returns -inf when the argument
/// is not positive definite.
double log2det_identity_plus_sandwich(const Matrix& middle, const Matrix& outer_spd,
                                      double sign = 1.0);

Matrix spd_inverse(const Matrix& a);

/// Symmetric square root and inverse square root of an SPD matrix.
Matrix spd_sqrt(const Matrix& a);
Matrix spd_inv_sqrt(const Matrix& a);

/// Projection onto the PSD cone (negative eigenvalues clipped to zero).
Matrix project_psd(const Matrix& a);

/// Schur complement  a[keep,keep] - a[keep,given] a[given,given]^{-1} a[given,keep].
/// Throws Errc::singular_conditioning if a[given,given] is not positive definite.
Matrix schur_complement(const Matrix& a, const std::vector<Index>& keep,
                        const std::vector<Index>& given);

Matrix submatrix(const Matrix& a, const std::vector<Index>& rows,
                 const std::vector<Index>& cols);

/// Random SPD matrix with eigenvalues in [lo, hi].
Matrix random_spd(Index m, std::mt19937_64& rng, double lo = 0.5, double hi = 3.0);
Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0);

}  // namespace sib
