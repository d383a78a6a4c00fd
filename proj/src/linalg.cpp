#include "sib/linalg.hpp"

#include "sib/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sib {

bool is_square(const Matrix& a) { return a.rows() == a.cols(); }

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (!is_square(a)) return false;
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  return (a - a.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double max_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

bool is_psd(const Matrix& a) { return min_eigenvalue(a) >= -kPsdTolerance; }

bool is_positive_definite(const Matrix& a) {
  if (a.size() == 0) return true;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a), Eigen::EigenvaluesOnly);
  const double hi = es.eigenvalues().maxCoeff();
  const double lo = es.eigenvalues().minCoeff();
  return hi > 0.0 && lo >= kPdRelativeTolerance * hi;
}

double log2det_spd(const Matrix& a) {
  if (!is_symmetric(a)) throw Error(Errc::internal, "log-det argument is not symmetric");
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success)
    throw Error(Errc::internal, "log-det argument is not positive definite");
  const auto diag = llt.matrixLLT().diagonal();
  double sum = 0.0;
  for (Index i = 0; i < diag.size(); ++i) sum += std::log2(diag(i));
  return 2.0 * sum;
}

double log2det_identity_plus_sandwich(const Matrix& middle, const Matrix& outer_spd,
                                      double sign) {
  if (!is_symmetric(middle)) throw Error(Errc::internal, "determinant middle factor is not symmetric");
  Eigen::LLT<Matrix> llt(symmetrize(outer_spd));
  if (llt.info() != Eigen::Success) throw Error(Errc::internal, "outer factor is not SPD");
  const Matrix l = llt.matrixL();
  const Matrix arg = Matrix::Identity(middle.rows(), middle.cols()) +
                     sign * (l.transpose() * symmetrize(middle) * l);
  // Numerically singular arguments (below the PD tolerance) count as outside the domain.
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(symmetrize(arg), Eigen::EigenvaluesOnly);
  const auto& ev = eig.eigenvalues();
  if (!(ev.minCoeff() > kPdRelativeTolerance * std::max(1.0, ev.maxCoeff()))) return -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (Index i = 0; i < ev.size(); ++i) sum += std::log2(ev(i));
  return sum;
}

Matrix spd_inverse(const Matrix& a) {
  Eigen::LLT<Matrix> llt(symmetrize(a));
  if (llt.info() != Eigen::Success) throw Error(Errc::internal, "inverse of non-SPD matrix");
  return symmetrize(llt.solve(Matrix::Identity(a.rows(), a.cols())));
}

namespace {

template <typename F>
Matrix spectral_map(const Matrix& a, F&& f) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(a));
  Vector vals = es.eigenvalues();
  for (Index i = 0; i < vals.size(); ++i) vals(i) = f(vals(i));
  return symmetrize(es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().transpose());
}

}  // namespace

Matrix spd_sqrt(const Matrix& a) {
  return spectral_map(a, [](double v) { return std::sqrt(std::max(v, 0.0)); });
}

Matrix spd_inv_sqrt(const Matrix& a) {
  if (!is_positive_definite(a)) throw Error(Errc::internal, "inverse square root of non-PD matrix");
  return spectral_map(a, [](double v) { return 1.0 / std::sqrt(v); });
}

Matrix project_psd(const Matrix& a) {
  return spectral_map(a, [](double v) { return std::max(v, 0.0); });
}

Matrix submatrix(const Matrix& a, const std::vector<Index>& rows,
                 const std::vector<Index>& cols) {
  Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j)
      out(static_cast<Index>(i), static_cast<Index>(j)) = a(rows[i], cols[j]);
  return out;
}

Matrix schur_complement(const Matrix& a, const std::vector<Index>& keep,
                        const std::vector<Index>& given) {
  Matrix kk = submatrix(a, keep, keep);
  if (given.empty()) return kk;
  const Matrix gg = submatrix(a, given, given);
  const Matrix gk = submatrix(a, given, keep);
  Eigen::LLT<Matrix> llt(symmetrize(gg));
  if (llt.info() != Eigen::Success || !is_positive_definite(gg))
    throw Error(Errc::singular_conditioning, "conditioning covariance is not invertible");
  return symmetrize(kk - gk.transpose() * llt.solve(gk));
}

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix out(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) out(i, j) = normal(rng);
  return out;
}

Matrix random_spd(Index m, std::mt19937_64& rng, double lo, double hi) {
  // Random orthogonal basis from a QR factorization, prescribed spectrum.
  const Matrix g = random_matrix(m, m, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix q = qr.householderQ();
  std::uniform_real_distribution<double> unif(lo, hi);
  Vector vals(m);
  for (Index i = 0; i < m; ++i) vals(i) = unif(rng);
  return symmetrize(q * vals.asDiagonal() * q.transpose());
}

}  // namespace sib
