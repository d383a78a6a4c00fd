#include "sib/model.hpp"

#include "sib/error.hpp"

#include <limits>
#include <sstream>

namespace sib {

std::string_view to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::dimension_mismatch: return "DimensionMismatch";
    case ViolationKind::non_symmetric: return "NonSymmetric";
    case ViolationKind::not_positive_definite: return "NotPositiveDefinite";
    case ViolationKind::degradedness_violated: return "DegradednessViolated";
    case ViolationKind::block_covariance_invalid: return "BlockCovarianceInvalid";
    case ViolationKind::conditional_noise_singular: return "ConditionalNoiseSingular";
  }
  return "Unknown";
}

std::string Violation::describe() const {
  std::ostringstream os;
  os << to_string(kind);
  if (stage > 0) os << "(" << stage << ")";
  os << " [" << matrix << "]";
  if (kind != ViolationKind::dimension_mismatch && kind != ViolationKind::non_symmetric)
    os << " min eigenvalue " << eigenvalue;
  return os.str();
}

namespace {

Matrix block_noise_covariance(const Matrix& sigma_0, const StageNoise& s) {
  const Index m = sigma_0.rows();
  Matrix block(2 * m, 2 * m);
  block << sigma_0, s.sigma_0t, s.sigma_0t.transpose(), s.sigma_t;
  return block;
}

}  // namespace

std::size_t GaussianScalableModel::index(int t) const {
  if (t < 1 || t > stages())
    throw Error(Errc::usage, "stage index " + std::to_string(t) + " outside 1.." +
                                 std::to_string(stages()));
  return static_cast<std::size_t>(t - 1);
}

GaussianScalableModel::GaussianScalableModel(ModelSpec spec) : spec_(std::move(spec)) {
  spec_.sigma_x = symmetrize(spec_.sigma_x);
  spec_.sigma_0 = symmetrize(spec_.sigma_0);
  for (auto& s : spec_.stages) {
    s.sigma_t = symmetrize(s.sigma_t);
    Derived d;
    d.sigma_t_inv = spd_inverse(s.sigma_t);
    d.cond_noise = symmetrize(spec_.sigma_0 - s.sigma_0t * d.sigma_t_inv * s.sigma_0t.transpose());
    d.cond_noise_inv = spd_inverse(d.cond_noise);
    derived_.push_back(std::move(d));
  }
}

std::variant<GaussianScalableModel, std::vector<Violation>> validate_model(
    const ModelSpec& candidate) {
  std::vector<Violation> out;
  const Index m = candidate.sigma_x.rows();

  auto square_m = [&](const Matrix& a) { return a.rows() == m && a.cols() == m; };
  if (m < 1 || !square_m(candidate.sigma_x))
    out.push_back({ViolationKind::dimension_mismatch, "sigma_x"});
  if (!square_m(candidate.sigma_0)) out.push_back({ViolationKind::dimension_mismatch, "sigma_0"});
  if (candidate.stages.empty()) out.push_back({ViolationKind::dimension_mismatch, "stages"});
  for (std::size_t i = 0; i < candidate.stages.size(); ++i) {
    const int t = static_cast<int>(i + 1);
    const auto& s = candidate.stages[i];
    if (!square_m(s.sigma_t))
      out.push_back({ViolationKind::dimension_mismatch, "sigma_t[" + std::to_string(t) + "]", t});
    if (!square_m(s.sigma_0t))
      out.push_back({ViolationKind::dimension_mismatch, "sigma_0t[" + std::to_string(t) + "]", t});
  }
  if (!out.empty()) return out;

  auto check_spd = [&](const Matrix& a, const std::string& name, int t) {
    if (!is_symmetric(a)) {
      out.push_back({ViolationKind::non_symmetric, name, t});
      return;
    }
    if (!is_positive_definite(a))
      out.push_back({ViolationKind::not_positive_definite, name, t, min_eigenvalue(a)});
  };
  check_spd(candidate.sigma_x, "sigma_x", 0);
  check_spd(candidate.sigma_0, "sigma_0", 0);
  for (std::size_t i = 0; i < candidate.stages.size(); ++i) {
    const int t = static_cast<int>(i + 1);
    check_spd(candidate.stages[i].sigma_t, "sigma_t[" + std::to_string(t) + "]", t);
  }
  if (!out.empty()) return out;

  for (std::size_t i = 0; i < candidate.stages.size(); ++i) {
    const int t = static_cast<int>(i + 1);
    const auto& s = candidate.stages[i];
    const Matrix block = block_noise_covariance(candidate.sigma_0, s);
    const double block_min = min_eigenvalue(block);
    if (block_min < -kPsdTolerance)
      out.push_back({ViolationKind::block_covariance_invalid,
                     "[[sigma_0, sigma_0t], [sigma_t0, sigma_t]] stage " + std::to_string(t), t,
                     block_min});
    const Matrix cond = candidate.sigma_0 - s.sigma_0t * spd_inverse(s.sigma_t) * s.sigma_0t.transpose();
    if (!is_positive_definite(cond))
      out.push_back({ViolationKind::conditional_noise_singular,
                     "sigma_0|" + std::to_string(t), t, min_eigenvalue(cond)});
    if (i > 0) {
      const double diff_min = min_eigenvalue(candidate.stages[i - 1].sigma_t - s.sigma_t);
      if (diff_min < -kPsdTolerance)
        out.push_back({ViolationKind::degradedness_violated,
                       "sigma_t[" + std::to_string(t - 1) + "] - sigma_t[" + std::to_string(t) + "]",
                       t, diff_min});
    }
  }
  if (!out.empty()) return out;
  return GaussianScalableModel(candidate);
}

GaussianScalableModel GaussianScalableModel::from_spec(ModelSpec spec) {
  auto result = validate_model(spec);
  if (auto* violations = std::get_if<std::vector<Violation>>(&result)) {
    std::string msg;
    for (const auto& v : *violations) msg += (msg.empty() ? "" : "; ") + v.describe();
    throw Error(Errc::validation, msg);
  }
  return std::get<GaussianScalableModel>(std::move(result));
}

Matrix conditional_noise_cov(const GaussianScalableModel& model, int t) {
  return model.conditional_noise(t);
}

OmegaChain OmegaChain::zeros(Index m, int stages) {
  return OmegaChain{std::vector<Matrix>(static_cast<std::size_t>(stages), Matrix::Zero(m, m))};
}

OmegaChain OmegaChain::scalar(std::initializer_list<double> values) {
  OmegaChain chain;
  for (double v : values) chain.omegas.push_back(Matrix::Constant(1, 1, v));
  return chain;
}

ChainCheck check_omega_chain(const GaussianScalableModel& model, const OmegaChain& chain) {
  if (chain.stages() != model.stages())
    throw Error(Errc::dimension_mismatch, "chain has " + std::to_string(chain.stages()) +
                                              " stages, model has " + std::to_string(model.stages()));
  for (const auto& omega : chain.omegas)
    if (omega.rows() != model.m() || omega.cols() != model.m())
      throw Error(Errc::dimension_mismatch, "omega matrix is not m x m");

  double worst = std::numeric_limits<double>::infinity();
  Matrix previous = Matrix::Zero(model.m(), model.m());
  for (const auto& omega : chain.omegas) {
    worst = std::min(worst, min_eigenvalue(omega - previous));
    previous = omega;
  }
  worst = std::min(worst, min_eigenvalue(model.conditional_noise_inverse(model.stages()) - previous));
  return ChainCheck{worst >= -kPsdTolerance, worst};
}

ModelSpec scalar_model_spec(double sigma_x, double sigma_0, const std::vector<double>& sigma_si,
                            double gamma) {
  ModelSpec spec;
  spec.sigma_x = Matrix::Constant(1, 1, sigma_x);
  spec.sigma_0 = Matrix::Constant(1, 1, sigma_0);
  for (double s : sigma_si)
    spec.stages.push_back({Matrix::Constant(1, 1, s), Matrix::Constant(1, 1, gamma * s)});
  return spec;
}

}  // namespace sib
