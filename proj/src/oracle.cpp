#include "sib/oracle.hpp"

#include "sib/error.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>
#include <thread>

namespace sib::oracle {

std::string Var::name() const {
  switch (kind) {
    case VarKind::source: return "X";
    case VarKind::observation: return "Y";
    case VarKind::side_info: return "Y" + std::to_string(stage);
    case VarKind::description: return "U" + std::to_string(stage);
  }
  return "?";
}

Index JointCovariance::offset(const Var& v) const {
  Index block = 0;
  switch (v.kind) {
    case VarKind::source: block = 0; break;
    case VarKind::observation: block = 1; break;
    case VarKind::side_info:
    case VarKind::description:
      if (v.stage < 1 || v.stage > stages_)
        throw Error(Errc::usage, "variable " + v.name() + " outside 1.." + std::to_string(stages_));
      block = (v.kind == VarKind::side_info ? 1 : 1 + stages_) + v.stage;
      break;
  }
  return block * m_;
}

std::vector<Index> JointCovariance::indices(const Group& g) const {
  std::vector<Index> out;
  for (const auto& v : g) {
    const Index off = offset(v);
    for (Index i = 0; i < m_; ++i) out.push_back(off + i);
  }
  return out;
}

Matrix JointCovariance::block(const Var& a, const Var& b) const {
  return cov_.block(offset(a), offset(b), m_, m_);
}

std::vector<Matrix> description_noise(const GaussianScalableModel& model, const OmegaChain& chain) {
  std::vector<Matrix> out;
  for (int t = 1; t <= model.stages(); ++t)
    out.push_back(symmetrize(spd_inverse(chain.at(t)) - model.conditional_noise(t)));
  return out;
}

namespace {

bool strictly_interior(const GaussianScalableModel& model, const OmegaChain& chain) {
  for (int t = 1; t <= model.stages(); ++t) {
    const Matrix& omega = chain.at(t);
    const Matrix& cap = model.conditional_noise_inverse(t);
    const double scale = std::max(1.0, max_eigenvalue(cap));
    if (min_eigenvalue(omega) <= kPdRelativeTolerance * scale) return false;
    if (min_eigenvalue(cap - omega) <= kPdRelativeTolerance * scale) return false;
  }
  return true;
}

}  // namespace

JointCovariance build_joint_covariance(const GaussianScalableModel& model, const OmegaChain& chain,
                                       BoundaryMode mode) {
  const auto check = check_omega_chain(model, chain);
  if (!check.feasible)
    throw Error(Errc::infeasible_chain, "Loewner chain violated by " + std::to_string(check.max_violation()));

  const Index m = model.m();
  const int T = model.stages();
  OmegaChain used = chain;
  bool shifted = false;
  if (!strictly_interior(model, used)) {
    if (mode == BoundaryMode::strict)
      throw Error(Errc::chain_not_strictly_interior,
                  "Omega_t must satisfy 0 < Omega_t < Sigma_{0|t}^{-1}");
    double r = std::numeric_limits<double>::infinity();
    for (int t = 1; t <= T; ++t) r = std::min(r, min_eigenvalue(model.conditional_noise_inverse(t)));
    const Matrix pull = 0.5 * r * Matrix::Identity(m, m);
    for (auto& omega : used.omegas) omega = (1.0 - kInteriorShift) * omega + kInteriorShift * pull;
    shifted = true;
    if (!strictly_interior(model, used))
      throw Error(Errc::chain_not_strictly_interior, "chain exceeds Sigma_{0|t}^{-1} for some t < T");
  }

  const auto noise = description_noise(model, used);
  for (int t = 1; t < T; ++t) {
    const Matrix diff = noise[static_cast<std::size_t>(t - 1)] - noise[static_cast<std::size_t>(t)];
    const double scale = std::max(1.0, diff.cwiseAbs().maxCoeff());
    if (min_eigenvalue(diff) < -kPsdTolerance * scale)
      throw Error(Errc::descriptions_not_degraded,
                  "Omega_z" + std::to_string(t + 1) + " is not below Omega_z" + std::to_string(t));
  }

  const Index n = (2 + 2 * T) * m;
  Matrix cov(n, n);
  const Matrix& sx = model.sigma_x();
  const Matrix& s0 = model.sigma_0();
  const Matrix s0_inv = spd_inverse(s0);
  auto put = [&](Index bi, Index bj, const Matrix& value) {
    cov.block(bi * m, bj * m, m, m) = value;
    if (bi != bj) cov.block(bj * m, bi * m, m, m) = value.transpose();
  };
  const Index bx = 0, by = 1;
  auto bside = [&](int t) { return static_cast<Index>(1 + t); };
  auto bdesc = [&](int t) { return static_cast<Index>(1 + T + t); };

  put(bx, bx, sx);
  put(bx, by, sx);
  put(by, by, sx + s0);
  for (int t = 1; t <= T; ++t) {
    put(bx, bside(t), sx);
    put(bx, bdesc(t), sx);
    put(by, bside(t), sx + model.sigma_0t(t));
    put(by, bdesc(t), sx + s0);
    put(bside(t), bside(t), sx + model.sigma_t(t));
    for (int s = t + 1; s <= T; ++s)
      put(bside(t), bside(s), sx + model.sigma_t0(t) * s0_inv * model.sigma_0t(s));
    for (int s = 1; s <= T; ++s) put(bside(t), bdesc(s), sx + model.sigma_t0(t));
    for (int s = t; s <= T; ++s)
      put(bdesc(t), bdesc(s), sx + s0 + noise[static_cast<std::size_t>(std::max(t, s) - 1)]);
  }
  return JointCovariance(symmetrize(cov), m, T, shifted);
}

double mi_logdet(const Matrix& cov, const std::vector<Index>& a, const std::vector<Index>& b,
                 const std::vector<Index>& c) {
  std::set<Index> seen;
  for (const auto* g : {&a, &b, &c})
    for (Index i : *g)
      if (!seen.insert(i).second) throw Error(Errc::usage, "mutual-information groups overlap");
  if (a.empty() || b.empty()) return 0.0;
  std::vector<Index> bc = b;
  bc.insert(bc.end(), c.begin(), c.end());
  const Matrix given_c = schur_complement(cov, a, c);
  const Matrix given_bc = schur_complement(cov, a, bc);
  return log2det_spd(given_c) - log2det_spd(given_bc);
}

double mi_logdet(const JointCovariance& joint, const Group& a, const Group& b, const Group& c) {
  return mi_logdet(joint.matrix(), joint.indices(a), joint.indices(b), joint.indices(c));
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

struct ChunkStats {
  Vector sum;
  Matrix cross;  // sum of x x^T
  std::size_t count = 0;
};

double functional(const ChunkStats& s, const std::vector<Index>& a, const std::vector<Index>& b,
                  const std::vector<Index>& c) {
  const double n = static_cast<double>(s.count);
  const Vector mean = s.sum / n;
  const Matrix cov = (s.cross - n * mean * mean.transpose()) / (n - 1.0);
  return mi_logdet(symmetrize(cov), a, b, c);
}

ChunkStats minus(const ChunkStats& total, const ChunkStats& part) {
  return {total.sum - part.sum, total.cross - part.cross, total.count - part.count};
}

std::vector<Index> local_range(Index begin, Index len) {
  std::vector<Index> out(static_cast<std::size_t>(len));
  for (Index i = 0; i < len; ++i) out[static_cast<std::size_t>(i)] = begin + i;
  return out;
}

}  // namespace

McEstimate mc_mi_estimate(const JointCovariance& joint, const Group& a, const Group& b,
                          const Group& c, std::size_t n_samples, std::uint64_t seed) {
  if (n_samples < kMinMcSamples)
    throw Error(Errc::usage, "Monte Carlo needs at least " + std::to_string(kMinMcSamples) + " samples");
  const auto ia = joint.indices(a);
  const auto ib = joint.indices(b);
  const auto ic = joint.indices(c);
  std::vector<Index> all = ia;
  all.insert(all.end(), ib.begin(), ib.end());
  all.insert(all.end(), ic.begin(), ic.end());
  const Index d = static_cast<Index>(all.size());
  const auto la = local_range(0, static_cast<Index>(ia.size()));
  const auto lb = local_range(static_cast<Index>(ia.size()), static_cast<Index>(ib.size()));
  const auto lc = local_range(static_cast<Index>(ia.size() + ib.size()), static_cast<Index>(ic.size()));

  // Symmetric square root tolerates a PSD (rank-deficient) marginal.
  const Matrix factor = spd_sqrt(submatrix(joint.matrix(), all, all));

  const std::size_t n_chunks = std::min<std::size_t>(100, n_samples / 1000);
  std::vector<ChunkStats> chunks(n_chunks);
  auto run_chunk = [&](std::size_t k) {
    const std::size_t begin = n_samples * k / n_chunks;
    const std::size_t end = n_samples * (k + 1) / n_chunks;
    const Index rows = static_cast<Index>(end - begin);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(k), static_cast<std::uint32_t>(k >> 32)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal;
    Matrix z(rows, d);
    for (Index i = 0; i < rows; ++i)
      for (Index j = 0; j < d; ++j) z(i, j) = normal(rng);
    const Matrix x = z * factor;
    ChunkStats s;
    s.sum = x.colwise().sum().transpose();
    s.cross = x.transpose() * x;
    s.count = static_cast<std::size_t>(rows);
    chunks[k] = std::move(s);
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(std::thread::hardware_concurrency(),
                                                           static_cast<unsigned>(n_chunks)));
  if (workers == 1) {
    for (std::size_t k = 0; k < n_chunks; ++k) run_chunk(k);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (std::size_t k = next++; k < n_chunks; k = next++) run_chunk(k);
      });
    for (auto& th : pool) th.join();
  }

  ChunkStats total{Vector::Zero(d), Matrix::Zero(d, d), 0};
  for (const auto& s : chunks) {
    total.sum += s.sum;
    total.cross += s.cross;
    total.count += s.count;
  }

  McEstimate out;
  out.samples = total.count;
  out.estimate = functional(total, la, lb, lc);
  std::vector<double> leave_out(n_chunks);
  double mean = 0.0;
  for (std::size_t k = 0; k < n_chunks; ++k) {
    leave_out[k] = functional(minus(total, chunks[k]), la, lb, lc);
    mean += leave_out[k];
  }
  mean /= static_cast<double>(n_chunks);
  double ss = 0.0;
  for (double v : leave_out) ss += (v - mean) * (v - mean);
  const double g = static_cast<double>(n_chunks);
  out.std_error = std::sqrt((g - 1.0) / g * ss);
  return out;
}

McEstimate mc_mi_estimate(const GaussianScalableModel& model, const OmegaChain& chain,
                          const Group& a, const Group& b, const Group& c, std::size_t n_samples,
                          std::uint64_t seed) {
  return mc_mi_estimate(build_joint_covariance(model, chain, BoundaryMode::epsilon_shift), a, b, c,
                        n_samples, seed);
}

// ---------------------------------------------------------------------------
// Fisher information / MMSE identities

Matrix mmse_matrix(const Matrix& cov, const std::vector<Index>& target,
                   const std::vector<Index>& given) {
  return schur_complement(cov, target, given);
}

Matrix conditional_fisher(const Matrix& cov, const std::vector<Index>& target,
                          const std::vector<Index>& given) {
  std::vector<Index> all = target;
  all.insert(all.end(), given.begin(), given.end());
  const Matrix precision = spd_inverse(submatrix(cov, all, all));
  return symmetrize(precision.topLeftCorner(static_cast<Index>(target.size()),
                                            static_cast<Index>(target.size())));
}

double fisher_mmse_residual(const Matrix& cov_v, Index dim_v1, const Matrix& sigma_z) {
  const Index m = sigma_z.rows();
  if (cov_v.rows() != dim_v1 + m) throw Error(Errc::dimension_mismatch, "cov(V1, V2) size");
  // Stack (V1, V2, W = V2 + Z).
  const Index n = dim_v1 + 2 * m;
  Matrix cov(n, n);
  cov.topLeftCorner(dim_v1 + m, dim_v1 + m) = cov_v;
  cov.block(0, dim_v1 + m, dim_v1 + m, m) = cov_v.block(0, dim_v1, dim_v1 + m, m);
  cov.block(dim_v1 + m, 0, m, dim_v1 + m) = cov_v.block(dim_v1, 0, m, dim_v1 + m);
  cov.bottomRightCorner(m, m) = cov_v.bottomRightCorner(m, m) + sigma_z;

  const auto v1 = local_range(0, dim_v1);
  const auto v2 = local_range(dim_v1, m);
  const auto w = local_range(dim_v1 + m, m);
  std::vector<Index> v1w = v1;
  v1w.insert(v1w.end(), w.begin(), w.end());

  const Matrix lhs = mmse_matrix(cov, v2, v1w);
  const Matrix fisher = conditional_fisher(cov, w, v1);
  const Matrix rhs = sigma_z - sigma_z * fisher * sigma_z;
  return (lhs - rhs).norm();
}

NoisePrecisionBlocks noise_precision_blocks(const GaussianScalableModel& model, int t) {
  const Matrix& cond_inv = model.conditional_noise_inverse(t);
  const Matrix& st_inv = model.sigma_t_inverse(t);
  NoisePrecisionBlocks p;
  p.p1 = cond_inv;
  p.p2 = -cond_inv * model.sigma_0t(t) * st_inv;
  p.p3 = -st_inv * model.sigma_t0(t) * cond_inv;
  p.p4 = st_inv + st_inv * model.sigma_t0(t) * cond_inv * model.sigma_0t(t) * st_inv;
  return p;
}

double FisherCheckReport::max_residual() const {
  return std::max({fisher_residual, sandwich_residual, error_cov_residual, estimator_residual});
}

FisherCheckReport fisher_mmse_check(Index m, std::uint64_t seed) {
  if (m < 1 || m > 6) throw Error(Errc::usage, "fisher_mmse_check supports 1 <= m <= 6");
  FisherCheckReport report;
  report.m = m;
  report.seed = seed;
  std::mt19937_64 rng(seed);

  const Matrix cov_v = random_spd(2 * m, rng);
  const Matrix sigma_z = random_spd(m, rng);
  report.fisher_residual = fisher_mmse_residual(cov_v, m, sigma_z);

  const auto inst = random_instance(m, 1, seed ^ 0x9e3779b97f4a7c15ULL);
  const auto& model = inst.model;
  const Matrix& sx = model.sigma_x();
  // (X, Y, Y_1) covariance assembled directly.
  Matrix cov(3 * m, 3 * m);
  cov << sx, sx, sx,
         sx, sx + model.sigma_0(), sx + model.sigma_0t(1),
         sx, sx + model.sigma_t0(1), sx + model.sigma_t(1);
  const auto x = local_range(0, m);
  const auto obs = local_range(m, 2 * m);

  const Matrix mmse = mmse_matrix(cov, x, obs);
  const Matrix fisher = conditional_fisher(cov, x, obs);
  report.sandwich_residual = std::abs(-log2det_spd(fisher) - log2det_spd(mmse));

  const auto p = noise_precision_blocks(model, 1);
  const Matrix row_y = p.p1 + p.p3;
  const Matrix row_side = p.p2 + p.p4;
  const Matrix err_cov = spd_inverse(spd_inverse(sx) + symmetrize(row_y + row_side));
  report.error_cov_residual = (err_cov - mmse).norm();

  Matrix formula_coeff(m, 2 * m);
  formula_coeff << err_cov * row_y, err_cov * row_side;
  const Matrix cross = cov.block(0, m, m, 2 * m);
  const Matrix obs_cov = cov.block(m, m, 2 * m, 2 * m);
  const Matrix direct_coeff = obs_cov.ldlt().solve(cross.transpose()).transpose();
  report.estimator_residual = (formula_coeff - direct_coeff).norm();

  Matrix noise(2 * m, 2 * m);
  noise << model.sigma_0(), model.sigma_0t(1), model.sigma_t0(1), model.sigma_t(1);
  const Matrix noise_inv = noise.inverse();
  const Matrix uninverted_p2 = -model.conditional_noise(1) * model.sigma_0t(1) * model.sigma_t_inverse(1);
  report.uninverted_p2_residual = (uninverted_p2 - noise_inv.topRightCorner(m, m)).norm();

  std::ostringstream os;
  os << "m=" << m << " seed=" << seed << " hash=" << instance_hash(model, inst.chain);
  report.instance = os.str();
  return report;
}

// ---------------------------------------------------------------------------
// Random instances

RandomInstance random_instance(Index m, int stages, std::uint64_t seed, bool uncorrelated) {
  if (m < 1 || stages < 1) throw Error(Errc::usage, "random_instance needs m >= 1, T >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  ModelSpec spec;
  spec.sigma_x = random_spd(m, rng, 0.5, 4.0);
  spec.sigma_0 = random_spd(m, rng, 0.3, 2.0);
  std::vector<Matrix> side(static_cast<std::size_t>(stages));
  side.back() = random_spd(m, rng, 0.3, 2.0);
  for (int t = stages - 2; t >= 0; --t) {
    const Matrix g = random_matrix(m, m, rng, 0.5);
    side[static_cast<std::size_t>(t)] = symmetrize(side[static_cast<std::size_t>(t + 1)] + g * g.transpose());
  }
  const Matrix s0_root = spd_sqrt(spec.sigma_0);
  for (int t = 0; t < stages; ++t) {
    StageNoise st;
    st.sigma_t = side[static_cast<std::size_t>(t)];
    if (uncorrelated) {
      st.sigma_0t = Matrix::Zero(m, m);
    } else {
      // K = Sigma_0^{1/2} C Sigma_t^{1/2} with ||C|| < 1 keeps the block PD.
      Matrix c = random_matrix(m, m, rng);
      const double norm = Eigen::JacobiSVD<Matrix>(c).singularValues()(0);
      c *= (0.2 + 0.6 * unif(rng)) / norm;
      st.sigma_0t = s0_root * c * spd_sqrt(st.sigma_t);
    }
    spec.stages.push_back(std::move(st));
  }
  auto model = GaussianScalableModel::from_spec(std::move(spec));

  // Nested description noises, then Omega_t = (Omega_z_t + Sigma_{0|t})^{-1}.
  std::vector<Matrix> noise(static_cast<std::size_t>(stages));
  noise.back() = random_spd(m, rng, 0.05, 2.0);
  for (int t = stages - 1; t >= 1; --t) {
    const Matrix drift = model.conditional_noise(t + 1) - model.conditional_noise(t);
    const double lift = std::max(0.0, max_eigenvalue(drift)) + 0.05 * unif(rng);
    const Matrix g = random_matrix(m, m, rng, 0.5);
    noise[static_cast<std::size_t>(t - 1)] =
        symmetrize(noise[static_cast<std::size_t>(t)] + g * g.transpose() + lift * Matrix::Identity(m, m));
  }
  OmegaChain chain;
  for (int t = 1; t <= stages; ++t)
    chain.omegas.push_back(spd_inverse(noise[static_cast<std::size_t>(t - 1)] + model.conditional_noise(t)));
  return RandomInstance{std::move(model), std::move(chain)};
}

std::string instance_hash(const GaussianScalableModel& model, const OmegaChain& chain) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const Matrix& a) {
    for (Index i = 0; i < a.size(); ++i) {
      std::uint64_t bits;
      const double v = a.data()[i];
      std::memcpy(&bits, &v, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        h ^= (bits >> (8 * b)) & 0xffU;
        h *= 1099511628211ULL;
      }
    }
  };
  mix(model.sigma_x());
  mix(model.sigma_0());
  for (int t = 1; t <= model.stages(); ++t) {
    mix(model.sigma_t(t));
    mix(model.sigma_0t(t));
  }
  for (const auto& omega : chain.omegas) mix(omega);
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

}  // namespace sib::oracle
