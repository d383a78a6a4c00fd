#include "sib/discrete.hpp"

#include "sib/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace sib::discrete {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// p log2(p / q) with 0 log 0 = 0; +inf when q = 0 < p.
double kl_term(double p, double q) {
  if (p <= 0.0) return 0.0;
  if (q <= 0.0) return kInf;
  return p * std::log2(p / q);
}

void fail(const std::string& what) { throw Error(Errc::validation, what); }

}  // namespace

Index DiscreteIBInstance::tuples() const {
  Index n = 1;
  for (int k : nu) n *= k;
  return n;
}

int DiscreteIBInstance::digit(Index tuple, int t) const {
  for (int s = 1; s < t; ++s) tuple /= nu[static_cast<std::size_t>(s - 1)];
  return static_cast<int>(tuple % nu[static_cast<std::size_t>(t - 1)]);
}

void DiscreteIBInstance::validate() const {
  auto in_range = [](int k) { return k >= 1 && k <= kMaxAlphabet; };
  if (!in_range(nx) || !in_range(ny)) fail("alphabet sizes must be in 1..8");
  if (nu.empty()) fail("need at least one stage");
  for (int k : nu)
    if (!in_range(k)) fail("alphabet sizes must be in 1..8");
  if (beta.size() != nu.size()) fail("beta needs one weight per stage");
  for (double b : beta)
    if (!(b >= 0.0) || !std::isfinite(b)) fail("beta_t must be finite and >= 0");
  if (p_xy.rows() != nx || p_xy.cols() != ny) fail("p_xy must be |X| x |Y|");
  if (encoder.rows() != ny || encoder.cols() != tuples()) fail("encoder must be |Y| x prod |U_t|");
  if (!p_xy.allFinite() || p_xy.minCoeff() < 0.0) fail("p_xy has negative entries");
  if (std::abs(p_xy.sum() - 1.0) > kPmfTolerance) fail("p_xy does not sum to 1");
  if (!encoder.allFinite() || encoder.minCoeff() < 0.0) fail("encoder has negative entries");
  for (Index y = 0; y < ny; ++y)
    if (std::abs(encoder.row(y).sum() - 1.0) > kPmfTolerance)
      fail("encoder row " + std::to_string(y) + " does not sum to 1");
}

Induced induce(const DiscreteIBInstance& inst) {
  const int T = inst.stages();
  Induced out;
  out.p_y = inst.p_xy.colwise().sum().transpose();
  const Matrix p_xtuple = inst.p_xy * inst.encoder;  // nx x tuples
  for (int t = 1; t <= T; ++t) out.p_xu.push_back(Matrix::Zero(inst.nx, inst.nu[static_cast<std::size_t>(t - 1)]));
  out.p_y_ut = Matrix::Zero(inst.ny, inst.nu.back());
  for (Index k = 0; k < inst.tuples(); ++k) {
    for (int t = 1; t <= T; ++t) out.p_xu[static_cast<std::size_t>(t - 1)].col(inst.digit(k, t)) += p_xtuple.col(k);
    out.p_y_ut.col(inst.digit(k, T)) += out.p_y.cwiseProduct(inst.encoder.col(k));
  }
  return out;
}

namespace {

double mutual_info_y_ut(const Induced& ind) {
  const Vector p_ut = ind.p_y_ut.colwise().sum().transpose();
  double mi = 0.0;
  for (Index y = 0; y < ind.p_y_ut.rows(); ++y)
    for (Index u = 0; u < ind.p_y_ut.cols(); ++u)
      mi += kl_term(ind.p_y_ut(y, u), ind.p_y(y) * p_ut(u));
  return mi;
}

double cond_entropy_x(const Matrix& p_xu) {
  double h = 0.0;
  for (Index u = 0; u < p_xu.cols(); ++u) {
    const double pu = p_xu.col(u).sum();
    for (Index x = 0; x < p_xu.rows(); ++x) h -= kl_term(p_xu(x, u), pu);
  }
  return h;
}

}  // namespace

double exact_objective(const DiscreteIBInstance& inst) {
  inst.validate();
  const auto ind = induce(inst);
  double value = mutual_info_y_ut(ind);
  for (int t = 0; t < inst.stages(); ++t)
    value += inst.beta[static_cast<std::size_t>(t)] * cond_entropy_x(ind.p_xu[static_cast<std::size_t>(t)]);
  return value;
}

namespace {

void check_q(const DiscreteIBInstance& inst, const VariationalQ& q) {
  if (q.decoders.size() != inst.nu.size()) fail("one decoder per stage required");
  for (std::size_t t = 0; t < inst.nu.size(); ++t) {
    const Matrix& d = q.decoders[t];
    if (d.rows() != inst.nu[t] || d.cols() != inst.nx) fail("decoder must be |U_t| x |X|");
    if (d.minCoeff() < 0.0) fail("decoder has negative entries");
    for (Index u = 0; u < d.rows(); ++u)
      if (std::abs(d.row(u).sum() - 1.0) > kPmfTolerance) fail("decoder row does not sum to 1");
  }
  if (q.prior_T.size() != inst.nu.back()) fail("prior must have |U_T| entries");
  if (q.prior_T.minCoeff() < 0.0 || std::abs(q.prior_T.sum() - 1.0) > kPmfTolerance)
    fail("prior is not a pmf");
}

}  // namespace

GapDecomposition gap_decomposition(const DiscreteIBInstance& inst, const VariationalQ& q) {
  inst.validate();
  check_q(inst, q);
  const auto ind = induce(inst);
  GapDecomposition g;
  const Vector p_ut = ind.p_y_ut.colwise().sum().transpose();
  for (Index y = 0; y < ind.p_y_ut.rows(); ++y)
    for (Index u = 0; u < ind.p_y_ut.cols(); ++u) g.kl_conditional_prior += kl_term(ind.p_y_ut(y, u), ind.p_y(y) * q.prior_T(u));
  for (Index u = 0; u < p_ut.size(); ++u) g.kl_marginal_prior += kl_term(p_ut(u), q.prior_T(u));
  g.mutual_info = mutual_info_y_ut(ind);
  for (int t = 0; t < inst.stages(); ++t) {
    const Matrix& p_xu = ind.p_xu[static_cast<std::size_t>(t)];
    const Matrix& dec = q.decoders[static_cast<std::size_t>(t)];
    double ce = 0.0, kl = 0.0;
    for (Index u = 0; u < p_xu.cols(); ++u) {
      const double pu = p_xu.col(u).sum();
      for (Index x = 0; x < p_xu.rows(); ++x) {
        const double p = p_xu(x, u);
        if (p <= 0.0) continue;
        ce += dec(u, x) > 0.0 ? -p * std::log2(dec(u, x)) : kInf;
        kl += kl_term(p, pu * dec(u, x));
      }
    }
    g.cross_entropy.push_back(ce);
    g.kl_decoder.push_back(kl);
    g.cond_entropy.push_back(cond_entropy_x(p_xu));
  }
  return g;
}

double GapDecomposition::gap(const std::vector<double>& beta) const {
  double value = kl_conditional_prior - mutual_info;
  for (std::size_t t = 0; t < kl_decoder.size(); ++t) value += beta[t] * kl_decoder[t];
  return value;
}

BoundValue variational_objective(const DiscreteIBInstance& inst, const VariationalQ& q) {
  const auto g = gap_decomposition(inst, q);
  double value = g.kl_conditional_prior;
  for (int t = 0; t < inst.stages(); ++t) value += inst.beta[static_cast<std::size_t>(t)] * g.cross_entropy[static_cast<std::size_t>(t)];
  // A zero weight does not hide a mismatch in its term.
  bool mismatch = std::isinf(g.kl_conditional_prior);
  for (double ce : g.cross_entropy) mismatch = mismatch || std::isinf(ce);
  if (mismatch) return {kInf, true};
  return {value, false};
}

VariationalQ optimal_Q(const DiscreteIBInstance& inst) {
  inst.validate();
  const auto ind = induce(inst);
  VariationalQ q;
  for (const auto& p_xu : ind.p_xu) {
    Matrix dec(p_xu.cols(), p_xu.rows());
    for (Index u = 0; u < p_xu.cols(); ++u) {
      const double pu = p_xu.col(u).sum();
      if (pu > 0.0)
        dec.row(u) = p_xu.col(u).transpose() / pu;
      else
        dec.row(u).setConstant(1.0 / static_cast<double>(p_xu.rows()));
    }
    q.decoders.push_back(std::move(dec));
  }
  q.prior_T = ind.p_y_ut.colwise().sum().transpose();
  return q;
}

// ---------------------------------------------------------------------------

namespace {

Vector dirichlet_row(Index n, std::mt19937_64& rng, double zero_prob) {
  std::exponential_distribution<double> expo(1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::uniform_int_distribution<Index> pick(0, n - 1);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = expo(rng);
  if (zero_prob > 0.0) {
    const Index keep = pick(rng);
    for (Index i = 0; i < n; ++i)
      if (i != keep && unif(rng) < zero_prob) v(i) = 0.0;
  }
  return v / v.sum();
}

}  // namespace

DiscreteIBInstance random_instance(int nx, int ny, const std::vector<int>& nu, std::mt19937_64& rng,
                                   double zero_prob) {
  DiscreteIBInstance inst;
  inst.nx = nx;
  inst.ny = ny;
  inst.nu = nu;
  const Vector joint = dirichlet_row(static_cast<Index>(nx) * ny, rng, 0.0);
  inst.p_xy = Eigen::Map<const Matrix>(joint.data(), nx, ny);
  inst.encoder.resize(ny, inst.tuples());
  for (Index y = 0; y < ny; ++y) inst.encoder.row(y) = dirichlet_row(inst.tuples(), rng, zero_prob).transpose();
  std::uniform_real_distribution<double> b(0.0, 2.0);
  for (std::size_t t = 0; t < nu.size(); ++t) inst.beta.push_back(b(rng));
  inst.validate();
  return inst;
}

DiscreteIBInstance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> xy(2, 4), stages(1, 3), u(2, 3);
  const int nx = xy(rng);
  const int ny = xy(rng);
  std::vector<int> nu(static_cast<std::size_t>(stages(rng)));
  for (int& k : nu) k = u(rng);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double zero_prob = unif(rng) < 0.3 ? 0.4 : 0.0;
  return random_instance(nx, ny, nu, rng, zero_prob);
}

VariationalQ random_q(const DiscreteIBInstance& inst, std::mt19937_64& rng) {
  VariationalQ q;
  for (int k : inst.nu) {
    Matrix dec(k, inst.nx);
    for (Index u = 0; u < k; ++u) dec.row(u) = dirichlet_row(inst.nx, rng, 0.0).transpose();
    q.decoders.push_back(std::move(dec));
  }
  q.prior_T = dirichlet_row(inst.nu.back(), rng, 0.0);
  return q;
}

DiscreteIBInstance relabel(const DiscreteIBInstance& inst, const std::vector<int>& perm_x,
                           const std::vector<int>& perm_y, const std::vector<std::vector<int>>& perm_u) {
  DiscreteIBInstance out = inst;
  for (int x = 0; x < inst.nx; ++x)
    for (int y = 0; y < inst.ny; ++y) out.p_xy(perm_x[static_cast<std::size_t>(x)], perm_y[static_cast<std::size_t>(y)]) = inst.p_xy(x, y);
  for (Index k = 0; k < inst.tuples(); ++k) {
    Index target = 0, radix = 1;
    for (int t = 1; t <= inst.stages(); ++t) {
      target += radix * perm_u[static_cast<std::size_t>(t - 1)][static_cast<std::size_t>(inst.digit(k, t))];
      radix *= inst.nu[static_cast<std::size_t>(t - 1)];
    }
    for (int y = 0; y < inst.ny; ++y) out.encoder(perm_y[static_cast<std::size_t>(y)], target) = inst.encoder(y, k);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Text format

namespace {

std::string fmt17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_rows(std::ostream& os, const Matrix& a) {
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) os << (j ? " " : "") << fmt17(a(i, j));
    os << '\n';
  }
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  throw Error(Errc::parse, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

void write_instance(std::ostream& os, const DiscreteIBInstance& inst) {
  os << "sib-discrete 1\n";
  os << "sizes " << inst.nx << ' ' << inst.ny << ' ' << inst.stages();
  for (int k : inst.nu) os << ' ' << k;
  os << "\nbeta";
  for (double b : inst.beta) os << ' ' << fmt17(b);
  os << "\npxy\n";
  write_rows(os, inst.p_xy);
  os << "encoder\n";
  write_rows(os, inst.encoder);
}

DiscreteIBInstance read_instance(std::istream& is) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(is, line);) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    lines.push_back(line);
  }
  std::size_t pos = 0;
  // Next non-blank line, tokenized.
  auto next = [&](const std::string& expect) -> std::istringstream {
    while (pos < lines.size() && lines[pos].find_first_not_of(" \t\r") == std::string::npos) ++pos;
    if (pos >= lines.size()) parse_fail(static_cast<int>(pos), "unexpected end of input, expected " + expect);
    return std::istringstream(lines[pos++]);
  };
  auto line_no = [&] { return static_cast<int>(pos); };

  DiscreteIBInstance inst;
  {
    auto ss = next("header");
    std::string magic;
    int version = 0;
    if (!(ss >> magic >> version) || magic != "sib-discrete" || version != 1)
      parse_fail(line_no(), "expected header 'sib-discrete 1'");
  }
  {
    auto ss = next("sizes");
    std::string key;
    int T = 0;
    if (!(ss >> key >> inst.nx >> inst.ny >> T) || key != "sizes" || T < 1 || T > 16)
      parse_fail(line_no(), "expected 'sizes <nx> <ny> <T> <nu...>'");
    inst.nu.resize(static_cast<std::size_t>(T));
    for (int& k : inst.nu)
      if (!(ss >> k)) parse_fail(line_no(), "missing |U_t|");
    for (int k : inst.nu)
      if (k < 1 || k > kMaxAlphabet) parse_fail(line_no(), "alphabet size out of range");
    if (inst.nx < 1 || inst.nx > kMaxAlphabet || inst.ny < 1 || inst.ny > kMaxAlphabet)
      parse_fail(line_no(), "alphabet size out of range");
  }
  {
    auto ss = next("beta");
    std::string key;
    if (!(ss >> key) || key != "beta") parse_fail(line_no(), "expected 'beta ...'");
    inst.beta.resize(inst.nu.size());
    for (double& b : inst.beta)
      if (!(ss >> b)) parse_fail(line_no(), "missing beta_t");
  }
  auto read_table = [&](const std::string& name, Index rows, Index cols) {
    auto head = next(name);
    std::string key;
    if (!(head >> key) || key != name) parse_fail(line_no(), "expected '" + name + "'");
    Matrix a(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      auto ss = next(name + " row");
      for (Index j = 0; j < cols; ++j)
        if (!(ss >> a(i, j))) parse_fail(line_no(), name + " row has too few values");
      std::string extra;
      if (ss >> extra) parse_fail(line_no(), name + " row has too many values");
    }
    return a;
  };
  inst.p_xy = read_table("pxy", inst.nx, inst.ny);
  inst.encoder = read_table("encoder", inst.ny, inst.tuples());
  inst.validate();
  return inst;
}

// ---------------------------------------------------------------------------

bool SweepReport::passed(double tol) const {
  return instances > 0 && max_equality_residual <= tol && min_bound_slack >= -tol &&
         max_identity_residual <= tol;
}

namespace {

// Q* with one positive-probability (x, u_1) cell zeroed.
VariationalQ mismatched_q(const DiscreteIBInstance& inst, const Induced& ind) {
  VariationalQ q = optimal_Q(inst);
  if (inst.nx < 2) return q;
  const Matrix& p = ind.p_xu.front();
  for (Index u = 0; u < p.cols(); ++u)
    for (Index x = 0; x < p.rows(); ++x)
      if (p(x, u) > 0.0) {
        Matrix& dec = q.decoders.front();
        const Index other = (x + 1) % p.rows();
        dec(u, other) += dec(u, x);
        dec(u, x) = 0.0;
        return q;
      }
  return q;
}

}  // namespace

SweepReport variational_sweep(std::uint64_t seed, int n_instances, int q_per_instance) {
  if (n_instances < 1) throw Error(Errc::usage, "n_instances must be >= 1");
  if (q_per_instance < 0) throw Error(Errc::usage, "q_per_instance must be >= 0");
  std::mt19937_64 rng(seed);
  SweepReport r;
  r.min_bound_slack = kInf;
  auto identity = [&](const DiscreteIBInstance& inst, const VariationalQ& q, double exact) {
    const auto g = gap_decomposition(inst, q);
    double res = std::abs(g.mutual_info - (g.kl_conditional_prior - g.kl_marginal_prior));
    for (int t = 0; t < inst.stages(); ++t) {
      const auto i = static_cast<std::size_t>(t);
      res = std::max(res, std::abs(g.cross_entropy[i] - (g.kl_decoder[i] + g.cond_entropy[i])));
    }
    const double bound = variational_objective(inst, q).value;
    res = std::max(res, std::abs((bound - exact) - g.gap(inst.beta)));
    r.max_identity_residual = std::max(r.max_identity_residual, res);
    return bound;
  };
  for (int i = 0; i < n_instances; ++i) {
    const auto inst = random_instance(rng);
    const double exact = exact_objective(inst);
    const double at_opt = identity(inst, optimal_Q(inst), exact);
    r.max_equality_residual = std::max(r.max_equality_residual, std::abs(at_opt - exact));
    for (int k = 0; k < q_per_instance; ++k) {
      const double bound = identity(inst, random_q(inst, rng), exact);
      r.min_bound_slack = std::min(r.min_bound_slack, bound - exact);
      ++r.q_draws;
    }
    const auto bad = variational_objective(inst, mismatched_q(inst, induce(inst)));
    if (bad.support_mismatch) ++r.infinite_bounds;
    else r.min_bound_slack = std::min(r.min_bound_slack, bad.value - exact);
    ++r.instances;
  }
  return r;
}

}  // namespace sib::discrete
