#include <doctest.h>

#include "sib/error.hpp"
#include "sib/oracle.hpp"
#include "sib/region.hpp"

#include <cmath>
#include <random>

using namespace sib;
using namespace sib::oracle;

namespace {

GaussianScalableModel fig2_model() {
  return GaussianScalableModel::from_spec(scalar_model_spec(3, 1, {2, 2}, 0.25));
}

Errc code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc::internal;
}

Matrix s(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace

TEST_CASE("joint covariance of the scalar two-stage instance") {
  const auto model = fig2_model();
  const auto chain = OmegaChain::scalar({0.555, 0.888889});
  const auto noise = description_noise(model, chain);
  CHECK(noise[1](0, 0) == doctest::Approx(0.25).epsilon(1e-5));
  const auto joint = build_joint_covariance(model, chain);
  CHECK_FALSE(joint.shifted());
  CHECK(joint.matrix().rows() == 6);
  CHECK(joint.block(Var::u(2), Var::u(2))(0, 0) == doctest::Approx(4.25).epsilon(1e-5));
  CHECK(joint.block(Var::y(), Var::side(1))(0, 0) == doctest::Approx(3.5));
  CHECK(joint.block(Var::side(1), Var::side(2))(0, 0) == doctest::Approx(3 + 0.5 * 0.5));
  CHECK(joint.block(Var::u(1), Var::u(2))(0, 0) == doctest::Approx(4 + noise[1](0, 0)));
  CHECK(joint.offset(Var::u(1)) == 4);
  CHECK(Var::side(2).name() == "Y2");
  CHECK(code_of([&] { joint.offset(Var::u(3)); }) == Errc::usage);
}

TEST_CASE("mutual informations on the scalar two-stage instance") {
  const auto model = fig2_model();
  const auto chain = OmegaChain::scalar({0.555, 0.888889});
  const auto joint = build_joint_covariance(model, chain);
  const double d2 = mi_logdet(joint, {Var::x()}, {Var::u(2), Var::side(2)});
  CHECK(d2 == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(std::abs(d2 - relevance_bound(model, chain, 2)) <= 1e-12);
  // Earlier descriptions add nothing beyond U_2.
  CHECK(std::abs(mi_logdet(joint, {Var::x()}, {Var::u(1), Var::u(2), Var::side(2)}) - d2) <= 1e-12);
  const double rate = mi_logdet(joint, {Var::y()}, {Var::u(1), Var::u(2)}, {Var::side(2)});
  CHECK(rate == doctest::Approx(2.8480).epsilon(1e-4));
  CHECK(std::abs(rate - (relevance_bound(model, chain, 2) - rate_offset_at(model, 2, chain.at(2)))) <= 1e-12);
}

TEST_CASE("boundary chains") {
  const auto model = fig2_model();
  const double cap = 1 / 0.875;
  const auto chain = OmegaChain::scalar({0.5, cap});
  CHECK(code_of([&] { build_joint_covariance(model, chain); }) == Errc::chain_not_strictly_interior);
  CHECK(code_of([&] { build_joint_covariance(model, OmegaChain::zeros(1, 2)); }) ==
        Errc::chain_not_strictly_interior);
  const auto joint = build_joint_covariance(model, chain, BoundaryMode::epsilon_shift);
  CHECK(joint.shifted());
  // U_2 is essentially Y.
  CHECK(std::abs(joint.block(Var::u(2), Var::u(2))(0, 0) - 4.0) < 1e-6);
  CHECK(mi_logdet(joint, {Var::x()}, {Var::u(2), Var::side(2)}) ==
        doctest::Approx(relevance_at(model, 2, s(cap))).epsilon(1e-6));
  CHECK(code_of([&] { build_joint_covariance(model, OmegaChain::scalar({0.5, 1.3}), BoundaryMode::epsilon_shift); }) ==
        Errc::infeasible_chain);
}

TEST_CASE("description noises must be degraded") {
  // Sigma_{0|1} = 1 > Sigma_{0|2} = 0.75: equal Omegas give Omega_z1 < Omega_z2.
  ModelSpec spec{s(3), s(1), {{s(2), s(0)}, {s(1), s(0.5)}}};
  const auto model = GaussianScalableModel::from_spec(spec);
  CHECK(code_of([&] { build_joint_covariance(model, OmegaChain::scalar({0.5, 0.5})); }) ==
        Errc::descriptions_not_degraded);
  CHECK_NOTHROW(build_joint_covariance(model, OmegaChain::scalar({0.3, 0.9})));
}

TEST_CASE("random instances: PSD joint covariance and degraded descriptions") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Index m = 1 + static_cast<Index>(seed % 4);
    const int T = 1 + static_cast<int>((seed / 4) % 3);
    const auto inst = random_instance(m, T, seed);
    const auto joint = build_joint_covariance(inst.model, inst.chain);
    CHECK(is_symmetric(joint.matrix()));
    CHECK(min_eigenvalue(joint.matrix()) >= -1e-10);
    const auto noise = description_noise(inst.model, inst.chain);
    for (int t = 1; t < T; ++t) CHECK(min_eigenvalue(noise[t - 1] - noise[t]) >= -1e-10);
  }
}

TEST_CASE("region expressions equal the log-det oracle") {
  double worst = 0;
  for (std::uint64_t seed = 100; seed < 200; ++seed) {
    const Index m = 1 + static_cast<Index>(seed % 4);
    const int T = 1 + static_cast<int>((seed / 4) % 3);
    const auto inst = random_instance(m, T, seed, seed % 5 == 0);
    const auto joint = build_joint_covariance(inst.model, inst.chain);
    for (int t = 1; t <= T; ++t) {
      Group desc;
      for (int k = 1; k <= t; ++k) desc.push_back(Var::u(k));
      Group with_side = desc;
      with_side.push_back(Var::side(t));
      const double delta = relevance_bound(inst.model, inst.chain, t);
      const double rate = delta - rate_offset_at(inst.model, t, inst.chain.at(t));
      worst = std::max(worst, std::abs(delta - mi_logdet(joint, {Var::x()}, with_side)));
      worst = std::max(worst, std::abs(rate - mi_logdet(joint, {Var::y()}, desc, {Var::side(t)})));
    }
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("uncorrelated side information at the cap: relevance equals I(X; Y, Y_t)") {
  const auto inst = random_instance(3, 1, 42, true);
  const auto& model = inst.model;
  const auto joint = build_joint_covariance(model, OmegaChain{{model.conditional_noise_inverse(1)}},
                                            BoundaryMode::epsilon_shift);
  const double exact = mi_logdet(joint, {Var::x()}, {Var::y(), Var::side(1)});
  CHECK(std::abs(relevance_at(model, 1, model.conditional_noise_inverse(1)) - exact) <= 1e-9);
}

TEST_CASE("log-det mutual information properties") {
  std::mt19937_64 rng(9);
  Matrix indep = Matrix::Zero(4, 4);
  indep.topLeftCorner(2, 2) = random_spd(2, rng);
  indep.bottomRightCorner(2, 2) = random_spd(2, rng);
  CHECK(std::abs(mi_logdet(indep, {0, 1}, {2, 3})) <= 1e-14);

  for (int k = 0; k < 50; ++k) {
    const Matrix cov = random_spd(8, rng, 0.2, 4.0);
    std::vector<Index> perm{0, 1, 2, 3, 4, 5, 6, 7};
    std::shuffle(perm.begin(), perm.end(), rng);
    const std::vector<Index> a{perm[0], perm[1]}, b{perm[2]}, c{perm[3], perm[4]}, d{perm[5], perm[6]};
    std::vector<Index> bc = b, bd = b;
    bc.insert(bc.end(), c.begin(), c.end());
    bd.insert(bd.end(), d.begin(), d.end());
    const double lhs = mi_logdet(cov, a, bc, d);
    const double rhs = mi_logdet(cov, a, b, d) + mi_logdet(cov, a, c, bd);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
    CHECK(std::abs(mi_logdet(cov, a, c, d) - mi_logdet(cov, c, a, d)) <= 1e-10);
    CHECK(mi_logdet(cov, a, c, d) >= -1e-10);
  }
  CHECK(code_of([&] { mi_logdet(indep, {0, 1}, {1, 2}); }) == Errc::usage);
  Matrix dup = Matrix::Ones(3, 3);
  dup(2, 2) = 2;
  CHECK(code_of([&] { mi_logdet(dup, {2}, {0}, {1}); }) == Errc::singular_conditioning);
}

TEST_CASE("Monte Carlo estimate on the scalar two-stage instance") {
  const auto model = fig2_model();
  const auto chain = OmegaChain::scalar({0.555, 0.888889});
  const auto est = mc_mi_estimate(model, chain, {Var::x()}, {Var::u(2), Var::side(2)}, {}, 1'000'000, 0);
  CHECK(est.samples == 1'000'000);
  CHECK(std::abs(est.estimate - 2.0) <= 0.01);
  CHECK(est.std_error > 0);
  CHECK(est.std_error < 0.01);

  const auto again = mc_mi_estimate(model, chain, {Var::x()}, {Var::u(2), Var::side(2)}, {}, 1'000'000, 0);
  CHECK(again.estimate == est.estimate);
  CHECK(again.std_error == est.std_error);
  CHECK(code_of([&] { mc_mi_estimate(model, chain, {Var::x()}, {Var::y()}, {}, 5000, 0); }) == Errc::usage);
}

TEST_CASE("Monte Carlo: independent groups") {
  std::mt19937_64 rng(3);
  // (X, Y) independent of (Y_1, U_1); blocks are 1 x 1.
  Matrix cov = Matrix::Zero(4, 4);
  cov.topLeftCorner(2, 2) = random_spd(2, rng);
  cov.bottomRightCorner(2, 2) = random_spd(2, rng);
  const JointCovariance joint(cov, 1, 1, false);
  int within = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto est = mc_mi_estimate(joint, {Var::x(), Var::y()}, {Var::side(1), Var::u(1)}, {}, 100'000, seed);
    if (std::abs(est.estimate) <= 3 * est.std_error) ++within;
  }
  CHECK(within >= 18);
}

TEST_CASE("Monte Carlo: doubling the sample size shrinks the standard error by about sqrt(2)") {
  const auto model = fig2_model();
  const auto chain = OmegaChain::scalar({0.555, 0.888889});
  const auto joint = build_joint_covariance(model, chain);
  const Group a{Var::x()}, b{Var::u(2), Var::side(2)};
  double ratio_sum = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto small = mc_mi_estimate(joint, a, b, {}, 100'000, seed);
    const auto big = mc_mi_estimate(joint, a, b, {}, 200'000, seed + 1000);
    ratio_sum += small.std_error / big.std_error;
  }
  const double ratio = ratio_sum / 20;
  CHECK(ratio >= 1.2);
  CHECK(ratio <= 1.7);
}

TEST_CASE("Monte Carlo agrees with the exact oracle within 3 standard errors") {
  int within = 0;
  const int runs = 20;
  for (int k = 0; k < runs; ++k) {
    const auto inst = random_instance(2, 2, 500 + k);
    const auto joint = build_joint_covariance(inst.model, inst.chain);
    const Group a{Var::x()}, b{Var::u(1), Var::u(2), Var::side(2)};
    const double exact = mi_logdet(joint, a, b);
    const auto est = mc_mi_estimate(joint, a, b, {}, 100'000, k);
    if (std::abs(est.estimate - exact) <= 3 * est.std_error) ++within;
  }
  CHECK(within >= 17);
}

TEST_CASE("Fisher information / MMSE identities") {
  // V_2 ~ N(0, 1), Z ~ N(0, 1), no V_1: mmse = 1 - J(V_2 + Z) = 1/2.
  CHECK(fisher_mmse_residual(s(1), 0, s(1)) <= 1e-15);
  Matrix cov(2, 2);
  cov << 1, 1, 1, 2;  // (V_2, V_2 + Z)
  CHECK(mmse_matrix(cov, {0}, {1})(0, 0) == doctest::Approx(0.5));
  CHECK(conditional_fisher(cov, {1}, {})(0, 0) == doctest::Approx(0.5));

  for (Index m = 1; m <= 3; ++m) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto r = fisher_mmse_check(m, seed);
      CHECK(r.fisher_residual <= 1e-9);
      CHECK(r.sandwich_residual <= 1e-10);
      CHECK(r.error_cov_residual <= 1e-9);
      CHECK(r.estimator_residual <= 1e-9);
      CHECK(r.max_residual() <= 1e-9);
      CHECK(r.instance.find("m=" + std::to_string(m)) == 0);
    }
  }
  // The uninverted Sigma_{0|t} in P_2 does not reproduce the precision block.
  CHECK(fisher_mmse_check(3, 0).uninverted_p2_residual > 1e-3);
  CHECK(code_of([] { fisher_mmse_check(7, 0); }) == Errc::usage);
}

TEST_CASE("noise precision blocks invert the noise covariance") {
  const auto inst = random_instance(3, 2, 77);
  const auto& model = inst.model;
  for (int t = 1; t <= 2; ++t) {
    const auto p = noise_precision_blocks(model, t);
    Matrix w(6, 6), pinv(6, 6);
    w << model.sigma_0(), model.sigma_0t(t), model.sigma_t0(t), model.sigma_t(t);
    pinv << p.p1, p.p2, p.p3, p.p4;
    CHECK((w * pinv - Matrix::Identity(6, 6)).norm() <= 1e-10);
  }
}

TEST_CASE("instance hash") {
  const auto a = random_instance(2, 2, 1);
  const auto b = random_instance(2, 2, 2);
  CHECK(instance_hash(a.model, a.chain) == instance_hash(random_instance(2, 2, 1).model, a.chain));
  CHECK(instance_hash(a.model, a.chain) != instance_hash(b.model, b.chain));
  CHECK(instance_hash(a.model, a.chain).size() == 16);
}
