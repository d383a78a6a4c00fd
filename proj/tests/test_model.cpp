#include <doctest.h>

#include "sib/error.hpp"
#include "sib/model.hpp"
#include "sib/oracle.hpp"

#include <random>

using namespace sib;

namespace {

Matrix s(double v) { return Matrix::Constant(1, 1, v); }

ModelSpec scalar_spec(double sx, double s0, std::vector<std::pair<double, double>> stages) {
  ModelSpec spec{s(sx), s(s0), {}};
  for (auto [st, s0t] : stages) spec.stages.push_back({s(st), s(s0t)});
  return spec;
}

std::vector<Violation> violations_of(const ModelSpec& spec) {
  auto r = validate_model(spec);
  REQUIRE(std::holds_alternative<std::vector<Violation>>(r));
  return std::get<std::vector<Violation>>(r);
}

}  // namespace

TEST_CASE("scalar two-stage reference instance is valid") {
  auto r = validate_model(scalar_spec(3, 1, {{2, 0.5}, {2, 0.5}}));
  REQUIRE(std::holds_alternative<GaussianScalableModel>(r));
  const auto& model = std::get<GaussianScalableModel>(r);
  CHECK(model.m() == 1);
  CHECK(model.stages() == 2);
  CHECK(model.conditional_noise(2)(0, 0) == doctest::Approx(0.875).epsilon(1e-15));
  CHECK(conditional_noise_cov(model, 1)(0, 0) == doctest::Approx(0.875));
}

TEST_CASE("reverse-ordered side information violates degradedness at stage 2") {
  const auto v = violations_of(scalar_spec(3, 1, {{1, 0}, {2, 0}}));
  REQUIRE(v.size() == 1);
  CHECK(v[0].kind == ViolationKind::degradedness_violated);
  CHECK(v[0].stage == 2);
  CHECK(v[0].eigenvalue == doctest::Approx(-1.0));
  CHECK(v[0].describe().find("DegradednessViolated") != std::string::npos);
}

TEST_CASE("invalid block covariance is reported") {
  const auto v = violations_of(scalar_spec(3, 1, {{2, 2}}));
  bool found = false;
  for (const auto& x : v) found = found || x.kind == ViolationKind::block_covariance_invalid;
  CHECK(found);
  CHECK_THROWS_AS(GaussianScalableModel::from_spec(scalar_spec(3, 1, {{2, 2}})), Error);
}

TEST_CASE("shape and definiteness violations") {
  ModelSpec bad = scalar_spec(3, 1, {{2, 0}});
  bad.sigma_0 = Matrix::Identity(2, 2);
  CHECK(violations_of(bad)[0].kind == ViolationKind::dimension_mismatch);

  Matrix asym(2, 2);
  asym << 2, 1, 0, 2;
  ModelSpec ns{asym, Matrix::Identity(2, 2), {{Matrix::Identity(2, 2), Matrix::Zero(2, 2)}}};
  CHECK(violations_of(ns)[0].kind == ViolationKind::non_symmetric);

  const auto npd = violations_of(scalar_spec(-1, 1, {{2, 0}}));
  CHECK(npd[0].kind == ViolationKind::not_positive_definite);
  CHECK(npd[0].eigenvalue == doctest::Approx(-1.0));

  CHECK(violations_of(ModelSpec{s(1), s(1), {}}).size() == 1);
}

TEST_CASE("singular conditional noise is rejected") {
  // Fully correlated W_0 and W_1: the block is PSD but Sigma_{0|1} = 0.
  const auto v = violations_of(scalar_spec(3, 1, {{1, 1}}));
  CHECK(v[0].kind == ViolationKind::conditional_noise_singular);
}

TEST_CASE("conditional noise is the Schur complement of the block covariance") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto inst = oracle::random_instance(3, 2, seed);
    const auto& model = inst.model;
    for (int t = 1; t <= 2; ++t) {
      Matrix block(6, 6);
      block << model.sigma_0(), model.sigma_0t(t), model.sigma_t0(t), model.sigma_t(t);
      // cov(W_0 | W_t) is the inverse of the top-left block of the precision matrix.
      const Matrix expected = block.inverse().topLeftCorner(3, 3).inverse();
      CHECK((model.conditional_noise(t) - expected).norm() < 1e-10);
      // Conditioning reduces covariance.
      CHECK(min_eigenvalue(model.sigma_0() - model.conditional_noise(t)) >= -kPsdTolerance);
    }
  }
}

TEST_CASE("uncorrelated side information leaves the observation noise unchanged") {
  const auto inst = oracle::random_instance(2, 1, 7, true);
  CHECK((inst.model.conditional_noise(1) - inst.model.sigma_0()).norm() < 1e-14);
}

TEST_CASE("validation is idempotent") {
  const auto inst = oracle::random_instance(3, 3, 1);
  auto again = validate_model(inst.model.spec());
  REQUIRE(std::holds_alternative<GaussianScalableModel>(again));
  const auto& m2 = std::get<GaussianScalableModel>(again);
  CHECK((m2.sigma_x() - inst.model.sigma_x()).norm() == 0.0);
  CHECK(&validate_model(inst.model) == &inst.model);
}

TEST_CASE("omega chain feasibility") {
  const auto model = GaussianScalableModel::from_spec(scalar_spec(3, 1, {{2, 0.5}, {2, 0.5}}));
  CHECK(check_omega_chain(model, OmegaChain::zeros(1, 2)).feasible);
  CHECK(check_omega_chain(model, OmegaChain::scalar({0.3, 0.8889})).feasible);

  const auto over = check_omega_chain(model, OmegaChain::scalar({1.2, 1.2}));
  CHECK_FALSE(over.feasible);
  CHECK(over.max_violation() == doctest::Approx(1.2 - 1.0 / 0.875).epsilon(1e-12));

  const auto unordered = check_omega_chain(model, OmegaChain::scalar({0.5, 0.4}));
  CHECK_FALSE(unordered.feasible);
  CHECK(unordered.max_violation() == doctest::Approx(0.1));

  CHECK_THROWS_AS(check_omega_chain(model, OmegaChain::scalar({0.1})), Error);
  try {
    check_omega_chain(model, OmegaChain::zeros(2, 2));
    FAIL("expected dimension mismatch");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::dimension_mismatch);
  }
}

TEST_CASE("zero chain is feasible for random models") {
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto inst = oracle::random_instance(1 + seed % 4, 1 + static_cast<int>(seed % 3), seed);
    CHECK(check_omega_chain(inst.model, OmegaChain::zeros(inst.model.m(), inst.model.stages())).feasible);
    CHECK(check_omega_chain(inst.model, inst.chain).feasible);
  }
}

TEST_CASE("stage accessors are 1-based") {
  const auto model = GaussianScalableModel::from_spec(scalar_spec(3, 1, {{2, 0.5}}));
  CHECK(model.sigma_t(1)(0, 0) == 2.0);
  CHECK_THROWS_AS(model.sigma_t(0), Error);
  CHECK_THROWS_AS(model.sigma_t(2), Error);
}
