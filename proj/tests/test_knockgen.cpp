#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mlknock/knockoffs.hpp"
#include "mlknock/rng.hpp"

#include <cmath>

using namespace mlknock;
using namespace mlknock::knockoff;

namespace {

Matrix equicorrelated_sigma(Index p, double rho) {
  Matrix sigma = Matrix::Constant(p, p, rho);
  sigma.diagonal().setOnes();
  return sigma;
}

// exact draw from the equicorrelated normal: sqrt(rho) shared + sqrt(1-rho) own
DesignMatrix equicorrelated_sample(Index n, Index p, double rho, std::uint64_t seed) {
  Rng rng(seed);
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const double shared = rng.normal();
    for (Index j = 0; j < p; ++j) {
      x(i, j) = std::sqrt(rho) * shared + std::sqrt(1.0 - rho) * rng.normal();
    }
  }
  return DesignMatrix::from_matrix(std::move(x));
}

double column_mean(const Matrix& m, Index j) { return m.col(j).mean(); }

double column_var(const Matrix& m, Index j) {
  const double mu = column_mean(m, j);
  return (m.col(j).array() - mu).square().sum() / static_cast<double>(m.rows() - 1);
}

double cross_cov(const Matrix& a, Index ja, const Matrix& b, Index jb) {
  const double ma = column_mean(a, ja);
  const double mb = column_mean(b, jb);
  return ((a.col(ja).array() - ma) * (b.col(jb).array() - mb)).sum() /
         static_cast<double>(a.rows() - 1);
}

}  // namespace

TEST_CASE("equicorrelated rule on the identity gives s = 1 and identity conditional") {
  GaussianKnockoffModel model;
  model.mu = Vector::Zero(2);
  model.sigma = Matrix::Identity(2, 2);
  model.s = equicorrelated_s(model.sigma);
  CHECK(model.s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.s(1) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix cond = conditional_covariance(model);
  CHECK((cond - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);
  model.validate();
}

TEST_CASE("equicorrelated rule at rho = 0.5 matches the 2x2 closed form") {
  GaussianKnockoffModel model;
  model.mu = Vector::Zero(2);
  model.sigma = equicorrelated_sigma(2, 0.5);
  model.s = equicorrelated_s(model.sigma);
  // lambda_min = 1 - rho = 0.5, so s = min(1, 1) * 1 = 1
  CHECK(model.s(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(model.s(1) == doctest::Approx(1.0).epsilon(1e-12));
  const Matrix cond = conditional_covariance(model);
  for (Index a = 0; a < 2; ++a) {
    for (Index b = 0; b < 2; ++b) {
      CHECK(cond(a, b) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    }
  }
  model.validate();
}

TEST_CASE("near-duplicate features shrink s toward zero") {
  const Matrix sigma = equicorrelated_sigma(2, 0.999);
  const Vector s = equicorrelated_s(sigma);
  CHECK(s(0) == doctest::Approx(0.002).epsilon(1e-9));

  GaussianKnockoffModel model;
  model.mu = Vector::Zero(2);
  model.sigma = sigma;
  model.s = s;
  auto X = equicorrelated_sample(200, 2, 0.999, 4);
  auto ks = sample_gaussian_knockoffs(X, model, 9);
  CHECK((ks.knockoff.values - X.values).cwiseAbs().maxCoeff() < 0.5);
}

TEST_CASE("model estimation recovers an equicorrelated covariance") {
  auto X = equicorrelated_sample(4000, 5, 0.5, 21);
  auto model = estimate_gaussian_model(X);
  model.validate();
  CHECK(model.mu.cwiseAbs().maxCoeff() < 0.1);
  CHECK((model.sigma - equicorrelated_sigma(5, 0.5)).cwiseAbs().maxCoeff() < 0.1);
  // lambda_min of R is 0.5, so every s_j should be near 1
  for (Index j = 0; j < 5; ++j) CHECK(model.s(j) == doctest::Approx(1.0).epsilon(0.15));
}

TEST_CASE("a singular sample covariance is repaired by diagonal shrinkage") {
  auto base = equicorrelated_sample(50, 3, 0.2, 31);
  Matrix x(50, 4);
  x.leftCols(3) = base.values;
  x.col(3) = base.values.col(0);  // exact duplicate makes the sample covariance singular
  auto model = estimate_gaussian_model(DesignMatrix::from_matrix(std::move(x)));
  model.validate();
  Eigen::LLT<Matrix> llt(model.sigma);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("estimation input errors") {
  Matrix tiny(2, 2);
  tiny << 1, 0, 0, 1;
  CHECK_THROWS_AS(estimate_gaussian_model(DesignMatrix::from_matrix(tiny)), ValidationError);

  Matrix flat(10, 2);
  flat.col(0).setLinSpaced(10, 0, 1);
  flat.col(1).setConstant(3.0);
  CHECK_THROWS_AS(estimate_gaussian_model(DesignMatrix::from_matrix(flat)), NumericalError);
}

TEST_CASE("s = 0 reproduces the original columns exactly") {
  auto X = equicorrelated_sample(100, 3, 0.3, 41);
  GaussianKnockoffModel model;
  model.mu = Vector::Zero(3);
  model.sigma = equicorrelated_sigma(3, 0.3);
  model.s = Vector::Zero(3);
  auto ks = sample_gaussian_knockoffs(X, model, 5);
  CHECK((ks.knockoff.values - X.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("identity model with s = 1 gives knockoffs uncorrelated with the originals") {
  const Index n = 20000;
  auto X = equicorrelated_sample(n, 2, 0.0, 51);
  GaussianKnockoffModel model;
  model.mu = Vector::Zero(2);
  model.sigma = Matrix::Identity(2, 2);
  model.s = Vector::Ones(2);
  auto ks = sample_gaussian_knockoffs(X, model, 52);
  for (Index j = 0; j < 2; ++j) {
    CHECK(std::abs(cross_cov(X.values, j, ks.knockoff.values, j)) < 0.03);
    CHECK(column_var(ks.knockoff.values, j) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("gaussian knockoffs are deterministic in the seed and keep names") {
  auto X = equicorrelated_sample(60, 3, 0.4, 61);
  auto model = estimate_gaussian_model(X);
  auto a = sample_gaussian_knockoffs(X, model, 7);
  auto b = sample_gaussian_knockoffs(X, model, 7);
  auto c = sample_gaussian_knockoffs(X, model, 8);
  CHECK((a.knockoff.values - b.knockoff.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.knockoff.values - c.knockoff.values).cwiseAbs().maxCoeff() > 0.0);
  REQUIRE(a.knockoff.column_names.size() == 3);
  CHECK(a.knockoff.column_names[0] == "x1.ko");
  CHECK(a.knockoff.column_names[2] == "x3.ko");
  CHECK(a.knockoff.rows() == X.rows());
}

TEST_CASE("independent features give an empty adjacency most of the time") {
  int empty_runs = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto X = equicorrelated_sample(2000, 5, 0.0, 100 + seed);
    penreg::FitSpec spec;
    spec.lambda_rule = penreg::LambdaRule::one_se;
    auto adj = estimate_neighborhoods(X, spec, seed);
    bool empty = true;
    for (const auto& row : adj) {
      if (!row.empty()) empty = false;
    }
    if (empty) ++empty_runs;
  }
  CHECK(empty_runs >= 9);
}

TEST_CASE("a strongly correlated pair is linked by the AND rule") {
  Rng rng(71);
  const Index n = 1000;
  Matrix x(n, 4);
  for (Index i = 0; i < n; ++i) {
    const double base = rng.normal();
    x(i, 0) = base;
    x(i, 1) = 0.9 * base + std::sqrt(1.0 - 0.81) * rng.normal();
    x(i, 2) = rng.normal();
    x(i, 3) = rng.normal();
  }
  auto adj = estimate_neighborhoods(DesignMatrix::from_matrix(std::move(x)), penreg::FitSpec{}, 3);
  CHECK(adj[0] == std::vector<int>{1});
  CHECK(adj[1] == std::vector<int>{0});

  Matrix pair(200, 2);
  Rng rng2(72);
  for (Index i = 0; i < 200; ++i) {
    pair(i, 0) = rng2.normal();
    pair(i, 1) = pair(i, 0);
  }
  auto adj2 = estimate_neighborhoods(DesignMatrix::from_matrix(std::move(pair)), penreg::FitSpec{}, 4);
  CHECK(adj2[0] == std::vector<int>{1});
  CHECK(adj2[1] == std::vector<int>{0});
}

TEST_CASE("feature kind detection distinguishes 0/1 columns") {
  Matrix x(6, 3);
  x << 0, 0.5, 1, 1, 0.7, 0, 0, -0.1, 1, 1, 0.2, 1, 0, 0.9, 0, 1, 0.3, 0;
  auto kinds = detect_feature_kinds(DesignMatrix::from_matrix(x));
  CHECK(kinds[0] == FeatureKind::binary);
  CHECK(kinds[1] == FeatureKind::continuous);
  CHECK(kinds[2] == FeatureKind::binary);
}

TEST_CASE("sequential knockoffs preserve first and second moments of independent columns") {
  const Index n = 5000;
  auto X = equicorrelated_sample(n, 4, 0.0, 81);
  SequentialKnockoffSpec spec;
  auto ks = sample_sequential_knockoffs(X, spec, 82);
  CHECK(ks.method == Method::sequential);
  for (Index j = 0; j < 4; ++j) {
    CHECK(std::abs(column_mean(ks.knockoff.values, j) - column_mean(X.values, j)) < 0.05);
    CHECK(std::abs(column_var(ks.knockoff.values, j) - column_var(X.values, j)) < 0.05);
  }
}

TEST_CASE("sequential knockoff of an independent binary column keeps its marginal") {
  const Index n = 5000;
  Rng rng(91);
  Matrix x(n, 3);
  for (Index i = 0; i < n; ++i) {
    x(i, 0) = rng.bernoulli(0.3) ? 1.0 : 0.0;
    x(i, 1) = rng.normal();
    x(i, 2) = rng.normal();
  }
  auto ks = sample_sequential_knockoffs(DesignMatrix::from_matrix(std::move(x)), {}, 92);
  double p_hat = column_mean(ks.knockoff.values, 0);
  CHECK(std::abs(p_hat - 0.3) < 0.03);
  for (Index i = 0; i < n; ++i) {
    const double v = ks.knockoff.values(i, 0);
    REQUIRE((v == 0.0 || v == 1.0));
  }
}

TEST_CASE("a constant continuous column yields a constant knockoff") {
  Rng rng(95);
  Matrix x(100, 3);
  for (Index i = 0; i < 100; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = 2.5;
    x(i, 2) = rng.normal();
  }
  SequentialKnockoffSpec spec;
  spec.feature_kinds = {FeatureKind::continuous, FeatureKind::continuous, FeatureKind::continuous};
  auto ks = sample_sequential_knockoffs(DesignMatrix::from_matrix(std::move(x)), spec, 96);
  CHECK((ks.knockoff.values.col(1).array() == 2.5).all());
}

TEST_CASE("sequential sampling respects a provided neighborhood and is deterministic") {
  auto X = equicorrelated_sample(300, 4, 0.3, 97);
  SequentialKnockoffSpec spec;
  spec.neighborhood = std::vector<std::vector<int>>{{1}, {0}, {3}, {2}};
  auto a = sample_sequential_knockoffs(X, spec, 7);
  auto b = sample_sequential_knockoffs(X, spec, 7);
  auto c = sample_sequential_knockoffs(X, spec, 8);
  CHECK((a.knockoff.values - b.knockoff.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.knockoff.values - c.knockoff.values).cwiseAbs().maxCoeff() > 0.0);
  CHECK(a.knockoff.column_names[3] == "x4.ko");
}

TEST_CASE("a fixed order seed pins the visiting order across sampling seeds") {
  auto X = equicorrelated_sample(200, 3, 0.2, 98);
  SequentialKnockoffSpec spec;
  spec.order_seed = 123;
  auto a = sample_sequential_knockoffs(X, spec, 1);
  auto b = sample_sequential_knockoffs(X, spec, 2);
  // different draws, but both valid and reproducible
  CHECK((a.knockoff.values - b.knockoff.values).cwiseAbs().maxCoeff() > 0.0);
  auto a2 = sample_sequential_knockoffs(X, spec, 1);
  CHECK((a.knockoff.values - a2.knockoff.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("binary kind with non-binary data is rejected") {
  auto X = equicorrelated_sample(50, 2, 0.0, 99);
  SequentialKnockoffSpec spec;
  spec.feature_kinds = {FeatureKind::binary, FeatureKind::continuous};
  CHECK_THROWS_AS(sample_sequential_knockoffs(X, spec, 1), ValidationError);
}
