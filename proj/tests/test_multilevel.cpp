#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mlknock/multilevel.hpp"
#include "mlknock/rng.hpp"

#include <algorithm>
#include <cmath>

using namespace mlknock;
using namespace mlknock::multilevel;

namespace {

ClusteredDataset random_dataset(Index j_count, Index max_cluster_size, Index k, Index h,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<long> ids;
  for (Index j = 0; j < j_count; ++j) {
    const int size = 1 + rng.below(static_cast<int>(max_cluster_size));
    for (int i = 0; i < size; ++i) ids.push_back(1000 + static_cast<long>(j));
  }
  const auto n = static_cast<Index>(ids.size());

  ClusteredDataset data;
  data.cluster_id = ids;
  data.y = Vector(n);
  for (Index i = 0; i < n; ++i) data.y(i) = rng.normal();

  Matrix x(n, k);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < k; ++j) x(i, j) = rng.normal();
  }
  data.x_level1 = DesignMatrix::from_matrix(std::move(x), "x");

  Matrix z(n, h);
  std::vector<Vector> cluster_z;
  long current = -1;
  for (Index i = 0; i < n; ++i) {
    if (ids[static_cast<std::size_t>(i)] != current) {
      current = ids[static_cast<std::size_t>(i)];
      Vector v(h);
      for (Index j = 0; j < h; ++j) v(j) = rng.normal();
      cluster_z.push_back(v);
    }
    z.row(i) = cluster_z.back().transpose();
  }
  data.z_level2 = DesignMatrix::from_matrix(std::move(z), "z");
  return data;
}

}  // namespace

TEST_CASE("decompose centers a single cluster around its mean") {
  ClusteredDataset data;
  data.y = Vector(3);
  data.y << 1, 2, 3;
  Matrix x(3, 1);
  x << 1, 2, 3;
  data.x_level1 = DesignMatrix::from_matrix(x);
  data.z_level2.values.resize(3, 0);
  data.cluster_id = {7, 7, 7};

  auto split = decompose(data);
  REQUIRE(split.level2_design.rows() == 1);
  CHECK(split.level2_design.values(0, 0) == doctest::Approx(2.0));
  CHECK(split.level1_x.values(0, 0) == doctest::Approx(-1.0));
  CHECK(split.level1_x.values(1, 0) == doctest::Approx(0.0));
  CHECK(split.level1_x.values(2, 0) == doctest::Approx(1.0));
  CHECK(split.level1_x.column_names[0] == "x1.within");
  CHECK(split.level2_design.column_names[0] == "x1.between");

  // the level-1 response is centered the same way as the predictors
  CHECK(split.level2_y(0) == doctest::Approx(2.0));
  CHECK(split.level1_y(0) == doctest::Approx(-1.0));
  CHECK(split.level1_y(1) == doctest::Approx(0.0));
  CHECK(split.level1_y(2) == doctest::Approx(1.0));
}

TEST_CASE("level-1 response sums to zero within every cluster") {
  Rng rng(404);
  ClusteredDataset data;
  data.y = Vector(9);
  for (Index i = 0; i < 9; ++i) data.y(i) = rng.normal();
  Matrix x(9, 2);
  for (Index i = 0; i < 9; ++i)
    for (Index j = 0; j < 2; ++j) x(i, j) = rng.normal();
  data.x_level1 = DesignMatrix::from_matrix(x);
  data.z_level2.values.resize(9, 0);
  data.cluster_id = {1, 1, 2, 2, 2, 2, 3, 3, 3};

  auto split = decompose(data);
  Vector sums = Vector::Zero(3);
  for (Index i = 0; i < 9; ++i)
    sums(split.cluster_of_row[static_cast<std::size_t>(i)]) += split.level1_y(i);
  CHECK(sums.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cluster-constant level-1 columns center to zero") {
  ClusteredDataset data;
  data.y = Vector(4);
  data.y << 1, 1, 2, 2;
  Matrix x(4, 1);
  x << 5, 5, -3, -3;
  data.x_level1 = DesignMatrix::from_matrix(x);
  data.z_level2.values.resize(4, 0);
  data.cluster_id = {1, 1, 2, 2};

  auto split = decompose(data);
  CHECK(split.level1_x.values.cwiseAbs().maxCoeff() == 0.0);
  CHECK(split.level2_design.values(0, 0) == doctest::Approx(5.0));
  CHECK(split.level2_design.values(1, 0) == doctest::Approx(-3.0));
}

TEST_CASE("cluster means of the response and weights follow cluster sizes") {
  ClusteredDataset data;
  data.y = Vector(5);
  data.y << 1, 3, 2, 2, 2;
  Matrix x(5, 1);
  x << 0.1, 0.2, 0.3, 0.4, 0.5;
  data.x_level1 = DesignMatrix::from_matrix(x);
  data.z_level2.values.resize(5, 0);
  data.cluster_id = {10, 10, 20, 20, 20};

  auto split = decompose(data);
  REQUIRE(split.level2_y.size() == 2);
  CHECK(split.level2_y(0) == doctest::Approx(2.0));
  CHECK(split.level2_y(1) == doctest::Approx(2.0));
  CHECK(split.level2_weights(0) == doctest::Approx(2.0));
  CHECK(split.level2_weights(1) == doctest::Approx(3.0));
}

TEST_CASE("a level-2 column varying within a cluster is rejected with names") {
  ClusteredDataset data;
  data.y = Vector(4);
  data.y << 1, 2, 3, 4;
  Matrix x(4, 1);
  x << 1, 2, 3, 4;
  data.x_level1 = DesignMatrix::from_matrix(x);
  Matrix z(4, 1);
  z << 1, 1, 2, 3;  // varies inside cluster 9
  data.z_level2 = DesignMatrix::from_matrix(z, "z");
  data.cluster_id = {8, 8, 9, 9};

  try {
    decompose(data);
    FAIL("expected a validation error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("z1") != std::string::npos);
    CHECK(msg.find("9") != std::string::npos);
  }
}

TEST_CASE("centered columns are orthogonal to every cluster-constant column") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    auto data = random_dataset(3 + static_cast<Index>(seed % 8), 10, 4, 3, seed);
    auto split = decompose(data);
    CHECK(check_orthogonality(split) <= 1e-10);
  }
}

TEST_CASE("corrupting the centering breaks the orthogonality report") {
  auto data = random_dataset(6, 5, 3, 2, 99);
  auto split = decompose(data);
  split.level1_x.values(0, 0) += 0.5;
  CHECK(check_orthogonality(split) > 1e-6);
}

TEST_CASE("weighted level-2 regression equals full-data expanded OLS") {
  ClusteredDataset data;
  std::vector<int> sizes = {2, 3, 5};  // the worked unequal-size case
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) data.cluster_id.push_back(c);
  }
  const Index n = 10;
  Rng rng(55);
  data.y = Vector(n);
  Matrix x(n, 1), z(n, 1);
  Index row = 0;
  for (int c = 0; c < 3; ++c) {
    const double zc = rng.normal();
    for (int i = 0; i < sizes[static_cast<std::size_t>(c)]; ++i) {
      data.y(row) = rng.normal();
      x(row, 0) = rng.normal();
      z(row, 0) = zc;
      ++row;
    }
  }
  data.x_level1 = DesignMatrix::from_matrix(x);
  data.z_level2 = DesignMatrix::from_matrix(z, "z");

  auto split = decompose(data);
  CHECK(verify_weighted_equivalence(data, split) <= 1e-8);

  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    auto d = random_dataset(12, 6, 3, 2, 200 + seed);
    auto s = decompose(d);
    CHECK(verify_weighted_equivalence(d, s) <= 1e-8);
  }
}

TEST_CASE("a single cluster makes the level-2 problem rank deficient") {
  auto data = random_dataset(1, 4, 2, 1, 7);
  data.cluster_id.assign(data.cluster_id.size(), 42);
  auto split = decompose(data);
  CHECK_THROWS_AS(verify_weighted_equivalence(data, split), ValidationError);
}

TEST_CASE("decomposition is idempotent on already-centered data") {
  auto data = random_dataset(10, 6, 3, 0, 17);
  auto split = decompose(data);

  ClusteredDataset centered = data;
  centered.x_level1.values = split.level1_x.values;
  auto split2 = decompose(centered);
  CHECK((split2.level1_x.values - split.level1_x.values).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("relabeling clusters leaves the decomposition unchanged") {
  auto data = random_dataset(8, 5, 2, 2, 27);
  ClusteredDataset relabeled = data;
  for (auto& id : relabeled.cluster_id) id = id * 13 + 5;

  auto a = decompose(data);
  auto b = decompose(relabeled);
  CHECK((a.level1_x.values - b.level1_x.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.level2_design.values - b.level2_design.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.level2_y - b.level2_y).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("overall design stacks centered, between, and z columns") {
  auto data = random_dataset(6, 4, 2, 1, 37);
  auto split = decompose(data);
  auto design = overall_design(split);
  REQUIRE(design.cols() == 5);  // 2K + H
  CHECK(design.column_names[0] == "x1.within");
  CHECK(design.column_names[2] == "x1.between");
  CHECK(design.column_names[4] == "z1");
  CHECK(design.rows() == data.rows());
  // within-block equals the centered matrix, constant blocks repeat cluster rows
  CHECK((design.values.leftCols(2) - split.level1_x.values).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("multilevel selection finds planted signals on both levels") {
  Rng rng(47);
  const Index j_count = 60;
  const int per = 4;
  std::vector<long> ids;
  Matrix x(j_count * per, 3), z(j_count * per, 2);
  Vector y(j_count * per);
  Index row = 0;
  for (Index j = 0; j < j_count; ++j) {
    Vector zc(2);
    zc << rng.normal(), rng.normal();
    std::vector<double> x1vals;
    for (int i = 0; i < per; ++i) {
      for (Index c = 0; c < 3; ++c) x(row + i, c) = rng.normal();
      x1vals.push_back(x(row + i, 0));
    }
    const double x1bar = (x1vals[0] + x1vals[1] + x1vals[2] + x1vals[3]) / 4.0;
    for (int i = 0; i < per; ++i) {
      ids.push_back(static_cast<long>(j));
      z.row(row) = zc.transpose();
      y(row) = 3.0 * (x(row, 0) - x1bar) + 3.0 * zc(0) + 0.5 * rng.normal();
      ++row;
    }
  }
  ClusteredDataset data;
  data.y = y;
  data.x_level1 = DesignMatrix::from_matrix(std::move(x), "x");
  data.z_level2 = DesignMatrix::from_matrix(std::move(z), "z");
  data.cluster_id = ids;

  SelectOptions opt;
  opt.method = Method::sequential;
  auto sel = select_multilevel(data, opt, 11);

  CHECK(std::find(sel.level1_result.selected.begin(), sel.level1_result.selected.end(), 0) !=
        sel.level1_result.selected.end());
  // z1 sits after the 3 cluster-mean columns
  CHECK(std::find(sel.level2_result.selected.begin(), sel.level2_result.selected.end(), 3) !=
        sel.level2_result.selected.end());
  REQUIRE(sel.combined.size() == 3 + 5);
  CHECK(sel.combined[0].feature == "x1.within");
  CHECK(sel.combined[0].level == 1);
  CHECK(sel.combined[0].selected);
  CHECK(sel.combined[3].feature == "x1.between");
  CHECK(sel.combined[6].feature == "z1");
  CHECK(sel.combined[6].level == 2);
  CHECK(sel.combined[6].selected);

  auto sel2 = select_multilevel(data, opt, 11);
  CHECK(sel.level1_result.selected == sel2.level1_result.selected);
  CHECK(sel.level2_result.selected == sel2.level2_result.selected);

  // lasso method ignores budgets but reports nonzero coefficients
  SelectOptions lopt;
  lopt.method = Method::lasso;
  auto lsel = select_multilevel(data, lopt, 12);
  CHECK(std::find(lsel.level1_result.selected.begin(), lsel.level1_result.selected.end(), 0) !=
        lsel.level1_result.selected.end());
}

TEST_CASE("a dataset without level-1 predictors still runs level 2") {
  auto data = random_dataset(30, 4, 0, 3, 57);
  Rng rng(58);
  // plant a level-2 signal
  auto split0 = decompose(data);
  for (Index i = 0; i < data.rows(); ++i) {
    data.y(i) = 2.5 * data.z_level2.values(i, 1) + 0.5 * rng.normal();
  }
  (void)split0;

  SelectOptions opt;
  opt.method = Method::sequential;
  auto sel = select_multilevel(data, opt, 21);
  CHECK(sel.level1_result.selected.empty());
  CHECK(sel.combined.size() == 3);
  CHECK(std::find(sel.level2_result.selected.begin(), sel.level2_result.selected.end(), 1) !=
        sel.level2_result.selected.end());
}

TEST_CASE("multi-budget vectors agree with repeated single-budget calls") {
  auto data = random_dataset(40, 4, 2, 2, 67);
  Rng rng(68);
  for (Index i = 0; i < data.rows(); ++i) {
    data.y(i) = 2.0 * data.z_level2.values(i, 0) + rng.normal();
  }
  SelectOptions opt;
  opt.method = Method::sequential;

  std::vector<std::pair<filter::Budget, filter::Budget>> budgets = {
      {{filter::BudgetKind::pfer, 1.0}, {filter::BudgetKind::pfer, 1.0}},
      {{filter::BudgetKind::pfer, 2.0}, {filter::BudgetKind::pfer, 2.0}},
  };
  auto multi = select_multilevel_multi(data, budgets, opt, 5);
  REQUIRE(multi.size() == 2);

  opt.level1_budget = {filter::BudgetKind::pfer, 1.0};
  opt.level2_budget = {filter::BudgetKind::pfer, 1.0};
  auto one = select_multilevel(data, opt, 5);
  CHECK(multi[0].level1_result.selected == one.level1_result.selected);
  CHECK(multi[0].level2_result.selected == one.level2_result.selected);

  opt.level1_budget = {filter::BudgetKind::pfer, 2.0};
  opt.level2_budget = {filter::BudgetKind::pfer, 2.0};
  auto two = select_multilevel(data, opt, 5);
  CHECK(multi[1].level1_result.selected == two.level1_result.selected);
  CHECK(multi[1].level2_result.selected == two.level2_result.selected);
}

TEST_CASE("equal cluster sizes make the level-2 weights immaterial") {
  auto data = random_dataset(20, 1, 2, 1, 77);
  // rebuild with fixed size 3 clusters
  std::vector<long> ids;
  for (long j = 0; j < 20; ++j) {
    for (int i = 0; i < 3; ++i) ids.push_back(j);
  }
  Rng rng(78);
  Matrix x(60, 2), z(60, 1);
  Vector y(60);
  for (Index i = 0; i < 60; ++i) {
    x(i, 0) = rng.normal();
    x(i, 1) = rng.normal();
  }
  for (int j = 0; j < 20; ++j) {
    const double zc = rng.normal();
    for (int i = 0; i < 3; ++i) {
      z(3 * j + i, 0) = zc;
      y(3 * j + i) = zc + rng.normal();
    }
  }
  data.cluster_id = ids;
  data.x_level1 = DesignMatrix::from_matrix(std::move(x));
  data.z_level2 = DesignMatrix::from_matrix(std::move(z), "z");
  data.y = y;

  auto split = decompose(data);
  penreg::FitSpec unweighted;
  penreg::FitSpec weighted;
  weighted.weights = split.level2_weights;
  auto fa = penreg::fit_cv(split.level2_design, split.level2_y, unweighted, 3);
  auto fb = penreg::fit_cv(split.level2_design, split.level2_y, weighted, 3);
  CHECK((fa.coefficients - fb.coefficients).cwiseAbs().maxCoeff() == 0.0);
}
