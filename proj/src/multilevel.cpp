#include "mlknock/multilevel.hpp"

#include "mlknock/knockoffs.hpp"
#include "mlknock/rng.hpp"

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace mlknock::multilevel {

namespace {

// Selector shared by both levels and the overall baseline: one expensive pass
// (knockoffs + W statistics, or the derandomized run loop), then every budget
// is applied to the same statistics.
std::vector<filter::SelectionResult> run_selector(const DesignMatrix& X, const Vector& y,
                                                  const Vector& weights,
                                                  const std::vector<filter::Budget>& budgets,
                                                  const SelectOptions& options,
                                                  std::uint64_t seed) {
  std::vector<filter::SelectionResult> out;
  if (X.cols() == 0) {
    filter::SelectionResult empty;
    empty.frequencies = Vector::Zero(0);
    empty.w.w = Vector::Zero(0);
    out.assign(budgets.size(), empty);
    return out;
  }

  switch (options.method) {
    case Method::lasso: {
      penreg::FitSpec spec = options.penreg_spec;
      if (weights.size() != 0) spec.weights = weights;
      const auto fit = penreg::fit_cv(X, y, spec, derive_seed(seed, "lasso-cv"));
      filter::SelectionResult r;
      r.w.w = fit.coefficients;
      r.w.lambda_used = fit.lambda_selected;
      r.threshold = 0.0;
      r.frequencies = Vector::Zero(X.cols());
      for (Index j = 0; j < X.cols(); ++j) {
        if (fit.coefficients(j) != 0.0) {
          r.selected.push_back(static_cast<int>(j));
          r.frequencies(j) = 1.0;
        }
      }
      out.assign(budgets.size(), r);  // the lasso ignores knockoff budgets
      return out;
    }
    case Method::sequential: {
      knockoff::SequentialKnockoffSpec seq;
      seq.neighborhood =
          knockoff::estimate_neighborhoods(X, penreg::FitSpec{}, derive_seed(seed, "nbhd"));
      const auto ks =
          knockoff::sample_sequential_knockoffs(X, seq, derive_seed(seed, "seq-draw"));
      const auto w =
          filter::compute_w(ks, y, weights, options.penreg_spec, derive_seed(seed, "seq-w"));
      out.reserve(budgets.size());
      for (const auto& b : budgets) out.push_back(filter::apply_budget(w, b));
      return out;
    }
    case Method::derandomized: {
      filter::DerandomizeOptions opt;
      opt.runs = options.runs;
      opt.eta = options.eta;
      opt.method = knockoff::Method::gaussian;
      opt.penreg_spec = options.penreg_spec;
      opt.threads = options.threads;
      return filter::derandomized_select_multi(X, y, weights, budgets, opt,
                                               derive_seed(seed, "derandom"));
    }
  }
  throw ValidationError("unknown selection method");
}

}  // namespace

void ClusteredDataset::validate() const {
  const Index n = y.size();
  if (n < 2) throw ValidationError("dataset needs at least 2 rows");
  if (!y.allFinite()) throw ValidationError("non-finite response value");
  if (x_level1.rows() != n || z_level2.rows() != n) {
    throw ValidationError("predictor row counts do not match the response");
  }
  if (static_cast<Index>(cluster_id.size()) != n) {
    throw ValidationError("cluster id count does not match the response");
  }
  if (x_level1.cols() + z_level2.cols() < 1) {
    throw ValidationError("dataset has no predictors");
  }
  if (x_level1.cols() > 0) x_level1.validate();
  if (z_level2.cols() > 0) z_level2.validate();

  // z columns must be constant within each cluster
  std::unordered_map<long, Index> first_row;
  for (Index i = 0; i < n; ++i) {
    auto [it, inserted] = first_row.try_emplace(cluster_id[static_cast<std::size_t>(i)], i);
    if (inserted) continue;
    for (Index h = 0; h < z_level2.cols(); ++h) {
      if (z_level2.values(i, h) != z_level2.values(it->second, h)) {
        throw ValidationError("level-2 column '" +
                              z_level2.column_names[static_cast<std::size_t>(h)] +
                              "' varies within cluster " +
                              std::to_string(cluster_id[static_cast<std::size_t>(i)]));
      }
    }
  }
}

LevelSplit decompose(const ClusteredDataset& data) {
  data.validate();
  const Index n = data.rows();
  const Index k = data.x_level1.cols();
  const Index h = data.z_level2.cols();

  LevelSplit split;
  split.cluster_of_row.resize(static_cast<std::size_t>(n));
  std::unordered_map<long, int> position;
  for (Index i = 0; i < n; ++i) {
    auto [it, inserted] =
        position.try_emplace(data.cluster_id[static_cast<std::size_t>(i)],
                             static_cast<int>(split.cluster_labels.size()));
    if (inserted) split.cluster_labels.push_back(data.cluster_id[static_cast<std::size_t>(i)]);
    split.cluster_of_row[static_cast<std::size_t>(i)] = it->second;
  }
  const auto j_count = static_cast<Index>(split.cluster_labels.size());

  split.level2_weights = Vector::Zero(j_count);
  Vector y_sum = Vector::Zero(j_count);
  Matrix x_sum = Matrix::Zero(j_count, k);
  for (Index i = 0; i < n; ++i) {
    const auto c = split.cluster_of_row[static_cast<std::size_t>(i)];
    split.level2_weights(c) += 1.0;
    y_sum(c) += data.y(i);
    if (k > 0) x_sum.row(c) += data.x_level1.values.row(i);
  }
  split.level2_y = y_sum.cwiseQuotient(split.level2_weights);
  Matrix x_mean(j_count, k);
  for (Index c = 0; c < j_count; ++c) {
    if (k > 0) x_mean.row(c) = x_sum.row(c) / split.level2_weights(c);
  }

  // The level-1 problem is the within-cluster regression: both the predictors
  // and the response are centered around their cluster means.  The slope
  // estimates match a regression of the raw response on the centered
  // predictors (they are orthogonal to every cluster constant), but centering
  // the response keeps the cluster-level variance out of the cross-validation
  // error, which would otherwise swamp the one-standard-error rule.
  split.level1_y.resize(n);
  split.level1_x.values.resize(n, k);
  for (Index i = 0; i < n; ++i) {
    const auto c = split.cluster_of_row[static_cast<std::size_t>(i)];
    split.level1_y(i) = data.y(i) - split.level2_y(c);
    if (k > 0) {
      split.level1_x.values.row(i) = data.x_level1.values.row(i) - x_mean.row(c);
    }
  }
  for (Index j = 0; j < k; ++j) {
    split.level1_x.column_names.push_back(data.x_level1.column_names[static_cast<std::size_t>(j)] +
                                          ".within");
  }

  split.level2_design.values.resize(j_count, k + h);
  if (k > 0) split.level2_design.values.leftCols(k) = x_mean;
  for (Index j = 0; j < k; ++j) {
    split.level2_design.column_names.push_back(
        data.x_level1.column_names[static_cast<std::size_t>(j)] + ".between");
  }
  if (h > 0) {
    std::vector<char> seen(static_cast<std::size_t>(j_count), 0);
    for (Index i = 0; i < n; ++i) {
      const auto c = split.cluster_of_row[static_cast<std::size_t>(i)];
      if (seen[static_cast<std::size_t>(c)]) continue;
      seen[static_cast<std::size_t>(c)] = 1;
      split.level2_design.values.row(c).tail(h) = data.z_level2.values.row(i);
    }
    for (Index j = 0; j < h; ++j) {
      split.level2_design.column_names.push_back(data.z_level2.column_names[static_cast<std::size_t>(j)]);
    }
  }
  return split;
}

double check_orthogonality(const LevelSplit& split) {
  const Index n = split.level1_x.rows();
  const Index k = split.level1_x.cols();
  const Index q = split.level2_design.cols();
  if (k == 0 || q == 0 || n < 2) return 0.0;

  // expand the cluster-constant columns back to row level
  Matrix constant_cols(n, q);
  for (Index i = 0; i < n; ++i) {
    constant_cols.row(i) =
        split.level2_design.values.row(split.cluster_of_row[static_cast<std::size_t>(i)]);
  }

  double worst = 0.0;
  for (Index a = 0; a < k; ++a) {
    const double ma = split.level1_x.values.col(a).mean();
    for (Index b = 0; b < q; ++b) {
      const double mb = constant_cols.col(b).mean();
      const double cov = ((split.level1_x.values.col(a).array() - ma) *
                          (constant_cols.col(b).array() - mb))
                             .sum() /
                         static_cast<double>(n - 1);
      worst = std::max(worst, std::abs(cov));
    }
  }
  return worst;
}

double verify_weighted_equivalence(const ClusteredDataset& data, const LevelSplit& split) {
  const Index j_count = split.level2_design.rows();
  const Index q = split.level2_design.cols();
  const Index n = data.rows();

  // weighted least squares of the cluster means on [1, level-2 design]
  Matrix a(j_count, q + 1);
  a.col(0).setOnes();
  a.rightCols(q) = split.level2_design.values;
  const Vector sw = split.level2_weights.cwiseSqrt();
  Matrix aw = sw.asDiagonal() * a;
  Vector bw = sw.asDiagonal() * split.level2_y;
  Eigen::ColPivHouseholderQR<Matrix> qr_w(aw);
  if (qr_w.rank() < q + 1) throw ValidationError("level-2 design is rank deficient");
  const Vector beta_weighted = qr_w.solve(bw);

  // full-data OLS of y on the expanded columns
  Matrix full(n, q + 1);
  full.col(0).setOnes();
  for (Index i = 0; i < n; ++i) {
    full.row(i).tail(q) =
        split.level2_design.values.row(split.cluster_of_row[static_cast<std::size_t>(i)]);
  }
  Eigen::ColPivHouseholderQR<Matrix> qr_f(full);
  if (qr_f.rank() < q + 1) throw ValidationError("expanded level-2 design is rank deficient");
  const Vector beta_full = qr_f.solve(data.y);

  return (beta_weighted - beta_full).cwiseAbs().maxCoeff();
}

DesignMatrix overall_design(const LevelSplit& split) {
  const Index n = split.level1_x.rows();
  const Index k = split.level1_x.cols();
  const Index q = split.level2_design.cols();

  DesignMatrix out;
  out.values.resize(n, k + q);
  if (k > 0) out.values.leftCols(k) = split.level1_x.values;
  for (Index i = 0; i < n; ++i) {
    out.values.row(i).tail(q) =
        split.level2_design.values.row(split.cluster_of_row[static_cast<std::size_t>(i)]);
  }
  out.column_names = split.level1_x.column_names;
  out.column_names.insert(out.column_names.end(), split.level2_design.column_names.begin(),
                          split.level2_design.column_names.end());
  return out;
}

std::vector<MultilevelSelection> select_multilevel_multi(
    const ClusteredDataset& data,
    const std::vector<std::pair<filter::Budget, filter::Budget>>& budgets,
    const SelectOptions& options, std::uint64_t seed) {
  if (budgets.empty()) throw ValidationError("no budgets given");
  const LevelSplit split = decompose(data);

  std::vector<filter::Budget> l1_budgets, l2_budgets;
  for (const auto& [b1, b2] : budgets) {
    l1_budgets.push_back(b1);
    l2_budgets.push_back(b2);
  }

  const auto l1_results = run_selector(split.level1_x, split.level1_y, Vector(), l1_budgets,
                                       options, derive_seed(seed, "level1"));
  const auto l2_results = run_selector(split.level2_design, split.level2_y, split.level2_weights,
                                       l2_budgets, options, derive_seed(seed, "level2"));

  std::vector<MultilevelSelection> out;
  out.reserve(budgets.size());
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    MultilevelSelection sel;
    sel.level1_result = l1_results[b];
    sel.level2_result = l2_results[b];

    auto add_entries = [&sel](const DesignMatrix& design, const filter::SelectionResult& r,
                              int level) {
      std::vector<char> is_selected(static_cast<std::size_t>(design.cols()), 0);
      for (int j : r.selected) is_selected[static_cast<std::size_t>(j)] = 1;
      for (Index j = 0; j < design.cols(); ++j) {
        CombinedEntry e;
        e.feature = design.column_names[static_cast<std::size_t>(j)];
        e.level = level;
        e.selected = is_selected[static_cast<std::size_t>(j)] != 0;
        e.w = r.w.w.size() > j ? r.w.w(j) : 0.0;
        e.frequency = r.frequencies.size() > j ? r.frequencies(j) : 0.0;
        sel.combined.push_back(std::move(e));
      }
    };
    add_entries(split.level1_x, sel.level1_result, 1);
    add_entries(split.level2_design, sel.level2_result, 2);
    out.push_back(std::move(sel));
  }
  return out;
}

MultilevelSelection select_multilevel(const ClusteredDataset& data, const SelectOptions& options,
                                      std::uint64_t seed) {
  auto results = select_multilevel_multi(
      data, {{options.level1_budget, options.level2_budget}}, options, seed);
  return std::move(results.front());
}

std::vector<filter::SelectionResult> select_overall_multi(const ClusteredDataset& data,
                                                          const std::vector<filter::Budget>& budgets,
                                                          const SelectOptions& options,
                                                          std::uint64_t seed) {
  if (budgets.empty()) throw ValidationError("no budgets given");
  const LevelSplit split = decompose(data);
  const DesignMatrix design = overall_design(split);
  return run_selector(design, data.y, Vector(), budgets, options, derive_seed(seed, "overall"));
}

filter::SelectionResult select_overall(const ClusteredDataset& data, const filter::Budget& budget,
                                       const SelectOptions& options, std::uint64_t seed) {
  auto results = select_overall_multi(data, {budget}, options, seed);
  return std::move(results.front());
}

}  // namespace mlknock::multilevel
