#pragma once

#include "mlknock/filter.hpp"
#include "mlknock/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace mlknock::multilevel {

// Two-level data: level-1 predictors vary within clusters, level-2 predictors
// are constant within each cluster and stored per row.
struct ClusteredDataset {
  Vector y;
  DesignMatrix x_level1;  // K columns (K may be 0)
  DesignMatrix z_level2;  // H columns (H may be 0)
  std::vector<long> cluster_id;
  Index rows() const { return y.size(); }
  void validate() const;
};

// The within/between decomposition: cluster-mean-centered level-1 columns on
// all rows, and the J-row level-2 problem (cluster means first, then the Z
// columns) with cluster sizes as weights.
struct LevelSplit {
  DesignMatrix level1_x;  // centered, ".within" names
  Vector level1_y;        // response centered around cluster means
  DesignMatrix level2_design;  // J x (K+H), ".between" names then Z names
  Vector level2_y;             // cluster means of y
  Vector level2_weights;       // cluster sizes
  std::vector<long> cluster_labels;  // first-appearance order
  std::vector<int> cluster_of_row;
};

enum class Method { lasso, derandomized, sequential };

struct SelectOptions {
  Method method = Method::sequential;
  filter::Budget level1_budget{filter::BudgetKind::pfer, 1.0};
  filter::Budget level2_budget{filter::BudgetKind::pfer, 1.0};
  int runs = 31;    // derandomized only
  double eta = 0.5;  // derandomized only
  penreg::FitSpec penreg_spec;  // selection regressions (alpha, lambda rule, cv)
  int threads = 1;
};

struct CombinedEntry {
  std::string feature;
  int level = 1;
  bool selected = false;
  double w = 0.0;
  double frequency = 0.0;
};

struct MultilevelSelection {
  filter::SelectionResult level1_result;  // over the K centered predictors
  filter::SelectionResult level2_result;  // over the K+H level-2 columns
  std::vector<CombinedEntry> combined;    // K + (K+H) entries, level order
};

LevelSplit decompose(const ClusteredDataset& data);

// Max |sample covariance| between centered columns and the expanded
// cluster-constant columns; an algebraic zero up to rounding.
double check_orthogonality(const LevelSplit& split);

// Max |coefficient difference| between weighted least squares on the level-2
// problem and full-data OLS on the expanded columns (intercept included).
double verify_weighted_equivalence(const ClusteredDataset& data, const LevelSplit& split);

// [centered level-1 || expanded cluster means || expanded Z]; the single-stage
// baseline design with 2K+H columns.
DesignMatrix overall_design(const LevelSplit& split);

MultilevelSelection select_multilevel(const ClusteredDataset& data, const SelectOptions& options,
                                      std::uint64_t seed);

// One knockoff/selection pass shared across several (level-1, level-2) budget
// pairs; entry i corresponds to budgets[i].
std::vector<MultilevelSelection> select_multilevel_multi(
    const ClusteredDataset& data,
    const std::vector<std::pair<filter::Budget, filter::Budget>>& budgets,
    const SelectOptions& options, std::uint64_t seed);

filter::SelectionResult select_overall(const ClusteredDataset& data, const filter::Budget& budget,
                                       const SelectOptions& options, std::uint64_t seed);

std::vector<filter::SelectionResult> select_overall_multi(const ClusteredDataset& data,
                                                          const std::vector<filter::Budget>& budgets,
                                                          const SelectOptions& options,
                                                          std::uint64_t seed);

}  // namespace mlknock::multilevel
