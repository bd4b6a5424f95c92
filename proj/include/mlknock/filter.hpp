#pragma once

#include "mlknock/knockoffs.hpp"
#include "mlknock/penreg.hpp"
#include "mlknock/types.hpp"

#include <cstdint>
#include <vector>

namespace mlknock::filter {

enum class StatisticKind { coef_diff };

struct WStatistics {
  Vector w;  // one entry per original feature
  double lambda_used = 0.0;
  StatisticKind statistic_kind = StatisticKind::coef_diff;
};

enum class BudgetKind { fdr, pfer };

struct Budget {
  BudgetKind kind = BudgetKind::pfer;
  double value = 1.0;
  void validate() const;
};

struct SelectionResult {
  std::vector<int> selected;  // ascending feature indices
  WStatistics w;              // single run: that run's w; multi-run: mean across runs
  double threshold = 0.0;     // multi-run: mean of the finite per-run thresholds
  int runs = 1;
  Vector frequencies;  // per-feature selection frequency across runs
};

struct DerandomizeOptions {
  int runs = 31;
  double eta = 0.5;
  knockoff::Method method = knockoff::Method::gaussian;
  penreg::FitSpec penreg_spec;
  knockoff::SequentialKnockoffSpec seq_spec;  // used when method == sequential
  int threads = 1;
};

// Fit the response on the column-shuffled [X, X*] matrix and report
// w_j = |beta_j| - |beta*_j| at the selected lambda. The shuffle breaks
// coordinate-order ties and is undone before reporting.
WStatistics compute_w(const knockoff::KnockoffSet& ks, const Vector& y, const Vector& weights,
                      const penreg::FitSpec& spec, std::uint64_t seed);

// Knockoff+ rule: smallest t among nonzero |w| with
// (1 + #{w <= -t}) / max(1, #{w >= t}) <= q; no feasible t selects nothing.
SelectionResult threshold_fdr(const WStatistics& w, double q);

// Order-statistic rule: T is the v-th largest magnitude among negative w;
// with fewer than v negatives every strictly positive w is selected.
SelectionResult threshold_pfer(const WStatistics& w, int v);

SelectionResult apply_budget(const WStatistics& w, const Budget& budget);

SelectionResult derandomized_select(const DesignMatrix& X, const Vector& y, const Vector& weights,
                                    const Budget& budget, const DerandomizeOptions& options,
                                    std::uint64_t seed);

// Shares the per-run W statistics across several budgets; entry i of the
// result corresponds to budgets[i].
std::vector<SelectionResult> derandomized_select_multi(const DesignMatrix& X, const Vector& y,
                                                       const Vector& weights,
                                                       const std::vector<Budget>& budgets,
                                                       const DerandomizeOptions& options,
                                                       std::uint64_t seed);

}  // namespace mlknock::filter
