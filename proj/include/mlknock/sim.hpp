#pragma once

#include "mlknock/multilevel.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace mlknock::sim {

// Monte Carlo design: J clusters of fixed size; K time-varying predictors
// built from latent cluster means plus a linear time trend and correlated
// noise; H cluster-level predictors, a subset dichotomized at zero; response
// from a random-intercept regression with within/between/level-2 effects.
struct SimConfig {
  Index clusters = 300;
  Index cluster_size = 5;
  Index k_level1 = 20;
  Index h_level2 = 20;
  double gamma = 0.5;  // time slope
  double sigma_u2 = 4.0;
  double sigma_e2 = 1.0;
  // keys: "x<k>.within", "x<k>.between", "z<h>"
  std::map<std::string, double> coefficients = default_coefficients();
  std::vector<int> dichotomize_idx = {1, 2, 6, 7, 11, 12, 16, 17};  // 1-based z indices
  int reps = 25;
  std::uint64_t seed = 1;

  static std::map<std::string, double> default_coefficients();
  void validate() const;
};

struct TruthSet {
  std::vector<int> nonnull_level1;  // 0-based level-1 feature indices
  std::vector<int> nonnull_level2;  // 0-based indices into [means, z] columns
};

struct Score {
  double fp = 0.0;
  double fdp = 0.0;
  double tpr = 0.0;
};

struct GeneratedDataset {
  multilevel::ClusteredDataset data;
  TruthSet truth;
};

// Correlation structure of the K+H latent level-2 variables (means first,
// then z): four blocks, each holding a fifth of the mean-type and a fifth of
// the z-type variables.
Matrix build_level2_correlation(Index k, Index h);

// Correlation of the level-1 noise component (defined for k = 20): groups
// 1-6, 7-16, and 17-20 with the first and last groups also linked to each
// other.
Matrix build_level1_correlation(Index k);

GeneratedDataset generate_dataset(const SimConfig& cfg, std::uint64_t rep_seed);

Score score(const std::vector<int>& selected, const std::vector<int>& nonnull);

struct MethodSpec {
  std::string name;  // report label
  multilevel::Method kind = multilevel::Method::sequential;
  penreg::FitSpec penreg_spec;
  int runs = 31;     // derandomized only
  double eta = 0.5;  // derandomized only
};

struct BudgetCase {
  filter::Budget level1{filter::BudgetKind::pfer, 1.0};
  filter::Budget level2{filter::BudgetKind::pfer, 1.0};
  filter::Budget overall{filter::BudgetKind::pfer, 2.0};
  std::string label = "pfer_1";
};

struct StudySpec {
  std::vector<MethodSpec> methods;
  std::vector<BudgetCase> budgets;
  bool include_levels = true;   // level1/level2/combined rows
  bool include_overall = true;  // single-stage baseline rows
  int threads = 1;              // replication-level parallelism
};

struct ReportRow {
  std::string method;
  std::string mode;    // "level1", "level2", "combined", "overall"
  std::string budget;  // e.g. "pfer=1", "pfer=1+1"
  double pfer_hat = 0.0;
  double fdr_hat = 0.0;
  double tpr_hat = 0.0;
  int reps = 0;
  std::vector<double> fp_by_rep;
  std::vector<double> fdp_by_rep;
  std::vector<double> tpr_by_rep;
};

struct SimReport {
  SimConfig config;
  std::vector<ReportRow> rows;
  std::vector<std::string> failures;  // one entry per skipped replication
};

SimReport run_study(const SimConfig& cfg, const StudySpec& study);

}  // namespace mlknock::sim
