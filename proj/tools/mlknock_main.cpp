// mlknock: knockoff-based variable selection for two-level clustered data.
//
// Subcommands:
//   select     run the two-stage (or overall) knockoff filter on a CSV dataset
//   simulate   run the Monte Carlo study and report PFER/FDR/TPR summaries
//   knockoffs  generate knockoff copies for a dataset's level-1 or level-2 design
//   validate   check the within/between identities on an ingested dataset
//
// Exit codes: 0 success, 2 invalid input or configuration, 3 numerical failure.

#include "CLI11.hpp"
#include "json.hpp"

#include "mlknock/io.hpp"
#include "mlknock/knockoffs.hpp"
#include "mlknock/multilevel.hpp"
#include "mlknock/rng.hpp"
#include "mlknock/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

namespace {

constexpr int kSchemaVersion = 1;

using nlohmann::ordered_json;

struct CommonArgs {
  std::string input;
  std::string output;  // prefix: writes <output>.json and <output>.csv
  std::string cluster_col = "cluster";
  std::string response_col = "y";
  std::vector<std::string> level2_cols;
  std::uint64_t seed = 1;
};

struct SelectArgs : CommonArgs {
  std::string method = "sequential";
  double fdr = 0.0;
  double pfer = 0.0;
  double pfer_l1 = 0.0;
  double pfer_l2 = 0.0;
  bool has_fdr = false;
  bool has_pfer = false;
  bool has_pfer_l1 = false;
  bool has_pfer_l2 = false;
  int runs = 31;
  double eta = 0.5;
  double alpha = 1.0;
  std::string lambda_rule;  // empty: one_se for lasso, min for knockoff statistics
  bool overall = false;
  int threads = 1;
};

struct SimulateArgs {
  std::string config_path;
  std::string output;
  std::vector<std::string> methods = {"sequential"};
  double fdr = 0.0;
  double pfer = 1.0;
  double pfer_l1 = 0.0;
  double pfer_l2 = 0.0;
  bool has_fdr = false;
  bool has_pfer_l1 = false;
  bool has_pfer_l2 = false;
  int reps = -1;
  std::uint64_t seed = 0;
  bool has_seed = false;
  double gamma = -1.0;
  bool has_gamma = false;
  long clusters = -1;
  double alpha = 1.0;
  std::string lambda_rule;  // empty: one_se for lasso, min for knockoff statistics
  int runs = 31;
  double eta = 0.5;
  int threads = 1;
  bool no_overall = false;
};

struct KnockoffArgs : CommonArgs {
  std::string method = "gaussian";
  std::string target = "level2";
};

mlknock::io::IngestResult ingest(const CommonArgs& args) {
  if (args.input.empty()) throw mlknock::ValidationError("--input is required");
  mlknock::io::IngestSpec spec;
  spec.cluster_column = args.cluster_col;
  spec.response_column = args.response_col;
  spec.level2_columns = args.level2_cols;
  return mlknock::io::ingest_csv(args.input, spec);
}

mlknock::multilevel::Method parse_method(const std::string& name) {
  if (name == "lasso") return mlknock::multilevel::Method::lasso;
  if (name == "derandomized") return mlknock::multilevel::Method::derandomized;
  if (name == "sequential") return mlknock::multilevel::Method::sequential;
  throw mlknock::ValidationError("unknown method '" + name + "'");
}

// The lasso baseline defaults to the parsimonious one-standard-error rule,
// while the knockoff coefficient-difference statistic is computed at the
// CV-minimum lambda; an explicit --lambda-rule overrides both.
std::string resolve_lambda_rule(const std::string& requested,
                                mlknock::multilevel::Method kind) {
  if (!requested.empty()) return requested;
  return kind == mlknock::multilevel::Method::lasso ? "one_se" : "min";
}

mlknock::penreg::FitSpec make_penreg_spec(double alpha, const std::string& lambda_rule) {
  mlknock::penreg::FitSpec spec;
  spec.alpha = alpha;
  if (lambda_rule == "min") {
    spec.lambda_rule = mlknock::penreg::LambdaRule::min;
  } else if (lambda_rule == "one_se") {
    spec.lambda_rule = mlknock::penreg::LambdaRule::one_se;
  } else {
    throw mlknock::ValidationError("unknown lambda rule '" + lambda_rule + "'");
  }
  return spec;
}

// null for +/-inf so the JSON stays standard; a missing finite threshold means
// no selection was possible at the budget
ordered_json json_number(double value) {
  if (!std::isfinite(value)) return nullptr;
  return value;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw mlknock::ValidationError("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw mlknock::ValidationError("failed while writing '" + path + "'");
}

// --- select ---------------------------------------------------------------

struct FeatureRow {
  std::string feature;
  int level = 1;
  bool selected = false;
  double w = 0.0;
  double frequency = 0.0;
  double threshold = 0.0;
};

void emit_select_report(const SelectArgs& args, const std::vector<FeatureRow>& rows,
                        const ordered_json& budgets) {
  ordered_json doc;
  doc["schema_version"] = kSchemaVersion;
  doc["command"] = "select";
  doc["method"] = args.method;
  doc["seed"] = args.seed;
  doc["overall"] = args.overall;
  doc["budgets"] = budgets;
  ordered_json features = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json entry;
    entry["feature"] = row.feature;
    entry["level"] = row.level;
    entry["selected"] = row.selected;
    entry["w_statistic"] = row.w;
    entry["frequency"] = row.frequency;
    entry["threshold"] = json_number(row.threshold);
    features.push_back(std::move(entry));
  }
  doc["features"] = std::move(features);

  if (!args.output.empty()) {
    write_text_file(args.output + ".json", doc.dump(2) + "\n");
    std::string csv = "feature,level,selected,w_statistic,frequency,threshold\n";
    for (const auto& row : rows) {
      csv += row.feature + ',' + std::to_string(row.level) + ',' +
             (row.selected ? "1" : "0") + ',' + mlknock::io::format_double(row.w) + ',' +
             mlknock::io::format_double(row.frequency) + ',' +
             mlknock::io::format_double(row.threshold) + '\n';
    }
    write_text_file(args.output + ".csv", csv);
  }

  std::size_t n_selected = 0;
  for (const auto& row : rows) n_selected += row.selected ? 1 : 0;
  std::printf("%-16s %5s %9s %10s %10s\n", "feature", "level", "selected", "w", "freq");
  for (const auto& row : rows) {
    if (!row.selected) continue;
    std::printf("%-16s %5d %9s %10.4f %10.2f\n", row.feature.c_str(), row.level, "yes", row.w,
                row.frequency);
  }
  std::printf("%zu of %zu features selected\n", n_selected, rows.size());
}

int run_select(const SelectArgs& args) {
  if (args.has_fdr && (args.has_pfer || args.has_pfer_l1 || args.has_pfer_l2)) {
    throw mlknock::ValidationError("--fdr and --pfer/--pfer-l1/--pfer-l2 are mutually exclusive");
  }
  auto ingested = ingest(args);
  const auto& data = ingested.data;

  mlknock::multilevel::SelectOptions options;
  options.method = parse_method(args.method);
  options.runs = args.runs;
  options.eta = args.eta;
  options.penreg_spec =
      make_penreg_spec(args.alpha, resolve_lambda_rule(args.lambda_rule, options.method));
  options.threads = args.threads;

  using mlknock::filter::Budget;
  using mlknock::filter::BudgetKind;
  Budget base{BudgetKind::pfer, args.has_pfer ? args.pfer : 1.0};
  if (args.has_fdr) base = Budget{BudgetKind::fdr, args.fdr};
  options.level1_budget = args.has_pfer_l1 ? Budget{BudgetKind::pfer, args.pfer_l1} : base;
  options.level2_budget = args.has_pfer_l2 ? Budget{BudgetKind::pfer, args.pfer_l2} : base;

  auto budget_json = [](const Budget& b) {
    ordered_json j;
    j["kind"] = b.kind == BudgetKind::fdr ? "fdr" : "pfer";
    j["value"] = b.value;
    return j;
  };

  std::vector<FeatureRow> rows;
  ordered_json budgets;
  if (args.overall) {
    budgets["overall"] = budget_json(options.level1_budget);
    auto result = mlknock::multilevel::select_overall(data, options.level1_budget, options,
                                                      args.seed);
    auto split = mlknock::multilevel::decompose(data);
    auto design = mlknock::multilevel::overall_design(split);
    for (std::size_t j = 0; j < design.column_names.size(); ++j) {
      FeatureRow row;
      row.feature = design.column_names[j];
      row.level = j < static_cast<std::size_t>(data.x_level1.cols()) ? 1 : 2;
      row.selected = std::binary_search(result.selected.begin(), result.selected.end(),
                                        static_cast<int>(j));
      row.w = result.w.w(static_cast<mlknock::Index>(j));
      row.frequency = result.frequencies(static_cast<mlknock::Index>(j));
      row.threshold = result.threshold;
      rows.push_back(std::move(row));
    }
  } else {
    budgets["level1"] = budget_json(options.level1_budget);
    budgets["level2"] = budget_json(options.level2_budget);
    auto result = mlknock::multilevel::select_multilevel(data, options, args.seed);
    for (const auto& entry : result.combined) {
      FeatureRow row;
      row.feature = entry.feature;
      row.level = entry.level;
      row.selected = entry.selected;
      row.w = entry.w;
      row.frequency = entry.frequency;
      row.threshold =
          entry.level == 1 ? result.level1_result.threshold : result.level2_result.threshold;
      rows.push_back(std::move(row));
    }
  }
  emit_select_report(args, rows, budgets);
  return 0;
}

// --- simulate --------------------------------------------------------------

mlknock::sim::SimConfig load_sim_config(const SimulateArgs& args) {
  mlknock::sim::SimConfig cfg;
  if (!args.config_path.empty()) {
    std::ifstream in(args.config_path);
    if (!in) {
      throw mlknock::ValidationError("cannot open '" + args.config_path + "' for reading");
    }
    ordered_json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      throw mlknock::ValidationError("config '" + args.config_path + "': " + e.what());
    }
    try {
      if (doc.contains("clusters")) cfg.clusters = doc["clusters"].get<long>();
      if (doc.contains("cluster_size")) cfg.cluster_size = doc["cluster_size"].get<long>();
      if (doc.contains("k_level1")) cfg.k_level1 = doc["k_level1"].get<long>();
      if (doc.contains("h_level2")) cfg.h_level2 = doc["h_level2"].get<long>();
      if (doc.contains("gamma")) cfg.gamma = doc["gamma"].get<double>();
      if (doc.contains("sigma_u2")) cfg.sigma_u2 = doc["sigma_u2"].get<double>();
      if (doc.contains("sigma_e2")) cfg.sigma_e2 = doc["sigma_e2"].get<double>();
      if (doc.contains("reps")) cfg.reps = doc["reps"].get<int>();
      if (doc.contains("seed")) cfg.seed = doc["seed"].get<std::uint64_t>();
      if (doc.contains("coefficients")) {
        cfg.coefficients.clear();
        for (const auto& [key, value] : doc["coefficients"].items()) {
          cfg.coefficients[key] = value.get<double>();
        }
      }
      if (doc.contains("dichotomize_idx")) {
        cfg.dichotomize_idx = doc["dichotomize_idx"].get<std::vector<int>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw mlknock::ValidationError("config '" + args.config_path + "': " + e.what());
    }
  }
  if (args.reps >= 0) cfg.reps = args.reps;
  if (args.has_seed) cfg.seed = args.seed;
  if (args.has_gamma) cfg.gamma = args.gamma;
  if (args.clusters >= 0) cfg.clusters = args.clusters;
  return cfg;
}

int run_simulate(const SimulateArgs& args) {
  if (args.has_fdr && (args.has_pfer_l1 || args.has_pfer_l2)) {
    throw mlknock::ValidationError("--fdr and --pfer-l1/--pfer-l2 are mutually exclusive");
  }
  mlknock::sim::SimConfig cfg = load_sim_config(args);

  mlknock::sim::StudySpec study;
  study.threads = args.threads;
  study.include_overall = !args.no_overall;
  for (const auto& name : args.methods) {
    mlknock::sim::MethodSpec method;
    method.name = name;
    method.kind = parse_method(name);
    method.penreg_spec =
        make_penreg_spec(args.alpha, resolve_lambda_rule(args.lambda_rule, method.kind));
    method.runs = args.runs;
    method.eta = args.eta;
    study.methods.push_back(std::move(method));
  }

  using mlknock::filter::Budget;
  using mlknock::filter::BudgetKind;
  mlknock::sim::BudgetCase budget_case;
  if (args.has_fdr) {
    budget_case.level1 = Budget{BudgetKind::fdr, args.fdr};
    budget_case.level2 = Budget{BudgetKind::fdr, args.fdr};
    budget_case.overall = Budget{BudgetKind::fdr, args.fdr};
  } else {
    double l1 = args.has_pfer_l1 ? args.pfer_l1 : args.pfer;
    double l2 = args.has_pfer_l2 ? args.pfer_l2 : args.pfer;
    budget_case.level1 = Budget{BudgetKind::pfer, l1};
    budget_case.level2 = Budget{BudgetKind::pfer, l2};
    budget_case.overall = Budget{BudgetKind::pfer, l1 + l2};  // same total spend
  }
  study.budgets.push_back(budget_case);

  mlknock::sim::SimReport report = mlknock::sim::run_study(cfg, study);

  for (const auto& failure : report.failures) {
    std::cerr << "warning: " << failure << "\n";
  }

  std::printf("%-14s %-9s %-16s %8s %8s %8s %6s\n", "method", "mode", "budget", "PFER", "FDR",
              "TPR", "reps");
  for (const auto& row : report.rows) {
    std::printf("%-14s %-9s %-16s %8.3f %8.3f %8.3f %6d\n", row.method.c_str(), row.mode.c_str(),
                row.budget.c_str(), row.pfer_hat, row.fdr_hat, row.tpr_hat, row.reps);
  }

  if (!args.output.empty()) {
    std::string csv = "method,mode,budget,pfer_hat,fdr_hat,tpr_hat,reps\n";
    for (const auto& row : report.rows) {
      csv += row.method + ',' + row.mode + ',' + row.budget + ',' +
             mlknock::io::format_double(row.pfer_hat) + ',' +
             mlknock::io::format_double(row.fdr_hat) + ',' +
             mlknock::io::format_double(row.tpr_hat) + ',' + std::to_string(row.reps) + '\n';
    }
    write_text_file(args.output + ".csv", csv);

    ordered_json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "simulate";
    ordered_json config;
    config["clusters"] = report.config.clusters;
    config["cluster_size"] = report.config.cluster_size;
    config["k_level1"] = report.config.k_level1;
    config["h_level2"] = report.config.h_level2;
    config["gamma"] = report.config.gamma;
    config["sigma_u2"] = report.config.sigma_u2;
    config["sigma_e2"] = report.config.sigma_e2;
    config["coefficients"] = ordered_json::object();
    for (const auto& [key, value] : report.config.coefficients) config["coefficients"][key] = value;
    config["dichotomize_idx"] = report.config.dichotomize_idx;
    config["reps"] = report.config.reps;
    config["seed"] = report.config.seed;
    doc["config"] = std::move(config);
    doc["failures"] = report.failures;
    ordered_json rows = ordered_json::array();
    for (const auto& row : report.rows) {
      ordered_json r;
      r["method"] = row.method;
      r["mode"] = row.mode;
      r["budget"] = row.budget;
      r["pfer_hat"] = row.pfer_hat;
      r["fdr_hat"] = row.fdr_hat;
      r["tpr_hat"] = row.tpr_hat;
      r["reps"] = row.reps;
      r["fp_by_rep"] = row.fp_by_rep;
      r["fdp_by_rep"] = row.fdp_by_rep;
      r["tpr_by_rep"] = row.tpr_by_rep;
      rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(rows);
    write_text_file(args.output + ".json", doc.dump(2) + "\n");
  }
  return 0;
}

// --- knockoffs -------------------------------------------------------------

int run_knockoffs(const KnockoffArgs& args) {
  auto ingested = ingest(args);
  auto split = mlknock::multilevel::decompose(ingested.data);

  const mlknock::DesignMatrix& target =
      args.target == "level1" ? split.level1_x : split.level2_design;
  if (target.cols() == 0) {
    throw mlknock::ValidationError("the " + args.target + " design has no columns");
  }

  mlknock::knockoff::KnockoffSet ks;
  if (args.method == "gaussian") {
    auto model = mlknock::knockoff::estimate_gaussian_model(target);
    ks = mlknock::knockoff::sample_gaussian_knockoffs(target, model, args.seed);
  } else if (args.method == "sequential") {
    mlknock::knockoff::SequentialKnockoffSpec spec;
    spec.neighborhood = mlknock::knockoff::estimate_neighborhoods(
        target, mlknock::penreg::FitSpec{}, mlknock::derive_seed(args.seed, "nbhd"));
    ks = mlknock::knockoff::sample_sequential_knockoffs(target, spec, args.seed);
  } else {
    throw mlknock::ValidationError("unknown knockoff method '" + args.method + "'");
  }

  std::vector<std::string> names = ks.original.column_names;
  names.insert(names.end(), ks.knockoff.column_names.begin(), ks.knockoff.column_names.end());
  mlknock::Matrix values(ks.original.rows(), ks.original.cols() + ks.knockoff.cols());
  values << ks.original.values, ks.knockoff.values;

  if (args.output.empty()) {
    mlknock::io::write_csv_stream(std::cout, names, values);
  } else {
    mlknock::io::write_csv(args.output, names, values);
    std::printf("wrote %ld rows x %ld columns to %s\n", static_cast<long>(values.rows()),
                static_cast<long>(values.cols()), args.output.c_str());
  }
  return 0;
}

// --- validate --------------------------------------------------------------

int run_validate(const CommonArgs& args) {
  auto ingested = ingest(args);
  auto split = mlknock::multilevel::decompose(ingested.data);

  std::printf("rows: %ld  clusters: %ld  level-1 columns: %ld  level-2 columns: %ld\n",
              static_cast<long>(ingested.data.rows()),
              static_cast<long>(split.cluster_labels.size()),
              static_cast<long>(ingested.data.x_level1.cols()),
              static_cast<long>(ingested.data.z_level2.cols()));
  if (!ingested.level2_names.empty()) {
    std::string joined;
    for (const auto& name : ingested.level2_names) {
      if (!joined.empty()) joined += ", ";
      joined += name;
    }
    std::printf("level-2 columns: %s\n", joined.c_str());
  }

  double orth = mlknock::multilevel::check_orthogonality(split);
  bool orth_ok = orth <= 1e-10;
  std::printf("orthogonality  max |cov| = %s  [%s]\n", mlknock::io::format_double(orth).c_str(),
              orth_ok ? "pass" : "FAIL");

  bool equiv_ok = true;
  if (ingested.data.x_level1.cols() + ingested.data.z_level2.cols() > 0) {
    double equiv = mlknock::multilevel::verify_weighted_equivalence(ingested.data, split);
    equiv_ok = equiv <= 1e-8;
    std::printf("weighted equivalence  max |diff| = %s  [%s]\n",
                mlknock::io::format_double(equiv).c_str(), equiv_ok ? "pass" : "FAIL");
  }
  return orth_ok && equiv_ok ? 0 : 2;
}

void add_common(CLI::App* cmd, CommonArgs& args, bool output_is_prefix) {
  cmd->add_option("--input", args.input, "input CSV with a header row")->required();
  cmd->add_option("--output", args.output,
                  output_is_prefix ? "output prefix (<prefix>.json and <prefix>.csv)"
                                   : "output CSV path (stdout if omitted)");
  cmd->add_option("--cluster-col", args.cluster_col, "cluster id column (default: cluster)");
  cmd->add_option("--response-col", args.response_col, "response column (default: y)");
  cmd->add_option("--level2-cols", args.level2_cols,
                  "comma-separated level-2 columns (default: auto-detect)")
      ->delimiter(',');
  cmd->add_option("--seed", args.seed, "random seed (default: 1)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"knockoff-based variable selection for two-level clustered data"};
  app.require_subcommand(1);

  SelectArgs select_args;
  CLI::App* select = app.add_subcommand("select", "run the knockoff filter on a dataset");
  add_common(select, select_args, true);
  select->add_option("--method", select_args.method, "lasso, derandomized, or sequential")
      ->check(CLI::IsMember({"lasso", "derandomized", "sequential"}));
  auto* fdr_opt = select->add_option("--fdr", select_args.fdr, "target FDR in (0,1)");
  auto* pfer_opt = select->add_option("--pfer", select_args.pfer, "PFER budget (integer >= 1)");
  auto* pfer_l1_opt =
      select->add_option("--pfer-l1", select_args.pfer_l1, "level-1 PFER budget override");
  auto* pfer_l2_opt =
      select->add_option("--pfer-l2", select_args.pfer_l2, "level-2 PFER budget override");
  select->add_option("--runs", select_args.runs, "derandomization runs (default: 31)");
  select->add_option("--eta", select_args.eta, "selection-frequency threshold (default: 0.5)");
  select->add_option("--alpha", select_args.alpha, "elastic-net mixing (default: 1.0)");
  select->add_option("--lambda-rule", select_args.lambda_rule,
                     "min or one_se (default: one_se for lasso, min otherwise)")
      ->check(CLI::IsMember({"min", "one_se"}));
  select->add_flag("--overall", select_args.overall,
                   "single-stage selection on the stacked design");
  select->add_option("--threads", select_args.threads, "worker threads (default: 1)");

  SimulateArgs sim_args;
  CLI::App* simulate = app.add_subcommand("simulate", "run the Monte Carlo study");
  simulate->add_option("--config", sim_args.config_path, "JSON file with simulation settings");
  simulate->add_option("--output", sim_args.output,
                       "output prefix (<prefix>.json and <prefix>.csv)");
  simulate->add_option("--methods", sim_args.methods,
                       "methods to run (default: sequential)")
      ->delimiter(',')
      ->check(CLI::IsMember({"lasso", "derandomized", "sequential"}));
  auto* sim_fdr = simulate->add_option("--fdr", sim_args.fdr, "target FDR for every stage");
  simulate->add_option("--pfer", sim_args.pfer,
                       "per-level PFER budget; the overall stage gets the sum (default: 1)");
  auto* sim_pfer_l1 = simulate->add_option("--pfer-l1", sim_args.pfer_l1, "level-1 PFER override");
  auto* sim_pfer_l2 = simulate->add_option("--pfer-l2", sim_args.pfer_l2, "level-2 PFER override");
  simulate->add_option("--reps", sim_args.reps, "replications (default: 25)");
  auto* sim_seed = simulate->add_option("--seed", sim_args.seed, "study seed (default: 1)");
  auto* sim_gamma = simulate->add_option("--gamma", sim_args.gamma, "time slope (default: 0.5)");
  simulate->add_option("--clusters", sim_args.clusters, "cluster count (default: 300)");
  simulate->add_option("--alpha", sim_args.alpha, "elastic-net mixing (default: 1.0)");
  simulate->add_option("--lambda-rule", sim_args.lambda_rule,
                       "min or one_se (default: one_se for lasso, min otherwise)")
      ->check(CLI::IsMember({"min", "one_se"}));
  simulate->add_option("--runs", sim_args.runs, "derandomization runs (default: 31)");
  simulate->add_option("--eta", sim_args.eta, "selection-frequency threshold (default: 0.5)");
  simulate->add_option("--threads", sim_args.threads, "replication worker threads (default: 1)");
  simulate->add_flag("--no-overall", sim_args.no_overall, "skip the single-stage baseline rows");

  KnockoffArgs knockoff_args;
  CLI::App* knockoffs = app.add_subcommand("knockoffs", "write knockoff copies as CSV");
  add_common(knockoffs, knockoff_args, false);
  knockoffs->add_option("--method", knockoff_args.method, "gaussian or sequential")
      ->check(CLI::IsMember({"gaussian", "sequential"}));
  knockoffs->add_option("--target", knockoff_args.target, "level1 or level2 design")
      ->check(CLI::IsMember({"level1", "level2"}));

  CommonArgs validate_args;
  CLI::App* validate = app.add_subcommand("validate", "check the within/between identities");
  add_common(validate, validate_args, true);

  CLI11_PARSE(app, argc, argv);

  select_args.has_fdr = fdr_opt->count() > 0;
  select_args.has_pfer = pfer_opt->count() > 0;
  select_args.has_pfer_l1 = pfer_l1_opt->count() > 0;
  select_args.has_pfer_l2 = pfer_l2_opt->count() > 0;
  sim_args.has_fdr = sim_fdr->count() > 0;
  sim_args.has_pfer_l1 = sim_pfer_l1->count() > 0;
  sim_args.has_pfer_l2 = sim_pfer_l2->count() > 0;
  sim_args.has_seed = sim_seed->count() > 0;
  sim_args.has_gamma = sim_gamma->count() > 0;

  try {
    if (select->parsed()) return run_select(select_args);
    if (simulate->parsed()) return run_simulate(sim_args);
    if (knockoffs->parsed()) return run_knockoffs(knockoff_args);
    if (validate->parsed()) return run_validate(validate_args);
  } catch (const mlknock::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mlknock::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
