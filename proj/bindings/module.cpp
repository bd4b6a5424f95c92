// Python bindings: thin numpy-facing wrappers over the selection, knockoff
// generation, and simulation entry points.  Heavy calls release the GIL; all
// results come back as plain dicts of numpy arrays and lists.
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mlknock/filter.hpp"
#include "mlknock/knockoffs.hpp"
#include "mlknock/multilevel.hpp"
#include "mlknock/penreg.hpp"
#include "mlknock/rng.hpp"
#include "mlknock/sim.hpp"
#include "mlknock/types.hpp"

namespace py = pybind11;
using namespace mlknock;

namespace {

using OptNames = std::optional<std::vector<std::string>>;
using OptMatrix = std::optional<Matrix>;

DesignMatrix make_design(const Matrix& values, const OptNames& names, const std::string& prefix) {
  DesignMatrix d;
  d.values = values;
  if (names) {
    if (static_cast<Index>(names->size()) != values.cols()) {
      throw ValidationError(prefix + "_names has " + std::to_string(names->size()) +
                            " entries for " + std::to_string(values.cols()) + " columns");
    }
    d.column_names = *names;
  } else {
    for (Index j = 0; j < values.cols(); ++j) {
      d.column_names.push_back(prefix + std::to_string(j + 1));
    }
  }
  return d;
}

multilevel::ClusteredDataset make_dataset(const Vector& y, const Matrix& x,
                                          const std::vector<long>& cluster_id, const OptMatrix& z,
                                          const OptNames& x_names, const OptNames& z_names) {
  multilevel::ClusteredDataset data;
  data.y = y;
  data.x_level1 = make_design(x, x_names, "x");
  if (z) {
    data.z_level2 = make_design(*z, z_names, "z");
  } else {
    data.z_level2.values.resize(y.size(), 0);
  }
  data.cluster_id = cluster_id;
  data.validate();
  return data;
}

multilevel::Method parse_method(const std::string& name) {
  if (name == "lasso") return multilevel::Method::lasso;
  if (name == "derandomized") return multilevel::Method::derandomized;
  if (name == "sequential") return multilevel::Method::sequential;
  throw ValidationError("unknown method '" + name + "'");
}

// Same per-method defaulting as the command line: the lasso baseline uses the
// one-standard-error rule, knockoff statistics the CV-minimum lambda.
penreg::FitSpec make_penreg_spec(double alpha, const std::optional<std::string>& lambda_rule,
                                 int cv_folds, multilevel::Method kind) {
  penreg::FitSpec spec;
  spec.alpha = alpha;
  spec.cv_folds = cv_folds;
  const std::string rule = lambda_rule.value_or(
      kind == multilevel::Method::lasso ? "one_se" : "min");
  if (rule == "min") {
    spec.lambda_rule = penreg::LambdaRule::min;
  } else if (rule == "one_se") {
    spec.lambda_rule = penreg::LambdaRule::one_se;
  } else {
    throw ValidationError("unknown lambda rule '" + rule + "'");
  }
  return spec;
}

filter::Budget make_budget(const std::optional<double>& fdr, double pfer) {
  filter::Budget budget;
  if (fdr) {
    budget.kind = filter::BudgetKind::fdr;
    budget.value = *fdr;
  } else {
    budget.kind = filter::BudgetKind::pfer;
    budget.value = pfer;
  }
  budget.validate();
  return budget;
}

py::dict result_to_dict(const filter::SelectionResult& result,
                        const std::vector<std::string>& names) {
  py::dict out;
  py::list selected;
  for (int idx : result.selected) selected.append(names[static_cast<std::size_t>(idx)]);
  out["names"] = names;
  out["w"] = result.w.w;
  out["threshold"] = result.threshold;
  out["frequencies"] = result.frequencies;
  out["selected"] = selected;
  out["selected_idx"] = result.selected;
  out["runs"] = result.runs;
  return out;
}

py::list combined_to_list(const std::vector<multilevel::CombinedEntry>& combined) {
  py::list out;
  for (const auto& entry : combined) {
    py::dict d;
    d["feature"] = entry.feature;
    d["level"] = entry.level;
    d["selected"] = entry.selected;
    d["w"] = entry.w;
    d["frequency"] = entry.frequency;
    out.append(d);
  }
  return out;
}

py::dict report_row_to_dict(const sim::ReportRow& row) {
  py::dict d;
  d["method"] = row.method;
  d["mode"] = row.mode;
  d["budget"] = row.budget;
  d["pfer_hat"] = row.pfer_hat;
  d["fdr_hat"] = row.fdr_hat;
  d["tpr_hat"] = row.tpr_hat;
  d["reps"] = row.reps;
  d["fp_by_rep"] = row.fp_by_rep;
  d["fdp_by_rep"] = row.fdp_by_rep;
  d["tpr_by_rep"] = row.tpr_by_rep;
  return d;
}

sim::SimConfig make_sim_config(int reps, std::uint64_t seed, std::optional<long> clusters,
                               std::optional<long> cluster_size, std::optional<double> gamma,
                               const std::optional<std::map<std::string, double>>& coefficients) {
  sim::SimConfig cfg;
  cfg.reps = reps;
  cfg.seed = seed;
  if (clusters) cfg.clusters = *clusters;
  if (cluster_size) cfg.cluster_size = *cluster_size;
  if (gamma) cfg.gamma = *gamma;
  if (coefficients) cfg.coefficients = *coefficients;
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Knockoff-based variable selection for two-level clustered data";

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  m.def(
      "decompose",
      [](const Vector& y, const Matrix& x, const std::vector<long>& cluster_id, const OptMatrix& z,
         const OptNames& x_names, const OptNames& z_names) {
        auto data = make_dataset(y, x, cluster_id, z, x_names, z_names);
        auto split = multilevel::decompose(data);
        py::dict out;
        out["level1_x"] = split.level1_x.values;
        out["level1_y"] = split.level1_y;
        out["level1_names"] = split.level1_x.column_names;
        out["level2_design"] = split.level2_design.values;
        out["level2_y"] = split.level2_y;
        out["level2_weights"] = split.level2_weights;
        out["level2_names"] = split.level2_design.column_names;
        out["cluster_labels"] = split.cluster_labels;
        return out;
      },
      py::arg("y"), py::arg("x"), py::arg("cluster_id"), py::arg("z") = py::none(),
      py::arg("x_names") = py::none(), py::arg("z_names") = py::none(),
      "Split a clustered dataset into the centered level-1 problem and the "
      "aggregated weighted level-2 problem.");

  m.def(
      "check_identities",
      [](const Vector& y, const Matrix& x, const std::vector<long>& cluster_id, const OptMatrix& z,
         const OptNames& x_names, const OptNames& z_names) {
        auto data = make_dataset(y, x, cluster_id, z, x_names, z_names);
        auto split = multilevel::decompose(data);
        py::dict out;
        out["orthogonality"] = multilevel::check_orthogonality(split);
        out["equivalence_gap"] = multilevel::verify_weighted_equivalence(data, split);
        return out;
      },
      py::arg("y"), py::arg("x"), py::arg("cluster_id"), py::arg("z") = py::none(),
      py::arg("x_names") = py::none(), py::arg("z_names") = py::none(),
      "Max centered-vs-constant covariance and the weighted-vs-full-data "
      "least-squares coefficient gap for the decomposition identities.");

  m.def(
      "select",
      [](const Vector& y, const Matrix& x, const std::vector<long>& cluster_id, const OptMatrix& z,
         const std::string& method, const std::optional<double>& fdr, double pfer,
         const std::optional<double>& pfer_l1, const std::optional<double>& pfer_l2, int runs,
         double eta, double alpha, const std::optional<std::string>& lambda_rule, int cv_folds,
         int threads, std::uint64_t seed, const OptNames& x_names, const OptNames& z_names) {
        auto data = make_dataset(y, x, cluster_id, z, x_names, z_names);
        multilevel::SelectOptions options;
        options.method = parse_method(method);
        options.runs = runs;
        options.eta = eta;
        options.penreg_spec = make_penreg_spec(alpha, lambda_rule, cv_folds, options.method);
        options.threads = threads;
        const auto base = make_budget(fdr, pfer);
        options.level1_budget =
            pfer_l1 ? filter::Budget{filter::BudgetKind::pfer, *pfer_l1} : base;
        options.level2_budget =
            pfer_l2 ? filter::Budget{filter::BudgetKind::pfer, *pfer_l2} : base;
        multilevel::MultilevelSelection result;
        multilevel::LevelSplit split;
        {
          py::gil_scoped_release release;
          split = multilevel::decompose(data);
          result = multilevel::select_multilevel(data, options, seed);
        }
        py::dict out;
        out["level1"] = result_to_dict(result.level1_result, split.level1_x.column_names);
        out["level2"] = result_to_dict(result.level2_result, split.level2_design.column_names);
        out["combined"] = combined_to_list(result.combined);
        return out;
      },
      py::arg("y"), py::arg("x"), py::arg("cluster_id"), py::arg("z") = py::none(),
      py::arg("method") = "sequential", py::arg("fdr") = py::none(), py::arg("pfer") = 1.0,
      py::arg("pfer_l1") = py::none(), py::arg("pfer_l2") = py::none(), py::arg("runs") = 31,
      py::arg("eta") = 0.5, py::arg("alpha") = 1.0, py::arg("lambda_rule") = py::none(),
      py::arg("cv_folds") = 10, py::arg("threads") = 1, py::arg("seed") = 1,
      py::arg("x_names") = py::none(), py::arg("z_names") = py::none(),
      "Two-stage variable selection: level-1 on the centered predictors, "
      "level-2 on the weighted cluster-level problem.");

  m.def(
      "select_overall",
      [](const Vector& y, const Matrix& x, const std::vector<long>& cluster_id, const OptMatrix& z,
         const std::string& method, const std::optional<double>& fdr, double pfer, int runs,
         double eta, double alpha, const std::optional<std::string>& lambda_rule, int cv_folds,
         int threads, std::uint64_t seed, const OptNames& x_names, const OptNames& z_names) {
        auto data = make_dataset(y, x, cluster_id, z, x_names, z_names);
        multilevel::SelectOptions options;
        options.method = parse_method(method);
        options.runs = runs;
        options.eta = eta;
        options.penreg_spec = make_penreg_spec(alpha, lambda_rule, cv_folds, options.method);
        options.threads = threads;
        const auto budget = make_budget(fdr, pfer);
        filter::SelectionResult result;
        DesignMatrix stacked;
        {
          py::gil_scoped_release release;
          stacked = multilevel::overall_design(multilevel::decompose(data));
          result = multilevel::select_overall(data, budget, options, seed);
        }
        return result_to_dict(result, stacked.column_names);
      },
      py::arg("y"), py::arg("x"), py::arg("cluster_id"), py::arg("z") = py::none(),
      py::arg("method") = "sequential", py::arg("fdr") = py::none(), py::arg("pfer") = 2.0,
      py::arg("runs") = 31, py::arg("eta") = 0.5, py::arg("alpha") = 1.0,
      py::arg("lambda_rule") = py::none(), py::arg("cv_folds") = 10, py::arg("threads") = 1,
      py::arg("seed") = 1, py::arg("x_names") = py::none(), py::arg("z_names") = py::none(),
      "Single-stage baseline: one selection pass over the stacked "
      "[centered, cluster-mean, level-2] design.");

  m.def(
      "gaussian_knockoffs",
      [](const Matrix& x, std::uint64_t seed, const OptNames& names) {
        auto design = make_design(x, names, "x");
        design.validate();
        Matrix values;
        {
          py::gil_scoped_release release;
          auto model = knockoff::estimate_gaussian_model(design);
          values = knockoff::sample_gaussian_knockoffs(design, model, seed).knockoff.values;
        }
        return values;
      },
      py::arg("x"), py::arg("seed") = 1, py::arg("names") = py::none(),
      "Second-order Gaussian model-X knockoff copies of the columns of x.");

  m.def(
      "sequential_knockoffs",
      [](const Matrix& x, std::uint64_t seed, double alpha,
         const std::optional<std::string>& lambda_rule, int cv_folds, bool neighborhoods,
         const OptNames& names) {
        auto design = make_design(x, names, "x");
        design.validate();
        knockoff::SequentialKnockoffSpec spec;
        spec.penreg_spec = make_penreg_spec(alpha, lambda_rule, cv_folds,
                                            multilevel::Method::sequential);
        Matrix values;
        {
          py::gil_scoped_release release;
          if (neighborhoods) {
            spec.neighborhood = knockoff::estimate_neighborhoods(design, spec.penreg_spec,
                                                                 derive_seed(seed, "neighborhood"));
          }
          values = knockoff::sample_sequential_knockoffs(design, spec, seed).knockoff.values;
        }
        return values;
      },
      py::arg("x"), py::arg("seed") = 1, py::arg("alpha") = 1.0,
      py::arg("lambda_rule") = py::none(), py::arg("cv_folds") = 10,
      py::arg("neighborhoods") = true, py::arg("names") = py::none(),
      "Sparse sequential knockoff copies; binary columns are detected and "
      "sampled from per-feature logistic fits.");

  m.def(
      "generate_dataset",
      [](std::uint64_t seed, std::optional<long> clusters, std::optional<long> cluster_size,
         std::optional<double> gamma,
         const std::optional<std::map<std::string, double>>& coefficients) {
        auto cfg = make_sim_config(1, seed, clusters, cluster_size, gamma, coefficients);
        sim::GeneratedDataset generated;
        {
          py::gil_scoped_release release;
          generated = sim::generate_dataset(cfg, seed);
        }
        py::dict out;
        out["y"] = generated.data.y;
        out["x"] = generated.data.x_level1.values;
        out["z"] = generated.data.z_level2.values;
        out["cluster_id"] = generated.data.cluster_id;
        out["x_names"] = generated.data.x_level1.column_names;
        out["z_names"] = generated.data.z_level2.column_names;
        out["nonnull_level1"] = generated.truth.nonnull_level1;
        out["nonnull_level2"] = generated.truth.nonnull_level2;
        return out;
      },
      py::arg("seed") = 1, py::arg("clusters") = py::none(),
      py::arg("cluster_size") = py::none(), py::arg("gamma") = py::none(),
      py::arg("coefficients") = py::none(),
      "One draw from the Monte Carlo design: correlated level-1/level-2 "
      "predictors and a random-intercept response, with the non-null index "
      "sets (level-2 indices refer to [cluster means, z]).");

  m.def(
      "simulate",
      [](int reps, std::uint64_t seed, const std::vector<std::string>& methods,
         const std::optional<double>& fdr, double pfer, bool include_overall, int threads,
         std::optional<long> clusters, std::optional<long> cluster_size,
         std::optional<double> gamma,
         const std::optional<std::map<std::string, double>>& coefficients, double alpha,
         const std::optional<std::string>& lambda_rule, int runs, double eta) {
        auto cfg = make_sim_config(reps, seed, clusters, cluster_size, gamma, coefficients);
        sim::StudySpec study;
        study.threads = threads;
        study.include_overall = include_overall;
        for (const auto& name : methods) {
          sim::MethodSpec method;
          method.name = name;
          method.kind = parse_method(name);
          method.penreg_spec = make_penreg_spec(alpha, lambda_rule, 10, method.kind);
          method.runs = runs;
          method.eta = eta;
          study.methods.push_back(std::move(method));
        }
        sim::BudgetCase budgets;
        if (fdr) {
          budgets.level1 = {filter::BudgetKind::fdr, *fdr};
          budgets.level2 = budgets.level1;
          budgets.overall = budgets.level1;
          budgets.label = "fdr";
        } else {
          budgets.level1 = {filter::BudgetKind::pfer, pfer};
          budgets.level2 = budgets.level1;
          budgets.overall = {filter::BudgetKind::pfer, 2 * pfer};
          budgets.label = "pfer";
        }
        study.budgets.push_back(budgets);
        sim::SimReport report;
        {
          py::gil_scoped_release release;
          report = sim::run_study(cfg, study);
        }
        py::dict out;
        py::list rows;
        for (const auto& row : report.rows) rows.append(report_row_to_dict(row));
        out["rows"] = rows;
        out["failures"] = report.failures;
        return out;
      },
      py::arg("reps") = 25, py::arg("seed") = 1,
      py::arg("methods") = std::vector<std::string>{"sequential"}, py::arg("fdr") = py::none(),
      py::arg("pfer") = 1.0, py::arg("include_overall") = true, py::arg("threads") = 1,
      py::arg("clusters") = py::none(), py::arg("cluster_size") = py::none(),
      py::arg("gamma") = py::none(), py::arg("coefficients") = py::none(), py::arg("alpha") = 1.0,
      py::arg("lambda_rule") = py::none(), py::arg("runs") = 31, py::arg("eta") = 0.5,
      "Monte Carlo study over seeded replications; returns one summary row "
      "per method x mode x budget with per-replication detail.");
}
