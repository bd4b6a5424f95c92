#include "mlknock/sim.hpp"

#include "mlknock/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>
#include <unordered_set>

namespace mlknock::sim {

namespace {

// Parsed view of SimConfig::coefficients.
struct Coefficients {
  Vector beta_within;   // K
  Vector beta_between;  // K
  Vector delta;         // H
};

bool parse_positive_int(const std::string& text, long& out) {
  if (text.empty()) return false;
  long value = 0;
  for (char c : text) {
    if (c < '0' || c > '9') return false;
    value = value * 10 + (c - '0');
    if (value > 1000000) return false;
  }
  out = value;
  return value >= 1;
}

Coefficients parse_coefficients(const SimConfig& cfg) {
  Coefficients out;
  out.beta_within = Vector::Zero(cfg.k_level1);
  out.beta_between = Vector::Zero(cfg.k_level1);
  out.delta = Vector::Zero(cfg.h_level2);
  for (const auto& [key, value] : cfg.coefficients) {
    if (!std::isfinite(value)) {
      throw ValidationError("coefficient '" + key + "' is not finite");
    }
    long idx = 0;
    if (key.size() > 1 && key.front() == 'z' && parse_positive_int(key.substr(1), idx)) {
      if (idx > cfg.h_level2) {
        throw ValidationError("coefficient '" + key + "' is out of range (h = " +
                              std::to_string(cfg.h_level2) + ")");
      }
      out.delta(idx - 1) = value;
      continue;
    }
    const std::string within_suffix = ".within";
    const std::string between_suffix = ".between";
    bool is_within = key.size() > within_suffix.size() &&
                     key.compare(key.size() - within_suffix.size(), within_suffix.size(),
                                 within_suffix) == 0;
    bool is_between = key.size() > between_suffix.size() &&
                      key.compare(key.size() - between_suffix.size(), between_suffix.size(),
                                  between_suffix) == 0;
    if ((is_within || is_between) && key.front() == 'x') {
      std::size_t suffix_len = is_within ? within_suffix.size() : between_suffix.size();
      std::string digits = key.substr(1, key.size() - suffix_len - 1);
      if (parse_positive_int(digits, idx)) {
        if (idx > cfg.k_level1) {
          throw ValidationError("coefficient '" + key + "' is out of range (k = " +
                                std::to_string(cfg.k_level1) + ")");
        }
        (is_within ? out.beta_within : out.beta_between)(idx - 1) = value;
        continue;
      }
    }
    throw ValidationError("unrecognized coefficient name '" + key +
                          "' (expected x<k>.within, x<k>.between, or z<h>)");
  }
  return out;
}

TruthSet truth_from(const Coefficients& coef, Index k) {
  TruthSet truth;
  for (Index j = 0; j < coef.beta_within.size(); ++j) {
    if (coef.beta_within(j) != 0.0) truth.nonnull_level1.push_back(static_cast<int>(j));
  }
  for (Index j = 0; j < coef.beta_between.size(); ++j) {
    if (coef.beta_between(j) != 0.0) truth.nonnull_level2.push_back(static_cast<int>(j));
  }
  for (Index j = 0; j < coef.delta.size(); ++j) {
    if (coef.delta(j) != 0.0) truth.nonnull_level2.push_back(static_cast<int>(k + j));
  }
  return truth;
}

void require_positive_definite(const Matrix& c, const char* what) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(c, Eigen::EigenvaluesOnly);
  double min_eig = es.eigenvalues().minCoeff();
  if (!(min_eig > 0.0)) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", min_eig);
    throw NumericalError(std::string(what) + " is not positive definite (min eigenvalue " + buf +
                         ")");
  }
}

Matrix cholesky_factor(const Matrix& c) {
  Eigen::LLT<Matrix> llt(c);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("Cholesky factorization of a correlation matrix failed");
  }
  return llt.matrixL();
}

Vector standard_normals(Rng& rng, Index n) {
  Vector z(n);
  for (Index i = 0; i < n; ++i) z(i) = rng.normal();
  return z;
}

}  // namespace

std::map<std::string, double> SimConfig::default_coefficients() {
  return {
      {"x1.within", 1.0},  {"x2.within", 0.5},  {"x7.within", 1.0},   {"x8.within", 0.5},
      {"x1.between", 1.0}, {"x7.between", 0.5}, {"x13.between", 1.0}, {"x19.between", 0.5},
      {"z1", 1.0},         {"z7", 0.5},         {"z13", 1.0},         {"z19", 0.5},
  };
}

void SimConfig::validate() const {
  if (clusters < 2) throw ValidationError("clusters must be at least 2");
  if (cluster_size < 1) throw ValidationError("cluster_size must be at least 1");
  if (k_level1 != 20 || h_level2 != 20) {
    throw ValidationError("the correlation design is defined for k_level1 = h_level2 = 20");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw ValidationError("gamma must be finite and non-negative");
  }
  if (!(sigma_u2 > 0.0) || !(sigma_e2 > 0.0)) {
    throw ValidationError("sigma_u2 and sigma_e2 must be positive");
  }
  if (reps < 1) throw ValidationError("reps must be at least 1");
  std::unordered_set<int> seen;
  for (int idx : dichotomize_idx) {
    if (idx < 1 || idx > h_level2) {
      throw ValidationError("dichotomize_idx entry " + std::to_string(idx) +
                            " is outside 1.." + std::to_string(h_level2));
    }
    if (!seen.insert(idx).second) {
      throw ValidationError("dichotomize_idx entry " + std::to_string(idx) + " repeats");
    }
  }
  parse_coefficients(*this);  // throws on bad names
}

Matrix build_level2_correlation(Index k, Index h) {
  if (k != h || k <= 0 || k % 4 != 0) {
    throw ValidationError("level-2 correlation needs equal k and h, a positive multiple of 4");
  }
  // Variable i < k is the i-th cluster mean, i >= k the (i-k)-th z variable;
  // both types split into four contiguous blocks of k/4. Within a block every
  // pair correlates at 0.60 (0.30 in the last block). Across blocks 1, 2, and
  // 4, corresponding variables of the same type (same offset inside their
  // blocks) correlate at 0.30 and everything else at 0.15; the third block is
  // tied to the others at a flat 0.15. A uniform 0.30 for all same-type
  // cross-block pairs would not be positive definite at this block size.
  Index block_size = k / 4;
  auto var_index = [&](Index i) { return i < k ? i : i - k; };
  auto is_mean_type = [&](Index i) { return i < k; };
  Matrix c = Matrix::Identity(2 * k, 2 * k);
  for (Index i = 0; i < 2 * k; ++i) {
    for (Index j = i + 1; j < 2 * k; ++j) {
      Index bi = var_index(i) / block_size;
      Index bj = var_index(j) / block_size;
      double value = 0.0;
      if (bi == bj) {
        value = bi < 3 ? 0.60 : 0.30;
      } else if (bi == 2 || bj == 2) {
        value = 0.15;  // the third block is weakly tied to everything else
      } else {
        bool same_type = is_mean_type(i) == is_mean_type(j);
        bool same_offset = var_index(i) % block_size == var_index(j) % block_size;
        value = same_type && same_offset ? 0.30 : 0.15;
      }
      c(i, j) = value;
      c(j, i) = value;
    }
  }
  require_positive_definite(c, "the level-2 correlation matrix");
  return c;
}

Matrix build_level1_correlation(Index k) {
  if (k != 20) throw ValidationError("the level-1 correlation design is defined for k = 20");
  // Groups over 1-based variables: 1-6, 7-16, 17-20; the first and last
  // groups are strongly tied to each other as well as internally.
  auto group = [](Index i) {  // 0-based variable index
    if (i < 6) return 0;
    if (i < 16) return 1;
    return 2;
  };
  Matrix c = Matrix::Identity(k, k);
  for (Index i = 0; i < k; ++i) {
    for (Index j = i + 1; j < k; ++j) {
      int gi = group(i);
      int gj = group(j);
      double value = 0.0;
      if (gi == gj) {
        value = gi == 1 ? 0.30 : 0.60;
      } else if ((gi == 0 && gj == 2) || (gi == 2 && gj == 0)) {
        value = 0.60;
      } else {
        value = 0.15;
      }
      c(i, j) = value;
      c(j, i) = value;
    }
  }
  require_positive_definite(c, "the level-1 correlation matrix");
  return c;
}

GeneratedDataset generate_dataset(const SimConfig& cfg, std::uint64_t rep_seed) {
  cfg.validate();
  Coefficients coef = parse_coefficients(cfg);
  Index k = cfg.k_level1;
  Index h = cfg.h_level2;
  Index j_clusters = cfg.clusters;
  Index per = cfg.cluster_size;
  Index n = j_clusters * per;

  Matrix l2_chol = cholesky_factor(build_level2_correlation(k, h));
  Matrix l1_chol = cholesky_factor(build_level1_correlation(k));

  Rng rng_l2(derive_seed(rep_seed, "sim-level2"));
  Rng rng_v(derive_seed(rep_seed, "sim-v"));
  Rng rng_u(derive_seed(rep_seed, "sim-u"));
  Rng rng_e(derive_seed(rep_seed, "sim-e"));

  // Latent cluster means and cluster-level predictors.
  Matrix xbar_latent(j_clusters, k);
  Matrix z_cluster(j_clusters, h);
  for (Index j = 0; j < j_clusters; ++j) {
    Vector draw = l2_chol * standard_normals(rng_l2, k + h);
    xbar_latent.row(j) = draw.head(k).transpose();
    z_cluster.row(j) = draw.tail(h).transpose();
  }
  for (int idx : cfg.dichotomize_idx) {
    for (Index j = 0; j < j_clusters; ++j) {
      z_cluster(j, idx - 1) = z_cluster(j, idx - 1) > 0.0 ? 1.0 : 0.0;
    }
  }

  // Level-1 predictors: latent mean + linear time trend + correlated noise.
  Matrix x(n, k);
  double time_center = (per - 1) / 2.0;
  for (Index j = 0; j < j_clusters; ++j) {
    for (Index i = 0; i < per; ++i) {
      double time = i - time_center;
      Vector noise = l1_chol * standard_normals(rng_v, k);
      x.row(j * per + i) =
          (xbar_latent.row(j).transpose() + Vector::Constant(k, cfg.gamma * time) + noise)
              .transpose();
    }
  }

  // Empirical cluster means drive the response so the within/between split of
  // the fitted model matches the generating one exactly.
  Matrix xbar_emp(j_clusters, k);
  for (Index j = 0; j < j_clusters; ++j) {
    xbar_emp.row(j) = x.middleRows(j * per, per).colwise().mean();
  }

  double sd_u = std::sqrt(cfg.sigma_u2);
  double sd_e = std::sqrt(cfg.sigma_e2);
  Vector u(j_clusters);
  for (Index j = 0; j < j_clusters; ++j) u(j) = sd_u * rng_u.normal();

  Vector y(n);
  std::vector<long> cluster_id(static_cast<std::size_t>(n));
  for (Index j = 0; j < j_clusters; ++j) {
    double cluster_part =
        xbar_emp.row(j).dot(coef.beta_between) + z_cluster.row(j).dot(coef.delta);
    for (Index i = 0; i < per; ++i) {
      Index row = j * per + i;
      double within_part = (x.row(row) - xbar_emp.row(j)).dot(coef.beta_within);
      y(row) = within_part + cluster_part + u(j) + sd_e * rng_e.normal();
      cluster_id[static_cast<std::size_t>(row)] = static_cast<long>(j);
    }
  }

  Matrix z_rows(n, h);
  for (Index j = 0; j < j_clusters; ++j) {
    z_rows.middleRows(j * per, per) = z_cluster.row(j).replicate(per, 1);
  }

  GeneratedDataset out;
  out.data.y = std::move(y);
  out.data.x_level1 = DesignMatrix::from_matrix(x, "x");
  out.data.z_level2 = DesignMatrix::from_matrix(z_rows, "z");
  out.data.cluster_id = std::move(cluster_id);
  out.data.validate();
  out.truth = truth_from(coef, k);
  return out;
}

Score score(const std::vector<int>& selected, const std::vector<int>& nonnull) {
  std::unordered_set<int> truth(nonnull.begin(), nonnull.end());
  int fp = 0;
  int tp = 0;
  for (int idx : selected) {
    if (truth.count(idx)) {
      ++tp;
    } else {
      ++fp;
    }
  }
  Score s;
  s.fp = fp;
  s.fdp = selected.empty() ? 0.0 : static_cast<double>(fp) / static_cast<double>(selected.size());
  s.tpr = truth.empty() ? 1.0 : static_cast<double>(tp) / static_cast<double>(truth.size());
  return s;
}

namespace {

std::string budget_label(const filter::Budget& b) {
  char buf[48];
  if (b.kind == filter::BudgetKind::fdr) {
    std::snprintf(buf, sizeof(buf), "fdr=%g", b.value);
  } else {
    std::snprintf(buf, sizeof(buf), "pfer=%g", b.value);
  }
  return buf;
}

Score combine_scores(const Score& s1, int n_sel1, const Score& s2, int n_sel2, int truth1,
                     int truth2) {
  Score out;
  out.fp = s1.fp + s2.fp;
  int selected = n_sel1 + n_sel2;
  out.fdp = selected == 0 ? 0.0 : (s1.fp + s2.fp) / static_cast<double>(selected);
  int truth_total = truth1 + truth2;
  double tp = s1.tpr * truth1 + s2.tpr * truth2;
  out.tpr = truth_total == 0 ? 1.0 : tp / truth_total;
  return out;
}

struct RepOutcome {
  bool ok = false;
  std::string failure;
  std::vector<Score> cells;  // aligned with the report rows
};

}  // namespace

SimReport run_study(const SimConfig& cfg, const StudySpec& study) {
  cfg.validate();
  if (study.methods.empty()) throw ValidationError("run_study needs at least one method");
  if (study.budgets.empty()) throw ValidationError("run_study needs at least one budget case");
  if (!study.include_levels && !study.include_overall) {
    throw ValidationError("run_study needs level rows, overall rows, or both");
  }
  if (study.threads < 1) throw ValidationError("threads must be at least 1");
  for (const auto& m : study.methods) {
    if (m.name.empty()) throw ValidationError("every method needs a report label");
  }
  for (const auto& b : study.budgets) {
    b.level1.validate();
    b.level2.validate();
    b.overall.validate();
  }

  SimReport report;
  report.config = cfg;
  for (const auto& m : study.methods) {
    for (const auto& b : study.budgets) {
      if (study.include_levels) {
        report.rows.push_back({m.name, "level1", budget_label(b.level1)});
        report.rows.push_back({m.name, "level2", budget_label(b.level2)});
        report.rows.push_back(
            {m.name, "combined", budget_label(b.level1) + "+" + budget_label(b.level2)});
      }
      if (study.include_overall) {
        report.rows.push_back({m.name, "overall", budget_label(b.overall)});
      }
    }
  }

  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(cfg.reps));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto run_one = [&](int rep) {
    RepOutcome& out = outcomes[static_cast<std::size_t>(rep)];
    try {
      std::uint64_t rep_seed = derive_seed(cfg.seed, "rep", static_cast<std::uint64_t>(rep));
      GeneratedDataset gen = generate_dataset(cfg, rep_seed);
      int truth1 = static_cast<int>(gen.truth.nonnull_level1.size());
      int truth2 = static_cast<int>(gen.truth.nonnull_level2.size());
      std::vector<int> overall_truth = gen.truth.nonnull_level1;
      for (int idx : gen.truth.nonnull_level2) {
        overall_truth.push_back(static_cast<int>(cfg.k_level1) + idx);
      }

      for (const auto& m : study.methods) {
        multilevel::SelectOptions opts;
        opts.method = m.kind;
        opts.runs = m.runs;
        opts.eta = m.eta;
        opts.penreg_spec = m.penreg_spec;
        opts.threads = 1;  // replication-level parallelism only

        if (study.include_levels) {
          std::vector<std::pair<filter::Budget, filter::Budget>> pairs;
          pairs.reserve(study.budgets.size());
          for (const auto& b : study.budgets) pairs.emplace_back(b.level1, b.level2);
          std::vector<multilevel::MultilevelSelection> picks = multilevel::select_multilevel_multi(
              gen.data, pairs, opts, derive_seed(rep_seed, "levels-" + m.name));
          for (const auto& pick : picks) {
            Score s1 = score(pick.level1_result.selected, gen.truth.nonnull_level1);
            Score s2 = score(pick.level2_result.selected, gen.truth.nonnull_level2);
            out.cells.push_back(s1);
            out.cells.push_back(s2);
            out.cells.push_back(combine_scores(s1, static_cast<int>(pick.level1_result.selected.size()),
                                               s2, static_cast<int>(pick.level2_result.selected.size()),
                                               truth1, truth2));
            if (study.include_overall) out.cells.emplace_back();  // placeholder, filled below
          }
        }
        if (study.include_overall) {
          std::vector<filter::Budget> overall_budgets;
          overall_budgets.reserve(study.budgets.size());
          for (const auto& b : study.budgets) overall_budgets.push_back(b.overall);
          std::vector<filter::SelectionResult> picks = multilevel::select_overall_multi(
              gen.data, overall_budgets, opts, derive_seed(rep_seed, "overall-" + m.name));
          if (study.include_levels) {
            // fill the placeholder slot after each budget case's level rows
            std::size_t method_base = out.cells.size() - 4 * picks.size();
            for (std::size_t bi = 0; bi < picks.size(); ++bi) {
              out.cells[method_base + 4 * bi + 3] = score(picks[bi].selected, overall_truth);
            }
          } else {
            for (const auto& pick : picks) {
              out.cells.push_back(score(pick.selected, overall_truth));
            }
          }
        }
      }
      out.ok = true;
    } catch (const std::exception& e) {
      out.ok = false;
      out.failure = "replication " + std::to_string(rep) + ": " + e.what();
      out.cells.clear();
    }
  };

  auto worker = [&] {
    for (;;) {
      int rep = next.fetch_add(1);
      if (rep >= cfg.reps) return;
      try {
        run_one(rep);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  int n_threads = std::min<int>(study.threads, cfg.reps);
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  for (int rep = 0; rep < cfg.reps; ++rep) {
    const RepOutcome& out = outcomes[static_cast<std::size_t>(rep)];
    if (!out.ok) {
      report.failures.push_back(out.failure);
      continue;
    }
    if (out.cells.size() != report.rows.size()) {
      throw NumericalError("internal error: replication produced a mismatched cell count");
    }
    for (std::size_t r = 0; r < report.rows.size(); ++r) {
      report.rows[r].fp_by_rep.push_back(out.cells[r].fp);
      report.rows[r].fdp_by_rep.push_back(out.cells[r].fdp);
      report.rows[r].tpr_by_rep.push_back(out.cells[r].tpr);
    }
  }
  for (auto& row : report.rows) {
    row.reps = static_cast<int>(row.fp_by_rep.size());
    if (row.reps == 0) continue;
    double inv = 1.0 / row.reps;
    row.pfer_hat = inv * std::accumulate(row.fp_by_rep.begin(), row.fp_by_rep.end(), 0.0);
    row.fdr_hat = inv * std::accumulate(row.fdp_by_rep.begin(), row.fdp_by_rep.end(), 0.0);
    row.tpr_hat = inv * std::accumulate(row.tpr_by_rep.begin(), row.tpr_by_rep.end(), 0.0);
  }
  return report;
}

}  // namespace mlknock::sim
