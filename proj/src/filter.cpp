#include "mlknock/filter.hpp"

#include "mlknock/rng.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace mlknock::filter {

namespace {

SelectionResult single_run_result(const WStatistics& w, double threshold,
                                  std::vector<int> selected) {
  SelectionResult out;
  out.w = w;
  out.threshold = threshold;
  out.runs = 1;
  out.selected = std::move(selected);
  out.frequencies = Vector::Zero(w.w.size());
  for (int j : out.selected) out.frequencies(j) = 1.0;
  return out;
}

std::vector<int> select_at(const Vector& w, double threshold) {
  std::vector<int> sel;
  for (Index j = 0; j < w.size(); ++j) {
    if (w(j) >= threshold) sel.push_back(static_cast<int>(j));
  }
  return sel;
}

}  // namespace

void Budget::validate() const {
  if (kind == BudgetKind::fdr) {
    if (!(value > 0.0 && value < 1.0)) {
      throw ValidationError("fdr budget must lie in (0,1)");
    }
  } else {
    if (!(value >= 1.0) || value != std::floor(value)) {
      throw ValidationError("pfer budget must be an integer >= 1");
    }
  }
}

WStatistics compute_w(const knockoff::KnockoffSet& ks, const Vector& y, const Vector& weights,
                      const penreg::FitSpec& spec, std::uint64_t seed) {
  const Index n = ks.original.rows();
  const Index p = ks.original.cols();
  if (ks.knockoff.rows() != n || ks.knockoff.cols() != p) {
    throw ValidationError("knockoff matrix shape does not match the original");
  }
  if (y.size() != n) throw ValidationError("response length does not match the knockoff set");

  // augmented design with a seeded column shuffle to break coordinate-order ties
  Rng rng(derive_seed(seed, "w-shuffle"));
  const std::vector<int> perm = rng.permutation(static_cast<int>(2 * p));
  DesignMatrix aug;
  aug.values.resize(n, 2 * p);
  aug.column_names.resize(static_cast<std::size_t>(2 * p));
  for (Index c = 0; c < 2 * p; ++c) {
    const Index source = perm[static_cast<std::size_t>(c)];
    if (source < p) {
      aug.values.col(c) = ks.original.values.col(source);
      aug.column_names[static_cast<std::size_t>(c)] =
          ks.original.column_names[static_cast<std::size_t>(source)];
    } else {
      aug.values.col(c) = ks.knockoff.values.col(source - p);
      aug.column_names[static_cast<std::size_t>(c)] =
          ks.knockoff.column_names[static_cast<std::size_t>(source - p)];
    }
  }

  penreg::FitSpec run_spec = spec;
  if (weights.size() != 0) run_spec.weights = weights;
  const auto fit = penreg::fit_cv(aug, y, run_spec, derive_seed(seed, "w-cv"));

  Vector beta_aug(2 * p);
  for (Index c = 0; c < 2 * p; ++c) {
    beta_aug(perm[static_cast<std::size_t>(c)]) = fit.coefficients(c);
  }

  WStatistics out;
  out.w = Vector(p);
  for (Index j = 0; j < p; ++j) {
    out.w(j) = std::abs(beta_aug(j)) - std::abs(beta_aug(p + j));
  }
  out.lambda_used = fit.lambda_selected;
  return out;
}

SelectionResult threshold_fdr(const WStatistics& w, double q) {
  if (!(q > 0.0 && q < 1.0)) throw ValidationError("fdr level must lie in (0,1)");
  std::vector<double> candidates;
  for (Index j = 0; j < w.w.size(); ++j) {
    if (w.w(j) != 0.0) candidates.push_back(std::abs(w.w(j)));
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  for (double t : candidates) {
    Index neg = 0, pos = 0;
    for (Index j = 0; j < w.w.size(); ++j) {
      if (w.w(j) <= -t) ++neg;
      if (w.w(j) >= t) ++pos;
    }
    const double ratio = (1.0 + static_cast<double>(neg)) / std::max<double>(1.0, static_cast<double>(pos));
    if (ratio <= q) {
      return single_run_result(w, t, select_at(w.w, t));
    }
  }
  return single_run_result(w, std::numeric_limits<double>::infinity(), {});
}

SelectionResult threshold_pfer(const WStatistics& w, int v) {
  if (v < 1) throw ValidationError("pfer budget must be at least 1");
  std::vector<double> neg_magnitudes;
  for (Index j = 0; j < w.w.size(); ++j) {
    if (w.w(j) < 0.0) neg_magnitudes.push_back(-w.w(j));
  }
  std::sort(neg_magnitudes.begin(), neg_magnitudes.end(), std::greater<>());

  double threshold;
  if (static_cast<int>(neg_magnitudes.size()) >= v) {
    threshold = neg_magnitudes[static_cast<std::size_t>(v - 1)];
  } else {
    threshold = std::numeric_limits<double>::denorm_min();  // selects every strictly positive w
  }
  return single_run_result(w, threshold, select_at(w.w, threshold));
}

SelectionResult apply_budget(const WStatistics& w, const Budget& budget) {
  budget.validate();
  if (budget.kind == BudgetKind::fdr) return threshold_fdr(w, budget.value);
  return threshold_pfer(w, static_cast<int>(budget.value));
}

SelectionResult derandomized_select(const DesignMatrix& X, const Vector& y, const Vector& weights,
                                    const Budget& budget, const DerandomizeOptions& options,
                                    std::uint64_t seed) {
  auto results = derandomized_select_multi(X, y, weights, {budget}, options, seed);
  return std::move(results.front());
}

std::vector<SelectionResult> derandomized_select_multi(const DesignMatrix& X, const Vector& y,
                                                       const Vector& weights,
                                                       const std::vector<Budget>& budgets,
                                                       const DerandomizeOptions& options,
                                                       std::uint64_t seed) {
  if (options.runs < 1) throw ValidationError("derandomization needs at least 1 run");
  if (!(options.eta > 0.0 && options.eta <= 1.0)) {
    throw ValidationError("aggregation threshold eta must lie in (0,1]");
  }
  if (budgets.empty()) throw ValidationError("no budgets given");
  for (const auto& b : budgets) b.validate();

  const Index p = X.cols();
  const auto n_budgets = budgets.size();
  const int runs = options.runs;

  knockoff::GaussianKnockoffModel model;
  if (options.method == knockoff::Method::gaussian) {
    model = knockoff::estimate_gaussian_model(X);
  }

  // per-run W statistics and per-(budget, run) selections, slot-addressed so
  // parallel execution reproduces the serial result exactly
  std::vector<Vector> run_w(static_cast<std::size_t>(runs));
  std::vector<double> run_lambda(static_cast<std::size_t>(runs));
  std::vector<std::vector<std::vector<int>>> run_selected(
      n_budgets, std::vector<std::vector<int>>(static_cast<std::size_t>(runs)));
  std::vector<std::vector<double>> run_threshold(
      n_budgets, std::vector<double>(static_cast<std::size_t>(runs)));

  auto do_run = [&](int m) {
    const std::uint64_t run_seed = derive_seed(seed, "derandom-run", static_cast<std::uint64_t>(m));
    knockoff::KnockoffSet ks = options.method == knockoff::Method::gaussian
                                   ? knockoff::sample_gaussian_knockoffs(X, model, run_seed)
                                   : knockoff::sample_sequential_knockoffs(X, options.seq_spec, run_seed);
    const WStatistics w = compute_w(ks, y, weights, options.penreg_spec, run_seed);
    run_w[static_cast<std::size_t>(m)] = w.w;
    run_lambda[static_cast<std::size_t>(m)] = w.lambda_used;
    for (std::size_t b = 0; b < n_budgets; ++b) {
      SelectionResult r = apply_budget(w, budgets[b]);
      run_selected[b][static_cast<std::size_t>(m)] = std::move(r.selected);
      run_threshold[b][static_cast<std::size_t>(m)] = r.threshold;
    }
  };

  const int workers = std::max(1, std::min(options.threads, runs));
  if (workers == 1) {
    for (int m = 0; m < runs; ++m) do_run(m);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (int m = next.fetch_add(1); m < runs; m = next.fetch_add(1)) {
          try {
            do_run(m);
          } catch (...) {
            std::lock_guard<std::mutex> lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::vector<SelectionResult> out;
  out.reserve(n_budgets);
  for (std::size_t b = 0; b < n_budgets; ++b) {
    SelectionResult agg;
    agg.runs = runs;
    agg.frequencies = Vector::Zero(p);
    for (int m = 0; m < runs; ++m) {
      for (int j : run_selected[b][static_cast<std::size_t>(m)]) agg.frequencies(j) += 1.0;
    }
    agg.frequencies /= static_cast<double>(runs);
    for (Index j = 0; j < p; ++j) {
      if (agg.frequencies(j) + 1e-12 >= options.eta) agg.selected.push_back(static_cast<int>(j));
    }

    agg.w.w = Vector::Zero(p);
    double lambda_sum = 0.0;
    for (int m = 0; m < runs; ++m) {
      agg.w.w += run_w[static_cast<std::size_t>(m)];
      lambda_sum += run_lambda[static_cast<std::size_t>(m)];
    }
    agg.w.w /= static_cast<double>(runs);
    agg.w.lambda_used = lambda_sum / static_cast<double>(runs);

    double thr_sum = 0.0;
    int thr_count = 0;
    for (double t : run_threshold[b]) {
      if (std::isfinite(t)) {
        thr_sum += t;
        ++thr_count;
      }
    }
    agg.threshold = thr_count > 0 ? thr_sum / thr_count : std::numeric_limits<double>::infinity();
    out.push_back(std::move(agg));
  }
  return out;
}

}  // namespace mlknock::filter
