#include "mlknock/penreg.hpp"

#include "mlknock/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

namespace mlknock::penreg {

namespace {

constexpr double kProbClamp = 1e-5;
constexpr double kAlphaFloor = 0.05;  // guards lambda_max at near-ridge alpha
constexpr int kMaxIrls = 25;
constexpr double kTolFactor = 1e-7;   // of sd(y), per-pass coefficient change

double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

double clamp_prob(double p) { return std::min(1.0 - kProbClamp, std::max(kProbClamp, p)); }

double sigmoid(double eta) { return 1.0 / (1.0 + std::exp(-eta)); }

// Input standardized once per solve: columns weighted-centered (and scaled to
// unit weighted variance when requested), weights normalized to sum 1.
struct Problem {
  Matrix xs;   // n x p working matrix
  Matrix xsw;  // v-scaled rows of xs, for gram columns
  Vector xm;   // weighted column means
  Vector xsd;  // scale divisors applied (1 for zero-variance or no standardize)
  Vector v;    // normalized weights
  std::vector<char> usable;
  std::vector<int> zero_variance;
  double y_mean = 0.0;
  double y_sd = 1.0;
  double tol = 0.0;
};

Problem build_problem(const Matrix& x, const Vector& y, const Vector& weights, bool standardize) {
  const Index p = x.cols();
  Problem pb;
  pb.v = weights / weights.sum();
  pb.xm = x.transpose() * pb.v;
  pb.xs = x;
  pb.xsd = Vector::Ones(p);
  pb.usable.assign(static_cast<std::size_t>(p), 1);
  for (Index j = 0; j < p; ++j) {
    pb.xs.col(j).array() -= pb.xm(j);
    const double var = (pb.v.array() * pb.xs.col(j).array().square()).sum();
    if (var <= 0.0) {
      pb.usable[static_cast<std::size_t>(j)] = 0;
      pb.zero_variance.push_back(static_cast<int>(j));
      pb.xs.col(j).setZero();
      continue;
    }
    if (standardize) {
      pb.xsd(j) = std::sqrt(var);
      pb.xs.col(j) /= pb.xsd(j);
    }
  }
  pb.y_mean = y.dot(pb.v);
  if (y.size() > 0 && y.maxCoeff() == y.minCoeff()) pb.y_mean = y(0);  // exact for constant y
  pb.y_sd = std::sqrt((pb.v.array() * (y.array() - pb.y_mean).square()).sum());
  pb.tol = kTolFactor * (pb.y_sd > 0 ? pb.y_sd : 1.0);
  pb.xsw = pb.v.asDiagonal() * pb.xs;
  return pb;
}

std::vector<double> lambda_grid(double lambda_max, int n_lambda, double min_ratio) {
  if (!(lambda_max > 0.0) || !std::isfinite(lambda_max)) lambda_max = 1.0;
  std::vector<double> lams(static_cast<std::size_t>(n_lambda));
  const double log_max = std::log(lambda_max);
  const double log_min = std::log(lambda_max * min_ratio);
  for (int i = 0; i < n_lambda; ++i) {
    const double f = static_cast<double>(i) / static_cast<double>(n_lambda - 1);
    lams[static_cast<std::size_t>(i)] = std::exp(log_max + f * (log_min - log_max));
  }
  lams[0] = lambda_max;  // keep the all-zero endpoint exact
  return lams;
}

// Coordinate descent with lazily cached gram columns; gaussian family.
class GaussianSolver {
 public:
  GaussianSolver(const Problem& pb, const Vector& y, double alpha)
      : pb_(pb), alpha_(alpha), p_(pb.xs.cols()) {
    yc_ = (y.array() - pb.y_mean).matrix();
    cy_ = pb_.xsw.transpose() * yc_;
    diag_ = Vector::Zero(p_);
    for (Index j = 0; j < p_; ++j) {
      if (pb_.usable[static_cast<std::size_t>(j)]) {
        diag_(j) = pb_.xsw.col(j).dot(pb_.xs.col(j));
      }
    }
    beta_ = Vector::Zero(p_);
    gdot_ = Vector::Zero(p_);
    gram_ = Matrix::Zero(p_, p_);
    cached_.assign(static_cast<std::size_t>(p_), 0);
    in_active_.assign(static_cast<std::size_t>(p_), 0);
  }

  double lambda_max() const {
    double m = 0.0;
    for (Index j = 0; j < p_; ++j) {
      if (pb_.usable[static_cast<std::size_t>(j)]) m = std::max(m, std::abs(cy_(j)));
    }
    return m / std::max(alpha_, kAlphaFloor);
  }

  void solve(double lam, bool tight) {
    const double tol = pb_.tol;
    for (int round = 0; round < 10000; ++round) {
      if (sweep_all(lam) < tol) break;
      for (int pass = 0; pass < 50000 && sweep_active(lam) >= tol; ++pass) {
      }
    }
    // polish: extra sweeps are nearly free once the gram columns are cached
    refresh_gdot();
    const double polish_tol = tol * (tight ? 1e-4 : 1e-3);
    for (int round = 0; round < 200; ++round) {
      for (int pass = 0; pass < 50000 && sweep_active(lam) >= polish_tol; ++pass) {
      }
      if (sweep_all(lam) < polish_tol) break;
    }
  }

  const Vector& beta() const { return beta_; }
  const Vector& diag() const { return diag_; }

 private:
  void ensure_cached(Index j) {
    if (cached_[static_cast<std::size_t>(j)]) return;
    gram_.col(j).noalias() = pb_.xsw.transpose() * pb_.xs.col(j);
    cached_[static_cast<std::size_t>(j)] = 1;
  }

  void refresh_gdot() {
    gdot_.setZero();
    for (Index j : active_) {
      if (beta_(j) != 0.0) gdot_.noalias() += gram_.col(j) * beta_(j);
    }
  }

  double update(Index j, double lam) {
    const double dj = diag_(j);
    const double num = cy_(j) - gdot_(j) + dj * beta_(j);
    const double bnew = soft_threshold(num, lam * alpha_) / (dj + lam * (1.0 - alpha_));
    const double delta = bnew - beta_(j);
    if (delta != 0.0) {
      ensure_cached(j);
      if (!in_active_[static_cast<std::size_t>(j)]) {
        in_active_[static_cast<std::size_t>(j)] = 1;
        active_.push_back(j);
      }
      gdot_.noalias() += gram_.col(j) * delta;
      beta_(j) = bnew;
    }
    return std::abs(delta) * std::sqrt(dj);
  }

  double sweep_all(double lam) {
    double maxd = 0.0;
    for (Index j = 0; j < p_; ++j) {
      if (!pb_.usable[static_cast<std::size_t>(j)]) continue;
      maxd = std::max(maxd, update(j, lam));
    }
    return maxd;
  }

  double sweep_active(double lam) {
    double maxd = 0.0;
    for (Index j : active_) {
      maxd = std::max(maxd, update(j, lam));
    }
    return maxd;
  }

  const Problem& pb_;
  double alpha_;
  Index p_;
  Vector yc_, cy_, diag_, beta_, gdot_;
  Matrix gram_;
  std::vector<char> cached_, in_active_;
  std::vector<Index> active_;
};

// IRLS with residual-update coordinate descent; binomial family.
class BinomialSolver {
 public:
  BinomialSolver(const Problem& pb, const Vector& y, double alpha)
      : pb_(pb), y_(y), alpha_(alpha), p_(pb.xs.cols()) {
    const double p0 = clamp_prob(y.dot(pb_.v));
    beta0_ = std::log(p0 / (1.0 - p0));
    beta_ = Vector::Zero(p_);
    eta_ = Vector::Constant(y.size(), beta0_);
  }

  double lambda_max() const {
    const double p0 = clamp_prob(y_.dot(pb_.v));
    double m = 0.0;
    for (Index j = 0; j < p_; ++j) {
      if (!pb_.usable[static_cast<std::size_t>(j)]) continue;
      const double g = pb_.xsw.col(j).dot((y_.array() - p0).matrix());
      m = std::max(m, std::abs(g));
    }
    return m / std::max(alpha_, kAlphaFloor);
  }

  void solve(double lam, int lambda_index, bool tight) {
    const double tol = pb_.tol;
    const Index n = y_.size();
    Vector prob(n), om(n), r(n), vdiag(p_);
    const int max_outer = kMaxIrls * (tight ? 2 : 1);
    for (int outer = 0; outer < max_outer; ++outer) {
      for (Index i = 0; i < n; ++i) {
        const double p = clamp_prob(sigmoid(eta_(i)));
        prob(i) = p;
        om(i) = pb_.v(i) * p * (1.0 - p);
        r(i) = (y_(i) - p) / (p * (1.0 - p));
      }
      const double sw = om.sum();
      if (!(sw > 0.0) || !om.allFinite()) {
        throw NumericalError("binomial IRLS diverged at lambda index " + std::to_string(lambda_index));
      }
      for (Index j = 0; j < p_; ++j) {
        vdiag(j) = pb_.usable[static_cast<std::size_t>(j)]
                       ? (om.array() * pb_.xs.col(j).array().square()).sum()
                       : 0.0;
      }
      double outer_change = 0.0;
      const double inner_tol = tol * (tight ? 1e-2 : 1.0);
      for (int pass = 0; pass < 1000; ++pass) {
        double maxd = 0.0;
        const double d0 = (om.array() * r.array()).sum() / sw;
        if (d0 != 0.0) {
          beta0_ += d0;
          r.array() -= d0;
          maxd = std::max(maxd, std::abs(d0));
        }
        for (Index j = 0; j < p_; ++j) {
          if (!pb_.usable[static_cast<std::size_t>(j)]) continue;
          const double num = (om.array() * r.array() * pb_.xs.col(j).array()).sum() + vdiag(j) * beta_(j);
          const double bnew = soft_threshold(num, lam * alpha_) / (vdiag(j) + lam * (1.0 - alpha_));
          const double delta = bnew - beta_(j);
          if (delta != 0.0) {
            r.noalias() -= delta * pb_.xs.col(j);
            beta_(j) = bnew;
            maxd = std::max(maxd, std::abs(delta));
          }
        }
        outer_change = std::max(outer_change, maxd);
        if (maxd < inner_tol) break;
      }
      // eta for the next reweighting: working response minus current residual
      for (Index i = 0; i < n; ++i) {
        eta_(i) = eta_(i) + (y_(i) - prob(i)) / (prob(i) * (1.0 - prob(i))) - r(i);
      }
      if (!eta_.allFinite() || !beta_.allFinite()) {
        throw NumericalError("binomial IRLS diverged at lambda index " + std::to_string(lambda_index));
      }
      if (outer_change < tol) break;
    }
  }

  const Vector& beta() const { return beta_; }
  double beta0() const { return beta0_; }

 private:
  const Problem& pb_;
  const Vector& y_;
  double alpha_;
  Index p_;
  double beta0_;
  Vector beta_, eta_;
};

struct PathFit {
  std::vector<double> lambdas;
  Matrix beta;   // p x L, original scale
  Vector b0;     // L
  std::vector<int> zero_variance;
};

// Solve the whole path on (x, y, w). When `grid` is given it is used as-is
// (CV folds share the full-data grid); otherwise the grid is computed from
// lambda_max at the null model.
PathFit run_path(const Matrix& x, const Vector& y, const Vector& w, const FitSpec& spec,
                 const std::vector<double>* grid, bool tight_last) {
  Problem pb = build_problem(x, y, w, spec.standardize);
  const Index p = x.cols();
  PathFit out;
  out.zero_variance = pb.zero_variance;

  if (spec.family == Family::gaussian) {
    GaussianSolver solver(pb, y, spec.alpha);
    out.lambdas = grid ? *grid : lambda_grid(solver.lambda_max(), spec.n_lambda, spec.lambda_min_ratio);
    const auto L = static_cast<Index>(out.lambdas.size());
    out.beta = Matrix::Zero(p, L);
    out.b0 = Vector::Zero(L);
    for (Index l = 0; l < L; ++l) {
      const bool tight = tight_last && l + 1 == L;
      solver.solve(out.lambdas[static_cast<std::size_t>(l)], tight);
      for (Index j = 0; j < p; ++j) {
        out.beta(j, l) = solver.beta()(j) / pb.xsd(j);
      }
      out.b0(l) = pb.y_mean - out.beta.col(l).dot(pb.xm);
    }
  } else {
    BinomialSolver solver(pb, y, spec.alpha);
    out.lambdas = grid ? *grid : lambda_grid(solver.lambda_max(), spec.n_lambda, spec.lambda_min_ratio);
    const auto L = static_cast<Index>(out.lambdas.size());
    out.beta = Matrix::Zero(p, L);
    out.b0 = Vector::Zero(L);
    for (Index l = 0; l < L; ++l) {
      const bool tight = tight_last && l + 1 == L;
      solver.solve(out.lambdas[static_cast<std::size_t>(l)], static_cast<int>(l), tight);
      double b0 = solver.beta0();
      for (Index j = 0; j < p; ++j) {
        out.beta(j, l) = solver.beta()(j) / pb.xsd(j);
        b0 -= out.beta(j, l) * pb.xm(j);
      }
      out.b0(l) = b0;
    }
  }
  return out;
}

Vector resolve_weights(const FitSpec& spec, Index n) {
  if (spec.weights.size() == 0) return Vector::Ones(n);
  return spec.weights;
}

void check_inputs(const DesignMatrix& X, const Vector& y, const FitSpec& spec) {
  X.validate();
  spec.validate(X.rows());
  if (y.size() != X.rows()) {
    throw ValidationError("response length " + std::to_string(y.size()) + " does not match rows " +
                          std::to_string(X.rows()));
  }
  if (!y.allFinite()) throw ValidationError("non-finite response value");
  if (spec.family == Family::binomial) {
    for (Index i = 0; i < y.size(); ++i) {
      if (y(i) != 0.0 && y(i) != 1.0) {
        throw ValidationError("binomial response must be 0/1, found " + std::to_string(y(i)) +
                              " at row " + std::to_string(i));
      }
    }
  }
}

FitResult assemble(const FitSpec& spec, PathFit&& path, int selected) {
  FitResult fit;
  fit.family = spec.family;
  fit.lambda_path = std::move(path.lambdas);
  fit.path_coefficients = std::move(path.beta);
  fit.path_intercepts = std::move(path.b0);
  fit.zero_variance_columns = std::move(path.zero_variance);
  fit.selected_index = selected;
  fit.lambda_selected = fit.lambda_path[static_cast<std::size_t>(selected)];
  fit.coefficients = fit.path_coefficients.col(selected);
  fit.intercept = fit.path_intercepts(selected);
  return fit;
}

double fold_error(const Matrix& x, const Vector& y, const Vector& w, const Matrix& beta,
                  const Vector& b0, Index l, Family family) {
  Vector eta = x * beta.col(l);
  eta.array() += b0(l);
  const double sw = w.sum();
  if (family == Family::gaussian) {
    return (w.array() * (y - eta).array().square()).sum() / sw;
  }
  double dev = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double p = clamp_prob(sigmoid(eta(i)));
    dev += w(i) * (y(i) * std::log(p) + (1.0 - y(i)) * std::log(1.0 - p));
  }
  return -2.0 * dev / sw;
}

}  // namespace

void FitSpec::validate(Index n_rows) const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must be in [0,1]");
  if (n_lambda < 2) throw ValidationError("n_lambda must be at least 2");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ValidationError("lambda_min_ratio must be in (0,1)");
  }
  if (cv_folds < 2) throw ValidationError("cv_folds must be at least 2");
  if (weights.size() != 0) {
    if (weights.size() != n_rows) {
      throw ValidationError("weights length does not match row count");
    }
    if (!weights.allFinite()) throw ValidationError("non-finite weight");
    if ((weights.array() < 0.0).any()) throw ValidationError("negative weight");
    if (!(weights.sum() > 0.0)) throw ValidationError("weights sum to zero");
  }
}

FitResult fit_path(const DesignMatrix& X, const Vector& y, const FitSpec& spec) {
  check_inputs(X, y, spec);
  const Vector w = resolve_weights(spec, X.rows());
  PathFit path = run_path(X.values, y, w, spec, nullptr, true);
  const int last = static_cast<int>(path.lambdas.size()) - 1;
  return assemble(spec, std::move(path), last);
}

FitResult fit_cv(const DesignMatrix& X, const Vector& y, const FitSpec& spec, std::uint64_t seed,
                 const std::vector<int>* fold_ids) {
  check_inputs(X, y, spec);
  const Index n = X.rows();
  const int k = spec.cv_folds;
  if (n < k) throw ValidationError("cv_folds exceeds the number of rows");
  const Vector w = resolve_weights(spec, n);

  std::vector<int> folds;
  if (fold_ids != nullptr) {
    if (static_cast<Index>(fold_ids->size()) != n) throw ValidationError("fold_ids length mismatch");
    folds = *fold_ids;
    for (int f : folds) {
      if (f < 0 || f >= k) throw ValidationError("fold id out of range");
    }
  } else {
    Rng rng(derive_seed(seed, "cv-folds"));
    const std::vector<int> perm = rng.permutation(static_cast<int>(n));
    folds.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) {
      folds[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] = static_cast<int>(i) % k;
    }
  }

  PathFit full = run_path(X.values, y, w, spec, nullptr, false);
  const auto L = static_cast<Index>(full.lambdas.size());

  Matrix errors(k, L);
  for (int f = 0; f < k; ++f) {
    std::vector<Index> train, test;
    for (Index i = 0; i < n; ++i) {
      (folds[static_cast<std::size_t>(i)] == f ? test : train).push_back(i);
    }
    if (test.empty() || train.empty()) throw ValidationError("empty cross-validation fold");
    Matrix xtr(train.size(), X.cols()), xte(test.size(), X.cols());
    Vector ytr(train.size()), yte(test.size()), wtr(train.size()), wte(test.size());
    for (std::size_t i = 0; i < train.size(); ++i) {
      xtr.row(static_cast<Index>(i)) = X.values.row(train[i]);
      ytr(static_cast<Index>(i)) = y(train[i]);
      wtr(static_cast<Index>(i)) = w(train[i]);
    }
    for (std::size_t i = 0; i < test.size(); ++i) {
      xte.row(static_cast<Index>(i)) = X.values.row(test[i]);
      yte(static_cast<Index>(i)) = y(test[i]);
      wte(static_cast<Index>(i)) = w(test[i]);
    }
    if (!(wte.sum() > 0.0) || !(wtr.sum() > 0.0)) {
      throw ValidationError("cross-validation fold " + std::to_string(f) + " has zero total weight");
    }
    PathFit ft = run_path(xtr, ytr, wtr, spec, &full.lambdas, false);
    for (Index l = 0; l < L; ++l) {
      errors(f, l) = fold_error(xte, yte, wte, ft.beta, ft.b0, l, spec.family);
    }
  }

  std::vector<double> cv_mean(static_cast<std::size_t>(L)), cv_se(static_cast<std::size_t>(L));
  for (Index l = 0; l < L; ++l) {
    const double m = errors.col(l).mean();
    double ss = 0.0;
    for (int f = 0; f < k; ++f) ss += (errors(f, l) - m) * (errors(f, l) - m);
    cv_mean[static_cast<std::size_t>(l)] = m;
    cv_se[static_cast<std::size_t>(l)] = std::sqrt(ss / (static_cast<double>(k) * (k - 1)));
  }

  Index min_idx = 0;
  for (Index l = 1; l < L; ++l) {
    if (cv_mean[static_cast<std::size_t>(l)] < cv_mean[static_cast<std::size_t>(min_idx)]) min_idx = l;
  }
  Index sel = min_idx;
  if (spec.lambda_rule == LambdaRule::one_se) {
    const double cut =
        cv_mean[static_cast<std::size_t>(min_idx)] + cv_se[static_cast<std::size_t>(min_idx)];
    for (Index l = 0; l <= min_idx; ++l) {
      if (cv_mean[static_cast<std::size_t>(l)] <= cut) {
        sel = l;
        break;
      }
    }
  }

  // final refit on all data, warm path truncated at the selected lambda
  std::vector<double> head(full.lambdas.begin(), full.lambdas.begin() + sel + 1);
  PathFit refit = run_path(X.values, y, w, spec, &head, true);
  full.beta.leftCols(sel + 1) = refit.beta;
  full.b0.head(sel + 1) = refit.b0;

  FitResult fit = assemble(spec, std::move(full), static_cast<int>(sel));
  fit.cv_mean_error = std::move(cv_mean);
  fit.cv_se = std::move(cv_se);
  return fit;
}

std::vector<int> cluster_folds(const std::vector<long>& cluster_ids, int k, std::uint64_t seed) {
  if (k < 2) throw ValidationError("cluster_folds requires at least 2 folds");
  std::unordered_map<long, int> position;  // cluster label -> first-appearance order
  std::vector<int> cluster_pos(cluster_ids.size());
  for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
    auto [it, inserted] = position.try_emplace(cluster_ids[i], static_cast<int>(position.size()));
    cluster_pos[i] = it->second;
    (void)inserted;
  }
  const auto n_clusters = static_cast<int>(position.size());
  if (n_clusters < k) throw ValidationError("cv_folds exceeds the number of clusters");
  Rng rng(derive_seed(seed, "cluster-folds"));
  const std::vector<int> perm = rng.permutation(n_clusters);
  std::vector<int> fold_of_cluster(static_cast<std::size_t>(n_clusters));
  for (int c = 0; c < n_clusters; ++c) {
    fold_of_cluster[static_cast<std::size_t>(perm[static_cast<std::size_t>(c)])] = c % k;
  }
  std::vector<int> out(cluster_ids.size());
  for (std::size_t i = 0; i < cluster_ids.size(); ++i) {
    out[i] = fold_of_cluster[static_cast<std::size_t>(cluster_pos[i])];
  }
  return out;
}

Vector predict(const DesignMatrix& X, const FitResult& fit) {
  if (X.cols() != fit.coefficients.size()) {
    throw ValidationError("predict: column count does not match fitted coefficients");
  }
  Vector eta = X.values * fit.coefficients;
  eta.array() += fit.intercept;
  return eta;
}

Vector predict_response(const DesignMatrix& X, const FitResult& fit) {
  Vector eta = predict(X, fit);
  if (fit.family == Family::binomial) {
    for (Index i = 0; i < eta.size(); ++i) eta(i) = sigmoid(eta(i));
  }
  return eta;
}

double residual_sd(const DesignMatrix& X, const Vector& y, const FitResult& fit) {
  if (fit.family != Family::gaussian) {
    throw ValidationError("residual_sd requires a gaussian fit");
  }
  const Vector r = y - predict(X, fit);
  const double rss = r.squaredNorm();
  Index df = 1;
  for (Index j = 0; j < fit.coefficients.size(); ++j) {
    if (fit.coefficients(j) != 0.0) ++df;
  }
  df = std::min(df, X.rows() - 1);
  const double denom = static_cast<double>(X.rows() - df);
  return std::sqrt(rss / std::max(denom, 1.0));
}

double kkt_violation(const DesignMatrix& X, const Vector& y, const FitSpec& spec,
                     const FitResult& fit) {
  const Vector w = resolve_weights(spec, X.rows());
  Problem pb = build_problem(X.values, y, w, spec.standardize);
  const Index p = X.cols();
  const double lam = fit.lambda_selected;

  Vector beta_std(p);
  for (Index j = 0; j < p; ++j) beta_std(j) = fit.coefficients(j) * pb.xsd(j);

  Vector grad(p);
  if (spec.family == Family::gaussian) {
    const Vector yc = (y.array() - pb.y_mean).matrix();
    const Vector resid = yc - pb.xs * beta_std;
    grad = -(pb.xsw.transpose() * resid);
  } else {
    const Vector eta = predict(X, fit);
    Vector d(y.size());
    for (Index i = 0; i < y.size(); ++i) d(i) = sigmoid(eta(i)) - y(i);
    grad = pb.xsw.transpose() * d;
  }
  grad += lam * (1.0 - spec.alpha) * beta_std;

  double worst = 0.0;
  for (Index j = 0; j < p; ++j) {
    if (!pb.usable[static_cast<std::size_t>(j)]) continue;
    if (beta_std(j) == 0.0) {
      worst = std::max(worst, std::abs(grad(j)) - lam * spec.alpha);
    } else {
      worst = std::max(worst, std::abs(grad(j) + lam * spec.alpha * (beta_std(j) > 0 ? 1.0 : -1.0)));
    }
  }
  return worst;
}

}  // namespace mlknock::penreg
