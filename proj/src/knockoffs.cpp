#include "mlknock/knockoffs.hpp"

#include "mlknock/rng.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <string>

namespace mlknock::knockoff {

namespace {

constexpr double kPsdSlack = 1e-10;

bool is_positive_definite(const Matrix& m) {
  if ((m.diagonal().array() <= 0.0).any()) return false;
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

double min_eigenvalue(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// Symmetric square root via eigendecomposition; tolerates the PSD boundary
// (s = 0 gives a zero conditional covariance).
Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  const double scale = std::max(1.0, m.diagonal().cwiseAbs().maxCoeff());
  Vector ev = es.eigenvalues();
  for (Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < -1e-8 * scale) {
      throw NumericalError("conditional knockoff covariance is not positive semidefinite");
    }
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

std::vector<std::string> knockoff_names(const std::vector<std::string>& names) {
  std::vector<std::string> out;
  out.reserve(names.size());
  for (const auto& n : names) out.push_back(n + ".ko");
  return out;
}

}  // namespace

void GaussianKnockoffModel::validate() const {
  const Index p = mu.size();
  if (sigma.rows() != p || sigma.cols() != p || s.size() != p) {
    throw ValidationError("knockoff model dimensions are inconsistent");
  }
  if (!sigma.isApprox(sigma.transpose(), 1e-10)) {
    throw ValidationError("knockoff model covariance is not symmetric");
  }
  if (!is_positive_definite(sigma)) {
    throw ValidationError("knockoff model covariance is not positive definite");
  }
  if ((s.array() < 0.0).any()) {
    throw ValidationError("knockoff diagonal has a negative entry");
  }
  const Matrix cond = conditional_covariance(*this);
  const double scale = std::max(1.0, sigma.diagonal().maxCoeff());
  if (min_eigenvalue(cond) < -1e-8 * scale) {
    throw ValidationError("knockoff diagonal violates the feasibility constraint");
  }
}

std::vector<FeatureKind> detect_feature_kinds(const DesignMatrix& X) {
  std::vector<FeatureKind> kinds(static_cast<std::size_t>(X.cols()), FeatureKind::continuous);
  for (Index j = 0; j < X.cols(); ++j) {
    bool binary = true;
    for (Index i = 0; i < X.rows(); ++i) {
      const double v = X.values(i, j);
      if (v != 0.0 && v != 1.0) {
        binary = false;
        break;
      }
    }
    if (binary) kinds[static_cast<std::size_t>(j)] = FeatureKind::binary;
  }
  return kinds;
}

Vector equicorrelated_s(const Matrix& sigma) {
  const Vector d = sigma.diagonal();
  const Vector dinv = d.cwiseSqrt().cwiseInverse();
  const Matrix r = dinv.asDiagonal() * sigma * dinv.asDiagonal();
  const double lam_min = min_eigenvalue(r);
  const double factor = std::min(2.0 * lam_min, 1.0);
  return factor * d;
}

Matrix conditional_covariance(const GaussianKnockoffModel& model) {
  Eigen::LLT<Matrix> llt(model.sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance factorization failed");
  }
  const Matrix sinv_d = llt.solve(Matrix(model.s.asDiagonal()));
  Matrix cond = 2.0 * Matrix(model.s.asDiagonal()) - model.s.asDiagonal() * sinv_d;
  return (cond + cond.transpose()) / 2.0;
}

GaussianKnockoffModel estimate_gaussian_model(const DesignMatrix& X) {
  X.validate();
  const Index n = X.rows();
  const Index p = X.cols();
  if (n < 3) throw ValidationError("gaussian knockoff estimation needs at least 3 rows");
  if (n <= p) {
    std::cerr << "warning: estimating a " << p << "-feature knockoff model from only " << n
              << " rows\n";
  }

  GaussianKnockoffModel model;
  model.mu = X.values.colwise().mean();
  Matrix centered = X.values.rowwise() - model.mu.transpose();
  Matrix sample_cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  sample_cov = (sample_cov + sample_cov.transpose()) / 2.0;

  if ((sample_cov.diagonal().array() <= 0.0).any()) {
    throw NumericalError("covariance has a zero-variance feature; cannot build gaussian knockoffs");
  }

  // shrink toward the diagonal just enough to restore positive definiteness
  const Matrix diag_part = Matrix(sample_cov.diagonal().asDiagonal());
  bool repaired = false;
  for (double delta : {0.0, 1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
    Matrix candidate = (1.0 - delta) * sample_cov + delta * diag_part;
    if (is_positive_definite(candidate)) {
      model.sigma = std::move(candidate);
      repaired = true;
      break;
    }
  }
  if (!repaired) throw NumericalError("covariance is not repairable by diagonal shrinkage");

  model.s = equicorrelated_s(model.sigma);

  // scale s down if numerical error pushed the conditional covariance outside PSD
  const double scale = std::max(1.0, model.sigma.diagonal().maxCoeff());
  auto feasible = [&](double c) {
    GaussianKnockoffModel trial = model;
    trial.s *= c;
    return min_eigenvalue(conditional_covariance(trial)) >= -kPsdSlack * scale;
  };
  if (!feasible(1.0)) {
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 30; ++it) {
      const double mid = (lo + hi) / 2.0;
      (feasible(mid) ? lo : hi) = mid;
    }
    model.s *= lo;
  }
  return model;
}

KnockoffSet sample_gaussian_knockoffs(const DesignMatrix& X, const GaussianKnockoffModel& model,
                                      std::uint64_t seed) {
  X.validate();
  const Index n = X.rows();
  const Index p = X.cols();
  if (model.mu.size() != p) {
    throw ValidationError("knockoff model dimension does not match the design matrix");
  }

  Eigen::LLT<Matrix> llt(model.sigma);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("covariance factorization failed");
  }
  // conditional mean: mu + (x - mu)(I - sigma^{-1} D)
  const Matrix sinv_d = llt.solve(Matrix(model.s.asDiagonal()));
  const Matrix mean_map = Matrix::Identity(p, p) - sinv_d;
  const Matrix root = psd_sqrt(conditional_covariance(model));

  Rng rng(derive_seed(seed, "gaussian-knockoffs"));
  Matrix ko(n, p);
  Vector z(p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) z(j) = rng.normal();
    const Vector centered = X.values.row(i).transpose() - model.mu;
    ko.row(i) = (model.mu + mean_map.transpose() * centered + root * z).transpose();
  }

  KnockoffSet out;
  out.original = X;
  out.knockoff.values = std::move(ko);
  out.knockoff.column_names = knockoff_names(X.column_names);
  out.method = Method::gaussian;
  out.seed = seed;
  return out;
}

std::vector<std::vector<int>> estimate_neighborhoods(const DesignMatrix& X,
                                                     const penreg::FitSpec& spec,
                                                     std::uint64_t seed) {
  X.validate();
  const Index p = X.cols();
  if (p < 2) throw ValidationError("neighborhood estimation needs at least 2 features");

  std::vector<std::vector<int>> selected(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    Matrix rest(X.rows(), p - 1);
    std::vector<Index> col_of;
    col_of.reserve(static_cast<std::size_t>(p - 1));
    Index c = 0;
    for (Index k = 0; k < p; ++k) {
      if (k == j) continue;
      rest.col(c++) = X.values.col(k);
      col_of.push_back(k);
    }
    auto fit = penreg::fit_cv(DesignMatrix::from_matrix(std::move(rest)), X.values.col(j), spec,
                              derive_seed(seed, "neighborhood", static_cast<std::uint64_t>(j)));
    for (Index k = 0; k < fit.coefficients.size(); ++k) {
      if (fit.coefficients(k) != 0.0) {
        selected[static_cast<std::size_t>(j)].push_back(static_cast<int>(col_of[static_cast<std::size_t>(k)]));
      }
    }
  }

  std::vector<std::vector<int>> adjacency(static_cast<std::size_t>(p));
  for (Index j = 0; j < p; ++j) {
    for (int k : selected[static_cast<std::size_t>(j)]) {
      if (k <= static_cast<int>(j)) continue;
      const auto& back = selected[static_cast<std::size_t>(k)];
      if (std::find(back.begin(), back.end(), static_cast<int>(j)) != back.end()) {
        adjacency[static_cast<std::size_t>(j)].push_back(k);
        adjacency[static_cast<std::size_t>(k)].push_back(static_cast<int>(j));
      }
    }
  }
  for (auto& row : adjacency) std::sort(row.begin(), row.end());
  return adjacency;
}

KnockoffSet sample_sequential_knockoffs(const DesignMatrix& X, const SequentialKnockoffSpec& spec,
                                        std::uint64_t seed) {
  X.validate();
  const Index n = X.rows();
  const Index p = X.cols();

  std::vector<FeatureKind> kinds = spec.feature_kinds;
  if (kinds.empty()) {
    kinds = detect_feature_kinds(X);
  } else if (static_cast<Index>(kinds.size()) != p) {
    throw ValidationError("feature_kinds length does not match the number of columns");
  }
  for (Index j = 0; j < p; ++j) {
    if (kinds[static_cast<std::size_t>(j)] != FeatureKind::binary) continue;
    for (Index i = 0; i < n; ++i) {
      const double v = X.values(i, j);
      if (v != 0.0 && v != 1.0) {
        throw ValidationError("binary column '" + X.column_names[static_cast<std::size_t>(j)] +
                              "' has non-0/1 value at row " + std::to_string(i));
      }
    }
  }
  if (spec.neighborhood && static_cast<Index>(spec.neighborhood->size()) != p) {
    throw ValidationError("neighborhood size does not match the number of columns");
  }

  const std::uint64_t order_seed = spec.order_seed ? *spec.order_seed : seed;
  Rng order_rng(derive_seed(order_seed, "seq-order"));
  const std::vector<int> order = order_rng.permutation(static_cast<int>(p));

  Matrix ko = Matrix::Zero(n, p);
  std::vector<char> generated(static_cast<std::size_t>(p), 0);

  for (int t = 0; t < static_cast<int>(p); ++t) {
    const Index k = order[static_cast<std::size_t>(t)];

    std::vector<Index> orig_cols, ko_cols;
    auto consider = [&](Index m) {
      if (m == k) return;
      orig_cols.push_back(m);
      if (generated[static_cast<std::size_t>(m)]) ko_cols.push_back(m);
    };
    if (spec.neighborhood) {
      for (int m : (*spec.neighborhood)[static_cast<std::size_t>(k)]) consider(m);
    } else {
      for (Index m = 0; m < p; ++m) consider(m);
    }

    Matrix design(n, static_cast<Index>(orig_cols.size() + ko_cols.size()));
    Index c = 0;
    for (Index m : orig_cols) design.col(c++) = X.values.col(m);
    for (Index m : ko_cols) design.col(c++) = ko.col(m);

    penreg::FitSpec fit_spec = spec.penreg_spec;
    fit_spec.family = kinds[static_cast<std::size_t>(k)] == FeatureKind::binary
                          ? penreg::Family::binomial
                          : penreg::Family::gaussian;
    auto dm = DesignMatrix::from_matrix(std::move(design));
    auto fit = penreg::fit_cv(dm, X.values.col(k), fit_spec,
                              derive_seed(seed, "seq-fit", static_cast<std::uint64_t>(k)));

    Rng draw_rng(derive_seed(seed, "seq-sample", static_cast<std::uint64_t>(k)));
    if (kinds[static_cast<std::size_t>(k)] == FeatureKind::binary) {
      const Vector prob = penreg::predict_response(dm, fit);
      for (Index i = 0; i < n; ++i) {
        ko(i, k) = draw_rng.bernoulli(prob(i)) ? 1.0 : 0.0;
      }
    } else {
      const Vector mean = penreg::predict(dm, fit);
      const double sd = penreg::residual_sd(dm, X.values.col(k), fit);
      for (Index i = 0; i < n; ++i) {
        ko(i, k) = mean(i) + sd * draw_rng.normal();
      }
    }
    generated[static_cast<std::size_t>(k)] = 1;
  }

  KnockoffSet out;
  out.original = X;
  out.knockoff.values = std::move(ko);
  out.knockoff.column_names = knockoff_names(X.column_names);
  out.method = Method::sequential;
  out.seed = seed;
  return out;
}

}  // namespace mlknock::knockoff
