#pragma once

#include "mlknock/types.hpp"

#include <cstdint>
#include <vector>

namespace mlknock::penreg {

enum class Family { gaussian, binomial };
enum class LambdaRule { min, one_se };

// Elastic-net fit request. Weighted objective, normalized by the weight total:
//
//   (1/(2*sum w)) * sum_i w_i (y_i - b0 - x_i'b)^2 + lambda * (alpha*|b|_1 + (1-alpha)/2*|b|_2^2)
//
// for the gaussian family; the binomial family replaces the quadratic term with
// the weighted negative log-likelihood.
struct FitSpec {
  double alpha = 1.0;
  Family family = Family::gaussian;
  Vector weights;  // per-row observation weights; empty means all ones
  int n_lambda = 100;
  double lambda_min_ratio = 1e-3;
  bool standardize = true;
  int cv_folds = 10;
  LambdaRule lambda_rule = LambdaRule::min;

  void validate(Index n_rows) const;
};

struct FitResult {
  Family family = Family::gaussian;
  double intercept = 0.0;
  Vector coefficients;  // original predictor scale, at lambda_selected
  double lambda_selected = 0.0;
  int selected_index = -1;  // position of lambda_selected in lambda_path
  std::vector<double> lambda_path;
  Matrix path_coefficients;  // p x n_lambda, original scale
  Vector path_intercepts;
  std::vector<double> cv_mean_error;  // per path entry; empty unless fit_cv ran
  std::vector<double> cv_se;
  std::vector<int> zero_variance_columns;  // forced-zero coefficients, kept for stable indexing
};

// Full regularization path, no CV. coefficients/intercept are reported at the
// smallest path lambda.
FitResult fit_path(const DesignMatrix& X, const Vector& y, const FitSpec& spec);

// K-fold cross-validated fit. Folds are assigned uniformly at random over rows
// from `seed` unless `fold_ids` (values in 0..cv_folds-1 per row) is given.
FitResult fit_cv(const DesignMatrix& X, const Vector& y, const FitSpec& spec, std::uint64_t seed,
                 const std::vector<int>* fold_ids = nullptr);

// Fold ids that keep each cluster's rows together; for the cluster-wise CV option.
std::vector<int> cluster_folds(const std::vector<long>& cluster_ids, int k, std::uint64_t seed);

// Linear predictor b0 + X b at the selected lambda.
Vector predict(const DesignMatrix& X, const FitResult& fit);

// Mean response: identity link for gaussian, logistic for binomial.
Vector predict_response(const DesignMatrix& X, const FitResult& fit);

// sqrt(RSS / max(n - df, 1)) with df = #nonzero coefficients + 1. Gaussian fits only.
double residual_sd(const DesignMatrix& X, const Vector& y, const FitResult& fit);

// Max KKT violation of the fitted solution at lambda_selected, on the
// standardized scale the solver works on. Zero coefficients contribute
// max(0, |grad| - lambda*alpha), nonzero ones |grad + lambda*alpha*sign|.
double kkt_violation(const DesignMatrix& X, const Vector& y, const FitSpec& spec,
                     const FitResult& fit);

}  // namespace mlknock::penreg
