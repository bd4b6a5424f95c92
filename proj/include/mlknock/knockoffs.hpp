#pragma once

#include "mlknock/penreg.hpp"
#include "mlknock/types.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace mlknock::knockoff {

enum class Method { gaussian, sequential };
enum class FeatureKind { continuous, binary };

// Second-order Gaussian knockoff model: knockoffs are drawn from the
// conditional N(mu + (x - mu)(I - sigma^{-1} D), 2D - D sigma^{-1} D) with
// D = diag(s), which reproduces the joint second moments required for the
// swap property.
struct GaussianKnockoffModel {
  Vector mu;
  Matrix sigma;
  Vector s;
  void validate() const;
};

struct SequentialKnockoffSpec {
  std::vector<FeatureKind> feature_kinds;  // empty: detected from the data
  std::optional<std::vector<std::vector<int>>> neighborhood;  // symmetric; absent: all features
  std::optional<std::uint64_t> order_seed;  // fixed visit order if set, else derived per sample seed
  penreg::FitSpec penreg_spec;              // family is switched per feature kind
};

struct KnockoffSet {
  DesignMatrix original;
  DesignMatrix knockoff;
  Method method = Method::gaussian;
  std::uint64_t seed = 0;
};

// Columns whose values are all 0/1 are treated as binary.
std::vector<FeatureKind> detect_feature_kinds(const DesignMatrix& X);

// Equicorrelated rule s_j = min(2 lambda_min(R), 1) sigma_jj for correlation
// matrix R, before any feasibility scale-down.
Vector equicorrelated_s(const Matrix& sigma);

// 2D - D sigma^{-1} D for D = diag(model.s).
Matrix conditional_covariance(const GaussianKnockoffModel& model);

GaussianKnockoffModel estimate_gaussian_model(const DesignMatrix& X);

KnockoffSet sample_gaussian_knockoffs(const DesignMatrix& X, const GaussianKnockoffModel& model,
                                      std::uint64_t seed);

// Per-feature lasso regressions with the AND rule; entry j lists the
// neighbors of feature j in ascending order.
std::vector<std::vector<int>> estimate_neighborhoods(const DesignMatrix& X,
                                                     const penreg::FitSpec& spec,
                                                     std::uint64_t seed);

KnockoffSet sample_sequential_knockoffs(const DesignMatrix& X, const SequentialKnockoffSpec& spec,
                                        std::uint64_t seed);

}  // namespace mlknock::knockoff
