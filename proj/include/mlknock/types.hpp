#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace mlknock {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Rejected input: bad shapes, non-finite values, contract violations.
class ValidationError : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Numerical failure: factorization breakdown, IRLS divergence.
class NumericalError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense feature matrix, one feature per column.
struct DesignMatrix {
  Matrix values;
  std::vector<std::string> column_names;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }

  // Invariants for regression input: finite entries, rows >= 2,
  // column_names matching cols with unique names.
  void validate() const;

  static DesignMatrix from_matrix(Matrix m, const std::string& prefix = "x");
};

}  // namespace mlknock
