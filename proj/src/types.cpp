#include "mlknock/types.hpp"

#include <unordered_set>

namespace mlknock {

void DesignMatrix::validate() const {
  if (rows() < 2) {
    throw ValidationError("design matrix needs at least 2 rows, got " + std::to_string(rows()));
  }
  if (static_cast<Index>(column_names.size()) != cols()) {
    throw ValidationError("column_names length " + std::to_string(column_names.size()) +
                          " does not match column count " + std::to_string(cols()));
  }
  if (!values.allFinite()) {
    for (Index j = 0; j < cols(); ++j) {
      for (Index i = 0; i < rows(); ++i) {
        if (!std::isfinite(values(i, j))) {
          throw ValidationError("non-finite entry at row " + std::to_string(i) + ", column '" +
                                column_names[static_cast<std::size_t>(j)] + "'");
        }
      }
    }
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : column_names) {
    if (!seen.insert(name).second) {
      throw ValidationError("duplicate column name '" + name + "'");
    }
  }
}

DesignMatrix DesignMatrix::from_matrix(Matrix m, const std::string& prefix) {
  DesignMatrix d;
  d.column_names.reserve(static_cast<std::size_t>(m.cols()));
  for (Index j = 0; j < m.cols(); ++j) {
    d.column_names.push_back(prefix + std::to_string(j + 1));
  }
  d.values = std::move(m);
  return d;
}

}  // namespace mlknock
