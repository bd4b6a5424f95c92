#pragma once

#include "mlknock/multilevel.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace mlknock::io {

struct IngestSpec {
  std::string cluster_column = "cluster";
  std::string response_column = "y";
  std::vector<std::string> level2_columns;  // empty: auto-detect constant-within-cluster columns
};

struct IngestResult {
  multilevel::ClusteredDataset data;
  std::vector<std::string> cluster_labels;  // printable label per internal cluster id
  std::vector<std::string> level1_names;
  std::vector<std::string> level2_names;
};

// Strict CSV: header row, comma separation, double quotes for embedded commas.
// Predictor and response cells must be numeric; missing or non-numeric cells
// are rejected naming the row and column. The cluster column may hold integers
// or strings. With an explicit level-2 list, a listed column that varies
// within a cluster is an error; with auto-detection, every predictor column
// that is exactly constant within all clusters becomes level 2.
IngestResult ingest_csv(const std::string& path, const IngestSpec& spec);
IngestResult ingest_csv_stream(std::istream& in, const IngestSpec& spec,
                               const std::string& origin);

// %.12g with "inf"/"nan" spelled out; used everywhere a number is printed so
// reruns are byte-identical.
std::string format_double(double value);

void write_csv(const std::string& path, const std::vector<std::string>& names,
               const Matrix& values);
void write_csv_stream(std::ostream& out, const std::vector<std::string>& names,
                      const Matrix& values);

}  // namespace mlknock::io
