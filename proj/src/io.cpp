#include "mlknock/io.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

namespace mlknock::io {

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
  return s.substr(begin, end - begin);
}

bool is_missing_token(const std::string& token) {
  if (token.empty()) return true;
  std::string lower;
  lower.reserve(token.size());
  for (char c : token) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  return lower == "na" || lower == "nan" || lower == "null";
}

// One CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_record(const std::string& line, const std::string& origin,
                                      std::size_t line_no) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (quoted) {
    throw ValidationError(origin + ": unterminated quote on line " + std::to_string(line_no));
  }
  fields.push_back(current);
  return fields;
}

double parse_numeric(const std::string& raw, std::size_t row, const std::string& column) {
  std::string token = trim(raw);
  if (is_missing_token(token)) {
    throw ValidationError("missing value at row " + std::to_string(row) + ", column '" + column +
                          "'");
  }
  const char* begin = token.c_str();
  char* end = nullptr;
  double value = std::strtod(begin, &end);
  if (end != begin + token.size()) {
    throw ValidationError("non-numeric value '" + token + "' at row " + std::to_string(row) +
                          ", column '" + column + "'");
  }
  return value;
}

bool parse_integer(const std::string& token, long& out) {
  if (token.empty()) return false;
  std::size_t pos = token[0] == '-' || token[0] == '+' ? 1 : 0;
  if (pos == token.size()) return false;
  for (std::size_t i = pos; i < token.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(token[i]))) return false;
  }
  try {
    out = std::stol(token);
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

std::string quote_if_needed(const std::string& name) {
  if (name.find_first_of(",\"\n") == std::string::npos) return name;
  std::string quoted = "\"";
  for (char c : name) {
    if (c == '"') quoted += "\"\"";
    else quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

}  // namespace

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", value);
  return buf;
}

IngestResult ingest_csv_stream(std::istream& in, const IngestSpec& spec,
                               const std::string& origin) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(origin + ": empty file");
  }
  // strip a UTF-8 byte-order mark and a trailing carriage return
  if (line.size() >= 3 && line.compare(0, 3, "\xef\xbb\xbf") == 0) line.erase(0, 3);
  if (!line.empty() && line.back() == '\r') line.pop_back();

  std::vector<std::string> header = split_record(line, origin, 1);
  for (auto& name : header) name = trim(name);
  std::unordered_map<std::string, std::size_t> column_of;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c].empty()) {
      throw ValidationError(origin + ": header column " + std::to_string(c + 1) + " is empty");
    }
    if (!column_of.emplace(header[c], c).second) {
      throw ValidationError(origin + ": duplicate column '" + header[c] + "'");
    }
  }
  auto require_column = [&](const std::string& name) {
    auto it = column_of.find(name);
    if (it == column_of.end()) {
      throw ValidationError(origin + ": column '" + name + "' not found");
    }
    return it->second;
  };
  std::size_t cluster_col = require_column(spec.cluster_column);
  std::size_t response_col = require_column(spec.response_column);
  if (cluster_col == response_col) {
    throw ValidationError(origin + ": cluster and response columns must differ");
  }

  std::vector<std::size_t> predictor_cols;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c != cluster_col && c != response_col) predictor_cols.push_back(c);
  }
  if (predictor_cols.empty()) {
    throw ValidationError(origin + ": no predictor columns besides cluster and response");
  }

  std::vector<std::string> cluster_tokens;
  std::vector<double> responses;
  std::vector<std::vector<double>> predictors(predictor_cols.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;  // tolerate a trailing blank line
    std::vector<std::string> fields = split_record(line, origin, line_no);
    if (fields.size() != header.size()) {
      throw ValidationError(origin + ": line " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));
    }
    std::size_t row = cluster_tokens.size() + 1;  // 1-based data row
    std::string cluster_token = trim(fields[cluster_col]);
    if (is_missing_token(cluster_token)) {
      throw ValidationError("missing value at row " + std::to_string(row) + ", column '" +
                            spec.cluster_column + "'");
    }
    cluster_tokens.push_back(cluster_token);
    responses.push_back(parse_numeric(fields[response_col], row, spec.response_column));
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      predictors[p].push_back(
          parse_numeric(fields[predictor_cols[p]], row, header[predictor_cols[p]]));
    }
  }
  std::size_t n = cluster_tokens.size();
  if (n < 2) {
    throw ValidationError(origin + ": need at least 2 data rows, found " + std::to_string(n));
  }

  // Cluster ids: keep integers as-is; otherwise label strings in first-appearance order.
  bool all_integer = true;
  std::vector<long> int_ids(n);
  for (std::size_t i = 0; i < n && all_integer; ++i) {
    all_integer = parse_integer(cluster_tokens[i], int_ids[i]);
  }
  IngestResult out;
  out.data.cluster_id.resize(n);
  std::unordered_map<std::string, long> label_id;
  for (std::size_t i = 0; i < n; ++i) {
    if (all_integer) {
      out.data.cluster_id[i] = int_ids[i];
    } else {
      auto [it, inserted] =
          label_id.emplace(cluster_tokens[i], static_cast<long>(label_id.size()));
      out.data.cluster_id[i] = it->second;
      (void)inserted;
    }
  }
  {
    // printable labels in first-appearance order
    std::unordered_map<long, bool> seen;
    for (std::size_t i = 0; i < n; ++i) {
      if (!seen[out.data.cluster_id[i]]) {
        seen[out.data.cluster_id[i]] = true;
        out.cluster_labels.push_back(cluster_tokens[i]);
      }
    }
  }

  // Which predictors are constant within every cluster?
  std::unordered_map<long, std::size_t> first_row;
  std::vector<bool> constant(predictor_cols.size(), true);
  for (std::size_t i = 0; i < n; ++i) {
    auto [it, inserted] = first_row.emplace(out.data.cluster_id[i], i);
    if (inserted) continue;
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      if (predictors[p][i] != predictors[p][it->second]) constant[p] = false;
    }
  }

  std::vector<std::size_t> level2_local;
  if (spec.level2_columns.empty()) {
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      if (constant[p]) level2_local.push_back(p);
    }
  } else {
    std::unordered_map<std::string, std::size_t> local_of;
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      local_of.emplace(header[predictor_cols[p]], p);
    }
    for (const auto& name : spec.level2_columns) {
      auto it = local_of.find(name);
      if (it == local_of.end()) {
        if (name == spec.cluster_column || name == spec.response_column) {
          throw ValidationError(origin + ": level-2 column '" + name +
                                "' is the cluster or response column");
        }
        throw ValidationError(origin + ": level-2 column '" + name + "' not found");
      }
      std::size_t p = it->second;
      if (!constant[p]) {
        // find the offending cluster for the message
        std::unordered_map<long, std::size_t> first;
        for (std::size_t i = 0; i < n; ++i) {
          auto [fit, inserted] = first.emplace(out.data.cluster_id[i], i);
          if (!inserted && predictors[p][i] != predictors[p][fit->second]) {
            throw ValidationError("level-2 column '" + name + "' varies within cluster '" +
                                  cluster_tokens[fit->second] + "'");
          }
        }
      }
      level2_local.push_back(p);
    }
    std::sort(level2_local.begin(), level2_local.end());
    if (std::adjacent_find(level2_local.begin(), level2_local.end()) != level2_local.end()) {
      throw ValidationError(origin + ": a column repeats in the level-2 list");
    }
    for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
      if (constant[p] &&
          std::find(level2_local.begin(), level2_local.end(), p) == level2_local.end()) {
        std::cerr << "note: column '" << header[predictor_cols[p]]
                  << "' is constant within clusters but not listed as level 2; keeping it at "
                     "level 1\n";
      }
    }
  }

  std::vector<bool> is_level2(predictor_cols.size(), false);
  for (std::size_t p : level2_local) is_level2[p] = true;

  std::vector<std::size_t> level1_local;
  for (std::size_t p = 0; p < predictor_cols.size(); ++p) {
    if (!is_level2[p]) level1_local.push_back(p);
  }

  out.data.y = Vector(static_cast<Index>(n));
  for (std::size_t i = 0; i < n; ++i) out.data.y(static_cast<Index>(i)) = responses[i];

  auto build = [&](const std::vector<std::size_t>& cols) {
    DesignMatrix m;
    m.values = Matrix(static_cast<Index>(n), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) {
      m.column_names.push_back(header[predictor_cols[cols[c]]]);
      for (std::size_t i = 0; i < n; ++i) {
        m.values(static_cast<Index>(i), static_cast<Index>(c)) = predictors[cols[c]][i];
      }
    }
    return m;
  };
  out.data.x_level1 = build(level1_local);
  out.data.z_level2 = build(level2_local);
  out.level1_names = out.data.x_level1.column_names;
  out.level2_names = out.data.z_level2.column_names;
  out.data.validate();
  return out;
}

IngestResult ingest_csv(const std::string& path, const IngestSpec& spec) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open '" + path + "' for reading");
  }
  return ingest_csv_stream(in, spec, path);
}

void write_csv_stream(std::ostream& out, const std::vector<std::string>& names,
                      const Matrix& values) {
  if (static_cast<Index>(names.size()) != values.cols()) {
    throw ValidationError("write_csv: name count does not match column count");
  }
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c > 0) out << ',';
    out << quote_if_needed(names[c]);
  }
  out << '\n';
  for (Index i = 0; i < values.rows(); ++i) {
    for (Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(values(i, c));
    }
    out << '\n';
  }
}

void write_csv(const std::string& path, const std::vector<std::string>& names,
               const Matrix& values) {
  std::ofstream out(path);
  if (!out) {
    throw ValidationError("cannot open '" + path + "' for writing");
  }
  write_csv_stream(out, names, values);
  if (!out) {
    throw ValidationError("failed while writing '" + path + "'");
  }
}

}  // namespace mlknock::io
