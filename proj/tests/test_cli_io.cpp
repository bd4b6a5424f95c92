#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "mlknock/io.hpp"

#include <sstream>
#include <string>
#include <vector>

using namespace mlknock;
using namespace mlknock::io;

namespace {

IngestResult ingest_text(const std::string& text, const IngestSpec& spec = {}) {
  std::istringstream in(text);
  return ingest_csv_stream(in, spec, "test.csv");
}

const std::string kToyCsv =
    "cluster,y,x1,x2,z1\n"
    "1,0.5,1.0,2.0,7.0\n"
    "1,0.7,1.5,2.5,7.0\n"
    "1,0.2,0.5,1.5,7.0\n"
    "2,1.5,3.0,0.0,9.0\n"
    "2,1.2,3.5,0.5,9.0\n"
    "2,1.8,2.5,1.0,9.0\n";

}  // namespace

TEST_CASE("a toy two-cluster CSV ingests with auto-detected level-2 columns") {
  IngestResult r = ingest_text(kToyCsv);
  CHECK(r.data.rows() == 6);
  CHECK(r.data.cluster_id == std::vector<long>{1, 1, 1, 2, 2, 2});
  CHECK(r.cluster_labels == std::vector<std::string>{"1", "2"});
  CHECK(r.level1_names == std::vector<std::string>{"x1", "x2"});
  CHECK(r.level2_names == std::vector<std::string>{"z1"});  // constant within both clusters
  CHECK(r.data.y(0) == 0.5);
  CHECK(r.data.y(5) == 1.8);
  CHECK(r.data.x_level1.values(3, 0) == 3.0);
  CHECK(r.data.z_level2.values(5, 0) == 9.0);
}

TEST_CASE("missing and non-numeric cells are rejected naming the cell") {
  std::string with_na = kToyCsv;
  with_na.replace(with_na.find("1.5,2.5"), 3, " NA");
  CHECK_THROWS_WITH_AS(ingest_text(with_na), "missing value at row 2, column 'x1'",
                       ValidationError);

  std::string empty_cell =
      "cluster,y,x1\n"
      "1,0.5,1.0\n"
      "1,,2.0\n";
  CHECK_THROWS_WITH_AS(ingest_text(empty_cell), "missing value at row 2, column 'y'",
                       ValidationError);

  std::string bad_cell =
      "cluster,y,x1\n"
      "1,0.5,1.0\n"
      "1,0.7,abc\n";
  CHECK_THROWS_WITH_AS(ingest_text(bad_cell), "non-numeric value 'abc' at row 2, column 'x1'",
                       ValidationError);
}

TEST_CASE("a declared level-2 column that varies within a cluster is rejected") {
  IngestSpec spec;
  spec.level2_columns = {"x1"};
  CHECK_THROWS_WITH_AS(ingest_text(kToyCsv, spec),
                       "level-2 column 'x1' varies within cluster '1'", ValidationError);

  IngestSpec missing;
  missing.level2_columns = {"zz"};
  CHECK_THROWS_AS(ingest_text(kToyCsv, missing), ValidationError);
}

TEST_CASE("an explicit level-2 list overrides auto-detection") {
  // x2 is constant within clusters here, but the list names only z1
  std::string csv =
      "cluster,y,x1,x2,z1\n"
      "1,0.5,1.0,4.0,7.0\n"
      "1,0.7,1.5,4.0,7.0\n"
      "2,1.5,3.0,5.0,9.0\n"
      "2,1.2,3.5,5.0,9.0\n";
  IngestSpec spec;
  spec.level2_columns = {"z1"};
  IngestResult r = ingest_text(csv, spec);
  CHECK(r.level1_names == std::vector<std::string>{"x1", "x2"});
  CHECK(r.level2_names == std::vector<std::string>{"z1"});

  // auto-detection classifies x2 as level 2 instead
  IngestResult auto_r = ingest_text(csv);
  CHECK(auto_r.level1_names == std::vector<std::string>{"x1"});
  CHECK(auto_r.level2_names == std::vector<std::string>{"x2", "z1"});
}

TEST_CASE("string cluster labels map to ids in first-appearance order") {
  std::string csv =
      "cluster,y,x1\n"
      "rome,0.5,1.0\n"
      "rome,0.7,1.5\n"
      "milan,1.5,3.0\n"
      "milan,1.2,3.5\n"
      "rome,0.2,0.5\n";
  IngestResult r = ingest_text(csv);
  CHECK(r.data.cluster_id == std::vector<long>{0, 0, 1, 1, 0});
  CHECK(r.cluster_labels == std::vector<std::string>{"rome", "milan"});
}

TEST_CASE("quoted headers, CRLF endings, and a trailing blank line are tolerated") {
  std::string csv =
      "cluster,y,\"x,odd\",z1\r\n"
      "1,0.5,1.0,7.0\r\n"
      "1,0.7,1.5,7.0\r\n"
      "2,1.5,3.0,9.0\r\n"
      "2,1.2,3.5,9.0\r\n"
      "\r\n";
  IngestResult r = ingest_text(csv);
  CHECK(r.data.rows() == 4);
  CHECK(r.level1_names == std::vector<std::string>{"x,odd"});
}

TEST_CASE("structural problems are rejected with a clear message") {
  CHECK_THROWS_AS(ingest_text(""), ValidationError);
  CHECK_THROWS_AS(ingest_text("cluster,y,x1\n"), ValidationError);  // no data rows
  CHECK_THROWS_AS(ingest_text("cluster,y,y\n1,2,3\n1,2,3\n"), ValidationError);  // duplicate
  CHECK_THROWS_AS(ingest_text("cluster,y\n1,2\n1,3\n"), ValidationError);  // no predictors
  CHECK_THROWS_AS(ingest_text("cluster,y,x1\n1,2\n"), ValidationError);  // field count
  CHECK_THROWS_AS(ingest_text("id,y,x1\n1,2,3\n1,2,3\n"), ValidationError);  // no cluster column

  IngestSpec spec;
  spec.response_column = "resp";
  CHECK_THROWS_AS(ingest_text(kToyCsv, spec), ValidationError);
}

TEST_CASE("write_csv output ingests back to the same values") {
  Matrix values(4, 2);
  values << 1.25, -3.5, 0.0, 2.0, 4.5, 1.0, -0.125, 0.5;
  std::ostringstream out;
  write_csv_stream(out, {"cluster", "y"}, values);

  std::string body = out.str();
  CHECK(body.substr(0, 10) == "cluster,y\n");

  // append a predictor so the result is a valid dataset, then re-ingest
  std::string csv =
      "cluster,y,x1\n"
      "1,1.25,-3.5\n"
      "1,0,2\n"
      "2,4.5,1\n"
      "2,-0.125,0.5\n";
  IngestResult r = ingest_text(csv);
  CHECK(r.data.y(0) == 1.25);
  CHECK(r.data.y(3) == -0.125);
  CHECK(r.data.x_level1.values(1, 0) == 2.0);
}

TEST_CASE("format_double is compact and locale-independent") {
  CHECK(format_double(0.5) == "0.5");
  CHECK(format_double(-3.0) == "-3");
  CHECK(format_double(0.001) == "0.001");
  CHECK(format_double(1234567.25) == "1234567.25");
  CHECK(format_double(1.0 / 3.0) == "0.333333333333");
}
