#include <gtest/gtest.h>

#include "covtest/csv.hpp"

using namespace covtest;

namespace {

std::string error_of(std::string_view text, bool header = false, bool drop = false) {
  try {
    parse_csv(text, header, drop, "in.csv");
  } catch (const InputError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST(Csv, PlainGrid) {
  const auto t = parse_csv("1,2\n3,4\n5,6", false, false);
  EXPECT_EQ(t.data.n(), 3);
  EXPECT_EQ(t.data.p(), 2);
  EXPECT_EQ(t.data.values()(2, 1), 6);
  EXPECT_TRUE(t.header.empty());
  EXPECT_TRUE(t.dropped_lines.empty());
}

TEST(Csv, HeaderNamesAreKept) {
  const auto t = parse_csv("x, y\n1,2\n3,4\n5,6\n", true, false);
  EXPECT_EQ(t.data.n(), 3);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "y"}));
}

TEST(Csv, QuotingCrlfBomBlankLinesAndNumberForms) {
  const auto t = parse_csv("\xEF\xBB\xBF\"a,1\",\"b \"\"q\"\"\"\r\n\r\n\" 1.5\",-2e3\r\n+3, .25 \r\n", true, false);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a,1", "b \"q\""}));
  ASSERT_EQ(t.data.n(), 2);
  EXPECT_EQ(t.data.values()(0, 0), 1.5);
  EXPECT_EQ(t.data.values()(0, 1), -2000);
  EXPECT_EQ(t.data.values()(1, 0), 3);
  EXPECT_EQ(t.data.values()(1, 1), 0.25);
}

TEST(Csv, DiagnosticsNameTheLine) {
  EXPECT_EQ(error_of("1,2\n3\n"), "in.csv: line 2 has 1 fields, expected 2");
  EXPECT_EQ(error_of("a,b\n1,2\n\n4,NA\n", true), "in.csv: line 4, column 2: 'NA' is not a finite number");
  EXPECT_EQ(error_of("1,\n"), "in.csv: line 1, column 2: '' is not a finite number");
  EXPECT_EQ(error_of("1,inf\n"), "in.csv: line 1, column 2: 'inf' is not a finite number");
  EXPECT_EQ(error_of("1,0x10\n"), "in.csv: line 1, column 2: '0x10' is not a finite number");
  EXPECT_EQ(error_of(""), "in.csv: file is empty");
  EXPECT_EQ(error_of("\n\n"), "in.csv: file is empty");
  EXPECT_EQ(error_of("a,b\n", true), "in.csv: no data rows");
  EXPECT_EQ(error_of("a,b\nx,1\n", true, true), "in.csv: every data row was incomplete");
  EXPECT_NE(error_of("\"open,1\n2,3\n").find("unterminated"), std::string::npos);
}

TEST(Csv, DropIncompleteRecordsLines) {
  const auto t = parse_csv("a,b\n1,2\nNA,3\n4,\n5,6\n", true, true);
  EXPECT_EQ(t.data.n(), 2);
  EXPECT_EQ(t.dropped_lines, (std::vector<std::size_t>{3, 4}));
  EXPECT_EQ(t.data.values()(1, 0), 5);
}

TEST(Csv, FilesOnDisk) {
  const auto t = ingest_csv("fixtures/with_na.csv", true, true);
  EXPECT_EQ(t.data.n(), 4);
  EXPECT_EQ(t.data.p(), 3);
  EXPECT_EQ(t.dropped_lines, std::vector<std::size_t>{3});
  EXPECT_THROW(ingest_csv("fixtures/with_na.csv", true, false), InputError);
  EXPECT_EQ(ingest_csv("fixtures/small6x3.csv", false).data.n(), 6);
  try {
    ingest_csv("fixtures/does_not_exist.csv", false);
    FAIL();
  } catch (const InputError& e) {
    EXPECT_EQ(std::string(e.what()), "cannot open 'fixtures/does_not_exist.csv'");
  }
}
