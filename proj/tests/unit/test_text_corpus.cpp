#include <catch_amalgamated.hpp>

#include <set>

#include "support.hpp"
#include "taxoforge/corpus.hpp"
#include "taxoforge/text.hpp"

using namespace taxoforge;
using testsupport::TempDir;
using testsupport::write_file;

TEST_CASE("csv parsing handles quotes, CRLF and BOM", "[corpus]") {
  const auto rows = text::parse_csv("\xEF\xBB\xBFname,note\r\n\"Smith, J\",\"said \"\"hi\"\"\"\r\nA,\"multi\nline\"\n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<std::string>{"name", "note"});
  CHECK(rows[1] == std::vector<std::string>{"Smith, J", "said \"hi\""});
  CHECK(rows[2] == std::vector<std::string>{"A", "multi\nline"});
  CHECK_THROWS_AS(text::parse_csv("a,\"open\n"), ParseError);
}

TEST_CASE("csv escaping round-trips", "[corpus]") {
  const std::vector<std::string> fields{"plain", "with,comma", "with \"quote\"", "line\nbreak", ""};
  const auto line = text::csv_line(fields);
  CHECK(line.find("plain,") == 0);
  const auto parsed = text::parse_csv(line);
  REQUIRE(parsed.size() == 1);
  CHECK(parsed[0] == fields);
}

TEST_CASE("whitespace helpers", "[corpus]") {
  CHECK(text::collapse_whitespace("  Medical \t Clinic ") == "Medical Clinic");
  CHECK(text::trim("\xC2\xA0 x \xC2\xA0") == "x");
  CHECK(text::tokenize("a  b\tc\n").size() == 3);
}

TEST_CASE("ingest reads csv files sorted by id", "[corpus]") {
  TempDir dir;
  write_file(dir / "b.csv", "name,city\nAcme,Paris\nBolt,Rome\n");
  write_file(dir / "a.CSV", "title,year\nDune,1965\n");
  write_file(dir / "empty.csv", "");
  write_file(dir / "notes.txt", "ignored");
  const Corpus c = ingest(dir.path());
  REQUIRE(c.tables.size() == 2);
  CHECK(c.tables[0].id == "a");
  CHECK(c.tables[1].id == "b");
  CHECK(c.at("b").rows.size() == 2);
  CHECK(c.at("b").column(1) == std::vector<std::string>{"Paris", "Rome"});
  CHECK(c.column_count() == 4);
}

TEST_CASE("ingest error cases", "[corpus]") {
  TempDir dir;
  SECTION("missing directory names the path") {
    const auto missing = dir / "nope";
    try {
      ingest(missing);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(missing.string()) != std::string::npos);
    }
  }
  SECTION("directory with no tables") {
    write_file(dir / "x.txt", "hi");
    CHECK_THROWS_AS(ingest(dir.path()), EmptyCorpus);
  }
  SECTION("rows longer than the header") {
    write_file(dir / "t.csv", "a,b\n1,2,3\n");
    CHECK_THROWS_AS(ingest(dir.path()), MalformedTable);
  }
  SECTION("unterminated quote") {
    write_file(dir / "t.csv", "a,b\n\"1,2\n");
    CHECK_THROWS_AS(ingest(dir.path()), MalformedTable);
  }
}

TEST_CASE("tables are normalized on load", "[corpus]") {
  const Table t = testsupport::table("t", {"name", " name ", "x"}, {{" a ", "b"}, {""}, {"c", "d", "e"}});
  CHECK(t.headers == std::vector<std::string>{"name", "name_2", "x"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[0] == Row{"a", "b", ""});
}

TEST_CASE("sample_rows draws distinct rows deterministically", "[corpus]") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 20; ++i) rows.push_back({"r" + std::to_string(i)});
  const Table t = testsupport::table("t", {"c"}, rows);
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = sample_rows(t, 5, seed);
    REQUIRE(s.size() == 5);
    std::set<Row> uniq(s.begin(), s.end());
    CHECK(uniq.size() == 5);
    CHECK(sample_rows(t, 5, seed) == s);
  }
  CHECK(sample_rows(t, 5, 1) != sample_rows(t, 5, 2));
  const Table small = testsupport::table("s", {"c"}, {{"x"}, {"y"}, {"z"}});
  CHECK(sample_rows(small, 5, 9).size() == 3);
  CHECK_THROWS_AS(sample_rows(t, 0, 1), InvalidArgument);
}

TEST_CASE("sample_rows is close to uniform", "[corpus]") {
  std::vector<std::vector<std::string>> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({std::to_string(i)});
  const Table t = testsupport::table("t", {"c"}, rows);
  std::map<std::string, int> hits;
  const int trials = 20000;
  for (int s = 0; s < trials; ++s) {
    for (const auto& r : sample_rows(t, 3, static_cast<std::uint64_t>(s))) ++hits[r[0]];
  }
  // Each row is expected trials * 3/10 = 6000 times.
  for (const auto& [k, v] : hits) CHECK(std::abs(v - 6000) < 400);
}

TEST_CASE("truncate_cell keeps the first tokens and marks the cut", "[corpus]") {
  CHECK(truncate_cell("a b c", 3) == "a b c");
  CHECK(truncate_cell("a  b\tc d", 3) == "a b c...");
  std::string long_cell;
  for (int i = 0; i < 80; ++i) long_cell += "w" + std::to_string(i) + " ";
  const auto cut = truncate_cell(long_cell, 50);
  CHECK(token_count(cut) == 50);
  CHECK(cut.size() > 3);
  CHECK(cut.substr(cut.size() - 3) == "...");
  CHECK_THROWS_AS(truncate_cell("x", 0), InvalidArgument);
}
