#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "support.hpp"
#include "taxoforge/subject_column.hpp"

using namespace taxoforge;
using Catch::Approx;

TEST_CASE("literal classification", "[subject]") {
  for (const char* s : {"0", "-12", "+7", "3.25", "-0.5", "1e9", "2.5E-3", ".5", "2021-03-04", "2021-03-04T10:20:30Z",
                        "2021-03-04T10:20:30+02:00"}) {
    CHECK(is_numeric_or_date(s));
  }
  for (const char* s : {"abc", "12a", "1.2.3", "2021-13", "Paris", "-", "e5", "2021/03/04"}) CHECK_FALSE(is_numeric_or_date(s));
}

TEST_CASE("score components", "[subject]") {
  const Table t = testsupport::table("t", {"name", "revenue"}, {{"Acme", "5"}, {"Binko", "5"}, {"Corp", "7"}});
  const auto s = score_columns(t);
  // name: 3/3 distinct, all text, bonus 0.1
  CHECK(s[0].uniqueness == Approx(1.0));
  CHECK(s[0].text_ratio == Approx(1.0));
  CHECK(s[0].position_bonus == Approx(0.1));
  CHECK(s[0].total == Approx(2.1));
  // revenue: 2/3 distinct, no text, bonus 0.05
  CHECK(s[1].uniqueness == Approx(2.0 / 3.0));
  CHECK(s[1].text_ratio == Approx(0.0));
  CHECK(s[1].total == Approx(2.0 / 3.0 + 0.05));
  CHECK(detect_subject(t) == 0);
}

TEST_CASE("detection edge cases", "[subject]") {
  CHECK(detect_subject(testsupport::table("one", {"x"}, {{"a"}})) == 0);
  CHECK(detect_subject(testsupport::table("num", {"a", "b"}, {{"1", "3"}, {"2", "4"}})) == 0);
  CHECK(detect_subject(testsupport::table("late", {"id", "label"}, {{"1", "Alpha"}, {"2", "Beta"}})) == 1);
  // The empty first column is skipped.
  CHECK(detect_subject(testsupport::table("gap", {"blank", "v"}, {{"", "3"}, {"", "3"}})) == 1);
  CHECK_THROWS_AS(detect_subject(testsupport::table("empty", {"a", "b"}, {{"", ""}})), NoCandidate);
}

namespace {

Table random_table(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> ncols(1, 6), nrows(2, 12), kind(0, 3), word(0, 30);
  const int c = ncols(rng), r = nrows(rng);
  std::vector<std::string> headers;
  std::vector<int> kinds;
  for (int j = 0; j < c; ++j) {
    headers.push_back("h" + std::to_string(j));
    kinds.push_back(kind(rng));
  }
  std::vector<std::vector<std::string>> rows(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) {
      switch (kinds[j]) {
        case 0: rows[i].push_back("w" + std::to_string(word(rng))); break;
        case 1: rows[i].push_back(std::to_string(word(rng))); break;
        case 2: rows[i].push_back("entity" + std::to_string(i)); break;
        default: rows[i].push_back(word(rng) % 4 == 0 ? "" : "v" + std::to_string(word(rng) % 3)); break;
      }
    }
  }
  return testsupport::table("r", headers, rows);
}

}  // namespace

TEST_CASE("row order does not change the subject column", "[subject]") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    Table t = random_table(rng);
    bool any = false;
    for (const auto& row : t.rows) any = any || std::any_of(row.begin(), row.end(), [](auto& c) { return !c.empty(); });
    if (!any) continue;
    const auto before = detect_subject(t);
    std::shuffle(t.rows.begin(), t.rows.end(), rng);
    CHECK(detect_subject(t) == before);
  }
}

TEST_CASE("an appended constant column never becomes the subject", "[subject]") {
  std::mt19937_64 rng(12);
  int unchanged_checked = 0;
  for (int trial = 0; trial < 300; ++trial) {
    Table t = random_table(rng);
    if (t.rows.size() < 2) continue;
    // Make sure a distinct-valued text column exists.
    for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i][0] = "name" + std::to_string(i);
    const auto before = score_columns(t);
    const auto subject = detect_subject(t);
    Table wider = t;
    wider.headers.push_back("const");
    for (auto& row : wider.rows) row.push_back("same");
    const auto after = detect_subject(wider);
    CHECK(after != wider.column_count() - 1);
    // Appending shrinks every position bonus by at most 0.1/ncols; when the
    // winner leads by more than that, the choice cannot move.
    double runner_up = -1.0;
    for (const auto& s : before) {
      if (s.col != subject && s.eligible) runner_up = std::max(runner_up, s.total);
    }
    if (before[subject].total - runner_up > kPositionWeight / static_cast<double>(t.column_count())) {
      CHECK(after == subject);
      ++unchanged_checked;
    }
  }
  CHECK(unchanged_checked > 50);
}

TEST_CASE("subject overrides", "[subject]") {
  testsupport::TempDir dir;
  testsupport::write_file(dir / "a.csv", "id,label\n1,Alpha\n2,Beta\n");
  testsupport::write_file(dir / "b.csv", "x,y\nfoo,bar\nbaz,qux\n");
  testsupport::write_file(dir / "map.txt", "# pins\n\na, 0\n");
  Corpus c = ingest(dir.path());
  assign_subject_columns(c, load_subject_overrides(dir / "map.txt"));
  CHECK(c.at("a").subject_col == 0u);
  CHECK(c.at("b").subject_col == 0u);

  testsupport::write_file(dir / "bad.txt", "a,-1\n");
  CHECK_THROWS_AS(load_subject_overrides(dir / "bad.txt"), ParseError);
  CHECK_THROWS_AS(assign_subject_columns(c, SubjectOverrides{{"a", 5}}), InvalidArgument);
  CHECK_THROWS_AS(assign_subject_columns(c, SubjectOverrides{{"zzz", 0}}), InvalidArgument);
}
