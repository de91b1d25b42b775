#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taxoforge/error.hpp"
#include "taxoforge/rng.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

using Row = std::vector<std::string>;

// One entity table. Every row has exactly headers.size() cells.
struct Table {
  std::string id;
  std::vector<std::string> headers;
  std::vector<Row> rows;
  std::optional<std::size_t> subject_col;

  std::size_t column_count() const noexcept { return headers.size(); }
  std::size_t row_count() const noexcept { return rows.size(); }

  std::vector<std::string> column(std::size_t col) const {
    std::vector<std::string> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(r.at(col));
    return out;
  }

  friend bool operator==(const Table&, const Table&) = default;
};

struct Corpus {
  std::vector<Table> tables;  // sorted by id
  std::string source_dir;

  const Table& at(std::string_view id) const {
    auto it = std::lower_bound(tables.begin(), tables.end(), id,
                               [](const Table& t, std::string_view key) { return t.id < key; });
    if (it == tables.end() || it->id != id) {
      throw InvalidArgument("no table '" + std::string(id) + "' in corpus");
    }
    return *it;
  }
  Table& at(std::string_view id) { return const_cast<Table&>(std::as_const(*this).at(id)); }

  std::size_t column_count() const noexcept {
    std::size_t n = 0;
    for (const auto& t : tables) n += t.column_count();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

// Appends _2, _3, ... to repeated header names, skipping suffixes that would
// collide with an existing header.
inline std::vector<std::string> disambiguate_headers(std::vector<std::string> headers) {
  std::set<std::string> taken(headers.begin(), headers.end());
  std::set<std::string> seen;
  for (auto& h : headers) {
    if (seen.insert(h).second) continue;
    for (int n = 2;; ++n) {
      std::string candidate = h + "_" + std::to_string(n);
      if (!taken.count(candidate)) {
        h = candidate;
        taken.insert(candidate);
        seen.insert(candidate);
        break;
      }
    }
  }
  return headers;
}

// Builds a table from parsed CSV records (first record = headers).
inline Table make_table(std::string id, std::vector<std::vector<std::string>> records) {
  if (records.empty()) throw MalformedTable(id, "no header row");
  Table t;
  t.id = std::move(id);
  for (const auto& h : records.front()) t.headers.push_back(text::trim(h));
  t.headers = disambiguate_headers(std::move(t.headers));
  const std::size_t width = t.headers.size();
  for (std::size_t r = 1; r < records.size(); ++r) {
    auto& rec = records[r];
    // A bare blank line parses as one empty field; it is not a row.
    if (rec.size() == 1 && rec[0].empty()) continue;
    if (rec.size() > width) {
      throw MalformedTable(t.id, "row " + std::to_string(r) + " has " +
                                     std::to_string(rec.size()) + " cells for " +
                                     std::to_string(width) + " headers");
    }
    Row row;
    row.reserve(width);
    for (auto& cell : rec) row.push_back(text::trim(cell));
    row.resize(width);
    t.rows.push_back(std::move(row));
  }
  return t;
}

inline Table read_table(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string id = file.stem().string();
  std::vector<std::vector<std::string>> records;
  try {
    records = text::parse_csv(buf.str());
  } catch (const ParseError& e) {
    throw MalformedTable(id, e.what());
  }
  return make_table(id, std::move(records));
}

enum class TableFormat { csv };

// Reads every <id>.csv in dir (non-recursive), ordered by id. Empty files
// are skipped; the first row of each file is the header row.
inline Corpus ingest(const std::filesystem::path& dir, TableFormat = TableFormat::csv) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw IoError("tables directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    if (text::ascii_lower(entry.path().extension().string()) != ".csv") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());

  Corpus corpus;
  corpus.source_dir = dir.string();
  for (const auto& f : files) {
    if (fs::file_size(f, ec) == 0) continue;
    Table t = read_table(f);
    const bool blank_header = std::all_of(t.headers.begin(), t.headers.end(),
                                          [](const std::string& h) { return h.empty(); });
    if (blank_header && t.rows.empty()) continue;
    corpus.tables.push_back(std::move(t));
  }
  std::sort(corpus.tables.begin(), corpus.tables.end(),
            [](const Table& a, const Table& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < corpus.tables.size(); ++i) {
    if (corpus.tables[i].id == corpus.tables[i - 1].id) {
      throw MalformedTable(corpus.tables[i].id, "duplicate table id");
    }
  }
  if (corpus.tables.empty()) throw EmptyCorpus(dir.string());
  return corpus;
}

// min(n, |rows|) distinct rows drawn uniformly without replacement, in draw order.
inline std::vector<Row> sample_rows(const Table& t, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidArgument("sample size must be >= 1");
  std::vector<std::size_t> idx(t.rows.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  const std::size_t take = std::min(n, idx.size());
  std::mt19937_64 eng(seed);
  std::vector<Row> out;
  out.reserve(take);
  // Partial Fisher-Yates.
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = i + rng::uniform_below(eng, idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(t.rows[idx[i]]);
  }
  return out;
}

inline std::size_t token_count(std::string_view cell) { return text::tokenize(cell).size(); }

inline constexpr std::string_view kTruncationMarker = "...";

// Cells with more than `limit` whitespace tokens keep their first `limit`
// tokens, rejoined with single spaces, followed by "...".
inline std::string truncate_cell(std::string_view cell, std::size_t limit) {
  if (limit == 0) throw InvalidArgument("truncation limit must be >= 1");
  const auto tokens = text::tokenize(cell);
  if (tokens.size() <= limit) return std::string(cell);
  std::string out;
  for (std::size_t i = 0; i < limit; ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  out += kTruncationMarker;
  return out;
}

}  // namespace taxoforge
