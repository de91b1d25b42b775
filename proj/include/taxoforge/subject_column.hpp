#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "taxoforge/corpus.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

struct SubjectScore {
  std::size_t col = 0;
  double uniqueness = 0.0;
  double text_ratio = 0.0;
  double position_bonus = 0.0;
  double total = 0.0;
  bool eligible = false;  // false when the column has no non-empty cell
};

namespace detail {

inline bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

inline std::string_view strip_sign(std::string_view s) {
  if (!s.empty() && (s.front() == '+' || s.front() == '-')) s.remove_prefix(1);
  return s;
}

}  // namespace detail

// [+-]digits
inline bool is_integer_literal(std::string_view s) { return detail::all_digits(detail::strip_sign(s)); }

// [+-](digits.digits* | .digits | digits)[eE[+-]digits], with at least a '.' or exponent.
inline bool is_decimal_literal(std::string_view s) {
  s = detail::strip_sign(s);
  std::string_view mantissa = s;
  std::string_view exponent;
  if (auto e = s.find_first_of("eE"); e != std::string_view::npos) {
    mantissa = s.substr(0, e);
    exponent = detail::strip_sign(s.substr(e + 1));
    if (!detail::all_digits(exponent)) return false;
  }
  const auto dot = mantissa.find('.');
  if (dot == std::string_view::npos) return !exponent.empty() && detail::all_digits(mantissa);
  const auto whole = mantissa.substr(0, dot);
  const auto frac = mantissa.substr(dot + 1);
  if (whole.empty() && frac.empty()) return false;
  return (whole.empty() || detail::all_digits(whole)) && (frac.empty() || detail::all_digits(frac));
}

// YYYY-MM-DD, optionally followed by THH:MM[:SS[.fff]][Z|(+|-)HH:MM].
inline bool is_iso_date(std::string_view s) {
  auto digits_at = [&](std::size_t pos, std::size_t n) {
    return s.size() >= pos + n && detail::all_digits(s.substr(pos, n));
  };
  if (!(digits_at(0, 4) && s.size() >= 10 && s[4] == '-' && digits_at(5, 2) && s[7] == '-' &&
        digits_at(8, 2))) {
    return false;
  }
  const int month = std::stoi(std::string(s.substr(5, 2)));
  const int day = std::stoi(std::string(s.substr(8, 2)));
  if (month < 1 || month > 12 || day < 1 || day > 31) return false;
  if (s.size() == 10) return true;
  if (s[10] != 'T' && s[10] != ' ') return false;
  std::size_t p = 11;
  if (!(digits_at(p, 2) && s.size() > p + 2 && s[p + 2] == ':' && digits_at(p + 3, 2))) return false;
  p += 5;
  if (p < s.size() && s[p] == ':') {
    if (!digits_at(p + 1, 2)) return false;
    p += 3;
    if (p < s.size() && s[p] == '.') {
      std::size_t q = p + 1;
      while (q < s.size() && s[q] >= '0' && s[q] <= '9') ++q;
      if (q == p + 1) return false;
      p = q;
    }
  }
  if (p == s.size()) return true;
  if (s[p] == 'Z') return p + 1 == s.size();
  if (s[p] == '+' || s[p] == '-') {
    return s.size() == p + 6 && digits_at(p + 1, 2) && s[p + 3] == ':' && digits_at(p + 4, 2);
  }
  return false;
}

inline bool is_numeric_or_date(std::string_view cell) {
  return is_integer_literal(cell) || is_decimal_literal(cell) || is_iso_date(cell);
}

inline constexpr double kPositionWeight = 0.1;

inline SubjectScore score_column(const Table& t, std::size_t col) {
  SubjectScore s;
  s.col = col;
  std::set<std::string_view> distinct;
  std::size_t non_empty = 0;
  std::size_t textual = 0;
  for (const auto& row : t.rows) {
    const std::string& cell = row.at(col);
    if (cell.empty()) continue;
    ++non_empty;
    distinct.insert(cell);
    if (!is_numeric_or_date(cell)) ++textual;
  }
  const double ncols = static_cast<double>(t.column_count());
  s.position_bonus = kPositionWeight * (1.0 - static_cast<double>(col) / ncols);
  if (non_empty == 0) return s;
  s.eligible = true;
  s.uniqueness = static_cast<double>(distinct.size()) / static_cast<double>(non_empty);
  s.text_ratio = static_cast<double>(textual) / static_cast<double>(non_empty);
  s.total = s.uniqueness + s.text_ratio + s.position_bonus;
  return s;
}

inline std::vector<SubjectScore> score_columns(const Table& t) {
  std::vector<SubjectScore> out;
  out.reserve(t.column_count());
  for (std::size_t c = 0; c < t.column_count(); ++c) out.push_back(score_column(t, c));
  return out;
}

// Column with the highest uniqueness + textness + position score; the
// leftmost column wins ties.
inline std::size_t detect_subject(const Table& t) {
  if (t.column_count() == 0) throw NoCandidate(t.id);
  std::size_t best = 0;
  double best_total = -std::numeric_limits<double>::infinity();
  bool found = false;
  for (const auto& s : score_columns(t)) {
    if (!s.eligible) continue;
    if (!found || s.total > best_total) {
      best = s.col;
      best_total = s.total;
      found = true;
    }
  }
  if (!found) throw NoCandidate(t.id);
  return best;
}

class SubjectDetector {
 public:
  virtual ~SubjectDetector() = default;
  virtual std::size_t detect(const Table& t) const = 0;
};

class HeuristicSubjectDetector final : public SubjectDetector {
 public:
  std::size_t detect(const Table& t) const override { return detect_subject(t); }
};

using SubjectOverrides = std::map<std::string, std::size_t>;

// Lines of "<table_id>,<col_index>"; blank lines and lines starting with '#'
// are ignored.
inline SubjectOverrides load_subject_overrides(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read subject column map " + file.string());
  SubjectOverrides out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto comma = trimmed.rfind(',');
    const std::string col = comma == std::string::npos ? "" : text::trim(trimmed.substr(comma + 1));
    if (comma == std::string::npos || !is_integer_literal(col) || col.front() == '-' ||
        col.front() == '+') {
      throw ParseError(file.string() + ":" + std::to_string(lineno) +
                       ": expected <table_id>,<col_index>");
    }
    out[text::trim(trimmed.substr(0, comma))] = std::stoul(col);
  }
  return out;
}

// Sets subject_col on every table, preferring overrides. Overrides naming
// unknown tables or out-of-range columns are rejected.
inline void assign_subject_columns(Corpus& corpus, const SubjectDetector& detector,
                                   const SubjectOverrides& overrides = {}) {
  for (const auto& [id, col] : overrides) {
    const Table& t = corpus.at(id);
    if (col >= t.column_count()) {
      throw InvalidArgument("subject column override " + std::to_string(col) +
                            " out of range for table '" + id + "'");
    }
  }
  for (auto& t : corpus.tables) {
    if (auto it = overrides.find(t.id); it != overrides.end()) {
      t.subject_col = it->second;
    } else {
      t.subject_col = detector.detect(t);
    }
  }
}

inline void assign_subject_columns(Corpus& corpus, const SubjectOverrides& overrides = {}) {
  assign_subject_columns(corpus, HeuristicSubjectDetector{}, overrides);
}

}  // namespace taxoforge
