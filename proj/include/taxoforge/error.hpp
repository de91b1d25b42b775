#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace taxoforge {

// Base for every error raised by the library. Callers that only need a
// diagnostic can catch this; the subclasses carry structured fields.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// corpus

class EmptyCorpus : public Error {
 public:
  explicit EmptyCorpus(const std::string& dir)
      : Error("no parseable .csv tables in " + dir) {}
};

class MalformedTable : public Error {
 public:
  MalformedTable(std::string table_id, const std::string& why)
      : Error("malformed table '" + table_id + "': " + why),
        table_id_(std::move(table_id)) {}
  const std::string& table_id() const noexcept { return table_id_; }

 private:
  std::string table_id_;
};

// subject_column

class NoCandidate : public Error {
 public:
  explicit NoCandidate(const std::string& table_id)
      : Error("table '" + table_id + "' has no non-empty column") {}
};

// embedding

class ProviderError : public Error {
 public:
  ProviderError(int status, std::string body)
      : Error("embedding provider failed (status " + std::to_string(status) + "): " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class DimensionMismatch : public Error {
 public:
  DimensionMismatch(std::size_t expected, std::size_t got)
      : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
              std::to_string(got)) {}
};

// clustering

class NoValidK : public Error {
 public:
  NoValidK() : Error("no cluster count in range is reachable by cutting the dendrogram") {}
};

// taxonomy

class UnknownType : public Error {
 public:
  explicit UnknownType(const std::string& id) : Error("unknown type '" + id + "'") {}
};

class DuplicateType : public Error {
 public:
  explicit DuplicateType(const std::string& id) : Error("duplicate type id '" + id + "'") {}
};

class CycleError : public Error {
 public:
  CycleError(std::string parent, std::string child)
      : Error("edge " + parent + " -> " + child + " would create a cycle"),
        parent_(std::move(parent)),
        child_(std::move(child)) {}
  const std::string& parent() const noexcept { return parent_; }
  const std::string& child() const noexcept { return child_; }

 private:
  std::string parent_;
  std::string child_;
};

// llm

class BackendError : public Error {
 public:
  BackendError(int status, std::string body)
      : Error("chat backend failed (status " + std::to_string(status) + "): " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class TimeoutError : public Error {
 public:
  using Error::Error;
};

class EmptyParse : public Error {
 public:
  EmptyParse() : Error("response contained no names") {}
};

// gett

class GenerationFailed : public Error {
 public:
  explicit GenerationFailed(std::string table_id)
      : Error("entity type generation failed for table '" + table_id + "'"),
        table_id_(std::move(table_id)) {}
  const std::string& table_id() const noexcept { return table_id_; }

 private:
  std::string table_id_;
};

class LayerParseError : public Error {
 public:
  explicit LayerParseError(std::size_t layer)
      : Error("no parseable edges in layer " + std::to_string(layer) + " after repair"),
        layer_(layer) {}
  std::size_t layer() const noexcept { return layer_; }

 private:
  std::size_t layer_;
};

// metrics

class InsufficientTables : public Error {
 public:
  InsufficientTables() : Error("fewer than two tables are shared by output and ground truth") {}
};

class NoTypes : public Error {
 public:
  NoTypes() : Error("no evaluable types") {}
};

class NoMatchedTypes : public Error {
 public:
  NoMatchedTypes() : Error("no output type could be matched to the ground truth") {}
};

}  // namespace taxoforge
