#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taxoforge/error.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

struct ChatRequest {
  std::string system;
  std::string user;
  double temperature = 0.0;
  std::size_t max_tokens = 1024;
  std::string model;
};

enum class FinishReason { stop, length, error };

inline std::string_view to_string(FinishReason r) {
  switch (r) {
    case FinishReason::stop: return "stop";
    case FinishReason::length: return "length";
    case FinishReason::error: return "error";
  }
  return "error";
}

struct ChatResponse {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual std::string id() const = 0;
  virtual ChatResponse send(const ChatRequest& req) = 0;
};

// Canned responses keyed by substring of the user message; the first entry
// whose pattern occurs in req.user wins. An empty pattern matches anything.
class ScriptedBackend final : public ChatBackend {
 public:
  struct Entry {
    std::string match;
    std::string response;
  };

  ScriptedBackend() = default;
  explicit ScriptedBackend(std::vector<Entry> script, std::optional<std::string> fallback = std::nullopt)
      : script_(std::move(script)), fallback_(std::move(fallback)) {}

  // JSON list of {"match": ..., "response": ...}.
  static ScriptedBackend from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ParseError("script must be a JSON list of {match, response}");
    std::vector<Entry> entries;
    try {
      for (const auto& e : j) entries.push_back({e.at("match").get<std::string>(), e.at("response").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("invalid script entry: ") + e.what());
    }
    return ScriptedBackend(std::move(entries));
  }

  static ScriptedBackend load(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read script " + file.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(file.string() + ": " + e.what());
    }
  }

  std::string id() const override { return "scripted"; }

  ChatResponse send(const ChatRequest& req) override {
    for (const auto& e : script_) {
      if (req.user.find(e.match) != std::string::npos) return {e.response, FinishReason::stop};
    }
    if (fallback_) return {*fallback_, FinishReason::stop};
    throw BackendError(404, "no script entry matches the request");
  }

  const std::vector<Entry>& entries() const noexcept { return script_; }

 private:
  std::vector<Entry> script_;
  std::optional<std::string> fallback_;
};

// JSON-lines log of request/response pairs.
class Transcript {
 public:
  Transcript() = default;
  explicit Transcript(std::filesystem::path file) : file_(std::move(file)) {
    if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
    std::ofstream(file_, std::ios::trunc);
  }

  void append(const ChatRequest& req, const ChatResponse& resp) {
    nlohmann::json line = {
        {"request",
         {{"model", req.model},
          {"system", req.system},
          {"user", req.user},
          {"temperature", req.temperature},
          {"max_tokens", req.max_tokens}}},
        {"response", {{"text", resp.text}, {"finish_reason", std::string(to_string(resp.finish_reason))}}}};
    std::string s = line.dump();
    std::lock_guard lock(mu_);
    lines_.push_back(s);
    if (!file_.empty()) {
      std::ofstream out(file_, std::ios::app | std::ios::binary);
      out << s << '\n';
      if (!out) throw IoError("cannot append to transcript " + file_.string());
    }
  }

  const std::vector<std::string>& lines() const noexcept { return lines_; }
  std::size_t size() const noexcept { return lines_.size(); }

  std::string str() const {
    std::string out;
    for (const auto& l : lines_) out += l + "\n";
    return out;
  }

 private:
  std::filesystem::path file_;
  std::mutex mu_;
  std::vector<std::string> lines_;
};

struct LlmDefaults {
  std::string model;
  double temperature = 0.0;
  std::size_t max_tokens = 1024;
};

// Backend plus transcript; every complete() call is logged.
class LlmClient {
 public:
  LlmClient(ChatBackend& backend, Transcript& transcript, LlmDefaults defaults = {})
      : backend_(backend), transcript_(transcript), defaults_(std::move(defaults)) {}

  ChatRequest make_request(std::string system, std::string user) const {
    ChatRequest r;
    r.system = std::move(system);
    r.user = std::move(user);
    r.temperature = defaults_.temperature;
    r.max_tokens = defaults_.max_tokens;
    r.model = defaults_.model;
    return r;
  }

  ChatResponse complete(const ChatRequest& req) {
    if (req.user.empty()) throw InvalidArgument("chat request needs a user message");
    if (req.temperature < 0.0) throw InvalidArgument("temperature must be >= 0");
    ChatResponse resp = backend_.send(req);
    transcript_.append(req, resp);
    return resp;
  }

  ChatResponse complete(std::string system, std::string user) {
    return complete(make_request(std::move(system), std::move(user)));
  }

  Transcript& transcript() noexcept { return transcript_; }

 private:
  ChatBackend& backend_;
  Transcript& transcript_;
  LlmDefaults defaults_;
};

// ---------------------------------------------------------------------------
// Response parsing

namespace detail {

inline bool strip_one_decoration(std::string& s) {
  if (s.empty()) return false;
  // Bullets "-", "*", "•" followed by whitespace or end.
  for (std::string_view b : {"-", "*", "\xE2\x80\xA2"}) {
    if (s.rfind(b, 0) == 0 && (s.size() == b.size() || s[b.size()] == ' ' || s[b.size()] == '\t')) {
      s = text::trim(std::string_view(s).substr(b.size()));
      return true;
    }
  }
  // Enumerations "1." / "1)" followed by whitespace or end.
  std::size_t i = 0;
  while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')') &&
      (i + 1 == s.size() || s[i + 1] == ' ' || s[i + 1] == '\t')) {
    s = text::trim(std::string_view(s).substr(i + 1));
    return true;
  }
  // Matching surrounding quotes.
  if (s.size() >= 2) {
    const char f = s.front();
    if ((f == '"' || f == '\'' || f == '`') && s.back() == f) {
      s = text::trim(std::string_view(s).substr(1, s.size() - 2));
      return true;
    }
  }
  return false;
}

}  // namespace detail

// Splits on newlines and commas, strips bullets, enumerations and quotes,
// drops empties and keeps the first casing of case-insensitive duplicates.
inline std::vector<std::string> parse_name_list(std::string_view response) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  std::string piece;
  auto flush = [&] {
    std::string s = text::collapse_whitespace(piece);
    piece.clear();
    while (detail::strip_one_decoration(s)) {
    }
    if (s.empty()) return;
    if (seen.insert(text::ascii_lower(s)).second) out.push_back(std::move(s));
  };
  for (char c : response) {
    if (c == '\n' || c == ',' || c == '\r') {
      flush();
    } else {
      piece += c;
    }
  }
  flush();
  if (out.empty()) throw EmptyParse();
  return out;
}

}  // namespace taxoforge
