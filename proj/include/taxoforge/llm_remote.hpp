#pragma once

#include <string>
#include <utility>

#include <json.hpp>

#include "taxoforge/http.hpp"
#include "taxoforge/llm.hpp"

namespace taxoforge {

struct RemoteChatConfig {
  std::string url;      // base URL; a bare origin gets /v1/chat/completions
  std::string api_key;  // empty: no Authorization header
  http::RetryPolicy retry{};
};

// OpenAI-compatible chat completions:
// {"model", "messages": [{"role", "content"}], "temperature", "max_tokens"}
//   -> {"choices": [{"message": {"content"}, "finish_reason"}]}
class RemoteChatBackend final : public ChatBackend {
 public:
  explicit RemoteChatBackend(RemoteChatConfig cfg)
      : cfg_(std::move(cfg)), endpoint_(resolve(cfg_.url)) {}

  std::string id() const override { return "remote:" + endpoint_.origin + endpoint_.path; }

  const http::Endpoint& endpoint() const noexcept { return endpoint_; }

  ChatResponse send(const ChatRequest& req) override {
    nlohmann::json messages = nlohmann::json::array();
    if (!req.system.empty()) messages.push_back({{"role", "system"}, {"content", req.system}});
    messages.push_back({{"role", "user"}, {"content", req.user}});
    const nlohmann::json body = {{"model", req.model},
                                 {"messages", std::move(messages)},
                                 {"temperature", req.temperature},
                                 {"max_tokens", req.max_tokens}};
    const auto outcome = http::post_json(endpoint_, body.dump(), cfg_.api_key, cfg_.retry);
    switch (outcome.failure) {
      case http::Failure::none: break;
      case http::Failure::timeout: throw TimeoutError("chat request timed out: " + outcome.detail);
      case http::Failure::transport: throw BackendError(0, outcome.detail);
      case http::Failure::status: throw BackendError(outcome.response.status, outcome.detail);
    }
    try {
      const auto j = nlohmann::json::parse(outcome.response.body);
      const auto& choice = j.at("choices").at(0);
      ChatResponse resp;
      const auto& content = choice.at("message").at("content");
      resp.text = content.is_null() ? std::string() : content.get<std::string>();
      const std::string reason = choice.value("finish_reason", std::string("stop"));
      resp.finish_reason = reason == "length" ? FinishReason::length : FinishReason::stop;
      return resp;
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(outcome.response.status, std::string("malformed response: ") + e.what());
    }
  }

 private:
  static http::Endpoint resolve(const std::string& url) {
    auto ep = http::split_url(url, "/v1/chat/completions");
    const std::string suffix = "/chat/completions";
    if (ep.path.size() < suffix.size() || ep.path.compare(ep.path.size() - suffix.size(), suffix.size(), suffix) != 0) {
      ep.path += suffix;
    }
    return ep;
  }

  RemoteChatConfig cfg_;
  http::Endpoint endpoint_;
};

}  // namespace taxoforge
