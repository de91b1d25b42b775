#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <future>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "taxoforge/embedding.hpp"
#include "taxoforge/http.hpp"

namespace taxoforge {

struct RemoteEmbeddingConfig {
  std::string url;  // full endpoint, or origin (then /v1/embeddings)
  std::string model;
  std::string api_key;  // empty: no Authorization header
  std::size_t batch_size = 64;
  std::size_t max_in_flight = 8;
  http::RetryPolicy retry{};
};

// POST {"model", "input": [texts]} -> {"data": [{"embedding": [...]}, ...]}.
// Batches are sent with bounded parallelism; output order follows input order.
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit RemoteEmbeddingProvider(RemoteEmbeddingConfig cfg)
      : cfg_(std::move(cfg)), endpoint_(http::split_url(cfg_.url, "/v1/embeddings")) {
    if (cfg_.batch_size == 0 || cfg_.max_in_flight == 0) {
      throw InvalidArgument("batch_size and max_in_flight must be >= 1");
    }
  }

  std::string id() const override { return "remote:" + endpoint_.origin + endpoint_.path + ":" + cfg_.model; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<std::span<const std::string>> batches;
    for (std::size_t i = 0; i < texts.size(); i += cfg_.batch_size) {
      batches.push_back(texts.subspan(i, std::min(cfg_.batch_size, texts.size() - i)));
    }
    std::vector<std::vector<EmbeddingVector>> results(batches.size());
    for (std::size_t start = 0; start < batches.size(); start += cfg_.max_in_flight) {
      const std::size_t stop = std::min(batches.size(), start + cfg_.max_in_flight);
      std::vector<std::future<std::vector<EmbeddingVector>>> inflight;
      for (std::size_t b = start; b < stop; ++b) {
        inflight.push_back(std::async(std::launch::async, [this, batch = batches[b]] { return send(batch); }));
      }
      for (std::size_t b = start; b < stop; ++b) results[b] = inflight[b - start].get();
    }
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (auto& r : results) {
      for (auto& v : r) out.push_back(std::move(v));
    }
    return out;
  }

 private:
  std::vector<EmbeddingVector> send(std::span<const std::string> batch) const {
    nlohmann::json req = {{"model", cfg_.model}, {"input", std::vector<std::string>(batch.begin(), batch.end())}};
    const auto outcome = http::post_json(endpoint_, req.dump(), cfg_.api_key, cfg_.retry);
    if (outcome.failure != http::Failure::none) {
      throw ProviderError(outcome.response.status, outcome.detail);
    }
    std::vector<EmbeddingVector> out;
    try {
      const auto body = nlohmann::json::parse(outcome.response.body);
      const auto& data = body.at("data");
      if (!data.is_array() || data.size() != batch.size()) {
        throw ProviderError(outcome.response.status, "expected " + std::to_string(batch.size()) +
                                                         " embeddings in response");
      }
      for (const auto& item : data) {
        EmbeddingVector v;
        for (const auto& x : item.at("embedding")) {
          const double d = x.get<double>();
          if (!std::isfinite(d)) throw ProviderError(outcome.response.status, "non-finite embedding value");
          v.values.push_back(static_cast<float>(d));
        }
        out.push_back(std::move(v));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(outcome.response.status, std::string("malformed response: ") + e.what());
    }
    return out;
  }

  RemoteEmbeddingConfig cfg_;
  http::Endpoint endpoint_;
};

}  // namespace taxoforge
