#pragma once

#include <openssl/evp.h>

#include <array>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "taxoforge/corpus.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/rng.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

struct ColumnRef {
  std::string table_id;
  std::size_t col = 0;

  friend auto operator<=>(const ColumnRef&, const ColumnRef&) = default;
  friend bool operator==(const ColumnRef&, const ColumnRef&) = default;
};

struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }
  friend bool operator==(const EmbeddingVector&, const EmbeddingVector&) = default;
};

inline double dot(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) throw DimensionMismatch(a.dim(), b.dim());
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += static_cast<double>(a.values[i]) * b.values[i];
  return s;
}

inline double l2_norm(const EmbeddingVector& v) { return std::sqrt(dot(v, v)); }

inline double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

// ---------------------------------------------------------------------------
// Column serialization

enum class SerializationStyle { sbert_markup };

struct SerializationSpec {
  bool include_header = true;
  std::size_t max_distinct_cells = 128;
  SerializationStyle style = SerializationStyle::sbert_markup;
};

// "<s> <header>H</header> v1 v2 ..." over the first max_distinct_cells
// unique non-empty cells, in first-occurrence order.
inline std::string serialize_column(const Table& t, std::size_t col,
                                    const SerializationSpec& spec = {}) {
  if (col >= t.column_count()) {
    throw InvalidArgument("column " + std::to_string(col) + " out of range for table '" + t.id + "'");
  }
  if (spec.max_distinct_cells == 0) throw InvalidArgument("max_distinct_cells must be >= 1");
  std::string out = "<s>";
  if (spec.include_header) out += " <header>" + t.headers[col] + "</header>";
  std::set<std::string_view> seen;
  for (const auto& row : t.rows) {
    if (seen.size() >= spec.max_distinct_cells) break;
    const std::string& cell = row[col];
    if (cell.empty() || !seen.insert(cell).second) continue;
    out += ' ';
    out += cell;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Providers

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  // Stable identity; part of every cache key.
  virtual std::string id() const = 0;
  // One vector per input text, in input order.
  virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
};

// Maps every whitespace token to a pseudo-random direction derived from the
// token bytes and the seed, sums them and L2-normalizes. Texts sharing
// vocabulary land close together; disjoint texts are near-orthogonal. Only
// integer mixing, exact scaling and sqrt are used, so vectors are identical
// on every IEEE-754 platform.
class LocalHashProvider final : public EmbeddingProvider {
 public:
  explicit LocalHashProvider(std::size_t dim = 256, std::uint64_t seed = 0) : dim_(dim), seed_(seed) {
    if (dim == 0) throw InvalidArgument("embedding dimension must be >= 1");
  }

  std::string id() const override {
    return "local-hash:dim=" + std::to_string(dim_) + ":seed=" + std::to_string(seed_);
  }

  std::size_t dim() const noexcept { return dim_; }

  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    std::vector<EmbeddingVector> out;
    out.reserve(texts.size());
    for (const auto& t : texts) out.push_back(embed_one(t));
    return out;
  }

  EmbeddingVector embed_one(std::string_view text) const {
    std::vector<double> acc(dim_, 0.0);
    std::vector<double> tok(dim_);
    for (auto token : text::tokenize(text)) {
      std::uint64_t state = rng::fnv1a64(token, 0xcbf29ce484222325ULL ^ seed_);
      double norm2 = 0.0;
      for (std::size_t i = 0; i < dim_; ++i) {
        tok[i] = 2.0 * rng::unit_double(rng::splitmix64(state)) - 1.0;
        norm2 += tok[i] * tok[i];
      }
      const double inv = norm2 > 0.0 ? 1.0 / std::sqrt(norm2) : 0.0;
      for (std::size_t i = 0; i < dim_; ++i) acc[i] += tok[i] * inv;
    }
    double norm2 = 0.0;
    for (double v : acc) norm2 += v * v;
    EmbeddingVector v;
    v.values.resize(dim_, 0.0f);
    if (norm2 > 0.0) {
      const double inv = 1.0 / std::sqrt(norm2);
      for (std::size_t i = 0; i < dim_; ++i) v.values[i] = static_cast<float>(acc[i] * inv);
    }
    return v;
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

// Wraps a provider and counts embed calls and texts; used for cache checks.
class CountingProvider final : public EmbeddingProvider {
 public:
  explicit CountingProvider(EmbeddingProvider& inner) : inner_(inner) {}
  std::string id() const override { return inner_.id(); }
  std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override {
    ++calls_;
    texts_ += texts.size();
    return inner_.embed(texts);
  }
  std::size_t calls() const noexcept { return calls_; }
  std::size_t texts() const noexcept { return texts_; }

 private:
  EmbeddingProvider& inner_;
  std::size_t calls_ = 0;
  std::size_t texts_ = 0;
};

// ---------------------------------------------------------------------------
// Cache

inline std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

// Entry key: SHA-256 over provider id, a NUL separator, and the text.
inline std::string cache_key(std::string_view provider_id, std::string_view text) {
  std::string buf;
  buf.reserve(provider_id.size() + 1 + text.size());
  buf.append(provider_id);
  buf.push_back('\0');
  buf.append(text);
  return sha256_hex(buf);
}

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

// Entry layout: u32 dim, then dim IEEE-754 binary32 values, all little-endian.
inline std::string encode_vector(const EmbeddingVector& v) {
  std::string out;
  out.reserve(4 + 4 * v.dim());
  detail::put_u32_le(out, static_cast<std::uint32_t>(v.dim()));
  for (float f : v.values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, sizeof bits);
    detail::put_u32_le(out, bits);
  }
  return out;
}

inline std::optional<EmbeddingVector> decode_vector(std::string_view bytes) {
  if (bytes.size() < 4) return std::nullopt;
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::uint32_t dim = detail::get_u32_le(p);
  if (bytes.size() != 4 + 4 * static_cast<std::size_t>(dim)) return std::nullopt;
  EmbeddingVector v;
  v.values.resize(dim);
  for (std::uint32_t i = 0; i < dim; ++i) {
    const std::uint32_t bits = detail::get_u32_le(p + 4 + 4 * i);
    std::memcpy(&v.values[i], &bits, sizeof bits);
  }
  return v;
}

// Two-level cache: in-memory map in front of an optional directory with one
// file per entry. Writers go through a temp file and rename, so concurrent
// processes never observe a partial entry.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  explicit EmbeddingCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    if (!dir_.empty()) std::filesystem::create_directories(dir_);
  }

  const std::filesystem::path& dir() const noexcept { return dir_; }

  std::optional<EmbeddingVector> get(const std::string& key) {
    {
      std::lock_guard lock(mu_);
      if (auto it = mem_.find(key); it != mem_.end()) return it->second;
    }
    if (dir_.empty()) return std::nullopt;
    std::ifstream in(entry_path(key), std::ios::binary);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    auto v = decode_vector(buf.str());
    if (v) {
      std::lock_guard lock(mu_);
      mem_.emplace(key, *v);
    }
    return v;
  }

  void put(const std::string& key, const EmbeddingVector& v) {
    {
      std::lock_guard lock(mu_);
      mem_[key] = v;
    }
    if (dir_.empty()) return;
    static std::atomic<std::uint64_t> counter{0};
    const auto final_path = entry_path(key);
    auto tmp = final_path;
    tmp += ".tmp" + std::to_string(counter.fetch_add(1)) + "." +
           std::to_string(reinterpret_cast<std::uintptr_t>(this));
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write cache entry " + tmp.string());
      const std::string bytes = encode_vector(v);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw IoError("cannot write cache entry " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, final_path, ec);
    if (ec) {
      std::filesystem::remove(tmp, ec);
      throw IoError("cannot publish cache entry " + final_path.string());
    }
  }

  std::filesystem::path entry_path(const std::string& key) const { return dir_ / (key + ".vec"); }

 private:
  std::filesystem::path dir_;
  std::mutex mu_;
  std::unordered_map<std::string, EmbeddingVector> mem_;
};

// Embeds texts through the cache. Distinct uncached texts go to the provider
// in one call; identical texts share one vector.
inline std::vector<EmbeddingVector> embed_texts(std::span<const std::string> texts,
                                                EmbeddingProvider& provider, EmbeddingCache& cache) {
  const std::string pid = provider.id();
  std::vector<std::string> keys;
  keys.reserve(texts.size());
  std::vector<std::optional<EmbeddingVector>> found(texts.size());
  std::vector<std::string> missing;
  std::map<std::string, std::size_t> missing_index;  // key -> slot in `missing`
  std::vector<std::string> missing_keys;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    keys.push_back(cache_key(pid, texts[i]));
    found[i] = cache.get(keys.back());
    if (!found[i] && !missing_index.count(keys.back())) {
      missing_index.emplace(keys.back(), missing.size());
      missing.push_back(texts[i]);
      missing_keys.push_back(keys.back());
    }
  }
  std::optional<std::size_t> dim;
  for (const auto& f : found) {
    if (!f) continue;
    if (dim && *dim != f->dim()) throw DimensionMismatch(*dim, f->dim());
    dim = f->dim();
  }
  if (!missing.empty()) {
    auto fresh = provider.embed(missing);
    if (fresh.size() != missing.size()) {
      throw ProviderError(0, "expected " + std::to_string(missing.size()) + " vectors, got " +
                                 std::to_string(fresh.size()));
    }
    for (std::size_t j = 0; j < fresh.size(); ++j) {
      if (dim && *dim != fresh[j].dim()) throw DimensionMismatch(*dim, fresh[j].dim());
      dim = fresh[j].dim();
      for (float x : fresh[j].values) {
        if (!std::isfinite(x)) throw ProviderError(0, "non-finite embedding value");
      }
      cache.put(missing_keys[j], fresh[j]);
    }
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (!found[i]) found[i] = fresh[missing_index.at(keys[i])];
    }
  }
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (auto& f : found) out.push_back(std::move(*f));
  return out;
}

inline std::map<ColumnRef, EmbeddingVector> embed_columns(const std::vector<ColumnRef>& refs,
                                                          const Corpus& corpus,
                                                          EmbeddingProvider& provider,
                                                          EmbeddingCache& cache,
                                                          const SerializationSpec& spec = {}) {
  std::vector<std::string> texts;
  texts.reserve(refs.size());
  for (const auto& r : refs) texts.push_back(serialize_column(corpus.at(r.table_id), r.col, spec));
  auto vecs = embed_texts(texts, provider, cache);
  std::map<ColumnRef, EmbeddingVector> out;
  for (std::size_t i = 0; i < refs.size(); ++i) out.emplace(refs[i], std::move(vecs[i]));
  return out;
}

}  // namespace taxoforge
