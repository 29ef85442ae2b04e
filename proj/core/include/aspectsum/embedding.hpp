#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace aspectsum {

struct EmbeddingVector {
  std::vector<double> values;
  int dim = 0;
  std::string backend_id;
};

enum class Normalization { none, unit_l2 };

Normalization normalization_from_string(const std::string& s);
std::string to_string(Normalization n);

struct EmbeddingBackendSpec {
  std::string backend_id;  // "hash-bow-test", or an http(s):// endpoint
  int dim = 64;
  Normalization normalization = Normalization::unit_l2;
  uint64_t seed = 0x517cc1b727220a95ULL;  // hash-bow projection seed

  static EmbeddingBackendSpec hash_bow_test(int dim = 64);

  nlohmann::json to_json() const;
  static EmbeddingBackendSpec from_json(const nlohmann::json& j);
};

// Backend plug-in contract: same-length real vector per input string.
// Backends return raw vectors; the gateway owns normalization and caching.
class EmbeddingBackend {
 public:
  virtual ~EmbeddingBackend() = default;
  virtual std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) = 0;
};

// Deterministic offline backend: seeded hashed bag-of-words projection.
// Each whitespace token adds 1 to the bucket fnv1a64(token, seed) % dim.
class HashBowBackend : public EmbeddingBackend {
 public:
  explicit HashBowBackend(const EmbeddingBackendSpec& spec) : spec_(spec) {}
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  EmbeddingBackendSpec spec_;
};

// Adapter for a local embedding service: POST {endpoint}/embed with
// {"texts": [...]}, expects {"vectors": [[...], ...]}.
class HttpEmbeddingBackend : public EmbeddingBackend {
 public:
  HttpEmbeddingBackend(std::string endpoint, int expected_dim);
  std::vector<std::vector<double>> embed(const std::vector<std::string>& texts) override;

 private:
  std::string endpoint_;
  int expected_dim_;
};

// Resolves a spec to a backend. Unknown ids yield nullptr, letting the
// gateway run cache-only (misses then surface as backend errors).
std::unique_ptr<EmbeddingBackend> create_backend(const EmbeddingBackendSpec& spec);

// Caching front to a backend. Cache entries are keyed by exact text within a
// per-backend namespace and persisted to cache/{backend_id}.jsonl as
// {text_sha256, vector} records (raw backend output, pre-normalization).
class EmbeddingGateway {
 public:
  EmbeddingGateway(EmbeddingBackendSpec spec,
                   std::optional<std::filesystem::path> cache_dir = std::nullopt);

  // One vector per input, same order, byte-identical across repeated calls.
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts);
  EmbeddingVector embed_one(const std::string& text);

  const EmbeddingBackendSpec& spec() const { return spec_; }
  size_t cache_size() const { return cache_.size(); }

 private:
  EmbeddingVector finalize(const std::vector<double>& raw) const;
  void load_cache_file();
  void append_cache(const std::vector<std::pair<std::string, std::vector<double>>>& rows);

  EmbeddingBackendSpec spec_;
  std::unique_ptr<EmbeddingBackend> backend_;
  std::optional<std::filesystem::path> cache_path_;
  std::map<std::string, std::vector<double>> cache_;  // sha256(text) -> raw vector
  std::mutex mutex_;
};

// dot(a,b) / (|a||b|), clamped to [-1, 1]. Errors on dimension mismatch or a
// zero-norm vector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

double l2_norm(const std::vector<double>& values);

}  // namespace aspectsum
