#include "aspectsum/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "httplib.h"

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

Normalization normalization_from_string(const std::string& s) {
  if (s == "none") return Normalization::none;
  if (s == "unit-l2") return Normalization::unit_l2;
  throw ConfigError("unknown normalization '" + s + "' (expected none|unit-l2)");
}

std::string to_string(Normalization n) {
  return n == Normalization::none ? "none" : "unit-l2";
}

EmbeddingBackendSpec EmbeddingBackendSpec::hash_bow_test(int dim) {
  EmbeddingBackendSpec spec;
  spec.backend_id = "hash-bow-test";
  spec.dim = dim;
  spec.normalization = Normalization::unit_l2;
  return spec;
}

nlohmann::json EmbeddingBackendSpec::to_json() const {
  return nlohmann::json{{"backend_id", backend_id},
                        {"dim", dim},
                        {"normalization", to_string(normalization)},
                        {"seed", seed}};
}

EmbeddingBackendSpec EmbeddingBackendSpec::from_json(const nlohmann::json& j) {
  EmbeddingBackendSpec spec;
  spec.backend_id = j.at("backend_id").get<std::string>();
  if (j.contains("dim")) spec.dim = j["dim"].get<int>();
  if (j.contains("normalization")) {
    spec.normalization = normalization_from_string(j["normalization"].get<std::string>());
  }
  if (j.contains("seed")) spec.seed = j["seed"].get<uint64_t>();
  if (spec.dim <= 0) throw ConfigError("embedding dim must be positive");
  return spec;
}

std::vector<std::vector<double>> HashBowBackend::embed(
    const std::vector<std::string>& texts) {
  std::vector<std::vector<double>> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    std::vector<double> vec(static_cast<size_t>(spec_.dim), 0.0);
    for (const auto& token : whitespace_tokens(text)) {
      vec[fnv1a64(token, spec_.seed) % static_cast<uint64_t>(spec_.dim)] += 1.0;
    }
    out.push_back(std::move(vec));
  }
  return out;
}

HttpEmbeddingBackend::HttpEmbeddingBackend(std::string endpoint, int expected_dim)
    : endpoint_(std::move(endpoint)), expected_dim_(expected_dim) {}

std::vector<std::vector<double>> HttpEmbeddingBackend::embed(
    const std::vector<std::string>& texts) {
  httplib::Client client(endpoint_);
  client.set_read_timeout(60, 0);
  nlohmann::json body{{"texts", texts}};
  auto res = client.Post("/embed", body.dump(), "application/json");
  if (!res || res->status != 200) {
    throw BackendError("embedding service at " + endpoint_ + " unavailable" +
                       (res ? " (status " + std::to_string(res->status) + ")" : ""));
  }
  nlohmann::json parsed;
  try {
    parsed = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::parse_error& e) {
    throw BackendError("embedding service returned invalid JSON: " + std::string(e.what()));
  }
  if (!parsed.contains("vectors") || !parsed["vectors"].is_array() ||
      parsed["vectors"].size() != texts.size()) {
    throw BackendError("embedding service response must carry one vector per input");
  }
  std::vector<std::vector<double>> out;
  for (const auto& v : parsed["vectors"]) {
    auto vec = v.get<std::vector<double>>();
    if (static_cast<int>(vec.size()) != expected_dim_) {
      throw BackendError("embedding service returned dim " + std::to_string(vec.size()) +
                         ", expected " + std::to_string(expected_dim_));
    }
    out.push_back(std::move(vec));
  }
  return out;
}

std::unique_ptr<EmbeddingBackend> create_backend(const EmbeddingBackendSpec& spec) {
  if (spec.backend_id == "hash-bow-test") {
    return std::make_unique<HashBowBackend>(spec);
  }
  if (spec.backend_id.rfind("http://", 0) == 0 || spec.backend_id.rfind("https://", 0) == 0) {
    return std::make_unique<HttpEmbeddingBackend>(spec.backend_id, spec.dim);
  }
  return nullptr;  // cache-only
}

EmbeddingGateway::EmbeddingGateway(EmbeddingBackendSpec spec,
                                   std::optional<fs::path> cache_dir)
    : spec_(std::move(spec)), backend_(create_backend(spec_)) {
  if (cache_dir) {
    // Slashes in http ids would explode into directories.
    std::string file_id = spec_.backend_id;
    std::replace(file_id.begin(), file_id.end(), '/', '_');
    std::replace(file_id.begin(), file_id.end(), ':', '_');
    cache_path_ = *cache_dir / (file_id + ".jsonl");
    load_cache_file();
  }
}

void EmbeddingGateway::load_cache_file() {
  if (!cache_path_ || !fs::exists(*cache_path_)) return;
  for_each_jsonl(*cache_path_, [&](const nlohmann::json& j, size_t) {
    cache_[j.at("text_sha256").get<std::string>()] =
        j.at("vector").get<std::vector<double>>();
  });
}

void EmbeddingGateway::append_cache(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows) {
  if (!cache_path_ || rows.empty()) return;
  if (cache_path_->has_parent_path()) fs::create_directories(cache_path_->parent_path());
  std::ofstream out(*cache_path_, std::ios::app);
  if (!out) throw std::runtime_error("cannot append to cache " + cache_path_->string());
  for (const auto& [key, vec] : rows) {
    out << nlohmann::json{{"text_sha256", key}, {"vector", vec}}.dump() << '\n';
  }
}

EmbeddingVector EmbeddingGateway::finalize(const std::vector<double>& raw) const {
  EmbeddingVector v;
  v.values = raw;
  v.dim = static_cast<int>(raw.size());
  v.backend_id = spec_.backend_id;
  if (spec_.normalization == Normalization::unit_l2) {
    double norm = l2_norm(v.values);
    if (norm > 0.0) {
      for (double& x : v.values) x /= norm;
    }
  }
  for (double x : v.values) {
    if (!std::isfinite(x)) throw BackendError("backend produced a non-finite embedding");
  }
  return v;
}

std::vector<EmbeddingVector> EmbeddingGateway::embed_batch(
    const std::vector<std::string>& texts) {
  if (texts.empty()) throw ValidationError("embed_batch requires at least one text");

  std::scoped_lock lock(mutex_);
  std::vector<std::string> keys(texts.size());
  std::vector<size_t> misses;
  for (size_t i = 0; i < texts.size(); ++i) {
    keys[i] = sha256_hex(texts[i]);
    if (!cache_.count(keys[i])) misses.push_back(i);
  }

  if (!misses.empty()) {
    if (!backend_) {
      throw BackendError("backend '" + spec_.backend_id +
                         "' unavailable and cache misses " + std::to_string(misses.size()) +
                         " of " + std::to_string(texts.size()) + " texts");
    }
    std::vector<std::string> miss_texts;
    miss_texts.reserve(misses.size());
    for (size_t i : misses) miss_texts.push_back(texts[i]);
    auto raw = backend_->embed(miss_texts);
    if (raw.size() != miss_texts.size()) {
      throw BackendError("backend returned " + std::to_string(raw.size()) + " vectors for " +
                         std::to_string(miss_texts.size()) + " texts");
    }
    std::vector<std::pair<std::string, std::vector<double>>> fresh;
    for (size_t k = 0; k < misses.size(); ++k) {
      if (static_cast<int>(raw[k].size()) != spec_.dim) {
        throw BackendError("backend returned dim " + std::to_string(raw[k].size()) +
                           ", spec says " + std::to_string(spec_.dim));
      }
      const std::string& key = keys[misses[k]];
      if (!cache_.count(key)) fresh.emplace_back(key, raw[k]);
      cache_[key] = std::move(raw[k]);
    }
    append_cache(fresh);
  }

  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& key : keys) out.push_back(finalize(cache_.at(key)));
  return out;
}

EmbeddingVector EmbeddingGateway::embed_one(const std::string& text) {
  return embed_batch({text}).front();
}

double l2_norm(const std::vector<double>& values) {
  double sum = 0.0;
  for (double x : values) sum += x * x;
  return std::sqrt(sum);
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim != b.dim) {
    throw ValidationError("cosine_similarity dimension mismatch: " + std::to_string(a.dim) +
                          " vs " + std::to_string(b.dim));
  }
  const double norm_a = l2_norm(a.values);
  const double norm_b = l2_norm(b.values);
  if (norm_a == 0.0 || norm_b == 0.0) {
    throw ValidationError("cosine_similarity is undefined for a zero-norm vector");
  }
  double dot = 0.0;
  for (int i = 0; i < a.dim; ++i) dot += a.values[i] * b.values[i];
  return std::clamp(dot / (norm_a * norm_b), -1.0, 1.0);
}

}  // namespace aspectsum
