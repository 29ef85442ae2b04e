#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace aspectsum {

// --- text -----------------------------------------------------------------

// Whitespace tokenization. Token boundaries are runs of std::isspace bytes.
std::vector<std::string> whitespace_tokens(std::string_view text);
int count_whitespace_tokens(std::string_view text);

// Splits clean written text into sentences: a unit ends at a run of
// sentence-final punctuation (. ! ?) followed by whitespace or end of text.
// Empty units are dropped.
std::vector<std::string> split_sentences(std::string_view text);

std::string lowercase_ascii(std::string_view text);

// Joins the first max_tokens whitespace tokens; identity when under the cap.
std::string truncate_tokens(std::string_view text, int max_tokens);

// --- hashing / rng ----------------------------------------------------------

uint64_t fnv1a64(std::string_view data, uint64_t seed = 0xcbf29ce484222325ULL);

// SHA-256 hex digest (via libcrypto); used for cache keys and artifact digests.
std::string sha256_hex(std::string_view data);

// splitmix64 generator. Hand-rolled so sampling and shuffles are reproducible
// across standard libraries, unlike std::uniform_int_distribution.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64();
  // Uniform in [0, bound). bound must be > 0.
  uint64_t next_below(uint64_t bound);
  double next_unit();  // [0, 1)

  // Fisher-Yates sample of k distinct indices from [0, n), returned sorted.
  std::vector<size_t> sample_indices(size_t n, size_t k);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      std::swap(v[i], v[static_cast<size_t>(next_below(i + 1))]);
    }
  }

 private:
  uint64_t state_;
};

// Derives a per-stage seed from the run seed so ablation rows share upstream
// randomness but differ where their stage differs.
uint64_t derive_seed(uint64_t base, std::string_view stage);

// --- files ------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j,
                     int indent = 2);

// One JSON object per line. The callback receives the 1-based line number.
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, size_t)>& fn);
std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path);
void write_jsonl_file(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& rows);

std::string sha256_file_hex(const std::filesystem::path& path);

// Fixed-precision decimal rendering (reports use two decimals).
std::string format_fixed(double value, int decimals);

}  // namespace aspectsum
