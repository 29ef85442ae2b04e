#include "aspectsum/util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "aspectsum/errors.hpp"

namespace aspectsum {

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  size_t i = 0;
  const size_t n = text.size();
  while (i < n) {
    while (i < n && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    size_t start = i;
    while (i < n && !std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    if (i > start) out.emplace_back(text.substr(start, i - start));
  }
  return out;
}

int count_whitespace_tokens(std::string_view text) {
  int count = 0;
  bool in_token = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
    }
  }
  return count;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  auto is_final = [](char c) { return c == '.' || c == '!' || c == '?'; };
  size_t start = 0;
  const size_t n = text.size();
  size_t i = 0;
  while (i < n) {
    if (is_final(text[i])) {
      size_t j = i;
      while (j < n && is_final(text[j])) ++j;
      if (j >= n || std::isspace(static_cast<unsigned char>(text[j]))) {
        std::string unit(text.substr(start, j - start));
        // trim
        size_t b = unit.find_first_not_of(" \t\r\n");
        size_t e = unit.find_last_not_of(" \t\r\n");
        if (b != std::string::npos) out.push_back(unit.substr(b, e - b + 1));
        start = j;
      }
      i = j;
    } else {
      ++i;
    }
  }
  if (start < n) {
    std::string unit(text.substr(start));
    size_t b = unit.find_first_not_of(" \t\r\n");
    size_t e = unit.find_last_not_of(" \t\r\n");
    if (b != std::string::npos) out.push_back(unit.substr(b, e - b + 1));
  }
  return out;
}

std::string lowercase_ascii(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string truncate_tokens(std::string_view text, int max_tokens) {
  if (max_tokens <= 0) return "";
  int count = 0;
  bool in_token = false;
  for (size_t i = 0; i < text.size(); ++i) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      in_token = false;
    } else if (!in_token) {
      in_token = true;
      ++count;
      if (count > max_tokens) {
        std::string out(text.substr(0, i));
        size_t e = out.find_last_not_of(" \t\r\n");
        return e == std::string::npos ? "" : out.substr(0, e + 1);
      }
    }
  }
  return std::string(text);
}

uint64_t fnv1a64(std::string_view data, uint64_t seed) {
  uint64_t h = seed;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr)) {
    throw std::runtime_error("sha256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t Rng::next_below(uint64_t bound) {
  // Rejection sampling keeps the draw unbiased and stdlib-independent.
  uint64_t threshold = (~bound + 1) % bound;  // == 2^64 mod bound
  for (;;) {
    uint64_t r = next_u64();
    if (r >= threshold) return r % bound;
  }
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
  std::vector<size_t> pool(n);
  for (size_t i = 0; i < n; ++i) pool[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  std::sort(pool.begin(), pool.end());
  return pool;
}

uint64_t derive_seed(uint64_t base, std::string_view stage) {
  return fnv1a64(stage, base ^ 0x6a09e667f3bcc908ULL);
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw std::runtime_error("short write to " + path.string());
}

nlohmann::json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string(), e.byte, e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j,
                     int indent) {
  write_text_file(path, j.dump(indent) + "\n");
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, size_t)>& fn) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), "cannot open file");
  std::string line;
  size_t lineno = 0;
  size_t offset = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      offset += line.size() + 1;
      continue;
    }
    try {
      fn(nlohmann::json::parse(line), lineno);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(path.string(), offset + e.byte,
                       "line " + std::to_string(lineno) + ": " + e.what());
    }
    offset += line.size() + 1;
  }
}

std::vector<nlohmann::json> read_jsonl_file(const std::filesystem::path& path) {
  std::vector<nlohmann::json> rows;
  for_each_jsonl(path, [&](const nlohmann::json& j, size_t) { rows.push_back(j); });
  return rows;
}

void write_jsonl_file(const std::filesystem::path& path,
                      const std::vector<nlohmann::json>& rows) {
  std::string buf;
  for (const auto& row : rows) {
    buf += row.dump();
    buf += '\n';
  }
  write_text_file(path, buf);
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  return sha256_hex(read_text_file(path));
}

std::string format_fixed(double value, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
  return buf;
}

}  // namespace aspectsum
