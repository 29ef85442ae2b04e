#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/selector.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

struct SummarizerConfig {
  // "echo-test" returns the input body; "leading-token-test" returns the
  // input's first token (aspect-routing diagnostic); "bigram-copy-test" is a
  // small trainable token model decoded with beam search.
  std::string backend_id = "echo-test";
  double learning_rate = 5e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double warmup_fraction = 0.1;  // warmup-then-linear-decay schedule
  int beam_size = 4;
  int max_input_tokens = 1024;
  int max_output_tokens = 256;
  int max_epochs = 10;
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static SummarizerConfig from_json(const nlohmann::json& j);
};

struct GeneratedSummary {
  std::string meeting_id;
  AspectId aspect;
  std::string text;  // non-empty; "NA." when the backend emits nothing
  bool fallback_input = false;  // copied from the source doc
};

struct SummarizerEpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  bool is_best = false;
};

struct SummarizerTrainLog {
  std::vector<SummarizerEpochLog> epochs;
  int truncated_inputs = 0;
};

class SummarizerBackend {
 public:
  virtual ~SummarizerBackend() = default;
  virtual void register_special_tokens(const std::vector<std::string>& tokens) = 0;
  virtual SummarizerTrainLog train(const std::vector<AspectFilteredDoc>& train_docs,
                                   const std::vector<AspectFilteredDoc>& val_docs,
                                   const SummarizerConfig& cfg) = 0;
  virtual std::string generate_one(const std::string& input_text,
                                   const SummarizerConfig& cfg) = 0;
  virtual void save(const std::filesystem::path& dir) const = 0;
  virtual void load(const std::filesystem::path& dir) = 0;
};

std::unique_ptr<SummarizerBackend> create_summarizer_backend(const std::string& backend_id);

// Trains one model over all aspects jointly and persists it under model_dir.
// Inputs and targets are token-truncated to the configured caps (counted in
// the returned log). Every doc must carry a target.
SummarizerTrainLog train_summarizer(const std::vector<AspectFilteredDoc>& train_docs,
                                    const std::vector<AspectFilteredDoc>& val_docs,
                                    const SummarizerConfig& cfg,
                                    const std::vector<AspectId>& aspect_set,
                                    const std::filesystem::path& model_dir);

struct GenerationResult {
  std::vector<GeneratedSummary> summaries;
  std::vector<std::string> errors;  // per-doc failures; the batch continues
};

GenerationResult generate(const std::filesystem::path& model_dir,
                          const std::vector<AspectFilteredDoc>& docs,
                          std::optional<SummarizerConfig> override_cfg = std::nullopt);

nlohmann::json summary_to_json(const GeneratedSummary& s);
GeneratedSummary summary_from_json(const nlohmann::json& j);
void save_summaries(const std::filesystem::path& path,
                    const std::vector<GeneratedSummary>& summaries);
std::vector<GeneratedSummary> load_summaries(const std::filesystem::path& path);

}  // namespace aspectsum
