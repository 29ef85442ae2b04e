#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/embedding.hpp"
#include "aspectsum/labeler.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

// Reserved control token identifying the aspect a summary is wanted for,
// e.g. "<asp:decisions>". Distinct per aspect by construction.
std::string special_token_for(const AspectId& aspect);

// A merged, order-preserving input document for one (meeting, aspect) pair.
struct AspectFilteredDoc {
  std::string meeting_id;
  AspectId aspect;
  std::string special_token;
  std::vector<int> selected;  // sent_idx, strictly increasing
  std::string text;           // special_token + " " + selected texts, space-joined
  bool fallback_used = false;
  std::optional<std::string> target_summary;  // special_token + " " + reference

  bool operator==(const AspectFilteredDoc&) const = default;
};

// Per-sentence prediction consumed by the selector: the binary label and the
// probability that backs the empty-selection fallback.
struct SentencePrediction {
  int sent_idx = 0;
  std::map<AspectId, int> labels;
  std::map<AspectId, double> probs;
};

struct MeetingPredictions {
  std::string meeting_id;
  std::vector<SentencePrediction> rows;
};

// Sentences labeled 1 for the aspect, merged in transcript order. When the
// selection is empty, falls back to the top fallback_k sentences by
// predicted probability (transcript order, fallback_used = true).
AspectFilteredDoc select_for_aspect(const MeetingRecord& record,
                                    const MeetingPredictions& preds,
                                    const AspectId& aspect, int fallback_k = 10);

// One training example per (meeting, aspect) pair whose reference summary
// exists; targets carry the aspect token prefix. A meeting with all m
// summaries contributes m examples.
std::vector<AspectFilteredDoc> build_summarization_dataset(
    const std::vector<MeetingRecord>& records,
    const std::vector<MeetingPredictions>& preds, const std::vector<AspectId>& aspect_set,
    int fallback_k = 10);

struct OracleFilterConfig {
  double alpha = 0.46;
  EmbeddingBackendSpec backend = EmbeddingBackendSpec::hash_bow_test();
  // Granularity is fixed to the whole-summary embedding for this protocol.

  void validate() const;
};

// Upper-bound filtering from the reference summaries themselves: keep
// sentences whose cosine similarity to the whole-summary embedding exceeds
// alpha. No fallback; an empty selection is emitted empty. Aspects without a
// reference summary are skipped (with a warning).
std::map<AspectId, AspectFilteredDoc> oracle_filter(
    const MeetingRecord& record, const OracleFilterConfig& cfg, EmbeddingGateway& gateway,
    const std::vector<AspectId>& aspect_set, std::vector<std::string>* warnings = nullptr);

nlohmann::json doc_to_json(const AspectFilteredDoc& doc);
AspectFilteredDoc doc_from_json(const nlohmann::json& j);

void save_docs(const std::filesystem::path& path, const std::vector<AspectFilteredDoc>& docs);
std::vector<AspectFilteredDoc> load_docs(const std::filesystem::path& path);

void save_predictions(const std::filesystem::path& out_dir, const MeetingPredictions& preds);
std::vector<MeetingPredictions> load_predictions(const std::filesystem::path& preds_dir);

}  // namespace aspectsum
