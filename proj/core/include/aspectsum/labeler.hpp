#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "aspectsum/embedding.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

enum class SummaryGranularity { per_summary_sentence, whole_summary };

SummaryGranularity granularity_from_string(const std::string& s);
std::string to_string(SummaryGranularity g);

// Similarity stored for an aspect with no comparable summary unit (summary
// absent/empty, every unit under the length bound, or a degenerate vector).
inline constexpr double kNoEvidenceSimilarity = -1.0;

struct LabelerConfig {
  double alpha = 0.46;          // in (0, 1), strict threshold
  int min_sent_tokens = 4;      // exclusive: a 4-token sentence is rejected
  int min_summary_tokens = 6;   // exclusive, applied to the matched unit
  SummaryGranularity granularity = SummaryGranularity::per_summary_sentence;

  void validate() const;
  nlohmann::json to_json() const;
  static LabelerConfig from_json(const nlohmann::json& j);
};

// Binary relevance flags for one sentence, plus the similarity each flag was
// thresholded against. labels[a] == 1 implies similarities[a] > alpha.
struct AspectLabelVector {
  std::map<AspectId, int> labels;
  std::map<AspectId, double> similarities;

  bool all_zero() const;
  bool operator==(const AspectLabelVector&) const = default;
};

// One sentence against every configured aspect. Per aspect: the candidate
// summary units are the summary's sentences (per-summary-sentence mode) or
// the whole summary text (whole-summary mode), restricted to units longer
// than min_summary_tokens; the similarity is the max cosine against those
// units; the label is 1 iff similarity > alpha and the sentence is longer
// than min_sent_tokens.
AspectLabelVector label_sentence(const Sentence& sent,
                                 const std::map<AspectId, std::string>& summaries,
                                 const std::vector<AspectId>& aspect_set,
                                 const LabelerConfig& cfg, EmbeddingGateway& gateway);

std::vector<std::pair<Sentence, AspectLabelVector>> label_meeting(
    const MeetingRecord& record, const std::vector<AspectId>& aspect_set,
    const LabelerConfig& cfg, EmbeddingGateway& gateway);

// Corpus-level convenience: meetings that carry no reference summary at all
// cannot be labeled (no positive evidence exists) and get all-zero rows with
// sentinel similarities instead of a validation error.
struct LabeledMeeting;
LabeledMeeting label_meeting_for_corpus(const MeetingRecord& record,
                                        const std::vector<AspectId>& aspect_set,
                                        const LabelerConfig& cfg,
                                        EmbeddingGateway& gateway);

// --- persisted form ---------------------------------------------------------

struct LabeledSentence {
  int sent_idx = 0;
  AspectLabelVector v;

  bool operator==(const LabeledSentence&) const = default;
};

struct LabeledMeeting {
  std::string meeting_id;
  std::vector<LabeledSentence> rows;  // transcript order

  bool operator==(const LabeledMeeting&) const = default;
};

LabeledMeeting to_labeled_meeting(
    const std::string& meeting_id,
    const std::vector<std::pair<Sentence, AspectLabelVector>>& labeled);

// labels/{meeting_id}.jsonl, one {meeting_id, sent_idx, labels, similarities}
// row per sentence.
void save_labels(const std::filesystem::path& out_dir, const LabeledMeeting& meeting);
std::vector<LabeledMeeting> load_labels(const std::filesystem::path& labels_dir);

}  // namespace aspectsum
