#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace aspectsum {

// An aspect is a content category summarized independently. The set is fixed
// per run; aspect count m = aspect_set.size().
using AspectId = std::string;

inline const std::vector<AspectId>& default_aspects() {
  static const std::vector<AspectId> aspects = {"abstract", "problems", "actions",
                                                "decisions"};
  return aspects;
}

enum class Split { train, val, test };

std::string to_string(Split s);
Split split_from_string(const std::string& s);

struct Sentence {
  std::string meeting_id;
  int idx = 0;  // 0-based position in the transcript, contiguous per meeting
  std::optional<std::string> speaker;
  std::string text;
  int token_len = 0;  // whitespace token count of text, recomputable

  bool operator==(const Sentence&) const = default;
};

struct MeetingRecord {
  std::string meeting_id;
  std::vector<Sentence> sentences;              // original transcript order
  std::map<AspectId, std::string> summaries;    // reference summary per aspect
  Split split = Split::train;

  bool operator==(const MeetingRecord&) const = default;
};

struct SplitCounts {
  int meetings = 0;
  std::map<AspectId, int> aspect_coverage;  // meetings that carry this summary

  bool operator==(const SplitCounts&) const = default;
};

struct CorpusManifest {
  std::map<Split, SplitCounts> splits;
  int total_meetings = 0;

  bool operator==(const CorpusManifest&) const = default;
};

nlohmann::json meeting_to_json(const MeetingRecord& record);
MeetingRecord meeting_from_json(const nlohmann::json& j, const std::string& source_name);

nlohmann::json manifest_to_json(const CorpusManifest& manifest);
CorpusManifest manifest_from_json(const nlohmann::json& j);

// Validates the MeetingRecord invariants: non-empty sentences, contiguous idx
// from 0, token_len consistent with text, summaries only for declared aspects.
void validate_meeting(const MeetingRecord& record,
                      const std::vector<AspectId>& aspect_set);

}  // namespace aspectsum
