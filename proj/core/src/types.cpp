#include "aspectsum/types.hpp"

#include <algorithm>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::val: return "val";
    case Split::test: return "test";
  }
  return "train";
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "val" || s == "validation" || s == "dev") return Split::val;
  if (s == "test") return Split::test;
  throw ValidationError("unknown split '" + s + "' (expected train|val|test)");
}

nlohmann::json meeting_to_json(const MeetingRecord& record) {
  nlohmann::json sents = nlohmann::json::array();
  for (const auto& s : record.sentences) {
    nlohmann::json js{{"idx", s.idx}, {"text", s.text}};
    if (s.speaker) js["speaker"] = *s.speaker;
    sents.push_back(std::move(js));
  }
  return nlohmann::json{{"meeting_id", record.meeting_id},
                        {"sentences", std::move(sents)},
                        {"summaries", record.summaries},
                        {"split", to_string(record.split)}};
}

MeetingRecord meeting_from_json(const nlohmann::json& j, const std::string& source_name) {
  auto fail = [&](const std::string& msg) -> ParseError {
    return ParseError(source_name, msg);
  };
  if (!j.is_object()) throw fail("meeting record must be a JSON object");
  if (!j.contains("meeting_id") || !j["meeting_id"].is_string()) {
    throw fail("missing string field 'meeting_id'");
  }
  if (!j.contains("sentences") || !j["sentences"].is_array()) {
    throw fail("missing array field 'sentences'");
  }

  MeetingRecord record;
  record.meeting_id = j["meeting_id"].get<std::string>();

  int next_idx = 0;
  for (const auto& js : j["sentences"]) {
    Sentence s;
    s.meeting_id = record.meeting_id;
    if (js.is_string()) {
      s.text = js.get<std::string>();
      s.idx = next_idx;
    } else if (js.is_object()) {
      if (!js.contains("text") || !js["text"].is_string()) {
        throw fail("sentence " + std::to_string(next_idx) + " lacks string 'text'");
      }
      s.text = js["text"].get<std::string>();
      s.idx = js.contains("idx") ? js["idx"].get<int>() : next_idx;
      if (js.contains("speaker") && js["speaker"].is_string()) {
        s.speaker = js["speaker"].get<std::string>();
      }
    } else {
      throw fail("sentence " + std::to_string(next_idx) + " must be object or string");
    }
    if (s.idx != next_idx) {
      throw fail("sentence idx " + std::to_string(s.idx) + " breaks contiguity (expected " +
                 std::to_string(next_idx) + ")");
    }
    s.token_len = count_whitespace_tokens(s.text);
    record.sentences.push_back(std::move(s));
    ++next_idx;
  }

  if (j.contains("summaries")) {
    if (!j["summaries"].is_object()) throw fail("'summaries' must be an object");
    for (const auto& [aspect, text] : j["summaries"].items()) {
      if (!text.is_string()) throw fail("summary for '" + aspect + "' must be a string");
      record.summaries[aspect] = text.get<std::string>();
    }
  }
  if (j.contains("split")) {
    record.split = split_from_string(j["split"].get<std::string>());
  }
  return record;
}

nlohmann::json manifest_to_json(const CorpusManifest& manifest) {
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [split, counts] : manifest.splits) {
    splits[to_string(split)] = {{"meetings", counts.meetings},
                                {"aspect_coverage", counts.aspect_coverage}};
  }
  return nlohmann::json{{"splits", std::move(splits)},
                        {"total_meetings", manifest.total_meetings}};
}

CorpusManifest manifest_from_json(const nlohmann::json& j) {
  CorpusManifest manifest;
  for (const auto& [name, counts] : j.at("splits").items()) {
    SplitCounts sc;
    sc.meetings = counts.at("meetings").get<int>();
    if (counts.contains("aspect_coverage")) {
      sc.aspect_coverage =
          counts["aspect_coverage"].get<std::map<AspectId, int>>();
    }
    manifest.splits[split_from_string(name)] = std::move(sc);
  }
  manifest.total_meetings = j.at("total_meetings").get<int>();
  return manifest;
}

void validate_meeting(const MeetingRecord& record,
                      const std::vector<AspectId>& aspect_set) {
  if (record.meeting_id.empty()) throw ValidationError("meeting_id must be non-empty");
  if (record.sentences.empty()) {
    throw ValidationError("meeting '" + record.meeting_id + "' has no sentences");
  }
  for (size_t i = 0; i < record.sentences.size(); ++i) {
    const Sentence& s = record.sentences[i];
    if (s.idx != static_cast<int>(i)) {
      throw ValidationError("meeting '" + record.meeting_id + "': sentence idx " +
                            std::to_string(s.idx) + " at position " + std::to_string(i));
    }
    if (s.token_len != count_whitespace_tokens(s.text)) {
      throw ValidationError("meeting '" + record.meeting_id + "': sentence " +
                            std::to_string(i) + " token_len out of sync");
    }
  }
  for (const auto& [aspect, _] : record.summaries) {
    if (std::find(aspect_set.begin(), aspect_set.end(), aspect) == aspect_set.end()) {
      throw ValidationError("meeting '" + record.meeting_id + "' carries summary for '" +
                            aspect + "' which is not in the configured aspect set");
    }
  }
}

}  // namespace aspectsum
