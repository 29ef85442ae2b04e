#include "aspectsum/labeler.hpp"

#include <algorithm>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

SummaryGranularity granularity_from_string(const std::string& s) {
  if (s == "per-summary-sentence") return SummaryGranularity::per_summary_sentence;
  if (s == "whole-summary") return SummaryGranularity::whole_summary;
  throw ConfigError("unknown granularity '" + s +
                    "' (expected per-summary-sentence|whole-summary)");
}

std::string to_string(SummaryGranularity g) {
  return g == SummaryGranularity::per_summary_sentence ? "per-summary-sentence"
                                                       : "whole-summary";
}

void LabelerConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("labeler alpha must be in (0,1), got " + std::to_string(alpha));
  }
  if (min_sent_tokens < 0 || min_summary_tokens < 0) {
    throw ValidationError("labeler length bounds must be nonnegative");
  }
}

nlohmann::json LabelerConfig::to_json() const {
  return nlohmann::json{{"alpha", alpha},
                        {"min_sent_tokens", min_sent_tokens},
                        {"min_summary_tokens", min_summary_tokens},
                        {"granularity", to_string(granularity)}};
}

LabelerConfig LabelerConfig::from_json(const nlohmann::json& j) {
  LabelerConfig cfg;
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("min_sent_tokens")) cfg.min_sent_tokens = j["min_sent_tokens"].get<int>();
  if (j.contains("min_summary_tokens")) {
    cfg.min_summary_tokens = j["min_summary_tokens"].get<int>();
  }
  if (j.contains("granularity")) {
    cfg.granularity = granularity_from_string(j["granularity"].get<std::string>());
  }
  cfg.validate();
  return cfg;
}

bool AspectLabelVector::all_zero() const {
  return std::all_of(labels.begin(), labels.end(),
                     [](const auto& kv) { return kv.second == 0; });
}

namespace {

// Summary units eligible to be matched against, per the active granularity.
std::vector<std::string> eligible_units(const std::string& summary,
                                        const LabelerConfig& cfg) {
  std::vector<std::string> units;
  if (cfg.granularity == SummaryGranularity::per_summary_sentence) {
    units = split_sentences(summary);
  } else {
    units.push_back(summary);
  }
  std::erase_if(units, [&](const std::string& u) {
    return count_whitespace_tokens(u) <= cfg.min_summary_tokens;
  });
  return units;
}

AspectLabelVector label_from_vectors(
    const Sentence& sent, const EmbeddingVector& sent_vec,
    const std::vector<AspectId>& aspect_set,
    const std::map<AspectId, std::vector<EmbeddingVector>>& unit_vecs,
    const LabelerConfig& cfg) {
  AspectLabelVector out;
  const bool sent_degenerate = l2_norm(sent_vec.values) == 0.0;
  for (const auto& aspect : aspect_set) {
    double sim = kNoEvidenceSimilarity;
    auto it = unit_vecs.find(aspect);
    if (it != unit_vecs.end() && !sent_degenerate) {
      for (const auto& unit_vec : it->second) {
        if (l2_norm(unit_vec.values) == 0.0) continue;
        sim = std::max(sim, cosine_similarity(sent_vec, unit_vec));
      }
    }
    const bool positive =
        sim > cfg.alpha && sent.token_len > cfg.min_sent_tokens;
    out.labels[aspect] = positive ? 1 : 0;
    out.similarities[aspect] = sim;
  }
  return out;
}

std::map<AspectId, std::vector<std::string>> collect_units(
    const std::map<AspectId, std::string>& summaries,
    const std::vector<AspectId>& aspect_set, const LabelerConfig& cfg) {
  std::map<AspectId, std::vector<std::string>> units;
  bool any = false;
  for (const auto& aspect : aspect_set) {
    auto it = summaries.find(aspect);
    if (it == summaries.end() || it->second.empty()) continue;
    any = true;
    auto u = eligible_units(it->second, cfg);
    if (!u.empty()) units[aspect] = std::move(u);
  }
  if (!any) {
    throw ValidationError("labeling requires a summary for at least one aspect");
  }
  return units;
}

std::map<AspectId, std::vector<EmbeddingVector>> embed_units(
    const std::map<AspectId, std::vector<std::string>>& units,
    EmbeddingGateway& gateway) {
  std::map<AspectId, std::vector<EmbeddingVector>> out;
  for (const auto& [aspect, texts] : units) {
    out[aspect] = gateway.embed_batch(texts);
  }
  return out;
}

}  // namespace

AspectLabelVector label_sentence(const Sentence& sent,
                                 const std::map<AspectId, std::string>& summaries,
                                 const std::vector<AspectId>& aspect_set,
                                 const LabelerConfig& cfg, EmbeddingGateway& gateway) {
  cfg.validate();
  auto unit_vecs = embed_units(collect_units(summaries, aspect_set, cfg), gateway);
  return label_from_vectors(sent, gateway.embed_one(sent.text), aspect_set, unit_vecs, cfg);
}

std::vector<std::pair<Sentence, AspectLabelVector>> label_meeting(
    const MeetingRecord& record, const std::vector<AspectId>& aspect_set,
    const LabelerConfig& cfg, EmbeddingGateway& gateway) {
  cfg.validate();
  validate_meeting(record, aspect_set);
  auto unit_vecs = embed_units(collect_units(record.summaries, aspect_set, cfg), gateway);

  std::vector<std::string> texts;
  texts.reserve(record.sentences.size());
  for (const auto& s : record.sentences) texts.push_back(s.text);
  auto sent_vecs = gateway.embed_batch(texts);

  std::vector<std::pair<Sentence, AspectLabelVector>> out;
  out.reserve(record.sentences.size());
  for (size_t i = 0; i < record.sentences.size(); ++i) {
    out.emplace_back(record.sentences[i],
                     label_from_vectors(record.sentences[i], sent_vecs[i], aspect_set,
                                        unit_vecs, cfg));
  }
  return out;
}

LabeledMeeting label_meeting_for_corpus(const MeetingRecord& record,
                                        const std::vector<AspectId>& aspect_set,
                                        const LabelerConfig& cfg,
                                        EmbeddingGateway& gateway) {
  const bool has_summary =
      std::any_of(record.summaries.begin(), record.summaries.end(),
                  [](const auto& kv) { return !kv.second.empty(); });
  if (has_summary) {
    return to_labeled_meeting(record.meeting_id,
                              label_meeting(record, aspect_set, cfg, gateway));
  }
  LabeledMeeting out;
  out.meeting_id = record.meeting_id;
  for (const auto& sent : record.sentences) {
    LabeledSentence row;
    row.sent_idx = sent.idx;
    for (const auto& aspect : aspect_set) {
      row.v.labels[aspect] = 0;
      row.v.similarities[aspect] = kNoEvidenceSimilarity;
    }
    out.rows.push_back(std::move(row));
  }
  return out;
}

LabeledMeeting to_labeled_meeting(
    const std::string& meeting_id,
    const std::vector<std::pair<Sentence, AspectLabelVector>>& labeled) {
  LabeledMeeting out;
  out.meeting_id = meeting_id;
  for (const auto& [sent, v] : labeled) out.rows.push_back({sent.idx, v});
  return out;
}

void save_labels(const fs::path& out_dir, const LabeledMeeting& meeting) {
  std::vector<nlohmann::json> rows;
  rows.reserve(meeting.rows.size());
  for (const auto& row : meeting.rows) {
    rows.push_back(nlohmann::json{{"meeting_id", meeting.meeting_id},
                                  {"sent_idx", row.sent_idx},
                                  {"labels", row.v.labels},
                                  {"similarities", row.v.similarities}});
  }
  write_jsonl_file(out_dir / (meeting.meeting_id + ".jsonl"), rows);
}

std::vector<LabeledMeeting> load_labels(const fs::path& labels_dir) {
  if (!fs::is_directory(labels_dir)) {
    throw ParseError(labels_dir.string(), "labels directory not found");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(labels_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<LabeledMeeting> out;
  for (const auto& file : files) {
    LabeledMeeting meeting;
    for_each_jsonl(file, [&](const nlohmann::json& j, size_t) {
      if (meeting.meeting_id.empty()) {
        meeting.meeting_id = j.at("meeting_id").get<std::string>();
      }
      LabeledSentence row;
      row.sent_idx = j.at("sent_idx").get<int>();
      row.v.labels = j.at("labels").get<std::map<AspectId, int>>();
      row.v.similarities = j.at("similarities").get<std::map<AspectId, double>>();
      meeting.rows.push_back(std::move(row));
    });
    if (!meeting.rows.empty()) out.push_back(std::move(meeting));
  }
  return out;
}

}  // namespace aspectsum
