#include "aspectsum/selector.hpp"

#include <algorithm>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

std::string special_token_for(const AspectId& aspect) {
  return "<asp:" + aspect + ">";
}

namespace {

AspectFilteredDoc assemble_doc(const MeetingRecord& record, const AspectId& aspect,
                               std::vector<int> selected, bool fallback_used) {
  AspectFilteredDoc doc;
  doc.meeting_id = record.meeting_id;
  doc.aspect = aspect;
  doc.special_token = special_token_for(aspect);
  std::sort(selected.begin(), selected.end());
  doc.selected = std::move(selected);
  doc.fallback_used = fallback_used;
  doc.text = doc.special_token;
  for (int idx : doc.selected) {
    doc.text += ' ';
    doc.text += record.sentences[static_cast<size_t>(idx)].text;
  }
  return doc;
}

}  // namespace

AspectFilteredDoc select_for_aspect(const MeetingRecord& record,
                                    const MeetingPredictions& preds,
                                    const AspectId& aspect, int fallback_k) {
  if (preds.rows.size() != record.sentences.size()) {
    throw ValidationError("predictions cover " + std::to_string(preds.rows.size()) +
                          " sentences but meeting '" + record.meeting_id + "' has " +
                          std::to_string(record.sentences.size()));
  }

  std::vector<int> selected;
  bool aspect_known = false;
  for (const auto& row : preds.rows) {
    auto it = row.labels.find(aspect);
    if (it == row.labels.end()) continue;
    aspect_known = true;
    if (it->second == 1) selected.push_back(row.sent_idx);
  }
  if (!aspect_known) {
    throw ConfigError("predictions carry no labels for aspect '" + aspect + "'");
  }

  bool fallback = false;
  if (selected.empty()) {
    // Nothing predicted relevant; a summarizer still needs input. Take the
    // top-k most probable sentences and restore transcript order.
    fallback = true;
    std::vector<std::pair<double, int>> ranked;
    for (const auto& row : preds.rows) {
      auto it = row.probs.find(aspect);
      const double p = it == row.probs.end() ? 0.0 : it->second;
      ranked.emplace_back(p, row.sent_idx);
    }
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    const size_t k = std::min<size_t>(ranked.size(), static_cast<size_t>(std::max(0, fallback_k)));
    for (size_t i = 0; i < k; ++i) selected.push_back(ranked[i].second);
  }

  return assemble_doc(record, aspect, std::move(selected), fallback);
}

std::vector<AspectFilteredDoc> build_summarization_dataset(
    const std::vector<MeetingRecord>& records,
    const std::vector<MeetingPredictions>& preds, const std::vector<AspectId>& aspect_set,
    int fallback_k) {
  std::map<std::string, const MeetingPredictions*> by_id;
  for (const auto& p : preds) by_id[p.meeting_id] = &p;

  std::vector<AspectFilteredDoc> out;
  for (const auto& record : records) {
    auto it = by_id.find(record.meeting_id);
    if (it == by_id.end()) {
      throw ValidationError("no predictions for meeting '" + record.meeting_id + "'");
    }
    for (const auto& aspect : aspect_set) {
      auto sit = record.summaries.find(aspect);
      if (sit == record.summaries.end() || sit->second.empty()) continue;
      AspectFilteredDoc doc = select_for_aspect(record, *it->second, aspect, fallback_k);
      doc.target_summary = doc.special_token + " " + sit->second;
      out.push_back(std::move(doc));
    }
  }
  return out;
}

void OracleFilterConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ValidationError("oracle alpha must be in (0,1)");
  }
}

std::map<AspectId, AspectFilteredDoc> oracle_filter(
    const MeetingRecord& record, const OracleFilterConfig& cfg, EmbeddingGateway& gateway,
    const std::vector<AspectId>& aspect_set, std::vector<std::string>* warnings) {
  cfg.validate();

  std::vector<std::string> texts;
  texts.reserve(record.sentences.size());
  for (const auto& s : record.sentences) texts.push_back(s.text);
  const auto sent_vecs = gateway.embed_batch(texts);

  std::map<AspectId, AspectFilteredDoc> out;
  for (const auto& aspect : aspect_set) {
    auto sit = record.summaries.find(aspect);
    if (sit == record.summaries.end() || sit->second.empty()) {
      if (warnings) {
        warnings->push_back("meeting '" + record.meeting_id + "' has no '" + aspect +
                            "' summary; oracle filter skips it");
      }
      continue;
    }
    const EmbeddingVector summary_vec = gateway.embed_one(sit->second);
    const bool summary_degenerate = l2_norm(summary_vec.values) == 0.0;

    std::vector<int> selected;
    for (size_t i = 0; i < record.sentences.size(); ++i) {
      if (summary_degenerate || l2_norm(sent_vecs[i].values) == 0.0) continue;
      if (cosine_similarity(sent_vecs[i], summary_vec) > cfg.alpha) {
        selected.push_back(record.sentences[i].idx);
      }
    }
    if (selected.empty() && warnings) {
      warnings->push_back("oracle filter kept no sentences for meeting '" +
                          record.meeting_id + "', aspect '" + aspect + "'");
    }
    out[aspect] = assemble_doc(record, aspect, std::move(selected), /*fallback_used=*/false);
  }
  return out;
}

nlohmann::json doc_to_json(const AspectFilteredDoc& doc) {
  nlohmann::json j{{"meeting_id", doc.meeting_id},
                   {"aspect", doc.aspect},
                   {"special_token", doc.special_token},
                   {"selected", doc.selected},
                   {"text", doc.text},
                   {"fallback_used", doc.fallback_used}};
  if (doc.target_summary) j["target_summary"] = *doc.target_summary;
  return j;
}

AspectFilteredDoc doc_from_json(const nlohmann::json& j) {
  AspectFilteredDoc doc;
  doc.meeting_id = j.at("meeting_id").get<std::string>();
  doc.aspect = j.at("aspect").get<AspectId>();
  doc.special_token = j.at("special_token").get<std::string>();
  doc.selected = j.at("selected").get<std::vector<int>>();
  doc.text = j.at("text").get<std::string>();
  doc.fallback_used = j.at("fallback_used").get<bool>();
  if (j.contains("target_summary")) {
    doc.target_summary = j["target_summary"].get<std::string>();
  }
  return doc;
}

void save_docs(const fs::path& path, const std::vector<AspectFilteredDoc>& docs) {
  std::vector<nlohmann::json> rows;
  rows.reserve(docs.size());
  for (const auto& doc : docs) rows.push_back(doc_to_json(doc));
  write_jsonl_file(path, rows);
}

std::vector<AspectFilteredDoc> load_docs(const fs::path& path) {
  std::vector<AspectFilteredDoc> docs;
  for_each_jsonl(path, [&](const nlohmann::json& j, size_t) {
    docs.push_back(doc_from_json(j));
  });
  return docs;
}

void save_predictions(const fs::path& out_dir, const MeetingPredictions& preds) {
  std::vector<nlohmann::json> rows;
  rows.reserve(preds.rows.size());
  for (const auto& row : preds.rows) {
    rows.push_back(nlohmann::json{{"meeting_id", preds.meeting_id},
                                  {"sent_idx", row.sent_idx},
                                  {"labels", row.labels},
                                  {"probs", row.probs}});
  }
  write_jsonl_file(out_dir / (preds.meeting_id + ".jsonl"), rows);
}

std::vector<MeetingPredictions> load_predictions(const fs::path& preds_dir) {
  if (!fs::is_directory(preds_dir)) {
    throw ParseError(preds_dir.string(), "predictions directory not found");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(preds_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());

  std::vector<MeetingPredictions> out;
  for (const auto& file : files) {
    MeetingPredictions preds;
    for_each_jsonl(file, [&](const nlohmann::json& j, size_t) {
      if (preds.meeting_id.empty()) {
        preds.meeting_id = j.at("meeting_id").get<std::string>();
      }
      SentencePrediction row;
      row.sent_idx = j.at("sent_idx").get<int>();
      row.labels = j.at("labels").get<std::map<AspectId, int>>();
      row.probs = j.at("probs").get<std::map<AspectId, double>>();
      preds.rows.push_back(std::move(row));
    });
    if (!preds.rows.empty()) out.push_back(std::move(preds));
  }
  return out;
}

}  // namespace aspectsum
