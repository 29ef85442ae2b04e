#include "aspectsum/corpus.hpp"

#include <algorithm>
#include <set>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

CorpusFormat corpus_format_from_string(const std::string& s) {
  if (s == "ami-json") return CorpusFormat::ami_json;
  if (s == "icsi-json") return CorpusFormat::icsi_json;
  if (s == "generic-jsonl") return CorpusFormat::generic_jsonl;
  throw ConfigError("unknown corpus format '" + s +
                    "' (expected ami-json|icsi-json|generic-jsonl)");
}

std::string to_string(CorpusFormat f) {
  switch (f) {
    case CorpusFormat::ami_json: return "ami-json";
    case CorpusFormat::icsi_json: return "icsi-json";
    case CorpusFormat::generic_jsonl: return "generic-jsonl";
  }
  return "ami-json";
}

Split SplitSpec::resolve(const std::string& meeting_id) const {
  auto it = by_meeting.find(meeting_id);
  if (it != by_meeting.end()) return it->second;
  if (default_split) return *default_split;
  throw ConfigError("meeting '" + meeting_id + "' is missing from the split spec");
}

SplitSpec split_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("split spec must be a JSON object");
  SplitSpec spec;
  for (const auto& [key, value] : j.items()) {
    if (key == "default") {
      spec.default_split = split_from_string(value.get<std::string>());
      continue;
    }
    Split split = split_from_string(key);
    if (!value.is_array()) {
      throw ConfigError("split spec entry '" + key + "' must list meeting ids");
    }
    for (const auto& id : value) {
      const std::string meeting_id = id.get<std::string>();
      auto [it, inserted] = spec.by_meeting.emplace(meeting_id, split);
      if (!inserted && it->second != split) {
        throw ConfigError("meeting '" + meeting_id + "' assigned to two splits");
      }
    }
  }
  return spec;
}

SplitSpec load_split_spec(const fs::path& path) {
  return split_spec_from_json(read_json_file(path));
}

namespace {

const std::vector<AspectId>& icsi_aspects() {
  static const std::vector<AspectId> aspects = {"problems", "decisions"};
  return aspects;
}

MeetingRecord finish_record(MeetingRecord record, CorpusFormat format,
                            const SplitSpec& split_spec,
                            const std::vector<AspectId>& aspect_set,
                            const std::string& source_name) {
  if (format == CorpusFormat::icsi_json) {
    for (auto it = record.summaries.begin(); it != record.summaries.end();) {
      const auto& allowed = icsi_aspects();
      if (std::find(allowed.begin(), allowed.end(), it->first) == allowed.end()) {
        it = record.summaries.erase(it);
      } else {
        ++it;
      }
    }
  }
  record.split = split_spec.resolve(record.meeting_id);
  try {
    validate_meeting(record, aspect_set);
  } catch (const ValidationError& e) {
    throw ParseError(source_name, e.what());
  }
  return record;
}

}  // namespace

std::vector<MeetingRecord> ingest_corpus(const fs::path& source, CorpusFormat format,
                                         const SplitSpec& split_spec,
                                         const std::vector<AspectId>& aspect_set) {
  std::vector<MeetingRecord> records;

  if (format == CorpusFormat::generic_jsonl) {
    if (!fs::is_regular_file(source)) {
      throw ParseError(source.string(), "expected a JSONL file for generic-jsonl");
    }
    for_each_jsonl(source, [&](const nlohmann::json& j, size_t lineno) {
      const std::string name = source.string() + ":" + std::to_string(lineno);
      records.push_back(
          finish_record(meeting_from_json(j, name), format, split_spec, aspect_set, name));
    });
  } else {
    if (!fs::is_directory(source)) {
      throw ParseError(source.string(), "expected a directory of per-meeting JSON files");
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(source)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      records.push_back(finish_record(meeting_from_json(read_json_file(file), file.string()),
                                      format, split_spec, aspect_set, file.string()));
    }
  }

  if (records.empty()) {
    throw ParseError(source.string(), "no meetings found");
  }

  std::set<std::string> seen;
  for (const auto& record : records) {
    if (!seen.insert(record.meeting_id).second) {
      throw IntegrityError("duplicate meeting_id '" + record.meeting_id + "'");
    }
  }

  std::sort(records.begin(), records.end(),
            [](const MeetingRecord& a, const MeetingRecord& b) {
              return a.meeting_id < b.meeting_id;
            });
  return records;
}

CorpusManifest corpus_stats(const std::vector<MeetingRecord>& records) {
  if (records.empty()) throw ValidationError("empty corpus");
  CorpusManifest manifest;
  for (const auto& record : records) {
    SplitCounts& counts = manifest.splits[record.split];
    counts.meetings += 1;
    for (const auto& [aspect, text] : record.summaries) {
      if (!text.empty()) counts.aspect_coverage[aspect] += 1;
    }
    manifest.total_meetings += 1;
  }
  return manifest;
}

void save_corpus(const fs::path& out_dir, const std::vector<MeetingRecord>& records) {
  for (const auto& record : records) {
    const fs::path path = out_dir / to_string(record.split) / (record.meeting_id + ".json");
    write_json_file(path, meeting_to_json(record));
  }
  write_json_file(out_dir / "manifest.json", manifest_to_json(corpus_stats(records)));
}

std::vector<MeetingRecord> load_corpus(const fs::path& corpus_dir) {
  std::vector<MeetingRecord> records;
  for (const char* split : {"train", "val", "test"}) {
    const fs::path dir = corpus_dir / split;
    if (!fs::is_directory(dir)) continue;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json") {
        files.push_back(entry.path());
      }
    }
    std::sort(files.begin(), files.end());
    for (const auto& file : files) {
      MeetingRecord record = meeting_from_json(read_json_file(file), file.string());
      record.split = split_from_string(split);
      records.push_back(std::move(record));
    }
  }
  if (records.empty()) {
    throw ParseError(corpus_dir.string(), "no meetings found in corpus directory");
  }
  std::sort(records.begin(), records.end(),
            [](const MeetingRecord& a, const MeetingRecord& b) {
              return a.meeting_id < b.meeting_id;
            });
  return records;
}

}  // namespace aspectsum
