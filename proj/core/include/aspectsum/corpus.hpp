#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/types.hpp"

namespace aspectsum {

enum class CorpusFormat { ami_json, icsi_json, generic_jsonl };

CorpusFormat corpus_format_from_string(const std::string& s);
std::string to_string(CorpusFormat f);

// Assigns every meeting_id to exactly one split. `default_split`, when set,
// covers meetings not listed explicitly.
struct SplitSpec {
  std::map<std::string, Split> by_meeting;
  std::optional<Split> default_split;

  Split resolve(const std::string& meeting_id) const;
};

// splits.json: {"train": [ids...], "val": [...], "test": [...]} plus an
// optional "default": "test" entry.
SplitSpec split_spec_from_json(const nlohmann::json& j);
SplitSpec load_split_spec(const std::filesystem::path& path);

// Parses raw corpus exports into canonical MeetingRecords, ordered by
// meeting_id. ami-json / icsi-json read a directory of per-meeting JSON
// files; generic-jsonl reads a single file with one meeting object per line.
// icsi-json restricts summaries to {problems, decisions}.
std::vector<MeetingRecord> ingest_corpus(const std::filesystem::path& source,
                                         CorpusFormat format,
                                         const SplitSpec& split_spec,
                                         const std::vector<AspectId>& aspect_set);

CorpusManifest corpus_stats(const std::vector<MeetingRecord>& records);

// Normalized corpus directory: corpus/{split}/{meeting_id}.json + manifest.json.
void save_corpus(const std::filesystem::path& out_dir,
                 const std::vector<MeetingRecord>& records);
std::vector<MeetingRecord> load_corpus(const std::filesystem::path& corpus_dir);

}  // namespace aspectsum
