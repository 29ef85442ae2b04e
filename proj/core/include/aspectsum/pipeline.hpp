#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/aspectsent.hpp"
#include "aspectsum/classifier.hpp"
#include "aspectsum/corpus.hpp"
#include "aspectsum/labeler.hpp"
#include "aspectsum/rouge.hpp"
#include "aspectsum/selector.hpp"
#include "aspectsum/summarizer.hpp"

namespace aspectsum {

// One configuration drives the whole two-stage run. Nested stage seeds left
// at 0 are derived from the global seed, so ablation rows share upstream
// randomness and differ only where their strategy differs.
struct PipelineConfig {
  std::vector<AspectId> aspects = default_aspects();

  // Either a raw source (+format/splits) or a pre-ingested corpus directory.
  std::optional<std::filesystem::path> source;
  CorpusFormat format = CorpusFormat::ami_json;
  std::optional<std::filesystem::path> splits_path;
  std::optional<std::filesystem::path> corpus_dir;
  std::optional<std::filesystem::path> labels_dir;  // reuse precomputed labels

  EmbeddingBackendSpec labeler_backend = EmbeddingBackendSpec::hash_bow_test();
  LabelerConfig labeler;
  FilterStrategy strategy = FilterStrategy::filtertrain(0.5);
  ClassifierConfig classifier;
  SummarizerConfig summarizer;
  std::optional<OracleFilterConfig> oracle;

  std::filesystem::path out_root;
  std::optional<std::filesystem::path> cache_dir;
  int fallback_k = 10;
  uint64_t seed = 0;

  void validate() const;
  nlohmann::json to_json() const;
  static PipelineConfig from_json(const nlohmann::json& j);

  // sha256 over the canonical config JSON minus out_root (a run moved to a
  // new directory is still the same experiment).
  std::string config_hash() const;
};

struct StageRecord {
  std::string name;
  std::map<std::string, std::string> inputs;   // relative path -> sha256
  std::map<std::string, std::string> outputs;  // relative path -> sha256
  double seconds = 0.0;
  bool completed = false;
};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::string tool_version;
  std::vector<StageRecord> stages;
  std::string failed_stage;  // empty on success

  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);

  // All output digests across stages, keyed by relative path.
  std::map<std::string, std::string> artifact_digests() const;
};

inline const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = {
      "ingest",          "pseudolabel", "build-dataset",
      "train-classifier", "predict",     "select",
      "train-summarizer", "summarize",   "evaluate"};
  return names;
}

// Executes ingest through evaluate under cfg.out_root, writing manifest.json
// after every stage. Stages whose recorded outputs still verify are skipped
// on rerun; a completed run performs no stage work. Any stage failure throws
// StageError with the manifest recording the failed stage.
RunManifest run_pipeline(const PipelineConfig& cfg);

struct AblationRow {
  std::string label;
  std::optional<ResultTable> table;  // absent when the strategy run failed
  std::string error;
};

struct AblationReport {
  std::vector<AblationRow> rows;
  std::string rendered;
};

// One full run per strategy, sharing ingestion and pseudo-labels. Failures
// are isolated per row.
AblationReport run_ablation(const PipelineConfig& cfg,
                            const std::vector<FilterStrategy>& strategies);

}  // namespace aspectsum
