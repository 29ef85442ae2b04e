#include "aspectsum/pipeline.hpp"

#include <algorithm>
#include <chrono>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"
#include "aspectsum/version.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

void PipelineConfig::validate() const {
  if (aspects.empty()) throw ConfigError("aspect set must be non-empty");
  if (!source && !corpus_dir) {
    throw ConfigError("configure either a raw corpus source or a corpus directory");
  }
  if (source && !corpus_dir && !splits_path && format != CorpusFormat::generic_jsonl) {
    // generic-jsonl may carry split fields inline; directory formats need a spec.
    throw ConfigError("raw source ingestion requires a splits file");
  }
  if (out_root.empty()) throw ConfigError("out_root must be set");
  if (fallback_k < 0) throw ConfigError("fallback_k must be nonnegative");
  labeler.validate();
  strategy.validate();
  classifier.validate();
  summarizer.validate();
  if (oracle) oracle->validate();
  if (labeler_backend.dim <= 0) throw ConfigError("labeler backend dim must be positive");
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j{{"aspects", aspects},
                   {"format", aspectsum::to_string(format)},
                   {"labeler_backend", labeler_backend.to_json()},
                   {"labeler", labeler.to_json()},
                   {"strategy", strategy.to_json()},
                   {"classifier", classifier.to_json()},
                   {"summarizer", summarizer.to_json()},
                   {"out_root", out_root.string()},
                   {"fallback_k", fallback_k},
                   {"seed", seed}};
  if (source) j["source"] = source->string();
  if (splits_path) j["splits"] = splits_path->string();
  if (corpus_dir) j["corpus_dir"] = corpus_dir->string();
  if (labels_dir) j["labels_dir"] = labels_dir->string();
  if (cache_dir) j["cache_dir"] = cache_dir->string();
  if (oracle) {
    j["oracle"] = {{"alpha", oracle->alpha}, {"backend", oracle->backend.to_json()}};
  }
  return j;
}

PipelineConfig PipelineConfig::from_json(const nlohmann::json& j) {
  PipelineConfig cfg;
  if (j.contains("aspects")) cfg.aspects = j["aspects"].get<std::vector<AspectId>>();
  if (j.contains("source")) cfg.source = fs::path(j["source"].get<std::string>());
  if (j.contains("format")) {
    cfg.format = corpus_format_from_string(j["format"].get<std::string>());
  }
  if (j.contains("splits")) cfg.splits_path = fs::path(j["splits"].get<std::string>());
  if (j.contains("corpus_dir")) {
    cfg.corpus_dir = fs::path(j["corpus_dir"].get<std::string>());
  }
  if (j.contains("labels_dir")) {
    cfg.labels_dir = fs::path(j["labels_dir"].get<std::string>());
  }
  if (j.contains("labeler_backend")) {
    cfg.labeler_backend = EmbeddingBackendSpec::from_json(j["labeler_backend"]);
  }
  if (j.contains("labeler")) cfg.labeler = LabelerConfig::from_json(j["labeler"]);
  if (j.contains("strategy")) cfg.strategy = FilterStrategy::from_json(j["strategy"]);
  if (j.contains("classifier")) {
    cfg.classifier = ClassifierConfig::from_json(j["classifier"]);
  }
  if (j.contains("summarizer")) {
    cfg.summarizer = SummarizerConfig::from_json(j["summarizer"]);
  }
  if (j.contains("oracle")) {
    OracleFilterConfig oc;
    oc.alpha = j["oracle"].at("alpha").get<double>();
    if (j["oracle"].contains("backend")) {
      oc.backend = EmbeddingBackendSpec::from_json(j["oracle"]["backend"]);
    }
    cfg.oracle = oc;
  }
  if (j.contains("out_root")) cfg.out_root = fs::path(j["out_root"].get<std::string>());
  if (j.contains("cache_dir")) cfg.cache_dir = fs::path(j["cache_dir"].get<std::string>());
  if (j.contains("fallback_k")) cfg.fallback_k = j["fallback_k"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  cfg.validate();
  return cfg;
}

std::string PipelineConfig::config_hash() const {
  nlohmann::json j = to_json();
  j.erase("out_root");
  return sha256_hex(j.dump());
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json stages_json = nlohmann::json::array();
  for (const auto& s : stages) {
    stages_json.push_back(nlohmann::json{{"name", s.name},
                                         {"inputs", s.inputs},
                                         {"outputs", s.outputs},
                                         {"seconds", s.seconds},
                                         {"completed", s.completed}});
  }
  return nlohmann::json{{"run_id", run_id},
                        {"config_hash", config_hash},
                        {"tool_version", tool_version},
                        {"stages", std::move(stages_json)},
                        {"failed_stage", failed_stage}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  RunManifest m;
  m.run_id = j.at("run_id").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.tool_version = j.at("tool_version").get<std::string>();
  for (const auto& s : j.at("stages")) {
    StageRecord r;
    r.name = s.at("name").get<std::string>();
    r.inputs = s.at("inputs").get<std::map<std::string, std::string>>();
    r.outputs = s.at("outputs").get<std::map<std::string, std::string>>();
    r.seconds = s.at("seconds").get<double>();
    r.completed = s.at("completed").get<bool>();
    m.stages.push_back(std::move(r));
  }
  if (j.contains("failed_stage")) m.failed_stage = j["failed_stage"].get<std::string>();
  return m;
}

std::map<std::string, std::string> RunManifest::artifact_digests() const {
  std::map<std::string, std::string> out;
  for (const auto& s : stages) {
    for (const auto& [path, digest] : s.outputs) out[path] = digest;
  }
  return out;
}

namespace {

// Stage executor: wraps digesting, timing, resume and manifest bookkeeping.
class PipelineRun {
 public:
  explicit PipelineRun(const PipelineConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    fs::create_directories(cfg_.out_root);
    manifest_.run_id = cfg_.config_hash().substr(0, 12);
    manifest_.config_hash = cfg_.config_hash();
    manifest_.tool_version = kToolVersion;
    load_previous();
  }

  RunManifest execute() {
    stage("ingest", [this](StageRecord& s) { stage_ingest(s); });
    stage("pseudolabel", [this](StageRecord& s) { stage_pseudolabel(s); });
    stage("build-dataset", [this](StageRecord& s) { stage_build_dataset(s); });
    stage("train-classifier", [this](StageRecord& s) { stage_train_classifier(s); });
    stage("predict", [this](StageRecord& s) { stage_predict(s); });
    stage("select", [this](StageRecord& s) { stage_select(s); });
    stage("train-summarizer", [this](StageRecord& s) { stage_train_summarizer(s); });
    stage("summarize", [this](StageRecord& s) { stage_summarize(s); });
    stage("evaluate", [this](StageRecord& s) { stage_evaluate(s); });
    save_manifest();
    return manifest_;
  }

 private:
  fs::path abs(const std::string& rel) const { return cfg_.out_root / rel; }

  std::string digest_of(const fs::path& path) const { return sha256_file_hex(path); }

  void record_dir(StageRecord& s, const std::string& rel_dir, bool as_input = false) {
    const fs::path dir = abs(rel_dir);
    if (!fs::exists(dir)) return;
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file()) files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      const std::string rel = fs::relative(f, cfg_.out_root).generic_string();
      (as_input ? s.inputs : s.outputs)[rel] = digest_of(f);
    }
  }

  void record_file(StageRecord& s, const std::string& rel, bool as_input = false) {
    const fs::path f = abs(rel);
    if (fs::exists(f)) (as_input ? s.inputs : s.outputs)[rel] = digest_of(f);
  }

  void record_external_input(StageRecord& s, const fs::path& path) {
    if (fs::is_regular_file(path)) {
      s.inputs[path.generic_string()] = digest_of(path);
    }
  }

  bool outputs_still_valid(const StageRecord& s) const {
    if (!s.completed || s.outputs.empty()) return false;
    for (const auto& [rel, digest] : s.outputs) {
      const fs::path f = abs(rel);
      if (!fs::exists(f) || sha256_file_hex(f) != digest) return false;
    }
    return true;
  }

  void load_previous() {
    const fs::path path = cfg_.out_root / "manifest.json";
    if (!fs::exists(path)) return;
    try {
      RunManifest previous = RunManifest::from_json(read_json_file(path));
      if (previous.config_hash == manifest_.config_hash) {
        previous_ = std::move(previous);
      }
    } catch (const std::exception&) {
      // Unreadable manifest: rerun from scratch.
    }
  }

  void save_manifest() {
    write_json_file(cfg_.out_root / "manifest.json", manifest_.to_json());
  }

  template <typename Fn>
  void stage(const std::string& name, Fn&& body) {
    if (previous_) {
      for (const auto& s : previous_->stages) {
        if (s.name == name && outputs_still_valid(s)) {
          manifest_.stages.push_back(s);
          save_manifest();
          return;
        }
      }
      // A stale stage invalidates everything after it.
      previous_.reset();
    }

    StageRecord record;
    record.name = name;
    const auto start = std::chrono::steady_clock::now();
    try {
      body(record);
    } catch (const std::exception& e) {
      manifest_.failed_stage = name;
      manifest_.stages.push_back(record);
      save_manifest();
      throw StageError(name, e.what());
    }
    record.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    record.completed = true;
    manifest_.stages.push_back(record);
    save_manifest();
  }

  uint64_t stage_seed(uint64_t configured, const char* name) const {
    return configured != 0 ? configured : derive_seed(cfg_.seed, name);
  }

  // --- stages ---------------------------------------------------------------

  void stage_ingest(StageRecord& s) {
    std::vector<MeetingRecord> records;
    if (cfg_.source) {
      record_external_input(s, *cfg_.source);
      SplitSpec splits;
      if (cfg_.splits_path) {
        record_external_input(s, *cfg_.splits_path);
        splits = load_split_spec(*cfg_.splits_path);
      } else {
        splits.default_split = Split::train;  // generic-jsonl with inline splits
      }
      records = ingest_corpus(*cfg_.source, cfg_.format, splits, cfg_.aspects);
    } else {
      records = load_corpus(*cfg_.corpus_dir);
      for (const auto& record : records) validate_meeting(record, cfg_.aspects);
    }
    save_corpus(abs("corpus"), records);
    record_dir(s, "corpus");
  }

  void stage_pseudolabel(StageRecord& s) {
    record_dir(s, "corpus", /*as_input=*/true);
    const auto records = load_corpus(abs("corpus"));

    if (cfg_.labels_dir) {
      // Reuse shared labels (ablation rows share stage-1 artifacts).
      const auto labeled = load_labels(*cfg_.labels_dir);
      for (const auto& meeting : labeled) save_labels(abs("labels"), meeting);
      record_dir(s, "labels");
      return;
    }

    EmbeddingGateway gateway(cfg_.labeler_backend, cfg_.cache_dir);
    for (const auto& record : records) {
      save_labels(abs("labels"),
                  label_meeting_for_corpus(record, cfg_.aspects, cfg_.labeler, gateway));
    }
    record_dir(s, "labels");
  }

  void stage_build_dataset(StageRecord& s) {
    record_dir(s, "corpus", true);
    record_dir(s, "labels", true);
    const auto records = load_corpus(abs("corpus"));
    const auto labeled = load_labels(abs("labels"));

    AspectSentDataset constructed = build_aspectsent(labeled, records);

    FilterStrategy strategy = cfg_.strategy;
    strategy.seed = stage_seed(strategy.seed, "downsample");
    std::vector<std::string> warnings;
    AspectSentDataset filtered;
    filtered.examples = apply_filter_strategy(constructed.examples, strategy, &warnings);
    filtered.stats = compute_stats(filtered.examples);

    save_aspectsent(abs("aspectsent"), filtered);
    write_json_file(abs("aspectsent") / "stats.json",
                    nlohmann::json{{"constructed", stats_to_json(constructed.stats)},
                                   {"after_strategy", stats_to_json(filtered.stats)},
                                   {"strategy", strategy.label()},
                                   {"warnings", warnings}});
    record_dir(s, "aspectsent");
  }

  void stage_train_classifier(StageRecord& s) {
    record_dir(s, "aspectsent", true);
    const auto examples = load_aspectsent(abs("aspectsent"));
    std::vector<AspectSentExample> train, val;
    for (const auto& ex : examples) {
      if (ex.split == Split::train) train.push_back(ex);
      if (ex.split == Split::val) val.push_back(ex);
    }

    ClassifierConfig clf = cfg_.classifier;
    clf.aspects = cfg_.aspects;
    // Checkpoints are selected at the operating point used downstream.
    clf.predict_threshold = cfg_.strategy.predict_threshold;
    clf.seed = stage_seed(clf.seed, "classifier");

    auto result = train_classifier(train, val, clf, cfg_.cache_dir);
    save_classifier(abs("model"), result.model, result.log);
    if (!result.warnings.empty()) {
      write_json_file(abs("model") / "warnings.json", nlohmann::json(result.warnings));
    }
    record_dir(s, "model");
  }

  void stage_predict(StageRecord& s) {
    record_dir(s, "corpus", true);
    record_dir(s, "model", true);
    const auto records = load_corpus(abs("corpus"));
    const auto model = load_classifier(abs("model"));
    const double threshold = cfg_.strategy.predict_threshold;

    for (const auto& record : records) {
      auto predicted = predict_labels(model, record.sentences, threshold, cfg_.cache_dir);
      MeetingPredictions preds;
      preds.meeting_id = record.meeting_id;
      for (size_t i = 0; i < predicted.size(); ++i) {
        SentencePrediction row;
        row.sent_idx = record.sentences[i].idx;
        row.labels = predicted[i].second.labels;
        row.probs = predicted[i].first.probs;
        preds.rows.push_back(std::move(row));
      }
      save_predictions(abs("preds"), preds);
    }

    // Classifier quality on the (strategy-filtered) test rows of the dataset.
    const auto examples = load_aspectsent(abs("aspectsent"));
    std::vector<std::map<AspectId, int>> pred, gold;
    std::vector<Sentence> test_sents;
    for (const auto& ex : examples) {
      if (ex.split != Split::test) continue;
      Sentence sent;
      sent.meeting_id = ex.meeting_id;
      sent.idx = ex.sent_idx;
      sent.text = ex.text;
      sent.token_len = count_whitespace_tokens(ex.text);
      test_sents.push_back(std::move(sent));
      std::map<AspectId, int> g;
      for (const auto& aspect : cfg_.aspects) {
        auto it = ex.labels.find(aspect);
        g[aspect] = (it != ex.labels.end() && it->second == 1) ? 1 : 0;
      }
      gold.push_back(std::move(g));
    }
    if (!test_sents.empty()) {
      auto predicted = predict_labels(model, test_sents, threshold, cfg_.cache_dir);
      for (const auto& [probs, labels] : predicted) pred.push_back(labels.labels);
      write_json_file(abs("preds") / "classifier_report.json",
                      report_to_json(score_classifier(pred, gold)));
    }
    record_dir(s, "preds");
  }

  void stage_select(StageRecord& s) {
    record_dir(s, "corpus", true);
    record_dir(s, "preds", true);
    const auto records = load_corpus(abs("corpus"));
    auto all_preds = load_predictions(abs("preds"));

    std::vector<MeetingRecord> train_val, test;
    for (const auto& record : records) {
      (record.split == Split::test ? test : train_val).push_back(record);
    }

    const auto train_val_docs =
        build_summarization_dataset(train_val, all_preds, cfg_.aspects, cfg_.fallback_k);
    std::vector<AspectFilteredDoc> train_docs, val_docs;
    {
      std::map<std::string, Split> split_of;
      for (const auto& record : records) split_of[record.meeting_id] = record.split;
      for (const auto& doc : train_val_docs) {
        (split_of[doc.meeting_id] == Split::val ? val_docs : train_docs).push_back(doc);
      }
    }

    // Test docs cover every configured aspect, reference or not.
    std::map<std::string, const MeetingPredictions*> by_id;
    for (const auto& p : all_preds) by_id[p.meeting_id] = &p;
    std::vector<AspectFilteredDoc> test_docs;
    for (const auto& record : test) {
      auto it = by_id.find(record.meeting_id);
      if (it == by_id.end()) {
        throw ValidationError("no predictions for test meeting '" + record.meeting_id + "'");
      }
      for (const auto& aspect : cfg_.aspects) {
        test_docs.push_back(
            select_for_aspect(record, *it->second, aspect, cfg_.fallback_k));
      }
    }

    save_docs(abs("filtered") / "train.jsonl", train_docs);
    save_docs(abs("filtered") / "val.jsonl", val_docs);
    save_docs(abs("filtered") / "test.jsonl", test_docs);
    record_dir(s, "filtered");
  }

  void stage_train_summarizer(StageRecord& s) {
    record_dir(s, "filtered", true);
    const auto train_docs = load_docs(abs("filtered") / "train.jsonl");
    const auto val_docs = load_docs(abs("filtered") / "val.jsonl");

    SummarizerConfig sum = cfg_.summarizer;
    sum.seed = stage_seed(sum.seed, "summarizer");
    train_summarizer(train_docs, val_docs, sum, cfg_.aspects, abs("summodel"));
    record_dir(s, "summodel");
  }

  void stage_summarize(StageRecord& s) {
    record_dir(s, "filtered", true);
    record_dir(s, "summodel", true);
    const auto test_docs = load_docs(abs("filtered") / "test.jsonl");
    auto result = generate(abs("summodel"), test_docs);
    save_summaries(abs("summaries") / "test.jsonl", result.summaries);
    if (!result.errors.empty()) {
      write_json_file(abs("summaries") / "generation_errors.json",
                      nlohmann::json(result.errors));
    }
    record_dir(s, "summaries");
  }

  void stage_evaluate(StageRecord& s) {
    record_dir(s, "corpus", true);
    record_dir(s, "summaries", true);
    const auto records = load_corpus(abs("corpus"));
    const auto summaries = load_summaries(abs("summaries") / "test.jsonl");

    ResultTable table = evaluate_run(summaries, records, cfg_.strategy.label());
    nlohmann::json report{{"rouge", table.to_json()},
                          {"rendered", render_result_tables({table}, cfg_.aspects)}};
    const fs::path clf_report = abs("preds") / "classifier_report.json";
    if (fs::exists(clf_report)) report["classifier"] = read_json_file(clf_report);
    write_json_file(abs("report.json"), report);
    write_text_file(abs("report.txt"), report["rendered"].get<std::string>());
    record_file(s, "report.json");
    record_file(s, "report.txt");
  }

  PipelineConfig cfg_;
  RunManifest manifest_;
  std::optional<RunManifest> previous_;
};

}  // namespace

RunManifest run_pipeline(const PipelineConfig& cfg) {
  return PipelineRun(cfg).execute();
}

AblationReport run_ablation(const PipelineConfig& cfg,
                            const std::vector<FilterStrategy>& strategies) {
  cfg.validate();
  if (strategies.empty()) throw ConfigError("ablation needs at least one strategy");

  // Shared stage-1 artifacts: ingest + pseudo-labels computed once.
  const fs::path shared = cfg.out_root / "shared";
  {
    PipelineConfig head = cfg;
    head.out_root = shared;
    head.validate();
    // Run only the first two stages by executing a full config but stopping
    // early is not supported; instead ingest/label directly.
    std::vector<MeetingRecord> records;
    if (head.source) {
      SplitSpec splits;
      if (head.splits_path) {
        splits = load_split_spec(*head.splits_path);
      } else {
        splits.default_split = Split::train;
      }
      records = ingest_corpus(*head.source, head.format, splits, head.aspects);
    } else {
      records = load_corpus(*head.corpus_dir);
    }
    save_corpus(shared / "corpus", records);

    if (head.labels_dir) {
      for (const auto& meeting : load_labels(*head.labels_dir)) {
        save_labels(shared / "labels", meeting);
      }
    } else if (!fs::exists(shared / "labels")) {
      EmbeddingGateway gateway(head.labeler_backend, head.cache_dir);
      for (const auto& record : records) {
        save_labels(shared / "labels",
                    label_meeting_for_corpus(record, head.aspects, head.labeler, gateway));
      }
    }
  }

  AblationReport report;
  std::vector<ResultTable> tables;
  std::vector<std::string> failed;
  for (const auto& strategy : strategies) {
    AblationRow row;
    row.label = strategy.label();
    try {
      PipelineConfig sub = cfg;
      sub.strategy = strategy;
      sub.source.reset();
      sub.splits_path.reset();
      sub.corpus_dir = shared / "corpus";
      sub.labels_dir = shared / "labels";
      sub.out_root = cfg.out_root / "ablation" / row.label;
      run_pipeline(sub);
      row.table =
          ResultTable::from_json(read_json_file(sub.out_root / "report.json").at("rouge"));
      tables.push_back(*row.table);
    } catch (const std::exception& e) {
      row.error = e.what();
      failed.push_back(row.label);
    }
    report.rows.push_back(std::move(row));
  }

  report.rendered = render_result_tables(tables, cfg.aspects, failed);
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& row : report.rows) {
    nlohmann::json rj{{"label", row.label}};
    if (row.table) rj["rouge"] = row.table->to_json();
    if (!row.error.empty()) rj["error"] = row.error;
    rows_json.push_back(std::move(rj));
  }
  write_json_file(cfg.out_root / "ablation_report.json",
                  nlohmann::json{{"rows", std::move(rows_json)},
                                 {"rendered", report.rendered}});
  write_text_file(cfg.out_root / "ablation_report.txt", report.rendered);
  return report;
}

}  // namespace aspectsum
