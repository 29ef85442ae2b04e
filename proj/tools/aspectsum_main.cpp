// aspectsum: weak-supervision pipeline for aspect-based meeting summarization.
//
// Subcommands cover the individual stages (ingest .. evaluate), the full
// pipeline (run), the filtering-strategy sweep (ablate), the reference-summary
// upper bound (oracle-filter), and corpus statistics (stats).
//
// Exit codes: 0 success, 1 validation/config error, 2 stage failure.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "aspectsum/aspectsent.hpp"
#include "aspectsum/classifier.hpp"
#include "aspectsum/corpus.hpp"
#include "aspectsum/embedding.hpp"
#include "aspectsum/errors.hpp"
#include "aspectsum/labeler.hpp"
#include "aspectsum/pipeline.hpp"
#include "aspectsum/rouge.hpp"
#include "aspectsum/selector.hpp"
#include "aspectsum/summarizer.hpp"
#include "aspectsum/util.hpp"
#include "aspectsum/version.hpp"

namespace fs = std::filesystem;
using namespace aspectsum;

namespace {

std::vector<AspectId> parse_aspects(const std::string& arg) {
  if (arg.empty() || arg == "all") return default_aspects();
  std::vector<AspectId> aspects;
  std::string current;
  for (char c : arg) {
    if (c == ',') {
      if (!current.empty()) aspects.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  if (!current.empty()) aspects.push_back(current);
  if (aspects.empty()) throw ConfigError("empty aspect list");
  return aspects;
}

EmbeddingBackendSpec backend_spec(const std::string& id, int dim) {
  EmbeddingBackendSpec spec;
  spec.backend_id = id;
  spec.dim = dim;
  return spec;
}

std::optional<fs::path> opt_path(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return fs::path(s);
}

int cmd_ingest(const std::string& source, const std::string& format,
               const std::string& splits, const std::string& out,
               const std::string& aspects_arg) {
  const auto aspects = parse_aspects(aspects_arg);
  SplitSpec spec;
  if (!splits.empty()) {
    spec = load_split_spec(splits);
  } else {
    spec.default_split = Split::train;
  }
  auto records = ingest_corpus(source, corpus_format_from_string(format), spec, aspects);
  save_corpus(out, records);
  std::cout << manifest_to_json(corpus_stats(records)).dump(2) << "\n";
  return 0;
}

int cmd_stats(const std::string& corpus) {
  const auto records = load_corpus(corpus);
  std::cout << manifest_to_json(corpus_stats(records)).dump(2) << "\n";
  return 0;
}

int cmd_pseudolabel(const std::string& corpus, double alpha, const std::string& backend,
                    int dim, const std::string& granularity, const std::string& out,
                    const std::string& cache, const std::string& aspects_arg) {
  const auto aspects = parse_aspects(aspects_arg);
  LabelerConfig cfg;
  cfg.alpha = alpha;
  cfg.granularity = granularity_from_string(granularity);
  cfg.validate();
  EmbeddingGateway gateway(backend_spec(backend, dim), opt_path(cache));
  const auto records = load_corpus(corpus);
  size_t rows = 0;
  for (const auto& record : records) {
    auto labeled = label_meeting_for_corpus(record, aspects, cfg, gateway);
    rows += labeled.rows.size();
    save_labels(out, labeled);
  }
  std::cout << "labeled " << rows << " sentences across " << records.size()
            << " meetings\n";
  return 0;
}

int cmd_build_dataset(const std::string& labels, const std::string& corpus,
                      const std::string& strategy_label, double predict_threshold,
                      int downsample_to, uint64_t seed, const std::string& out) {
  FilterStrategy strategy = FilterStrategy::parse(strategy_label);
  if (strategy.kind == FilterKind::filtertrain &&
      strategy_label.find('-') == std::string::npos) {
    strategy.predict_threshold = predict_threshold;
  }
  if (strategy.kind == FilterKind::down_sampling && downsample_to > 0) {
    strategy.downsample_irrelevant_to = downsample_to;
  }
  strategy.seed = seed;
  strategy.validate();

  const auto records = load_corpus(corpus);
  const auto labeled = load_labels(labels);
  AspectSentDataset constructed = build_aspectsent(labeled, records);
  std::vector<std::string> warnings;
  AspectSentDataset filtered;
  filtered.examples = apply_filter_strategy(constructed.examples, strategy, &warnings);
  filtered.stats = compute_stats(filtered.examples);
  save_aspectsent(out, filtered);
  write_json_file(fs::path(out) / "stats.json",
                  nlohmann::json{{"constructed", stats_to_json(constructed.stats)},
                                 {"after_strategy", stats_to_json(filtered.stats)},
                                 {"strategy", strategy.label()},
                                 {"warnings", warnings}});
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "dataset rows: " << constructed.examples.size() << " -> "
            << filtered.examples.size() << " (" << strategy.label() << ")\n";
  return 0;
}

int cmd_train_classifier(const std::string& data, const std::string& config,
                         const std::string& out, const std::string& cache) {
  ClassifierConfig cfg;
  if (!config.empty()) cfg = ClassifierConfig::from_json(read_json_file(config));
  const auto examples = load_aspectsent(data);
  std::vector<AspectSentExample> train, val;
  for (const auto& ex : examples) {
    if (ex.split == Split::train) train.push_back(ex);
    if (ex.split == Split::val) val.push_back(ex);
  }
  auto result = train_classifier(train, val, cfg, opt_path(cache));
  save_classifier(out, result.model, result.log);
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  if (!result.log.empty()) {
    double best = 0.0;
    for (const auto& e : result.log) {
      if (e.is_best) best = e.val_micro_f1;
    }
    std::cout << "trained " << result.log.size() << " epochs, best val micro-F1 "
              << format_fixed(best, 4) << "\n";
  }
  return 0;
}

int cmd_predict(const std::string& model_dir, const std::string& corpus, double threshold,
                const std::string& out, const std::string& cache) {
  const auto model = load_classifier(model_dir);
  const auto records = load_corpus(corpus);
  size_t rows = 0;
  for (const auto& record : records) {
    auto predicted = predict_labels(model, record.sentences, threshold, opt_path(cache));
    MeetingPredictions preds;
    preds.meeting_id = record.meeting_id;
    for (size_t i = 0; i < predicted.size(); ++i) {
      SentencePrediction row;
      row.sent_idx = record.sentences[i].idx;
      row.labels = predicted[i].second.labels;
      row.probs = predicted[i].first.probs;
      preds.rows.push_back(std::move(row));
    }
    rows += preds.rows.size();
    save_predictions(out, preds);
  }
  std::cout << "predicted " << rows << " sentences across " << records.size()
            << " meetings\n";
  return 0;
}

int cmd_select(const std::string& corpus, const std::string& preds_dir,
               const std::string& aspects_arg, int fallback_k, const std::string& out) {
  const auto aspects = parse_aspects(aspects_arg);
  const auto records = load_corpus(corpus);
  const auto preds = load_predictions(preds_dir);
  std::map<std::string, const MeetingPredictions*> by_id;
  for (const auto& p : preds) by_id[p.meeting_id] = &p;

  std::map<Split, std::vector<AspectFilteredDoc>> docs;
  for (const auto& record : records) {
    auto it = by_id.find(record.meeting_id);
    if (it == by_id.end()) {
      throw ValidationError("no predictions for meeting '" + record.meeting_id + "'");
    }
    for (const auto& aspect : aspects) {
      AspectFilteredDoc doc = select_for_aspect(record, *it->second, aspect, fallback_k);
      auto sit = record.summaries.find(aspect);
      if (record.split != Split::test && sit != record.summaries.end() &&
          !sit->second.empty()) {
        doc.target_summary = doc.special_token + " " + sit->second;
      } else if (record.split != Split::test) {
        continue;  // train/val docs exist only where a target exists
      }
      docs[record.split].push_back(std::move(doc));
    }
  }
  for (Split split : {Split::train, Split::val, Split::test}) {
    save_docs(fs::path(out) / (to_string(split) + ".jsonl"), docs[split]);
  }
  std::cout << "selected docs: train " << docs[Split::train].size() << ", val "
            << docs[Split::val].size() << ", test " << docs[Split::test].size() << "\n";
  return 0;
}

int cmd_oracle_filter(const std::string& corpus, double alpha, const std::string& backend,
                      int dim, const std::string& out, const std::string& cache,
                      const std::string& aspects_arg) {
  const auto aspects = parse_aspects(aspects_arg);
  OracleFilterConfig cfg;
  cfg.alpha = alpha;
  cfg.backend = backend_spec(backend, dim);
  EmbeddingGateway gateway(cfg.backend, opt_path(cache));
  const auto records = load_corpus(corpus);

  std::map<Split, std::vector<AspectFilteredDoc>> docs;
  std::vector<std::string> warnings;
  for (const auto& record : records) {
    auto filtered = oracle_filter(record, cfg, gateway, aspects, &warnings);
    for (auto& [aspect, doc] : filtered) {
      auto sit = record.summaries.find(aspect);
      if (sit != record.summaries.end() && !sit->second.empty()) {
        doc.target_summary = doc.special_token + " " + sit->second;
      }
      docs[record.split].push_back(std::move(doc));
    }
  }
  for (Split split : {Split::train, Split::val, Split::test}) {
    save_docs(fs::path(out) / (to_string(split) + ".jsonl"), docs[split]);
  }
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "oracle-filtered docs: train " << docs[Split::train].size() << ", val "
            << docs[Split::val].size() << ", test " << docs[Split::test].size() << "\n";
  return 0;
}

int cmd_train_summarizer(const std::string& data, const std::string& config,
                         const std::string& out, const std::string& aspects_arg) {
  const auto aspects = parse_aspects(aspects_arg);
  SummarizerConfig cfg;
  if (!config.empty()) cfg = SummarizerConfig::from_json(read_json_file(config));
  const auto train_docs = load_docs(fs::path(data) / "train.jsonl");
  std::vector<AspectFilteredDoc> val_docs;
  if (fs::exists(fs::path(data) / "val.jsonl")) {
    val_docs = load_docs(fs::path(data) / "val.jsonl");
  }
  auto log = train_summarizer(train_docs, val_docs, cfg, aspects, out);
  std::cout << "trained " << log.epochs.size() << " epochs";
  if (log.truncated_inputs > 0) {
    std::cout << " (" << log.truncated_inputs << " inputs truncated)";
  }
  std::cout << "\n";
  return 0;
}

int cmd_summarize(const std::string& model_dir, const std::string& docs_path,
                  const std::string& out) {
  const auto docs = load_docs(docs_path);
  auto result = generate(model_dir, docs);
  save_summaries(fs::path(out) / "test.jsonl", result.summaries);
  if (!result.errors.empty()) {
    write_json_file(fs::path(out) / "generation_errors.json",
                    nlohmann::json(result.errors));
    for (const auto& e : result.errors) std::cerr << "generation error " << e << "\n";
  }
  std::cout << "generated " << result.summaries.size() << " summaries ("
            << result.errors.size() << " failures)\n";
  return 0;
}

int cmd_evaluate(const std::string& summaries_path, const std::string& corpus,
                 const std::string& out, const std::string& aspects_arg) {
  const auto aspects = parse_aspects(aspects_arg);
  fs::path path = summaries_path;
  if (fs::is_directory(path)) path /= "test.jsonl";
  const auto summaries = load_summaries(path);
  const auto records = load_corpus(corpus);
  ResultTable table = evaluate_run(summaries, records);
  const std::string rendered = render_result_tables({table}, aspects);
  if (!out.empty()) {
    write_json_file(out, nlohmann::json{{"rouge", table.to_json()}, {"rendered", rendered}});
  }
  std::cout << rendered;
  return 0;
}

int cmd_run(const std::string& config_path, const std::string& out_override,
            const std::string& strategy_override, double alpha_override,
            int64_t seed_override) {
  nlohmann::json j = read_json_file(config_path);
  if (!out_override.empty()) j["out_root"] = out_override;
  if (!strategy_override.empty()) {
    j["strategy"] = FilterStrategy::parse(strategy_override).to_json();
  }
  if (alpha_override > 0.0) {
    if (!j.contains("labeler")) j["labeler"] = nlohmann::json::object();
    j["labeler"]["alpha"] = alpha_override;
  }
  if (seed_override >= 0) j["seed"] = static_cast<uint64_t>(seed_override);
  PipelineConfig cfg = PipelineConfig::from_json(j);
  RunManifest manifest = run_pipeline(cfg);
  std::cout << "run " << manifest.run_id << " complete; manifest at "
            << (cfg.out_root / "manifest.json").string() << "\n";
  const fs::path report = cfg.out_root / "report.txt";
  if (fs::exists(report)) std::cout << read_text_file(report);
  return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& strategies_arg,
               const std::string& out_override) {
  nlohmann::json j = read_json_file(config_path);
  if (!out_override.empty()) j["out_root"] = out_override;
  PipelineConfig cfg = PipelineConfig::from_json(j);

  std::vector<FilterStrategy> strategies;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) strategies.push_back(FilterStrategy::parse(current));
    current.clear();
  };
  for (char c : strategies_arg) {
    if (c == ',') {
      flush();
    } else {
      current.push_back(c);
    }
  }
  flush();
  if (strategies.empty()) {
    // The standard sweep.
    for (const char* label :
         {"oracle", "filtertrain-0.5", "filtertrain-0.3", "nofiltering", "down-sampling"}) {
      strategies.push_back(FilterStrategy::parse(label));
    }
  }

  AblationReport report = run_ablation(cfg, strategies);
  std::cout << report.rendered;
  bool any_failed = false;
  for (const auto& row : report.rows) {
    if (!row.error.empty()) {
      any_failed = true;
      std::cerr << "row '" << row.label << "' failed: " << row.error << "\n";
    }
  }
  return any_failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolVersion) +
               " - aspect-based meeting transcript summarization pipeline"};
  app.require_subcommand(1);

  // ingest
  std::string source, format = "ami-json", splits, out, aspects = "all";
  auto* ingest = app.add_subcommand("ingest", "Parse a raw corpus into canonical records");
  ingest->add_option("--source", source, "Source directory or JSONL file")->required();
  ingest->add_option("--format", format, "ami-json|icsi-json|generic-jsonl");
  ingest->add_option("--splits", splits, "splits.json path");
  ingest->add_option("--out", out, "Output corpus directory")->required();
  ingest->add_option("--aspects", aspects, "Comma-separated aspect set or 'all'");

  // stats
  std::string stats_corpus;
  auto* stats = app.add_subcommand("stats", "Print corpus manifest counts");
  stats->add_option("--corpus", stats_corpus, "Corpus directory")->required();

  // pseudolabel
  std::string pl_corpus, pl_backend = "hash-bow-test", pl_gran = "per-summary-sentence",
              pl_out, pl_cache, pl_aspects = "all";
  double pl_alpha = 0.46;
  int pl_dim = 64;
  auto* pseudolabel =
      app.add_subcommand("pseudolabel", "Assign aspect labels from embedding similarity");
  pseudolabel->add_option("--corpus", pl_corpus, "Corpus directory")->required();
  pseudolabel->add_option("--alpha", pl_alpha, "Similarity threshold in (0,1)");
  pseudolabel->add_option("--backend", pl_backend, "Embedding backend id");
  pseudolabel->add_option("--dim", pl_dim, "Embedding dimension");
  pseudolabel->add_option("--granularity", pl_gran, "per-summary-sentence|whole-summary");
  pseudolabel->add_option("--out", pl_out, "Output labels directory")->required();
  pseudolabel->add_option("--cache", pl_cache, "Embedding cache directory");
  pseudolabel->add_option("--aspects", pl_aspects, "Aspect set");

  // build-dataset
  std::string bd_labels, bd_corpus, bd_strategy = "filtertrain", bd_out;
  double bd_threshold = 0.5;
  int bd_downsample = 0;
  uint64_t bd_seed = 0;
  auto* build_dataset =
      app.add_subcommand("build-dataset", "Materialize the sentence classification dataset");
  build_dataset->add_option("--labels", bd_labels, "Labels directory")->required();
  build_dataset->add_option("--corpus", bd_corpus, "Corpus directory")->required();
  build_dataset->add_option("--strategy", bd_strategy,
                            "filtertrain|nofiltering|down-sampling|oracle-filter-all");
  build_dataset->add_option("--predict-threshold", bd_threshold,
                            "Downstream prediction threshold");
  build_dataset->add_option("--downsample-to", bd_downsample,
                            "Irrelevant-row target for down-sampling");
  build_dataset->add_option("--seed", bd_seed, "Sampling seed");
  build_dataset->add_option("--out", bd_out, "Output dataset directory")->required();

  // train-classifier
  std::string tc_data, tc_config, tc_out, tc_cache;
  auto* train_clf =
      app.add_subcommand("train-classifier", "Train the aspect-relevance classifier");
  train_clf->add_option("--data", tc_data, "Dataset directory")->required();
  train_clf->add_option("--config", tc_config, "Classifier config JSON");
  train_clf->add_option("--out", tc_out, "Model output directory")->required();
  train_clf->add_option("--cache", tc_cache, "Encoder cache directory");

  // predict
  std::string pr_model, pr_corpus, pr_out, pr_cache;
  double pr_threshold = 0.5;
  auto* predict = app.add_subcommand("predict", "Predict aspect labels for a corpus");
  predict->add_option("--model", pr_model, "Model directory")->required();
  predict->add_option("--corpus", pr_corpus, "Corpus directory")->required();
  predict->add_option("--threshold", pr_threshold, "Probability threshold in (0,1)");
  predict->add_option("--out", pr_out, "Predictions output directory")->required();
  predict->add_option("--cache", pr_cache, "Encoder cache directory");

  // select
  std::string se_corpus, se_preds, se_aspects = "all", se_out;
  int se_fallback_k = 10;
  auto* select =
      app.add_subcommand("select", "Build aspect-filtered documents from predictions");
  select->add_option("--corpus", se_corpus, "Corpus directory")->required();
  select->add_option("--preds", se_preds, "Predictions directory")->required();
  select->add_option("--aspects", se_aspects, "Aspect set or 'all'");
  select->add_option("--fallback-k", se_fallback_k, "Top-k fallback for empty selections");
  select->add_option("--out", se_out, "Filtered docs output directory")->required();

  // oracle-filter
  std::string of_corpus, of_backend = "hash-bow-test", of_out, of_cache, of_aspects = "all";
  double of_alpha = 0.46;
  int of_dim = 64;
  auto* oracle =
      app.add_subcommand("oracle-filter", "Filter transcripts with reference summaries");
  oracle->add_option("--corpus", of_corpus, "Corpus directory")->required();
  oracle->add_option("--alpha", of_alpha, "Similarity threshold in (0,1)");
  oracle->add_option("--backend", of_backend, "Embedding backend id");
  oracle->add_option("--dim", of_dim, "Embedding dimension");
  oracle->add_option("--out", of_out, "Filtered docs output directory")->required();
  oracle->add_option("--cache", of_cache, "Embedding cache directory");
  oracle->add_option("--aspects", of_aspects, "Aspect set");

  // train-summarizer
  std::string ts_data, ts_config, ts_out, ts_aspects = "all";
  auto* train_sum = app.add_subcommand("train-summarizer", "Fine-tune the summarizer");
  train_sum->add_option("--data", ts_data, "Filtered docs directory")->required();
  train_sum->add_option("--config", ts_config, "Summarizer config JSON");
  train_sum->add_option("--out", ts_out, "Model output directory")->required();
  train_sum->add_option("--aspects", ts_aspects, "Aspect set");

  // summarize
  std::string su_model, su_docs, su_out;
  auto* summarize = app.add_subcommand("summarize", "Generate aspect-based summaries");
  summarize->add_option("--model", su_model, "Summarizer model directory")->required();
  summarize->add_option("--docs", su_docs, "Filtered docs JSONL")->required();
  summarize->add_option("--out", su_out, "Summaries output directory")->required();

  // evaluate
  std::string ev_summaries, ev_corpus, ev_out, ev_aspects = "all";
  auto* evaluate = app.add_subcommand("evaluate", "Score summaries against references");
  evaluate->add_option("--summaries", ev_summaries, "Summaries directory or JSONL")
      ->required();
  evaluate->add_option("--corpus", ev_corpus, "Corpus directory")->required();
  evaluate->add_option("--out", ev_out, "Report JSON path");
  evaluate->add_option("--aspects", ev_aspects, "Aspect set");

  // run
  std::string run_config, run_out, run_strategy;
  double run_alpha = 0.0;
  int64_t run_seed = -1;
  auto* run = app.add_subcommand("run", "Execute the full pipeline from one config");
  run->add_option("--config", run_config, "Pipeline config JSON")->required();
  run->add_option("--out", run_out, "Override out_root");
  run->add_option("--strategy", run_strategy, "Override filter strategy");
  run->add_option("--alpha", run_alpha, "Override labeler alpha");
  run->add_option("--seed", run_seed, "Override global seed");

  // ablate
  std::string ab_config, ab_strategies, ab_out;
  auto* ablate = app.add_subcommand("ablate", "Run the filtering-strategy sweep");
  ablate->add_option("--config", ab_config, "Pipeline config JSON")->required();
  ablate->add_option("--strategies", ab_strategies,
                     "Comma-separated strategy labels (default: the standard sweep)");
  ablate->add_option("--out", ab_out, "Override out_root");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) return cmd_ingest(source, format, splits, out, aspects);
    if (*stats) return cmd_stats(stats_corpus);
    if (*pseudolabel) {
      return cmd_pseudolabel(pl_corpus, pl_alpha, pl_backend, pl_dim, pl_gran, pl_out,
                             pl_cache, pl_aspects);
    }
    if (*build_dataset) {
      return cmd_build_dataset(bd_labels, bd_corpus, bd_strategy, bd_threshold,
                               bd_downsample, bd_seed, bd_out);
    }
    if (*train_clf) return cmd_train_classifier(tc_data, tc_config, tc_out, tc_cache);
    if (*predict) return cmd_predict(pr_model, pr_corpus, pr_threshold, pr_out, pr_cache);
    if (*select) return cmd_select(se_corpus, se_preds, se_aspects, se_fallback_k, se_out);
    if (*oracle) {
      return cmd_oracle_filter(of_corpus, of_alpha, of_backend, of_dim, of_out, of_cache,
                               of_aspects);
    }
    if (*train_sum) return cmd_train_summarizer(ts_data, ts_config, ts_out, ts_aspects);
    if (*summarize) return cmd_summarize(su_model, su_docs, su_out);
    if (*evaluate) return cmd_evaluate(ev_summaries, ev_corpus, ev_out, ev_aspects);
    if (*run) return cmd_run(run_config, run_out, run_strategy, run_alpha, run_seed);
    if (*ablate) return cmd_ablate(ab_config, ab_strategies, ab_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
