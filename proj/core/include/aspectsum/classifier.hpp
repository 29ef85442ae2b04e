#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/aspectsent.hpp"
#include "aspectsum/embedding.hpp"
#include "aspectsum/labeler.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

struct ClassifierConfig {
  // Pluggable text encoder id. "hash-bow-test" (optionally "hash-bow-test/DIM")
  // is the deterministic offline encoder; http(s) ids address a service.
  std::string encoder_backend_id = "hash-bow-test";
  double dropout_rate = 0.1;
  std::vector<AspectId> aspects = default_aspects();
  double predict_threshold = 0.5;
  int max_epochs = 20;
  int batch_size = 32;
  double learning_rate = 0.05;
  uint64_t seed = 0;

  int num_aspects() const { return static_cast<int>(aspects.size()); }
  void validate() const;
  nlohmann::json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& j);
};

EmbeddingBackendSpec encoder_spec_from_id(const std::string& encoder_backend_id);

struct AspectProbabilities {
  std::map<AspectId, double> probs;  // post-sigmoid, in [0,1]
};

// Sigmoid head over encoder features: one weight row + bias per aspect.
struct ClassifierModel {
  ClassifierConfig cfg;
  EmbeddingBackendSpec encoder_spec;
  std::vector<std::vector<double>> weights;  // [aspect][feature]
  std::vector<double> bias;                  // [aspect]

  AspectProbabilities forward(const std::vector<double>& features) const;
};

struct TrainLogEntry {
  int epoch = 0;
  double train_loss = 0.0;
  double val_micro_f1 = 0.0;
  bool is_best = false;
};

struct ClassifierTrainResult {
  ClassifierModel model;
  std::vector<TrainLogEntry> log;
  std::vector<std::string> warnings;
};

// Minimizes element-wise binary cross entropy over the multi-hot targets
// (Adam). Keeps the checkpoint with the best validation micro-F1 at
// cfg.predict_threshold. Deterministic given cfg.seed and a deterministic
// encoder.
ClassifierTrainResult train_classifier(
    const std::vector<AspectSentExample>& train,
    const std::vector<AspectSentExample>& val, const ClassifierConfig& cfg,
    std::optional<std::filesystem::path> cache_dir = std::nullopt);

// label 1 iff probability > threshold (strict). The AspectLabelVector stores
// the probability as the thresholded score.
std::vector<std::pair<AspectProbabilities, AspectLabelVector>> predict_labels(
    const ClassifierModel& model, const std::vector<Sentence>& sentences,
    double threshold, std::optional<std::filesystem::path> cache_dir = std::nullopt);

struct AspectMetrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int support = 0;  // positive gold count
};

struct ClassifierReport {
  std::map<AspectId, AspectMetrics> per_aspect;
  double micro_f1 = 0.0;
};

ClassifierReport score_classifier(const std::vector<std::map<AspectId, int>>& pred,
                                  const std::vector<std::map<AspectId, int>>& gold);

nlohmann::json report_to_json(const ClassifierReport& report);

// Mean element-wise binary cross entropy; probabilities are clamped away
// from {0,1} so perfect predictions score ~0 rather than -log(0).
double bce_loss(const std::vector<std::vector<double>>& probs,
                const std::vector<std::vector<double>>& targets);

double micro_f1(const std::vector<std::map<AspectId, int>>& pred,
                const std::vector<std::map<AspectId, int>>& gold);

void save_classifier(const std::filesystem::path& model_dir, const ClassifierModel& model,
                     const std::vector<TrainLogEntry>& log);
ClassifierModel load_classifier(const std::filesystem::path& model_dir);

// Encoder input cap in whitespace tokens; longer sentences are truncated.
inline constexpr int kEncoderMaxTokens = 512;

}  // namespace aspectsum
