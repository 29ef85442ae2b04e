#include "aspectsum/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

void ClassifierConfig::validate() const {
  if (aspects.empty()) throw ValidationError("classifier needs a non-empty aspect set");
  if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
    throw ValidationError("dropout_rate must be in [0,1)");
  }
  if (!(predict_threshold > 0.0 && predict_threshold < 1.0)) {
    throw ValidationError("predict_threshold must be in (0,1)");
  }
  if (max_epochs <= 0 || batch_size <= 0) {
    throw ValidationError("max_epochs and batch_size must be positive");
  }
  if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
}

nlohmann::json ClassifierConfig::to_json() const {
  return nlohmann::json{{"encoder_backend_id", encoder_backend_id},
                        {"dropout_rate", dropout_rate},
                        {"aspects", aspects},
                        {"predict_threshold", predict_threshold},
                        {"max_epochs", max_epochs},
                        {"batch_size", batch_size},
                        {"learning_rate", learning_rate},
                        {"seed", seed}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
  ClassifierConfig cfg;
  if (j.contains("encoder_backend_id")) {
    cfg.encoder_backend_id = j["encoder_backend_id"].get<std::string>();
  }
  if (j.contains("dropout_rate")) cfg.dropout_rate = j["dropout_rate"].get<double>();
  if (j.contains("aspects")) cfg.aspects = j["aspects"].get<std::vector<AspectId>>();
  if (j.contains("predict_threshold")) {
    cfg.predict_threshold = j["predict_threshold"].get<double>();
  }
  if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("batch_size")) cfg.batch_size = j["batch_size"].get<int>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  cfg.validate();
  return cfg;
}

EmbeddingBackendSpec encoder_spec_from_id(const std::string& encoder_backend_id) {
  std::string id = encoder_backend_id;
  int dim = 64;
  // "hash-bow-test/256" selects a wider projection.
  if (auto pos = id.rfind('/'); pos != std::string::npos && id.rfind("http", 0) != 0) {
    try {
      dim = std::stoi(id.substr(pos + 1));
      id = id.substr(0, pos);
    } catch (const std::exception&) {
      throw ConfigError("bad encoder id '" + encoder_backend_id + "'");
    }
  }
  EmbeddingBackendSpec spec;
  spec.backend_id = id;
  spec.dim = dim;
  spec.normalization = Normalization::unit_l2;
  return spec;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::vector<std::vector<double>> encode_texts(const EmbeddingBackendSpec& spec,
                                              const std::vector<std::string>& texts,
                                              std::optional<fs::path> cache_dir) {
  EmbeddingGateway gateway(spec, std::move(cache_dir));
  std::vector<std::string> capped;
  capped.reserve(texts.size());
  for (const auto& t : texts) capped.push_back(truncate_tokens(t, kEncoderMaxTokens));
  auto vecs = gateway.embed_batch(capped);
  std::vector<std::vector<double>> out;
  out.reserve(vecs.size());
  for (auto& v : vecs) out.push_back(std::move(v.values));
  return out;
}

std::vector<double> targets_for(const AspectSentExample& ex,
                                const std::vector<AspectId>& aspects) {
  std::vector<double> t(aspects.size(), 0.0);
  for (size_t a = 0; a < aspects.size(); ++a) {
    auto it = ex.labels.find(aspects[a]);
    if (it != ex.labels.end() && it->second == 1) t[a] = 1.0;
  }
  return t;
}

struct AdamState {
  std::vector<std::vector<double>> m_w, v_w;
  std::vector<double> m_b, v_b;
  int t = 0;
};

}  // namespace

AspectProbabilities ClassifierModel::forward(const std::vector<double>& features) const {
  AspectProbabilities out;
  for (size_t a = 0; a < cfg.aspects.size(); ++a) {
    double z = bias[a];
    const auto& w = weights[a];
    const size_t n = std::min(w.size(), features.size());
    for (size_t i = 0; i < n; ++i) z += w[i] * features[i];
    out.probs[cfg.aspects[a]] = sigmoid(z);
  }
  return out;
}

ClassifierTrainResult train_classifier(const std::vector<AspectSentExample>& train,
                                       const std::vector<AspectSentExample>& val,
                                       const ClassifierConfig& cfg,
                                       std::optional<fs::path> cache_dir) {
  cfg.validate();
  if (train.empty()) throw ValidationError("training set is empty");
  if (val.empty()) throw ValidationError("validation set is empty");

  ClassifierTrainResult result;

  // Degenerate label distributions are allowed but worth flagging.
  for (size_t a = 0; a < cfg.aspects.size(); ++a) {
    int positives = 0;
    for (const auto& ex : train) {
      auto it = ex.labels.find(cfg.aspects[a]);
      if (it != ex.labels.end() && it->second == 1) ++positives;
    }
    if (positives == 0 || positives == static_cast<int>(train.size())) {
      result.warnings.push_back("aspect '" + cfg.aspects[a] +
                                "' has a one-class training distribution");
    }
  }

  const EmbeddingBackendSpec encoder_spec = encoder_spec_from_id(cfg.encoder_backend_id);
  std::vector<std::string> train_texts, val_texts;
  for (const auto& ex : train) train_texts.push_back(ex.text);
  for (const auto& ex : val) val_texts.push_back(ex.text);
  const auto train_x = encode_texts(encoder_spec, train_texts, cache_dir);
  const auto val_x = encode_texts(encoder_spec, val_texts, cache_dir);
  const size_t dim = train_x.front().size();
  const size_t m = cfg.aspects.size();

  std::vector<std::vector<double>> train_y;
  for (const auto& ex : train) train_y.push_back(targets_for(ex, cfg.aspects));
  std::vector<std::map<AspectId, int>> val_gold;
  for (const auto& ex : val) {
    std::map<AspectId, int> g;
    for (const auto& aspect : cfg.aspects) {
      auto it = ex.labels.find(aspect);
      g[aspect] = (it != ex.labels.end() && it->second == 1) ? 1 : 0;
    }
    val_gold.push_back(std::move(g));
  }

  ClassifierModel model;
  model.cfg = cfg;
  model.encoder_spec = encoder_spec;
  model.weights.assign(m, std::vector<double>(dim, 0.0));
  model.bias.assign(m, 0.0);

  AdamState adam;
  adam.m_w.assign(m, std::vector<double>(dim, 0.0));
  adam.v_w.assign(m, std::vector<double>(dim, 0.0));
  adam.m_b.assign(m, 0.0);
  adam.v_b.assign(m, 0.0);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;

  ClassifierModel best = model;
  double best_f1 = -1.0;

  std::vector<size_t> order(train.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "epoch-" + std::to_string(epoch)));
    rng.shuffle(order);

    double epoch_loss = 0.0;
    size_t batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<std::vector<double>> grad_w(m, std::vector<double>(dim, 0.0));
      std::vector<double> grad_b(m, 0.0);
      double batch_loss = 0.0;

      for (size_t k = start; k < end; ++k) {
        const auto& x = train_x[order[k]];
        const auto& y = train_y[order[k]];

        // Inverted dropout on the encoder features.
        std::vector<double> xd = x;
        if (cfg.dropout_rate > 0.0) {
          const double keep = 1.0 - cfg.dropout_rate;
          for (double& f : xd) {
            f = rng.next_unit() < keep ? f / keep : 0.0;
          }
        }

        for (size_t a = 0; a < m; ++a) {
          double z = model.bias[a];
          for (size_t i = 0; i < dim; ++i) z += model.weights[a][i] * xd[i];
          const double p = sigmoid(z);
          const double pc = std::clamp(p, 1e-12, 1.0 - 1e-12);
          batch_loss += -(y[a] * std::log(pc) + (1.0 - y[a]) * std::log(1.0 - pc));
          const double delta = p - y[a];  // dBCE/dz for sigmoid outputs
          grad_b[a] += delta;
          for (size_t i = 0; i < dim; ++i) grad_w[a][i] += delta * xd[i];
        }
      }

      const double inv = 1.0 / static_cast<double>((end - start) * m);
      batch_loss *= inv;
      epoch_loss += batch_loss;
      ++batches;

      adam.t += 1;
      const double bc1 = 1.0 - std::pow(beta1, adam.t);
      const double bc2 = 1.0 - std::pow(beta2, adam.t);
      const double scale = 1.0 / static_cast<double>(end - start);
      for (size_t a = 0; a < m; ++a) {
        for (size_t i = 0; i < dim; ++i) {
          const double g = grad_w[a][i] * scale;
          adam.m_w[a][i] = beta1 * adam.m_w[a][i] + (1.0 - beta1) * g;
          adam.v_w[a][i] = beta2 * adam.v_w[a][i] + (1.0 - beta2) * g * g;
          model.weights[a][i] -= cfg.learning_rate * (adam.m_w[a][i] / bc1) /
                                 (std::sqrt(adam.v_w[a][i] / bc2) + eps);
        }
        const double g = grad_b[a] * scale;
        adam.m_b[a] = beta1 * adam.m_b[a] + (1.0 - beta1) * g;
        adam.v_b[a] = beta2 * adam.v_b[a] + (1.0 - beta2) * g * g;
        model.bias[a] -=
            cfg.learning_rate * (adam.m_b[a] / bc1) / (std::sqrt(adam.v_b[a] / bc2) + eps);
      }
    }

    // Validation micro-F1 at the configured operating point.
    std::vector<std::map<AspectId, int>> val_pred;
    val_pred.reserve(val.size());
    for (const auto& x : val_x) {
      auto probs = model.forward(x);
      std::map<AspectId, int> labels;
      for (const auto& [aspect, p] : probs.probs) {
        labels[aspect] = p > cfg.predict_threshold ? 1 : 0;
      }
      val_pred.push_back(std::move(labels));
    }
    const double f1 = micro_f1(val_pred, val_gold);

    TrainLogEntry entry;
    entry.epoch = epoch;
    entry.train_loss = batches ? epoch_loss / static_cast<double>(batches) : 0.0;
    entry.val_micro_f1 = f1;
    entry.is_best = f1 > best_f1;
    if (entry.is_best) {
      best_f1 = f1;
      best = model;
    }
    result.log.push_back(entry);
  }

  result.model = std::move(best);
  return result;
}

std::vector<std::pair<AspectProbabilities, AspectLabelVector>> predict_labels(
    const ClassifierModel& model, const std::vector<Sentence>& sentences,
    double threshold, std::optional<fs::path> cache_dir) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ValidationError("prediction threshold must be in (0,1)");
  }
  if (model.weights.size() != model.cfg.aspects.size()) {
    throw ConfigError("model weight rows do not match the aspect set");
  }
  std::vector<std::pair<AspectProbabilities, AspectLabelVector>> out;
  if (sentences.empty()) return out;

  std::vector<std::string> texts;
  texts.reserve(sentences.size());
  for (const auto& s : sentences) texts.push_back(s.text);
  const auto features = encode_texts(model.encoder_spec, texts, std::move(cache_dir));

  out.reserve(sentences.size());
  for (const auto& x : features) {
    AspectProbabilities probs = model.forward(x);
    AspectLabelVector v;
    for (const auto& [aspect, p] : probs.probs) {
      v.labels[aspect] = p > threshold ? 1 : 0;
      v.similarities[aspect] = p;
    }
    out.emplace_back(std::move(probs), std::move(v));
  }
  return out;
}

ClassifierReport score_classifier(const std::vector<std::map<AspectId, int>>& pred,
                                  const std::vector<std::map<AspectId, int>>& gold) {
  if (pred.size() != gold.size()) {
    throw ValidationError("score_classifier requires aligned pred/gold (got " +
                          std::to_string(pred.size()) + " vs " +
                          std::to_string(gold.size()) + ")");
  }
  struct Counts {
    int tp = 0, fp = 0, fn = 0;
  };
  std::map<AspectId, Counts> counts;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (const auto& [aspect, g] : gold[i]) {
      auto it = pred[i].find(aspect);
      const int p = it == pred[i].end() ? 0 : it->second;
      Counts& c = counts[aspect];
      if (p == 1 && g == 1) c.tp += 1;
      if (p == 1 && g == 0) c.fp += 1;
      if (p == 0 && g == 1) c.fn += 1;
    }
  }

  ClassifierReport report;
  int tp_all = 0, fp_all = 0, fn_all = 0;
  for (const auto& [aspect, c] : counts) {
    AspectMetrics m;
    m.support = c.tp + c.fn;
    m.precision = (c.tp + c.fp) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fp) : 0.0;
    m.recall = (c.tp + c.fn) > 0 ? static_cast<double>(c.tp) / (c.tp + c.fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0.0
               ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
               : 0.0;
    report.per_aspect[aspect] = m;
    tp_all += c.tp;
    fp_all += c.fp;
    fn_all += c.fn;
  }
  report.micro_f1 =
      (2 * tp_all + fp_all + fn_all) > 0
          ? 2.0 * tp_all / static_cast<double>(2 * tp_all + fp_all + fn_all)
          : 0.0;
  return report;
}

nlohmann::json report_to_json(const ClassifierReport& report) {
  nlohmann::json aspects = nlohmann::json::object();
  for (const auto& [aspect, m] : report.per_aspect) {
    aspects[aspect] = {{"precision", m.precision},
                       {"recall", m.recall},
                       {"f1", m.f1},
                       {"support", m.support}};
  }
  return nlohmann::json{{"per_aspect", std::move(aspects)}, {"micro_f1", report.micro_f1}};
}

double bce_loss(const std::vector<std::vector<double>>& probs,
                const std::vector<std::vector<double>>& targets) {
  if (probs.size() != targets.size()) throw ValidationError("bce_loss shape mismatch");
  double total = 0.0;
  size_t count = 0;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i].size() != targets[i].size()) {
      throw ValidationError("bce_loss shape mismatch");
    }
    for (size_t j = 0; j < probs[i].size(); ++j) {
      const double p = std::clamp(probs[i][j], 1e-12, 1.0 - 1e-12);
      total += -(targets[i][j] * std::log(p) + (1.0 - targets[i][j]) * std::log(1.0 - p));
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

double micro_f1(const std::vector<std::map<AspectId, int>>& pred,
                const std::vector<std::map<AspectId, int>>& gold) {
  if (pred.size() != gold.size()) throw ValidationError("micro_f1 shape mismatch");
  int tp = 0, fp = 0, fn = 0;
  for (size_t i = 0; i < pred.size(); ++i) {
    for (const auto& [aspect, g] : gold[i]) {
      auto it = pred[i].find(aspect);
      const int p = it == pred[i].end() ? 0 : it->second;
      if (p == 1 && g == 1) ++tp;
      if (p == 1 && g == 0) ++fp;
      if (p == 0 && g == 1) ++fn;
    }
  }
  return (2 * tp + fp + fn) > 0 ? 2.0 * tp / static_cast<double>(2 * tp + fp + fn) : 0.0;
}

void save_classifier(const fs::path& model_dir, const ClassifierModel& model,
                     const std::vector<TrainLogEntry>& log) {
  write_json_file(model_dir / "config.json",
                  nlohmann::json{{"classifier", model.cfg.to_json()},
                                 {"encoder", model.encoder_spec.to_json()}});
  write_json_file(model_dir / "weights.json",
                  nlohmann::json{{"weights", model.weights}, {"bias", model.bias}});
  std::vector<nlohmann::json> rows;
  for (const auto& e : log) {
    rows.push_back(nlohmann::json{{"epoch", e.epoch},
                                  {"train_loss", e.train_loss},
                                  {"val_micro_f1", e.val_micro_f1},
                                  {"is_best", e.is_best}});
  }
  write_jsonl_file(model_dir / "training_log.jsonl", rows);
}

ClassifierModel load_classifier(const fs::path& model_dir) {
  const auto config = read_json_file(model_dir / "config.json");
  const auto weights = read_json_file(model_dir / "weights.json");
  ClassifierModel model;
  model.cfg = ClassifierConfig::from_json(config.at("classifier"));
  model.encoder_spec = EmbeddingBackendSpec::from_json(config.at("encoder"));
  model.weights = weights.at("weights").get<std::vector<std::vector<double>>>();
  model.bias = weights.at("bias").get<std::vector<double>>();
  if (model.weights.size() != model.cfg.aspects.size() ||
      model.bias.size() != model.cfg.aspects.size()) {
    throw ConfigError("model weights do not match the configured aspect set");
  }
  return model;
}

}  // namespace aspectsum
