#include "aspectsum/summarizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>
#include <unordered_set>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

void SummarizerConfig::validate() const {
  if (beam_size < 1) throw ValidationError("beam_size must be >= 1");
  if (learning_rate <= 0.0) throw ValidationError("learning_rate must be positive");
  if (max_input_tokens <= 0 || max_output_tokens <= 0) {
    throw ValidationError("token caps must be positive");
  }
  if (max_epochs <= 0) throw ValidationError("max_epochs must be positive");
  if (warmup_fraction < 0.0 || warmup_fraction >= 1.0) {
    throw ValidationError("warmup_fraction must be in [0,1)");
  }
}

nlohmann::json SummarizerConfig::to_json() const {
  return nlohmann::json{{"backend_id", backend_id},
                        {"learning_rate", learning_rate},
                        {"adam_beta1", adam_beta1},
                        {"adam_beta2", adam_beta2},
                        {"warmup_fraction", warmup_fraction},
                        {"beam_size", beam_size},
                        {"max_input_tokens", max_input_tokens},
                        {"max_output_tokens", max_output_tokens},
                        {"max_epochs", max_epochs},
                        {"seed", seed}};
}

SummarizerConfig SummarizerConfig::from_json(const nlohmann::json& j) {
  SummarizerConfig cfg;
  if (j.contains("backend_id")) cfg.backend_id = j["backend_id"].get<std::string>();
  if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
  if (j.contains("adam_beta1")) cfg.adam_beta1 = j["adam_beta1"].get<double>();
  if (j.contains("adam_beta2")) cfg.adam_beta2 = j["adam_beta2"].get<double>();
  if (j.contains("warmup_fraction")) {
    cfg.warmup_fraction = j["warmup_fraction"].get<double>();
  }
  if (j.contains("beam_size")) cfg.beam_size = j["beam_size"].get<int>();
  if (j.contains("max_input_tokens")) {
    cfg.max_input_tokens = j["max_input_tokens"].get<int>();
  }
  if (j.contains("max_output_tokens")) {
    cfg.max_output_tokens = j["max_output_tokens"].get<int>();
  }
  if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();
  cfg.validate();
  return cfg;
}

namespace {

bool looks_like_special_token(const std::string& token) {
  return token.rfind("<asp:", 0) == 0 && !token.empty() && token.back() == '>';
}

std::string strip_leading_special_token(const std::string& text) {
  auto tokens = whitespace_tokens(text);
  if (!tokens.empty() && looks_like_special_token(tokens.front())) {
    std::string out;
    for (size_t i = 1; i < tokens.size(); ++i) {
      if (i > 1) out += ' ';
      out += tokens[i];
    }
    return out;
  }
  return text;
}

// --- echo / diagnostic backends ---------------------------------------------

class EchoBackend : public SummarizerBackend {
 public:
  void register_special_tokens(const std::vector<std::string>&) override {}
  SummarizerTrainLog train(const std::vector<AspectFilteredDoc>&,
                           const std::vector<AspectFilteredDoc>&,
                           const SummarizerConfig&) override {
    SummarizerTrainLog log;
    log.epochs.push_back({0, 0.0, 0.0, true});
    return log;
  }
  std::string generate_one(const std::string& input_text,
                           const SummarizerConfig&) override {
    return strip_leading_special_token(input_text);
  }
  void save(const fs::path& dir) const override {
    write_json_file(dir / "model.json", nlohmann::json{{"backend", "echo-test"}});
  }
  void load(const fs::path&) override {}
};

class LeadingTokenBackend : public SummarizerBackend {
 public:
  void register_special_tokens(const std::vector<std::string>&) override {}
  SummarizerTrainLog train(const std::vector<AspectFilteredDoc>&,
                           const std::vector<AspectFilteredDoc>&,
                           const SummarizerConfig&) override {
    SummarizerTrainLog log;
    log.epochs.push_back({0, 0.0, 0.0, true});
    return log;
  }
  std::string generate_one(const std::string& input_text,
                           const SummarizerConfig&) override {
    auto tokens = whitespace_tokens(input_text);
    return tokens.empty() ? std::string() : tokens.front();
  }
  void save(const fs::path& dir) const override {
    write_json_file(dir / "model.json", nlohmann::json{{"backend", "leading-token-test"}});
  }
  void load(const fs::path&) override {}
};

// --- trainable test backend ---------------------------------------------------
//
// A token-level conditional model small enough to train on a desk CPU yet
// honest about the mechanics the gateway contract cares about: token
// cross-entropy training with Adam and a warmup/decay schedule, checkpoint
// selection on validation loss, and beam-search decoding.
//
// score(next | prev, input) = bigram[prev][next]
//                           + theta_copy * [next appears in the input]
//                           + theta_next * [next follows prev in the input]
// Probabilities are softmax over the training vocabulary.
class BigramCopyBackend : public SummarizerBackend {
 public:
  static constexpr int kBos = 0;
  static constexpr int kEos = 1;
  static constexpr int kUnk = 2;
  static constexpr size_t kMaxVocab = 20000;

  void register_special_tokens(const std::vector<std::string>& tokens) override {
    for (const auto& t : tokens) special_tokens_.insert(t);
  }

  SummarizerTrainLog train(const std::vector<AspectFilteredDoc>& train_docs,
                           const std::vector<AspectFilteredDoc>& val_docs,
                           const SummarizerConfig& cfg) override;

  std::string generate_one(const std::string& input_text,
                           const SummarizerConfig& cfg) override;

  void save(const fs::path& dir) const override;
  void load(const fs::path& dir) override;

 private:
  struct Example {
    std::vector<int> input;   // token ids of the (truncated) input text
    std::vector<int> target;  // BOS + target tokens + EOS
  };

  int intern(const std::string& token) {
    auto it = vocab_.find(token);
    if (it != vocab_.end()) return it->second;
    const int id = static_cast<int>(id_to_token_.size());
    vocab_.emplace(token, id);
    id_to_token_.push_back(token);
    return id;
  }
  int lookup(const std::string& token) const {
    auto it = vocab_.find(token);
    return it == vocab_.end() ? kUnk : it->second;
  }

  std::vector<double>& row(int prev) {
    auto it = rows_.find(prev);
    if (it == rows_.end()) {
      it = rows_.emplace(prev, std::vector<double>(id_to_token_.size(), 0.0)).first;
    }
    return it->second;
  }
  const std::vector<double>* row_if_present(int prev) const {
    auto it = rows_.find(prev);
    return it == rows_.end() ? nullptr : &it->second;
  }

  // First position of `token` in `input` after `pointer`, else its first
  // position anywhere, else the pointer unchanged. Shared by teacher forcing
  // and decoding so the theta_next feature means the same thing in both.
  static int advance_pointer(const std::vector<int>& input, int pointer, int token);

  std::vector<double> scores_for(int prev, int pointer,
                                 const std::vector<int>& input,
                                 const std::unordered_set<int>& input_set) const;

  double example_loss(const Example& ex, bool update, double lr);

  std::unordered_map<std::string, int> vocab_;
  std::vector<std::string> id_to_token_;
  std::unordered_map<int, std::vector<double>> rows_;
  double theta_copy_ = 0.0;
  double theta_next_ = 0.0;
  std::unordered_set<std::string> special_tokens_;

  // Adam state (training only, not persisted).
  std::unordered_map<int, std::vector<double>> adam_m_, adam_v_;
  double m_copy_ = 0, v_copy_ = 0, m_next_ = 0, v_next_ = 0;
  long step_ = 0;
  double beta1_ = 0.9, beta2_ = 0.999;
};

int BigramCopyBackend::advance_pointer(const std::vector<int>& input, int pointer,
                                       int token) {
  for (size_t i = pointer + 1; i < input.size(); ++i) {
    if (input[i] == token) return static_cast<int>(i);
  }
  for (size_t i = 0; i < input.size(); ++i) {
    if (input[i] == token) return static_cast<int>(i);
  }
  return pointer;
}

std::vector<double> BigramCopyBackend::scores_for(
    int prev, int pointer, const std::vector<int>& input,
    const std::unordered_set<int>& input_set) const {
  const size_t v = id_to_token_.size();
  std::vector<double> scores(v, 0.0);
  if (const auto* r = row_if_present(prev)) {
    scores = *r;
  }
  for (int tok : input_set) {
    scores[static_cast<size_t>(tok)] += theta_copy_;
  }
  if (pointer + 1 < static_cast<int>(input.size())) {
    scores[static_cast<size_t>(input[pointer + 1])] += theta_next_;
  }
  scores[kBos] = -1e30;  // BOS is never a valid continuation
  return scores;
}

double BigramCopyBackend::example_loss(const Example& ex, bool update, double lr) {
  std::unordered_set<int> input_set(ex.input.begin(), ex.input.end());
  const size_t v = id_to_token_.size();

  double loss = 0.0;
  int pointer = -1;
  int count = 0;
  for (size_t k = 1; k < ex.target.size(); ++k) {
    const int prev = ex.target[k - 1];
    const int gold = ex.target[k];
    std::vector<double> scores = scores_for(prev, pointer, ex.input, input_set);

    double max_score = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (double s : scores) z += std::exp(s - max_score);
    const double log_z = std::log(z) + max_score;
    loss += log_z - scores[static_cast<size_t>(gold)];
    ++count;

    if (update) {
      step_ += 1;
      const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
      const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
      auto& r = row(prev);
      auto& m = adam_m_[prev];
      auto& av = adam_v_[prev];
      if (m.size() != v) m.assign(v, 0.0);
      if (av.size() != v) av.assign(v, 0.0);

      const int next_tok =
          pointer + 1 < static_cast<int>(ex.input.size()) ? ex.input[pointer + 1] : -1;
      double g_copy = 0.0, g_next = 0.0;
      for (size_t j = 0; j < v; ++j) {
        const double p = std::exp(scores[j] - log_z);
        const double g = p - (static_cast<int>(j) == gold ? 1.0 : 0.0);
        if (input_set.count(static_cast<int>(j))) g_copy += g;
        if (static_cast<int>(j) == next_tok) g_next += g;
        m[j] = beta1_ * m[j] + (1.0 - beta1_) * g;
        av[j] = beta2_ * av[j] + (1.0 - beta2_) * g * g;
        r[j] -= lr * (m[j] / bc1) / (std::sqrt(av[j] / bc2) + 1e-8);
      }
      m_copy_ = beta1_ * m_copy_ + (1.0 - beta1_) * g_copy;
      v_copy_ = beta2_ * v_copy_ + (1.0 - beta2_) * g_copy * g_copy;
      theta_copy_ -= lr * (m_copy_ / bc1) / (std::sqrt(v_copy_ / bc2) + 1e-8);
      m_next_ = beta1_ * m_next_ + (1.0 - beta1_) * g_next;
      v_next_ = beta2_ * v_next_ + (1.0 - beta2_) * g_next * g_next;
      theta_next_ -= lr * (m_next_ / bc1) / (std::sqrt(v_next_ / bc2) + 1e-8);
    }

    pointer = advance_pointer(ex.input, pointer, gold);
  }
  return count ? loss / count : 0.0;
}

SummarizerTrainLog BigramCopyBackend::train(
    const std::vector<AspectFilteredDoc>& train_docs,
    const std::vector<AspectFilteredDoc>& val_docs, const SummarizerConfig& cfg) {
  // Vocabulary over inputs, targets, and the registered control tokens.
  vocab_.clear();
  id_to_token_.clear();
  rows_.clear();
  intern("<s>");
  intern("</s>");
  intern("<unk>");
  for (const auto& t : special_tokens_) intern(t);

  auto make_example = [&](const AspectFilteredDoc& doc, bool grow) {
    Example ex;
    for (const auto& tok :
         whitespace_tokens(truncate_tokens(doc.text, cfg.max_input_tokens))) {
      ex.input.push_back(grow ? intern(tok) : lookup(tok));
    }
    ex.target.push_back(kBos);
    for (const auto& tok :
         whitespace_tokens(truncate_tokens(*doc.target_summary, cfg.max_output_tokens))) {
      ex.target.push_back(grow ? intern(tok) : lookup(tok));
    }
    ex.target.push_back(kEos);
    return ex;
  };

  std::vector<Example> train_ex, val_ex;
  for (const auto& doc : train_docs) train_ex.push_back(make_example(doc, true));
  if (id_to_token_.size() > kMaxVocab) {
    throw BackendError("bigram-copy-test vocabulary exceeds " +
                       std::to_string(kMaxVocab) + " tokens; use a smaller corpus");
  }
  for (const auto& doc : val_docs) val_ex.push_back(make_example(doc, false));

  beta1_ = cfg.adam_beta1;
  beta2_ = cfg.adam_beta2;

  const long total_steps =
      static_cast<long>(cfg.max_epochs) * static_cast<long>(train_ex.size());
  const double warm = cfg.warmup_fraction;
  auto lr_at = [&](long step) {
    const double s = total_steps > 0 ? static_cast<double>(step) / total_steps : 1.0;
    if (warm > 0.0 && s < warm) return cfg.learning_rate * (s / warm);
    return cfg.learning_rate * std::max(0.05, (1.0 - s) / (1.0 - warm));
  };

  SummarizerTrainLog log;
  double best_val = std::numeric_limits<double>::infinity();
  nlohmann::json best_snapshot;

  std::vector<size_t> order(train_ex.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;

  long example_step = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    Rng rng(derive_seed(cfg.seed, "sum-epoch-" + std::to_string(epoch)));
    rng.shuffle(order);
    double train_loss = 0.0;
    for (size_t i : order) {
      train_loss += example_loss(train_ex[i], /*update=*/true, lr_at(example_step));
      ++example_step;
    }
    train_loss /= static_cast<double>(train_ex.size());

    double val_loss = 0.0;
    if (!val_ex.empty()) {
      for (const auto& ex : val_ex) val_loss += example_loss(ex, false, 0.0);
      val_loss /= static_cast<double>(val_ex.size());
    } else {
      val_loss = train_loss;
    }

    SummarizerEpochLog entry{epoch, train_loss, val_loss, val_loss < best_val};
    if (entry.is_best) {
      best_val = val_loss;
      nlohmann::json rows = nlohmann::json::object();
      for (const auto& [prev, r] : rows_) rows[std::to_string(prev)] = r;
      best_snapshot = nlohmann::json{{"rows", std::move(rows)},
                                     {"theta_copy", theta_copy_},
                                     {"theta_next", theta_next_}};
    }
    log.epochs.push_back(entry);
  }

  // Restore the best checkpoint.
  if (!best_snapshot.is_null()) {
    rows_.clear();
    for (const auto& [key, r] : best_snapshot["rows"].items()) {
      rows_[std::stoi(key)] = r.get<std::vector<double>>();
    }
    theta_copy_ = best_snapshot["theta_copy"].get<double>();
    theta_next_ = best_snapshot["theta_next"].get<double>();
  }
  return log;
}

std::string BigramCopyBackend::generate_one(const std::string& input_text,
                                            const SummarizerConfig& cfg) {
  if (id_to_token_.empty()) throw BackendError("bigram-copy-test model is untrained");

  std::vector<int> input;
  for (const auto& tok :
       whitespace_tokens(truncate_tokens(input_text, cfg.max_input_tokens))) {
    input.push_back(lookup(tok));
  }
  std::unordered_set<int> input_set(input.begin(), input.end());

  struct Hyp {
    std::vector<int> tokens;
    int prev = kBos;
    int pointer = -1;
    double logp = 0.0;
    bool done = false;
  };
  auto norm_score = [](const Hyp& h) {
    return h.logp / std::max<size_t>(1, h.tokens.size() + 1);
  };

  std::vector<Hyp> beam{Hyp{}};
  std::vector<Hyp> finished;
  const size_t width = static_cast<size_t>(cfg.beam_size);

  for (int step = 0; step < cfg.max_output_tokens && !beam.empty(); ++step) {
    std::vector<Hyp> candidates;
    for (const auto& hyp : beam) {
      std::vector<double> scores = scores_for(hyp.prev, hyp.pointer, input, input_set);
      double max_score = *std::max_element(scores.begin(), scores.end());
      double z = 0.0;
      for (double s : scores) z += std::exp(s - max_score);
      const double log_z = std::log(z) + max_score;

      // Top `width` continuations of this hypothesis, ties by token id.
      std::vector<int> ids(scores.size());
      for (size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
      const size_t take = std::min(width, ids.size());
      std::partial_sort(ids.begin(), ids.begin() + take, ids.end(),
                        [&](int a, int b) {
                          if (scores[a] != scores[b]) return scores[a] > scores[b];
                          return a < b;
                        });
      for (size_t i = 0; i < take; ++i) {
        const int tok = ids[i];
        Hyp next = hyp;
        next.logp += scores[tok] - log_z;
        if (tok == kEos) {
          next.done = true;
          finished.push_back(std::move(next));
          continue;
        }
        next.tokens.push_back(tok);
        next.pointer = advance_pointer(input, hyp.pointer, tok);
        next.prev = tok;
        candidates.push_back(std::move(next));
      }
    }
    std::sort(candidates.begin(), candidates.end(), [](const Hyp& a, const Hyp& b) {
      if (a.logp != b.logp) return a.logp > b.logp;
      return a.tokens < b.tokens;
    });
    if (candidates.size() > width) candidates.resize(width);
    beam = std::move(candidates);
    if (finished.size() >= width) break;
  }

  const Hyp* best = nullptr;
  for (const auto& h : finished) {
    if (!best || norm_score(h) > norm_score(*best)) best = &h;
  }
  if (!best) {
    for (const auto& h : beam) {
      if (!best || norm_score(h) > norm_score(*best)) best = &h;
    }
  }
  if (!best) return "";

  std::string out;
  for (size_t i = 0; i < best->tokens.size(); ++i) {
    const std::string& tok = id_to_token_[static_cast<size_t>(best->tokens[i])];
    if (i == 0 && (special_tokens_.count(tok) || looks_like_special_token(tok))) continue;
    if (!out.empty()) out += ' ';
    out += tok;
  }
  return out;
}

void BigramCopyBackend::save(const fs::path& dir) const {
  nlohmann::json rows = nlohmann::json::object();
  for (const auto& [prev, r] : rows_) rows[std::to_string(prev)] = r;
  write_json_file(dir / "model.json",
                  nlohmann::json{{"backend", "bigram-copy-test"},
                                 {"vocab", id_to_token_},
                                 {"rows", std::move(rows)},
                                 {"theta_copy", theta_copy_},
                                 {"theta_next", theta_next_},
                                 {"special_tokens", std::vector<std::string>(
                                                        special_tokens_.begin(),
                                                        special_tokens_.end())}},
                  /*indent=*/-1);
}

void BigramCopyBackend::load(const fs::path& dir) {
  const auto j = read_json_file(dir / "model.json");
  id_to_token_ = j.at("vocab").get<std::vector<std::string>>();
  vocab_.clear();
  for (size_t i = 0; i < id_to_token_.size(); ++i) {
    vocab_[id_to_token_[i]] = static_cast<int>(i);
  }
  rows_.clear();
  for (const auto& [key, r] : j.at("rows").items()) {
    rows_[std::stoi(key)] = r.get<std::vector<double>>();
  }
  theta_copy_ = j.at("theta_copy").get<double>();
  theta_next_ = j.at("theta_next").get<double>();
  special_tokens_.clear();
  for (const auto& t : j.at("special_tokens")) {
    special_tokens_.insert(t.get<std::string>());
  }
}

}  // namespace

std::unique_ptr<SummarizerBackend> create_summarizer_backend(const std::string& backend_id) {
  if (backend_id == "echo-test") return std::make_unique<EchoBackend>();
  if (backend_id == "leading-token-test") return std::make_unique<LeadingTokenBackend>();
  if (backend_id == "bigram-copy-test") return std::make_unique<BigramCopyBackend>();
  throw BackendError("unknown summarizer backend '" + backend_id + "'");
}

SummarizerTrainLog train_summarizer(const std::vector<AspectFilteredDoc>& train_docs,
                                    const std::vector<AspectFilteredDoc>& val_docs,
                                    const SummarizerConfig& cfg,
                                    const std::vector<AspectId>& aspect_set,
                                    const fs::path& model_dir) {
  cfg.validate();
  if (train_docs.empty()) throw ValidationError("no training docs for the summarizer");
  for (const auto* docs : {&train_docs, &val_docs}) {
    for (const auto& doc : *docs) {
      if (!doc.target_summary) {
        throw ValidationError("doc (" + doc.meeting_id + ", " + doc.aspect +
                              ") lacks a target summary");
      }
    }
  }

  auto backend = create_summarizer_backend(cfg.backend_id);
  std::vector<std::string> tokens;
  tokens.reserve(aspect_set.size());
  for (const auto& aspect : aspect_set) tokens.push_back(special_token_for(aspect));
  backend->register_special_tokens(tokens);

  SummarizerTrainLog log = backend->train(train_docs, val_docs, cfg);
  for (const auto& doc : train_docs) {
    if (count_whitespace_tokens(doc.text) > cfg.max_input_tokens) ++log.truncated_inputs;
  }

  fs::create_directories(model_dir);
  write_json_file(model_dir / "config.json", cfg.to_json());
  backend->save(model_dir);

  std::vector<nlohmann::json> rows;
  for (const auto& e : log.epochs) {
    rows.push_back(nlohmann::json{{"epoch", e.epoch},
                                  {"train_loss", e.train_loss},
                                  {"val_loss", e.val_loss},
                                  {"is_best", e.is_best}});
  }
  write_jsonl_file(model_dir / "training_log.jsonl", rows);
  return log;
}

GenerationResult generate(const fs::path& model_dir,
                          const std::vector<AspectFilteredDoc>& docs,
                          std::optional<SummarizerConfig> override_cfg) {
  SummarizerConfig cfg = SummarizerConfig::from_json(read_json_file(model_dir / "config.json"));
  if (override_cfg) {
    cfg.beam_size = override_cfg->beam_size;
    cfg.max_output_tokens = override_cfg->max_output_tokens;
    cfg.max_input_tokens = override_cfg->max_input_tokens;
    cfg.validate();
  }

  auto backend = create_summarizer_backend(cfg.backend_id);
  backend->load(model_dir);

  GenerationResult result;
  for (const auto& doc : docs) {
    try {
      const std::string input = truncate_tokens(doc.text, cfg.max_input_tokens);
      std::string text = backend->generate_one(input, cfg);
      if (text.empty()) text = "NA.";
      result.summaries.push_back(
          GeneratedSummary{doc.meeting_id, doc.aspect, std::move(text), doc.fallback_used});
    } catch (const std::exception& e) {
      result.errors.push_back("(" + doc.meeting_id + ", " + doc.aspect + "): " + e.what());
    }
  }
  return result;
}

nlohmann::json summary_to_json(const GeneratedSummary& s) {
  return nlohmann::json{{"meeting_id", s.meeting_id},
                        {"aspect", s.aspect},
                        {"text", s.text},
                        {"fallback_input", s.fallback_input}};
}

GeneratedSummary summary_from_json(const nlohmann::json& j) {
  GeneratedSummary s;
  s.meeting_id = j.at("meeting_id").get<std::string>();
  s.aspect = j.at("aspect").get<AspectId>();
  s.text = j.at("text").get<std::string>();
  if (j.contains("fallback_input")) s.fallback_input = j["fallback_input"].get<bool>();
  return s;
}

void save_summaries(const fs::path& path, const std::vector<GeneratedSummary>& summaries) {
  std::vector<nlohmann::json> rows;
  rows.reserve(summaries.size());
  for (const auto& s : summaries) rows.push_back(summary_to_json(s));
  write_jsonl_file(path, rows);
}

std::vector<GeneratedSummary> load_summaries(const fs::path& path) {
  std::vector<GeneratedSummary> out;
  for_each_jsonl(path, [&](const nlohmann::json& j, size_t) {
    out.push_back(summary_from_json(j));
  });
  return out;
}

}  // namespace aspectsum
