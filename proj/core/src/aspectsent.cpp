#include "aspectsum/aspectsent.hpp"

#include <algorithm>
#include <unordered_map>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

namespace fs = std::filesystem;

bool AspectSentExample::all_zero() const {
  return std::all_of(labels.begin(), labels.end(),
                     [](const auto& kv) { return kv.second == 0; });
}

FilterKind filter_kind_from_string(const std::string& s) {
  if (s == "filtertrain") return FilterKind::filtertrain;
  if (s == "nofiltering") return FilterKind::nofiltering;
  if (s == "down-sampling") return FilterKind::down_sampling;
  if (s == "oracle-filter-all") return FilterKind::oracle_filter_all;
  throw ConfigError("unknown filter strategy '" + s + "'");
}

std::string to_string(FilterKind k) {
  switch (k) {
    case FilterKind::filtertrain: return "filtertrain";
    case FilterKind::nofiltering: return "nofiltering";
    case FilterKind::down_sampling: return "down-sampling";
    case FilterKind::oracle_filter_all: return "oracle-filter-all";
  }
  return "filtertrain";
}

std::string FilterStrategy::label() const {
  switch (kind) {
    case FilterKind::filtertrain: {
      std::string t = format_fixed(predict_threshold, 2);
      while (t.size() > 3 && t.back() == '0') t.pop_back();
      return "filtertrain-" + t;
    }
    case FilterKind::nofiltering: return "nofiltering";
    case FilterKind::down_sampling: return "down-sampling";
    case FilterKind::oracle_filter_all: return "oracle";
  }
  return "filtertrain";
}

void FilterStrategy::validate() const {
  if (!(predict_threshold > 0.0 && predict_threshold < 1.0)) {
    throw ValidationError("predict_threshold must be in (0,1)");
  }
  if (downsample_irrelevant_to.has_value() != (kind == FilterKind::down_sampling)) {
    throw ValidationError(
        "downsample_irrelevant_to must be set exactly when kind == down-sampling");
  }
  if (downsample_irrelevant_to && *downsample_irrelevant_to <= 0) {
    throw ValidationError("downsample_irrelevant_to must be positive");
  }
}

FilterStrategy FilterStrategy::filtertrain(double threshold) {
  FilterStrategy s;
  s.kind = FilterKind::filtertrain;
  s.predict_threshold = threshold;
  return s;
}

FilterStrategy FilterStrategy::nofiltering() {
  FilterStrategy s;
  s.kind = FilterKind::nofiltering;
  return s;
}

FilterStrategy FilterStrategy::down_sampling(int target, uint64_t seed) {
  FilterStrategy s;
  s.kind = FilterKind::down_sampling;
  s.downsample_irrelevant_to = target;
  s.seed = seed;
  return s;
}

FilterStrategy FilterStrategy::oracle_filter_all() {
  FilterStrategy s;
  s.kind = FilterKind::oracle_filter_all;
  return s;
}

FilterStrategy FilterStrategy::parse(const std::string& label) {
  if (label == "nofiltering") return nofiltering();
  if (label == "oracle" || label == "oracle-filter-all") return oracle_filter_all();
  if (label == "down-sampling") return down_sampling();
  if (label.rfind("down-sampling:", 0) == 0) {
    try {
      return down_sampling(std::stoi(label.substr(std::string("down-sampling:").size())));
    } catch (const std::exception&) {
      throw ConfigError("bad down-sampling target in '" + label + "'");
    }
  }
  if (label == "filtertrain") return filtertrain();
  if (label.rfind("filtertrain-", 0) == 0) {
    try {
      return filtertrain(std::stod(label.substr(std::string("filtertrain-").size())));
    } catch (const std::exception&) {
      throw ConfigError("bad filtertrain threshold in '" + label + "'");
    }
  }
  throw ConfigError("unknown filter strategy '" + label + "'");
}

nlohmann::json FilterStrategy::to_json() const {
  nlohmann::json j{{"kind", to_string(kind)},
                   {"predict_threshold", predict_threshold},
                   {"seed", seed}};
  if (downsample_irrelevant_to) j["downsample_irrelevant_to"] = *downsample_irrelevant_to;
  return j;
}

FilterStrategy FilterStrategy::from_json(const nlohmann::json& j) {
  FilterStrategy s;
  s.kind = filter_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("predict_threshold")) {
    s.predict_threshold = j["predict_threshold"].get<double>();
  }
  if (j.contains("downsample_irrelevant_to")) {
    s.downsample_irrelevant_to = j["downsample_irrelevant_to"].get<int>();
  } else if (s.kind == FilterKind::down_sampling) {
    s.downsample_irrelevant_to = 3367;
  }
  if (j.contains("seed")) s.seed = j["seed"].get<uint64_t>();
  s.validate();
  return s;
}

AspectSentDataset build_aspectsent(const std::vector<LabeledMeeting>& labeled,
                                   const std::vector<MeetingRecord>& records) {
  std::unordered_map<std::string, const MeetingRecord*> by_id;
  for (const auto& record : records) by_id[record.meeting_id] = &record;

  AspectSentDataset ds;
  for (const auto& meeting : labeled) {
    auto it = by_id.find(meeting.meeting_id);
    if (it == by_id.end()) {
      throw IntegrityError("labeled meeting '" + meeting.meeting_id +
                           "' has no source record");
    }
    const MeetingRecord& record = *it->second;
    for (const auto& row : meeting.rows) {
      if (row.sent_idx < 0 || row.sent_idx >= static_cast<int>(record.sentences.size())) {
        throw IntegrityError("labeled sentence " + std::to_string(row.sent_idx) +
                             " outside meeting '" + meeting.meeting_id + "'");
      }
      AspectSentExample ex;
      ex.meeting_id = meeting.meeting_id;
      ex.sent_idx = row.sent_idx;
      ex.text = record.sentences[static_cast<size_t>(row.sent_idx)].text;
      ex.labels = row.v.labels;
      ex.split = record.split;
      ds.examples.push_back(std::move(ex));
    }
  }
  ds.stats = compute_stats(ds.examples);
  return ds;
}

AspectSentStats compute_stats(const std::vector<AspectSentExample>& examples) {
  AspectSentStats stats;
  auto tally = [](AspectSentSplitStats& s, const AspectSentExample& ex) {
    s.total += 1;
    if (ex.all_zero()) s.irrelevant += 1;
    for (const auto& [aspect, label] : ex.labels) {
      if (label == 1) s.per_aspect[aspect] += 1;
    }
  };
  for (const auto& ex : examples) {
    tally(stats.splits[ex.split], ex);
    tally(stats.overall, ex);
  }
  return stats;
}

std::vector<AspectSentExample> apply_filter_strategy(
    const std::vector<AspectSentExample>& examples, const FilterStrategy& strategy,
    std::vector<std::string>* warnings) {
  strategy.validate();
  switch (strategy.kind) {
    case FilterKind::nofiltering:
      return examples;
    case FilterKind::filtertrain: {
      std::vector<AspectSentExample> out;
      out.reserve(examples.size());
      for (const auto& ex : examples) {
        if (ex.split == Split::train && ex.all_zero()) continue;
        out.push_back(ex);
      }
      return out;
    }
    case FilterKind::oracle_filter_all: {
      std::vector<AspectSentExample> out;
      out.reserve(examples.size());
      for (const auto& ex : examples) {
        if (!ex.all_zero()) out.push_back(ex);
      }
      return out;
    }
    case FilterKind::down_sampling: {
      std::vector<size_t> irrelevant_train;
      for (size_t i = 0; i < examples.size(); ++i) {
        if (examples[i].split == Split::train && examples[i].all_zero()) {
          irrelevant_train.push_back(i);
        }
      }
      const size_t target = static_cast<size_t>(*strategy.downsample_irrelevant_to);
      if (irrelevant_train.size() <= target) {
        if (warnings && irrelevant_train.size() < target) {
          warnings->push_back("down-sampling target " + std::to_string(target) +
                              " exceeds available irrelevant train rows (" +
                              std::to_string(irrelevant_train.size()) + "); keeping all");
        }
        return examples;
      }
      // Sample positions within the irrelevant pool, then emit in input order.
      Rng rng(strategy.seed);
      std::vector<size_t> kept_pool = rng.sample_indices(irrelevant_train.size(), target);
      std::vector<char> keep(examples.size(), 0);
      for (size_t p : kept_pool) keep[irrelevant_train[p]] = 1;

      std::vector<AspectSentExample> out;
      out.reserve(examples.size() - irrelevant_train.size() + target);
      for (size_t i = 0; i < examples.size(); ++i) {
        const auto& ex = examples[i];
        const bool dropped_candidate = ex.split == Split::train && ex.all_zero();
        if (!dropped_candidate || keep[i]) out.push_back(ex);
      }
      return out;
    }
  }
  return examples;
}

namespace {

nlohmann::json example_to_json(const AspectSentExample& ex) {
  return nlohmann::json{{"meeting_id", ex.meeting_id},
                        {"sent_idx", ex.sent_idx},
                        {"text", ex.text},
                        {"labels", ex.labels},
                        {"split", to_string(ex.split)}};
}

AspectSentExample example_from_json(const nlohmann::json& j) {
  AspectSentExample ex;
  ex.meeting_id = j.at("meeting_id").get<std::string>();
  ex.sent_idx = j.at("sent_idx").get<int>();
  ex.text = j.at("text").get<std::string>();
  ex.labels = j.at("labels").get<std::map<AspectId, int>>();
  ex.split = split_from_string(j.at("split").get<std::string>());
  return ex;
}

nlohmann::json split_stats_to_json(const AspectSentSplitStats& s) {
  return nlohmann::json{
      {"total", s.total}, {"irrelevant", s.irrelevant}, {"per_aspect", s.per_aspect}};
}

}  // namespace

nlohmann::json stats_to_json(const AspectSentStats& stats) {
  nlohmann::json splits = nlohmann::json::object();
  for (const auto& [split, s] : stats.splits) {
    splits[to_string(split)] = split_stats_to_json(s);
  }
  return nlohmann::json{{"splits", std::move(splits)},
                        {"overall", split_stats_to_json(stats.overall)}};
}

void save_aspectsent(const fs::path& out_dir, const AspectSentDataset& ds) {
  std::map<Split, std::vector<nlohmann::json>> rows;
  for (const auto& ex : ds.examples) rows[ex.split].push_back(example_to_json(ex));
  for (Split split : {Split::train, Split::val, Split::test}) {
    write_jsonl_file(out_dir / (to_string(split) + ".jsonl"), rows[split]);
  }
  write_json_file(out_dir / "stats.json", stats_to_json(ds.stats));
}

std::vector<AspectSentExample> load_aspectsent(const fs::path& dir) {
  std::vector<AspectSentExample> out;
  for (Split split : {Split::train, Split::val, Split::test}) {
    const fs::path path = dir / (to_string(split) + ".jsonl");
    if (!fs::exists(path)) continue;
    for_each_jsonl(path, [&](const nlohmann::json& j, size_t) {
      out.push_back(example_from_json(j));
    });
  }
  if (out.empty()) throw ParseError(dir.string(), "no dataset rows found");
  return out;
}

}  // namespace aspectsum
