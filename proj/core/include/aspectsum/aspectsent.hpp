#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "aspectsum/labeler.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

// One labeled sentence row of the constructed classification dataset.
struct AspectSentExample {
  std::string meeting_id;
  int sent_idx = 0;
  std::string text;
  std::map<AspectId, int> labels;
  Split split = Split::train;

  bool all_zero() const;
  bool operator==(const AspectSentExample&) const = default;
};

enum class FilterKind { filtertrain, nofiltering, down_sampling, oracle_filter_all };

FilterKind filter_kind_from_string(const std::string& s);
std::string to_string(FilterKind k);

struct FilterStrategy {
  FilterKind kind = FilterKind::filtertrain;
  double predict_threshold = 0.5;  // classifier operating point downstream
  std::optional<int> downsample_irrelevant_to;  // set iff kind == down_sampling
  uint64_t seed = 0;

  // Report row label: "filtertrain-0.5", "filtertrain-0.3", "nofiltering",
  // "down-sampling", "oracle".
  std::string label() const;
  void validate() const;

  static FilterStrategy filtertrain(double threshold = 0.5);
  static FilterStrategy nofiltering();
  static FilterStrategy down_sampling(int target = 3367, uint64_t seed = 0);
  static FilterStrategy oracle_filter_all();

  // Inverse of label(): accepts "filtertrain", "filtertrain-0.3",
  // "nofiltering", "down-sampling", "down-sampling:N", "oracle",
  // "oracle-filter-all".
  static FilterStrategy parse(const std::string& label);

  nlohmann::json to_json() const;
  static FilterStrategy from_json(const nlohmann::json& j);
};

struct AspectSentSplitStats {
  int total = 0;
  int irrelevant = 0;  // rows whose label vector is all zero
  std::map<AspectId, int> per_aspect;  // a multi-label row counts once per column

  bool operator==(const AspectSentSplitStats&) const = default;
};

struct AspectSentStats {
  std::map<Split, AspectSentSplitStats> splits;
  AspectSentSplitStats overall;

  bool operator==(const AspectSentStats&) const = default;
};

struct AspectSentDataset {
  std::vector<AspectSentExample> examples;
  AspectSentStats stats;
};

// One example per transcript sentence; splits inherited from the source
// meeting. A labeled sentence with no source meeting is an integrity error.
AspectSentDataset build_aspectsent(const std::vector<LabeledMeeting>& labeled,
                                   const std::vector<MeetingRecord>& records);

AspectSentStats compute_stats(const std::vector<AspectSentExample>& examples);

// Membership-only transforms; never touches text or labels.
//   filtertrain       drop all-zero train rows, val/test untouched
//   nofiltering       identity
//   down-sampling     keep every positive train row; seeded uniform sample of
//                     the irrelevant train rows down to the target
//   oracle-filter-all drop all-zero rows in every split
std::vector<AspectSentExample> apply_filter_strategy(
    const std::vector<AspectSentExample>& examples, const FilterStrategy& strategy,
    std::vector<std::string>* warnings = nullptr);

// aspectsent/{train,val,test}.jsonl + stats.json
void save_aspectsent(const std::filesystem::path& out_dir, const AspectSentDataset& ds);
std::vector<AspectSentExample> load_aspectsent(const std::filesystem::path& dir);

nlohmann::json stats_to_json(const AspectSentStats& stats);

}  // namespace aspectsum
