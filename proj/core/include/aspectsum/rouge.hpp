#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "aspectsum/summarizer.hpp"
#include "aspectsum/types.hpp"

namespace aspectsum {

// Scoring tokenization: lowercase, split on non-alphanumeric runs. No
// stemming, no stopword removal, so scores are bit-reproducible.
std::vector<std::string> rouge_tokenize(std::string_view text);

struct MetricPRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct RougeScore {
  MetricPRF r1;  // clipped unigram overlap
  MetricPRF r2;  // clipped bigram overlap
  MetricPRF rl;  // longest common subsequence over the full token sequences
};

// Longest common subsequence length between two token sequences.
size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b);

// Errors when the reference tokenizes to nothing; an empty candidate scores
// all zeros.
RougeScore rouge_score(const std::string& candidate, const std::string& reference);

struct AspectRougeRow {
  double r1_f = 0.0;  // means over scored pairs, in [0,1]
  double r2_f = 0.0;
  double rl_f = 0.0;
  int pairs = 0;
};

// Per-aspect means over the (meeting, aspect) pairs that have both a
// candidate and a reference; rendered as percentages at two decimals.
struct ResultTable {
  std::string label;  // row label in comparison reports
  std::map<AspectId, AspectRougeRow> per_aspect;
  int scored = 0;
  int skipped_no_reference = 0;

  nlohmann::json to_json() const;
  static ResultTable from_json(const nlohmann::json& j);
};

ResultTable evaluate_run(const std::vector<GeneratedSummary>& summaries,
                         const std::vector<MeetingRecord>& references,
                         const std::string& label = "run");

// Aligned text table: one row per ResultTable, R-1/R-2/R-L columns grouped
// per aspect. `failed` rows render with dashes.
std::string render_result_tables(const std::vector<ResultTable>& rows,
                                 const std::vector<AspectId>& aspect_set,
                                 const std::vector<std::string>& failed_labels = {});

}  // namespace aspectsum
