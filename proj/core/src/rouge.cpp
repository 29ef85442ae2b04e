#include "aspectsum/rouge.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_map>

#include "aspectsum/errors.hpp"
#include "aspectsum/util.hpp"

namespace aspectsum {

std::vector<std::string> rouge_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (char c : text) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      current.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

namespace {

MetricPRF prf_from_counts(double matches, double cand_total, double ref_total) {
  MetricPRF m;
  m.precision = cand_total > 0 ? matches / cand_total : 0.0;
  m.recall = ref_total > 0 ? matches / ref_total : 0.0;
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

// Clipped n-gram match count: sum over grams of min(count_cand, count_ref).
template <typename GramKey>
double clipped_matches(const std::unordered_map<GramKey, int>& cand,
                       const std::unordered_map<GramKey, int>& ref) {
  double matches = 0.0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) matches += std::min(count, it->second);
  }
  return matches;
}

std::unordered_map<std::string, int> unigram_counts(const std::vector<std::string>& toks) {
  std::unordered_map<std::string, int> counts;
  for (const auto& t : toks) counts[t] += 1;
  return counts;
}

std::unordered_map<std::string, int> bigram_counts(const std::vector<std::string>& toks) {
  std::unordered_map<std::string, int> counts;
  for (size_t i = 0; i + 1 < toks.size(); ++i) {
    counts[toks[i] + "\x1f" + toks[i + 1]] += 1;
  }
  return counts;
}

}  // namespace

size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  if (a.empty() || b.empty()) return 0;
  // Two-row DP keeps memory at O(min side).
  const auto& shorter = a.size() <= b.size() ? a : b;
  const auto& longer = a.size() <= b.size() ? b : a;
  std::vector<size_t> prev(shorter.size() + 1, 0), curr(shorter.size() + 1, 0);
  for (size_t i = 1; i <= longer.size(); ++i) {
    for (size_t j = 1; j <= shorter.size(); ++j) {
      curr[j] = longer[i - 1] == shorter[j - 1] ? prev[j - 1] + 1
                                                : std::max(prev[j], curr[j - 1]);
    }
    std::swap(prev, curr);
  }
  return prev[shorter.size()];
}

RougeScore rouge_score(const std::string& candidate, const std::string& reference) {
  const auto ref_toks = rouge_tokenize(reference);
  if (ref_toks.empty()) {
    throw ValidationError("rouge_score requires a non-empty reference after tokenization");
  }
  const auto cand_toks = rouge_tokenize(candidate);

  RougeScore score;
  if (cand_toks.empty()) return score;

  score.r1 = prf_from_counts(
      clipped_matches(unigram_counts(cand_toks), unigram_counts(ref_toks)),
      static_cast<double>(cand_toks.size()), static_cast<double>(ref_toks.size()));

  const double cand_bigrams = cand_toks.size() > 1 ? cand_toks.size() - 1.0 : 0.0;
  const double ref_bigrams = ref_toks.size() > 1 ? ref_toks.size() - 1.0 : 0.0;
  score.r2 = prf_from_counts(
      clipped_matches(bigram_counts(cand_toks), bigram_counts(ref_toks)), cand_bigrams,
      ref_bigrams);

  score.rl = prf_from_counts(static_cast<double>(lcs_length(cand_toks, ref_toks)),
                             static_cast<double>(cand_toks.size()),
                             static_cast<double>(ref_toks.size()));
  return score;
}

nlohmann::json ResultTable::to_json() const {
  nlohmann::json aspects = nlohmann::json::object();
  for (const auto& [aspect, row] : per_aspect) {
    aspects[aspect] = {{"r1_f", row.r1_f},
                       {"r2_f", row.r2_f},
                       {"rl_f", row.rl_f},
                       {"pairs", row.pairs}};
  }
  return nlohmann::json{{"label", label},
                        {"per_aspect", std::move(aspects)},
                        {"scored", scored},
                        {"skipped_no_reference", skipped_no_reference}};
}

ResultTable ResultTable::from_json(const nlohmann::json& j) {
  ResultTable t;
  t.label = j.at("label").get<std::string>();
  for (const auto& [aspect, row] : j.at("per_aspect").items()) {
    AspectRougeRow r;
    r.r1_f = row.at("r1_f").get<double>();
    r.r2_f = row.at("r2_f").get<double>();
    r.rl_f = row.at("rl_f").get<double>();
    r.pairs = row.at("pairs").get<int>();
    t.per_aspect[aspect] = r;
  }
  t.scored = j.at("scored").get<int>();
  t.skipped_no_reference = j.at("skipped_no_reference").get<int>();
  return t;
}

ResultTable evaluate_run(const std::vector<GeneratedSummary>& summaries,
                         const std::vector<MeetingRecord>& references,
                         const std::string& label) {
  std::map<std::string, const MeetingRecord*> by_id;
  for (const auto& record : references) by_id[record.meeting_id] = &record;

  struct Accum {
    double r1 = 0, r2 = 0, rl = 0;
    int n = 0;
  };
  std::map<AspectId, Accum> accum;

  ResultTable table;
  table.label = label;
  for (const auto& summary : summaries) {
    const MeetingRecord* record = nullptr;
    if (auto it = by_id.find(summary.meeting_id); it != by_id.end()) record = it->second;
    const std::string* ref = nullptr;
    if (record) {
      auto sit = record->summaries.find(summary.aspect);
      if (sit != record->summaries.end() && !sit->second.empty()) ref = &sit->second;
    }
    if (!ref) {
      table.skipped_no_reference += 1;
      continue;
    }
    const RougeScore s = rouge_score(summary.text, *ref);
    Accum& a = accum[summary.aspect];
    a.r1 += s.r1.f1;
    a.r2 += s.r2.f1;
    a.rl += s.rl.f1;
    a.n += 1;
    table.scored += 1;
  }

  for (const auto& [aspect, a] : accum) {
    AspectRougeRow row;
    row.pairs = a.n;
    if (a.n > 0) {
      row.r1_f = a.r1 / a.n;
      row.r2_f = a.r2 / a.n;
      row.rl_f = a.rl / a.n;
    }
    table.per_aspect[aspect] = row;
  }
  return table;
}

std::string render_result_tables(const std::vector<ResultTable>& rows,
                                 const std::vector<AspectId>& aspect_set,
                                 const std::vector<std::string>& failed_labels) {
  size_t label_width = 5;
  for (const auto& row : rows) label_width = std::max(label_width, row.label.size());
  for (const auto& l : failed_labels) label_width = std::max(label_width, l.size());

  auto pad = [](std::string s, size_t width) {
    while (s.size() < width) s.push_back(' ');
    return s;
  };

  std::string out = pad("model", label_width);
  for (const auto& aspect : aspect_set) {
    std::string header = aspect + " R-1/R-2/R-L";
    out += " | " + pad(header, 23);
  }
  out += '\n';
  out += std::string(label_width + aspect_set.size() * 26, '-');
  out += '\n';

  auto render_row = [&](const ResultTable* table, const std::string& label) {
    out += pad(label, label_width);
    for (const auto& aspect : aspect_set) {
      std::string cell;
      if (table) {
        auto it = table->per_aspect.find(aspect);
        if (it != table->per_aspect.end() && it->second.pairs > 0) {
          cell = format_fixed(100.0 * it->second.r1_f, 2) + " / " +
                 format_fixed(100.0 * it->second.r2_f, 2) + " / " +
                 format_fixed(100.0 * it->second.rl_f, 2);
        } else {
          cell = "-";
        }
      } else {
        cell = "FAILED";
      }
      out += " | " + pad(cell, 23);
    }
    out += '\n';
  };

  for (const auto& row : rows) render_row(&row, row.label);
  for (const auto& label : failed_labels) render_row(nullptr, label);
  return out;
}

}  // namespace aspectsum
