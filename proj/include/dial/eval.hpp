#pragma once

#include "dial/index.hpp"
#include "dial/types.hpp"

#include <string>
#include <unordered_set>
#include <vector>

namespace dial {

using PairSet = std::unordered_set<PairId, PairIdHash>;

struct PRF {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
};

// P = tp/(tp+fp), R = tp/(tp+fn); each is 0 when its denominator is 0, and
// F1 is 0 when P + R = 0.
PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn);

// |cand ∩ dups| / |dups|; throws UndefinedMetricError on empty dups.
double recall_cand(const CandidateSet& cand, const PairSet& dups);

// P/R/F1 over the labeled test pairs; a test pair is predicted duplicate iff
// it is in `predicted`.
PRF prf_test(const PairSet& predicted, const std::vector<std::pair<PairId, bool>>& test_pairs);

PRF prf_allpairs(const PairSet& predicted, const PairSet& dups);

struct PhaseTimes {
  double matcher = 0.0;
  double committee = 0.0;
  double index_retrieve = 0.0;
  double selection = 0.0;
};

struct Metrics {
  int round = 0;
  std::size_t labeled = 0;
  double recall_cand = 0.0;
  PRF test;
  PRF all;
  PhaseTimes times;
};

// One JSON object on a single line, without the phase times (those go to a
// separate timings file so that the metrics file is reproducible).
std::string metrics_json_line(const Metrics& m);
std::string timings_json_line(const Metrics& m);
Metrics parse_metrics_line(const std::string& line);

}  // namespace dial
