#include "dial/eval.hpp"

#include "dial/error.hpp"

#include <json.hpp>

namespace dial {

using nlohmann::json;

PRF prf_from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  PRF out;
  if (tp + fp > 0) out.p = static_cast<double>(tp) / static_cast<double>(tp + fp);
  if (tp + fn > 0) out.r = static_cast<double>(tp) / static_cast<double>(tp + fn);
  if (out.p + out.r > 0) out.f1 = 2.0 * out.p * out.r / (out.p + out.r);
  return out;
}

double recall_cand(const CandidateSet& cand, const PairSet& dups) {
  if (dups.empty()) throw UndefinedMetricError("recall_cand: empty duplicate set");
  std::size_t hit = 0;
  for (const auto& e : cand.pairs) hit += dups.count(e.pair);
  return static_cast<double>(hit) / static_cast<double>(dups.size());
}

PRF prf_test(const PairSet& predicted, const std::vector<std::pair<PairId, bool>>& test_pairs) {
  std::size_t tp = 0, fp = 0, fn = 0;
  for (const auto& [pair, dup] : test_pairs) {
    const bool pred = predicted.count(pair) != 0;
    if (pred && dup) ++tp;
    else if (pred) ++fp;
    else if (dup) ++fn;
  }
  return prf_from_counts(tp, fp, fn);
}

PRF prf_allpairs(const PairSet& predicted, const PairSet& dups) {
  std::size_t tp = 0;
  for (const auto& p : predicted) tp += dups.count(p);
  return prf_from_counts(tp, predicted.size() - tp, dups.size() - tp);
}

namespace {

json prf_json(const PRF& v) { return json{{"p", v.p}, {"r", v.r}, {"f1", v.f1}}; }

PRF prf_from(const json& j) { return {j.at("p").get<double>(), j.at("r").get<double>(), j.at("f1").get<double>()}; }

}  // namespace

std::string metrics_json_line(const Metrics& m) {
  json j;
  j["round"] = m.round;
  j["labeled"] = m.labeled;
  j["recall_cand"] = m.recall_cand;
  j["test"] = prf_json(m.test);
  j["all"] = prf_json(m.all);
  return j.dump();
}

std::string timings_json_line(const Metrics& m) {
  json j;
  j["round"] = m.round;
  j["times"] = {{"matcher", m.times.matcher},
                {"committee", m.times.committee},
                {"index_retrieve", m.times.index_retrieve},
                {"selection", m.times.selection}};
  return j.dump();
}

Metrics parse_metrics_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    Metrics m;
    m.round = j.at("round").get<int>();
    m.labeled = j.at("labeled").get<std::size_t>();
    m.recall_cand = j.at("recall_cand").get<double>();
    m.test = prf_from(j.at("test"));
    m.all = prf_from(j.at("all"));
    if (j.contains("times")) {
      const auto& t = j["times"];
      m.times = {t.at("matcher").get<double>(), t.at("committee").get<double>(),
                 t.at("index_retrieve").get<double>(), t.at("selection").get<double>()};
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(std::string("bad metrics line: ") + e.what());
  }
}

}  // namespace dial
