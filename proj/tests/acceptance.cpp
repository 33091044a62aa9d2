// Acceptance suite: prints one PASS/FAIL line per criterion and exits with the
// number of failures.
#include "dial/loop.hpp"
#include "dial/synth.hpp"
#include "gradcheck.hpp"
#include "index_oracle.hpp"
#include "support.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

using namespace dial;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kGradTol = 1e-4;
constexpr int kGradInstances = 50;
constexpr double kGradSeconds = 10.0;
constexpr double kCollapseTol = 1e-9;
constexpr int kOracleInstances = 200;
constexpr double kOracleSeconds = 30.0;
constexpr int kSeeds = 10;
constexpr int kRounds = 5;
constexpr std::size_t kBudget = 32;
constexpr double kNegGap = 0.05;
constexpr int kNegWins = 8;
constexpr double kNegSeconds = 300.0;
constexpr int kObjectiveWins = 7;
constexpr double kFixedGap = 0.05;
constexpr int kFixedWins = 8;
constexpr int kSelectionWins = 7;
constexpr std::size_t kFinalHumanLabels = 1408;
constexpr double kRunSeconds = 60.0;
constexpr double kScalingR2 = 0.95;

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::printf("%s  %-28s %s\n", ok ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

const Dataset& dataset() {
  static const Dataset ds = generate_synthetic(SynthConfig{});
  return ds;
}

Config loop_config(std::uint64_t seed, const std::vector<std::string>& overrides = {}) {
  Config cfg;
  cfg.loop.rounds = kRounds;
  cfg.selection.budget = kBudget;
  cfg.loop.global_seed = seed;
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

struct RunResult {
  Metrics final;
  std::string metrics;
  double seconds = 0.0;
  bool phase_times = true;
  // Uncapped union of the final committee vs each member.
  double union_recall = 0.0;
  std::vector<double> member_recall;
};

RunResult run_loop(const Config& cfg, bool union_check = false) {
  const auto t0 = Clock::now();
  Engine eng(dataset(), cfg);
  auto st = eng.init_session();
  while (!st.finished(cfg)) eng.run_round(st);
  RunResult r;
  r.seconds = seconds_since(t0);
  r.final = st.history.back();
  r.metrics = metrics_jsonl(st.history);
  for (const auto& m : st.history) {
    const auto& t = m.times;
    r.phase_times = r.phase_times && t.matcher > 0 && t.index_retrieve > 0 && t.selection >= 0 &&
                    (cfg.loop.blocker == BlockerMode::fixed || t.committee > 0);
  }
  if (union_check) {
    const auto& ds = dataset();
    auto spaces = committee_spaces(st.models.committee, eng.base_r(), eng.base_s(), cfg.committee);
    auto all = retrieve_pairs(spaces, ds.R, ds.S, cfg.index, 1);
    r.union_recall = recall_cand(merge_retrieved(all, std::nullopt), ds.gold.dups);
    for (std::size_t k = 0; k < spaces.size(); ++k) {
      std::vector<ScoredPair> mine;
      for (const auto& sp : all)
        if (sp.member == static_cast<int>(k)) mine.push_back(sp);
      r.member_recall.push_back(recall_cand(merge_retrieved(mine, std::nullopt), ds.gold.dups));
    }
  }
  return r;
}

// Runs every seed of one configuration; results are cached by override list.
const std::vector<RunResult>& runs(const std::vector<std::string>& overrides, bool union_check = false) {
  static std::map<std::vector<std::string>, std::vector<RunResult>> cache;
  auto it = cache.find(overrides);
  if (it != cache.end()) return it->second;
  std::vector<RunResult> out;
  for (int s = 0; s < kSeeds; ++s) out.push_back(run_loop(loop_config(static_cast<std::uint64_t>(s), overrides), union_check));
  return cache.emplace(overrides, std::move(out)).first->second;
}

double total_seconds(const std::vector<RunResult>& rs) {
  double t = 0.0;
  for (const auto& r : rs) t += r.seconds;
  return t;
}

template <typename Pred>
int count_seeds(Pred pred) {
  int n = 0;
  for (int s = 0; s < kSeeds; ++s) n += pred(static_cast<std::size_t>(s));
  return n;
}

void gradient_correctness() {
  const auto t0 = Clock::now();
  double worst_matcher = 0.0;
  std::map<BlockerObjective, double> worst;
  for (int i = 0; i < kGradInstances; ++i) {
    const auto s = static_cast<std::uint64_t>(i);
    worst_matcher = std::max(worst_matcher, dial::testing::matcher_gradcheck(s));
    for (auto obj : {BlockerObjective::contrastive, BlockerObjective::triplet, BlockerObjective::classification})
      worst[obj] = std::max(worst[obj], dial::testing::blocker_gradcheck(obj, i % 2 == 1, s));
  }
  const double secs = seconds_since(t0);
  double all = worst_matcher;
  for (auto& [o, e] : worst) all = std::max(all, e);
  report(all < kGradTol && secs < kGradSeconds, "gradient correctness",
         fmt("max rel err matcher %.2e", worst_matcher) +
             fmt(" contrastive %.2e triplet %.2e classification %.2e", worst[BlockerObjective::contrastive],
                 worst[BlockerObjective::triplet], worst[BlockerObjective::classification]) +
             fmt(" over %.0f instances each, %.2f s", kGradInstances, secs));
}

void contrastive_structure() {
  bool ok = true;
  std::ostringstream detail;
  for (std::size_t b : {1u, 2u, 16u}) {
    auto in = dial::testing::blocker_instance(BlockerObjective::contrastive, false, b);
    Rng rng(b);
    auto batch = make_random_batch({{0, 1}, {2, 3}, {4, 5}}, 10, 12, b, rng);
    LossTrace trace;
    contrastive_loss(batch, in.member, in.baseR, in.baseS, in.cfg, static_cast<MemberGrads<double>*>(nullptr), &trace);
    bool terms = trace.terms_per_positive.size() == 3;
    for (auto t : trace.terms_per_positive) terms = terms && t == 1 + 3 * b;
    in.member.U.values.setZero();
    const double per_pos = contrastive_loss(batch, in.member, in.baseR, in.baseS, in.cfg) / 3.0;
    const double err = std::abs(per_pos - std::log(1.0 + 3.0 * static_cast<double>(b)));
    ok = ok && terms && err < kCollapseTol;
    detail << "b=" << b << " terms " << (terms ? "ok" : "WRONG") << " |collapse-log(1+3b)|=" << err << "; ";
  }
  report(ok, "contrastive structure", detail.str());
}

void index_oracle() {
  const auto t0 = Clock::now();
  int bad = 0, ties = 0;
  for (int i = 0; i < kOracleInstances; ++i) {
    const auto s = static_cast<std::uint64_t>(i);
    auto in = dial::testing::oracle_instance(s, 1000, 64);
    bad += dial::testing::oracle_mismatches(in, s);
    ties += s % 2 == 1;
  }
  const double secs = seconds_since(t0);
  report(bad == 0 && secs < kOracleSeconds, "index oracle equivalence",
         fmt("%.0f mismatching queries over %.0f instances (", bad, kOracleInstances) +
             fmt("%.0f with integer ties), exact + ivf nprobe=nlist, %.2f s", ties, secs));
}

void union_recall() {
  const auto& rs = runs({}, true);
  int violations = 0;
  double margin = 1.0;
  for (const auto& r : rs)
    for (double m : r.member_recall) {
      violations += r.union_recall < m;
      margin = std::min(margin, r.union_recall - m);
    }
  report(violations == 0, "union-recall monotonicity",
         fmt("%.0f violations over %.0f seeds, min(union - member) %.4f", violations, kSeeds, margin));
}

void negatives() {
  const auto& rnd = runs({});
  const auto& lab = runs({"committee.negatives=labeled"});
  const int wins = count_seeds([&](std::size_t s) { return rnd[s].final.recall_cand - lab[s].final.recall_cand >= kNegGap; });
  double mr = 0, ml = 0;
  for (int s = 0; s < kSeeds; ++s) mr += rnd[s].final.recall_cand / kSeeds, ml += lab[s].final.recall_cand / kSeeds;
  const double secs = total_seconds(rnd) + total_seconds(lab);
  report(wins >= kNegWins && secs < kNegSeconds, "random vs labeled negatives",
         fmt("gap >= 5 pts in %.0f/10 seeds; mean recall_cand %.3f vs %.3f", wins, mr, ml) + fmt(", %.1f s", secs));
}

void objectives() {
  const auto& con = runs({});
  const auto& cls = runs({"committee.objective=classification"});
  const int wins = count_seeds([&](std::size_t s) { return con[s].final.recall_cand >= cls[s].final.recall_cand; });
  double mc = 0, mk = 0;
  for (int s = 0; s < kSeeds; ++s) mc += con[s].final.recall_cand / kSeeds, mk += cls[s].final.recall_cand / kSeeds;
  report(wins >= kObjectiveWins, "objective ordering",
         fmt("contrastive >= classification in %.0f/10 seeds; mean recall_cand %.3f vs %.3f", wins, mc, mk));
}

void dial_vs_fixed() {
  const auto& dial = runs({});
  const auto& fixed = runs({"loop.blocker=fixed"});
  const int wins = count_seeds([&](std::size_t s) { return dial[s].final.all.f1 - fixed[s].final.all.f1 >= kFixedGap; });
  double md = 0, mf = 0;
  for (int s = 0; s < kSeeds; ++s) md += dial[s].final.all.f1 / kSeeds, mf += fixed[s].final.all.f1 / kSeeds;
  report(wins >= kFixedWins, "trained vs fixed blocker",
         fmt("all-pairs F1 gap >= 5 pts in %.0f/10 seeds; mean F1 %.3f vs %.3f", wins, md, mf));
}

void selection_sanity() {
  const auto& rnd = runs({"strategy=random"});
  bool ok = true;
  std::ostringstream detail;
  for (const char* name : {"uncertainty", "partition2", "badge"}) {
    const auto& rs = name == std::string("uncertainty") ? runs({}) : runs({std::string("strategy=") + name});
    const int wins = count_seeds([&](std::size_t s) { return rs[s].final.all.f1 > rnd[s].final.all.f1; });
    ok = ok && wins >= kSelectionWins;
    double m = 0;
    for (int s = 0; s < kSeeds; ++s) m += rs[s].final.all.f1 / kSeeds;
    detail << name << " " << wins << "/10 (mean F1 " << fmt("%.3f", m) << "); ";
  }
  double mr = 0;
  for (int s = 0; s < kSeeds; ++s) mr += rnd[s].final.all.f1 / kSeeds;
  detail << "random mean F1 " << fmt("%.3f", mr);
  report(ok, "selection sanity", detail.str());
}

void budget() {
  Config cfg;
  cfg.loop.rounds = 10;
  cfg.selection.budget = 128;
  cfg.loop.seed_pos = 64;
  cfg.loop.seed_neg = 64;
  Engine eng(dataset(), cfg);
  auto st = eng.init_session();
  bool steps = st.T.human_count() == 128;
  while (!st.finished(cfg)) {
    eng.run_round(st);
    steps = steps && st.T.human_count() == 128 + 128 * static_cast<std::size_t>(st.round) &&
            st.history.back().labeled == st.T.human_count();
  }
  report(steps && st.T.human_count() == kFinalHumanLabels, "budget accounting",
         fmt("|human-labeled T| = %.0f after %.0f rounds", static_cast<double>(st.T.human_count()), st.round));
}

void determinism() {
  dial::testing::TempDir a("acc_a"), b("acc_b");
  for (const auto* dir : {&a, &b}) {
    auto cfg = loop_config(0);
    cfg.committee.threads = 1;
    Engine eng(dataset(), cfg);
    auto st = eng.init_session();
    while (!st.finished(cfg)) eng.run_round(st);
    save_session(dir->str(), cfg, st, SessionStatus::done);
  }
  const auto ma = dial::testing::slurp(a.file("metrics.jsonl"));
  const auto mb = dial::testing::slurp(b.file("metrics.jsonl"));
  report(!ma.empty() && ma == mb, "determinism",
         fmt("metrics.jsonl %.0f bytes, identical: ", static_cast<double>(ma.size())) + (ma == mb ? "yes" : "no"));
}

double r_squared(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i] / n, my += y[i] / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return syy == 0 ? 0.0 : sxy * sxy / (sxx * syy);
}

void runtime() {
  const auto& rs = runs({});
  double worst = 0.0;
  bool phases = true;
  for (const auto& r : rs) {
    worst = std::max(worst, r.seconds);
    phases = phases && r.phase_times;
  }

  // Committee training time at N = 1, 3, 10 (median of three timings each).
  auto cfg = loop_config(0);
  Engine eng(dataset(), cfg);
  auto st = eng.init_session();
  std::vector<IndexPair> tp, tn;
  for (const auto& [p, l] : st.T.entries())
    (l.is_duplicate() ? tp : tn).push_back({dataset().R.at_id(p.r_id), dataset().S.at_id(p.s_id)});
  std::vector<double> ns, ts;
  for (int n : {1, 3, 10}) {
    auto c = cfg.committee;
    c.size = n;
    std::vector<double> t3;
    for (int rep = 0; rep < 3; ++rep) {
      auto committee = init_committee<float>(c, eng.base_r().rows(), 1);
      const auto t0 = Clock::now();
      train_committee(committee, tp, tn, eng.base_r(), eng.base_s(), c, 2);
      t3.push_back(seconds_since(t0));
    }
    std::sort(t3.begin(), t3.end());
    ns.push_back(n);
    ts.push_back(t3[1]);
  }
  const double r2 = r_squared(ns, ts);
  report(worst < kRunSeconds && phases && r2 > kScalingR2, "runtime envelope",
         fmt("slowest 5-round run %.2f s, phase times ", worst) + (phases ? "emitted" : "MISSING") +
             fmt("; committee training %.3f / %.3f / %.3f s", ts[0], ts[1], ts[2]) +
             fmt(" for N=1/3/10, R^2 %.4f", r2));
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<void()>>> checks{
      {"gradients", gradient_correctness}, {"structure", contrastive_structure}, {"oracle", index_oracle},
      {"union", union_recall},           {"negatives", negatives},           {"objectives", objectives},
      {"fixed", dial_vs_fixed},          {"selection", selection_sanity},   {"budget", budget},
      {"determinism", determinism},      {"runtime", runtime}};
  for (const auto& [name, fn] : checks) {
    try {
      fn();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  }
  std::printf("%d failing\n", failures);
  return failures == 0 ? 0 : 1;
}
