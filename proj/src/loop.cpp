#include "dial/loop.hpp"

#include "dial/checkpoint.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <sstream>
#include <stdexcept>

namespace dial {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::idle: return "idle";
    case SessionStatus::training: return "training";
    case SessionStatus::blocking: return "blocking";
    case SessionStatus::awaiting_labels: return "awaiting_labels";
    case SessionStatus::done: return "done";
  }
  return "idle";
}

SessionStatus parse_session_status(const std::string& s) {
  for (auto v : {SessionStatus::idle, SessionStatus::training, SessionStatus::blocking,
                 SessionStatus::awaiting_labels, SessionStatus::done})
    if (s == to_string(v)) return v;
  throw ParseError("unknown session status '" + s + "'");
}

bool PendingRound::queued(const PairId& p) const { return std::find(queue.begin(), queue.end(), p) != queue.end(); }

namespace {

class Stopwatch {
public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

// Copy of a head or member with fresh optimizer state, for warm starts.
template <typename Scalar>
ParamBlock<Scalar> fresh(const ParamBlock<Scalar>& b) {
  return ParamBlock<Scalar>(b.values);
}

std::vector<PairId> sorted(const PairSet& s) {
  std::vector<PairId> v(s.begin(), s.end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

Engine::Engine(const Dataset& ds, Config cfg) : ds_(ds), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (ds_.R.size() == 0 || ds_.S.size() == 0) throw DataError("both record lists must be non-empty");
  if (cfg_.encoder.provider == EncoderProvider::precomputed) {
    base_r_ = load_precomputed<float>(cfg_.encoder.precomputed_R, ds_.R).vectors;
    base_s_ = load_precomputed<float>(cfg_.encoder.precomputed_S, ds_.S).vectors;
    if (base_r_.rows() != base_s_.rows()) throw ShapeError("precomputed R and S embeddings differ in dimension");
  } else {
    feat_r_ = featurize_all(ds_.R, cfg_.encoder);
    feat_s_ = featurize_all(ds_.S, cfg_.encoder);
    encoder_ = EncoderParams<float>::init(cfg_.encoder, derive_seed(cfg_.loop.global_seed, 0, stream::encoder));
    base_r_ = project_all(Side::R, feat_r_, encoder_).vectors;
    base_s_ = project_all(Side::S, feat_s_, encoder_).vectors;
  }
}

std::vector<MatcherExample> Engine::examples(const LabeledSet& T) const {
  std::vector<MatcherExample> ex;
  ex.reserve(T.size());
  for (const auto& [p, l] : T.entries()) ex.push_back({ds_.R.at_id(p.r_id), ds_.S.at_id(p.s_id), l.is_duplicate()});
  return ex;
}

SessionState Engine::init_session() const {
  const auto& lc = cfg_.loop;
  Rng rng(derive_seed(lc.global_seed, 0, stream::seed_set));

  std::vector<PairId> train_pos, train_neg;
  for (const auto& [p, dup] : ds_.train_pairs)
    if (!ds_.gold.in_test(p)) (dup ? train_pos : train_neg).push_back(p);
  for (auto* v : {&train_pos, &train_neg}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }

  std::vector<PairId> pos_pool = train_pos;
  if (pos_pool.size() < lc.seed_pos) {
    pos_pool.clear();
    for (const auto& p : sorted(ds_.gold.dups))
      if (!ds_.gold.in_test(p)) pos_pool.push_back(p);
  }
  if (pos_pool.size() < lc.seed_pos)
    throw ConfigError("need " + std::to_string(lc.seed_pos) + " seed duplicates, dataset offers " +
                      std::to_string(pos_pool.size()));

  SessionState st;
  for (auto i : sample_indices(pos_pool.size(), lc.seed_pos, rng))
    st.T.add(pos_pool[i], {LabelValue::duplicate, LabelSource::seed, 0});

  if (!train_neg.empty()) {
    if (train_neg.size() < lc.seed_neg)
      throw ConfigError("need " + std::to_string(lc.seed_neg) + " seed non-duplicates, dataset offers " +
                        std::to_string(train_neg.size()));
    for (auto i : sample_indices(train_neg.size(), lc.seed_neg, rng))
      st.T.add(train_neg[i], {LabelValue::non_duplicate, LabelSource::seed, 0});
  } else {
    const double space = static_cast<double>(ds_.R.size()) * static_cast<double>(ds_.S.size());
    if (space - static_cast<double>(ds_.gold.dups.size() + ds_.gold.test_set.size()) <
        2.0 * static_cast<double>(lc.seed_neg))
      throw ConfigError("too few non-duplicate pairs to sample seed negatives");
    std::uniform_int_distribution<std::size_t> pr(0, ds_.R.size() - 1), ps(0, ds_.S.size() - 1);
    std::size_t added = 0;
    while (added < lc.seed_neg) {
      const PairId p{ds_.R[pr(rng)].id, ds_.S[ps(rng)].id};
      if (ds_.gold.is_dup(p) || ds_.gold.in_test(p) || st.T.contains(p)) continue;
      st.T.add(p, {LabelValue::non_duplicate, LabelSource::seed, 0});
      ++added;
    }
  }
  return st;
}

CandidateSet Engine::retrieve(const RoundModels& m, int round) const {
  std::vector<RetrievalSpace<float>> spaces;
  if (cfg_.loop.blocker == BlockerMode::committee)
    spaces = committee_spaces(m.committee, m.emb_r, m.emb_s, cfg_.committee);
  else
    spaces.push_back({m.emb_r, m.emb_s});
  const auto raw = retrieve_pairs(spaces, ds_.R, ds_.S, cfg_.index,
                                  derive_seed(cfg_.loop.global_seed, static_cast<std::uint64_t>(round), stream::index));
  return merge_retrieved(raw, cfg_.index.cap_for(ds_.S.size()));
}

void Engine::begin_round(SessionState& st, const std::function<void(SessionStatus)>& on_phase) const {
  if (st.pending) throw IntegrityError("a round is already waiting for labels");
  if (st.round >= cfg_.loop.rounds) throw IntegrityError("all rounds are complete");
  const int t = st.round + 1;
  const auto g = cfg_.loop.global_seed;
  const auto tt = static_cast<std::uint64_t>(t);
  const bool warm = cfg_.loop.warm_start && st.models.matcher.has_value();

  PendingRound pr;
  RoundModels m;
  Stopwatch clock;

  const auto ex = examples(st.T);
  std::optional<MatcherHead<float>> warm_head;
  if (warm) {
    const auto& h = *st.models.matcher;
    warm_head = MatcherHead<float>{fresh(h.W1), fresh(h.b1), fresh(h.w2), fresh(h.b2)};
  }
  const auto* warm_ptr = warm_head ? &*warm_head : nullptr;
  if (cfg_.encoder.trainable) {
    TrainableProjection<float> tp{ParamBlock<float>(encoder_.projection), &feat_r_, &feat_s_};
    m.matcher = train_matcher<float>(ex, base_r_, base_s_, cfg_.matcher, derive_seed(g, tt, stream::matcher), &tp,
                                     nullptr, warm_ptr);
    const EncoderParams<float> trained{std::move(tp.projection.values)};
    m.emb_r = project_all(Side::R, feat_r_, trained).vectors;
    m.emb_s = project_all(Side::S, feat_s_, trained).vectors;
  } else {
    m.matcher = train_matcher<float>(ex, base_r_, base_s_, cfg_.matcher, derive_seed(g, tt, stream::matcher),
                                     nullptr, nullptr, warm_ptr);
    m.emb_r = base_r_;
    m.emb_s = base_s_;
  }
  pr.times.matcher = clock.lap();

  if (cfg_.loop.blocker == BlockerMode::committee) {
    if (warm && !st.models.committee.empty()) {
      for (const auto& c : st.models.committee)
        m.committee.push_back({c.mask, fresh(c.U), fresh(c.V), fresh(c.scorer)});
    } else {
      m.committee = init_committee<float>(cfg_.committee, m.emb_r.rows(), derive_seed(g, tt, stream::committee));
    }
    std::vector<IndexPair> tpos, tneg;
    for (const auto& e : ex) (e.duplicate ? tpos : tneg).push_back({e.r, e.s});
    train_committee(m.committee, tpos, tneg, m.emb_r, m.emb_s, cfg_.committee,
                    derive_seed(g, tt, stream::committee, 1));
  }
  pr.times.committee = clock.lap();

  if (on_phase) on_phase(SessionStatus::blocking);
  m.cand = retrieve(m, t);
  pr.times.index_retrieve = clock.lap();

  m.probs = predict_all(m.cand, *m.matcher, m.emb_r, m.emb_s);
  const auto pool = build_pool(m.cand, m.probs, st.T, ds_.gold);
  const auto B = cfg_.selection.budget;
  Rng sel_rng(derive_seed(g, tt, stream::selection));
  switch (cfg_.selection.strategy) {
    case Strategy::uncertainty: pr.queue = select_uncertainty(pool, B); break;
    case Strategy::random: pr.queue = select_random(pool, B, sel_rng); break;
    case Strategy::greedy: pr.queue = select_greedy(pool, B); break;
    case Strategy::qbc:
      pr.queue = select_qbc<float>(pool, ex, m.emb_r, m.emb_s, cfg_.matcher, cfg_.selection,
                                   derive_seed(g, tt, stream::qbc));
      break;
    case Strategy::partition2:
    case Strategy::partition4: {
      auto part = select_partition(pool, B, cfg_.selection.strategy == Strategy::partition2 ? 2 : 4);
      pr.queue = std::move(part.to_label);
      pr.auto_labels = std::move(part.auto_label);
      break;
    }
    case Strategy::badge: pr.queue = select_badge<float>(pool, *m.matcher, m.emb_r, m.emb_s, B, sel_rng); break;
  }
  pr.times.selection = clock.lap();

  if (pr.queue.size() > B) throw std::logic_error("selection exceeded the budget");
  PairSet seen;
  for (const auto& p : pr.queue)
    if (st.T.contains(p) || ds_.gold.in_test(p) || !seen.insert(p).second)
      throw std::logic_error("selection returned a labeled, test or repeated pair");
  for (const auto& [p, v] : pr.auto_labels)
    if (st.T.contains(p) || ds_.gold.in_test(p) || !seen.insert(p).second)
      throw std::logic_error("auto label overlaps queries, T or the test split");

  st.models = std::move(m);
  st.pending = std::move(pr);
}

void Engine::answer(SessionState& st, const PairId& pair, LabelValue value) const {
  if (!st.pending) throw IntegrityError("no round is waiting for labels");
  if (!st.pending->queued(pair)) throw IntegrityError("pair is not in the labeling queue");
  if (!st.pending->answers.emplace(pair, value).second) throw IntegrityError("pair already labeled this round");
}

void Engine::answer_from_gold(SessionState& st) const {
  if (!st.pending) throw IntegrityError("no round is waiting for labels");
  for (const auto& p : st.pending->queue)
    if (!st.pending->answers.count(p))
      st.pending->answers.emplace(p, ds_.gold.is_dup(p) ? LabelValue::duplicate : LabelValue::non_duplicate);
}

void Engine::complete_round(SessionState& st) const {
  if (!st.pending) throw IntegrityError("no round is waiting for labels");
  if (st.pending->remaining() != 0) throw IntegrityError("labeling queue not exhausted");
  const int t = st.round + 1;
  const auto source =
      cfg_.loop.oracle == OracleKind::human ? LabelSource::oracle_human : LabelSource::oracle_simulated;
  for (const auto& p : st.pending->queue) st.T.add(p, {st.pending->answers.at(p), source, t});
  for (const auto& [p, v] : st.pending->auto_labels) st.T.add(p, {v, LabelSource::high_confidence_auto, t});

  Metrics m = evaluate(st);
  m.round = t;
  m.times = st.pending->times;
  st.history.push_back(m);
  st.round = t;
  st.pending.reset();
}

void Engine::run_round(SessionState& st) const {
  begin_round(st);
  answer_from_gold(st);
  complete_round(st);
}

PairSet Engine::final_predictions(const SessionState& st) const {
  PairSet out;
  const auto& m = st.models;
  for (std::size_t i = 0; i < m.cand.size() && i < m.probs.size(); ++i)
    if (m.probs[i] > 0.5) out.insert(m.cand.pairs[i].pair);
  return out;
}

Metrics Engine::evaluate(const SessionState& st) const {
  Metrics m;
  m.round = st.round;
  m.labeled = st.T.human_count();
  m.recall_cand = recall_cand(st.models.cand, ds_.gold.dups);
  const auto pred = final_predictions(st);
  m.test = prf_test(pred, ds_.gold.test_pairs);
  m.all = prf_allpairs(pred, ds_.gold.dups);
  return m;
}

std::string metrics_jsonl(const std::vector<Metrics>& history) {
  std::string s;
  for (const auto& m : history) s += metrics_json_line(m) + "\n";
  return s;
}

namespace {

json pair_json(const PairId& p) { return json::array({p.r_id, p.s_id}); }

PairId pair_from(const json& j) { return {j.at(0).get<RecordId>(), j.at(1).get<RecordId>()}; }

}  // namespace

void save_session(const std::string& dir, const Config& cfg, const SessionState& st, SessionStatus status) {
  const fs::path d(dir);
  fs::create_directories(d);
  write_text_atomic((d / "config.txt").string(), cfg.snapshot());
  write_labels_csv((d / "labels.csv").string(), st.T);

  const auto& m = st.models;
  if (m.matcher) {
    save_matcher((d / "matcher.bin").string(), *m.matcher);
    if (!m.committee.empty()) save_committee((d / "committee.bin").string(), m.committee, cfg.committee.keep_prob);
    write_candidates_csv((d / "candidates.csv").string(), m.cand);
    if (cfg.encoder.trainable) {
      save_embeddings((d / "emb_r.bin").string(), EmbeddingMatrix<float>{Side::R, m.emb_r});
      save_embeddings((d / "emb_s.bin").string(), EmbeddingMatrix<float>{Side::S, m.emb_s});
    }
  }

  json j;
  j["round"] = st.round;
  j["status"] = to_string(status);
  if (st.pending) {
    const auto& p = *st.pending;
    json q = json::array(), a = json::array(), ans = json::array();
    for (const auto& pair : p.queue) q.push_back(pair_json(pair));
    for (const auto& [pair, v] : p.auto_labels) a.push_back({pair.r_id, pair.s_id, v == LabelValue::duplicate ? 1 : 0});
    for (const auto& [pair, v] : p.answers) ans.push_back({pair.r_id, pair.s_id, v == LabelValue::duplicate ? 1 : 0});
    j["pending"] = {{"queue", q},
                    {"auto_labels", a},
                    {"answers", ans},
                    {"times",
                     {p.times.matcher, p.times.committee, p.times.index_retrieve, p.times.selection}}};
  }
  write_text_atomic((d / "state.json").string(), j.dump(1) + "\n");

  std::string timings;
  for (const auto& mt : st.history) timings += timings_json_line(mt) + "\n";
  write_text_atomic((d / "metrics.jsonl").string(), metrics_jsonl(st.history));
  write_text_atomic((d / "timings.jsonl").string(), timings);
}

SessionState load_session(const std::string& dir, const Engine& engine, SessionStatus* status) {
  const fs::path d(dir);
  const auto& cfg = engine.config();
  SessionState st;
  st.T = read_labels_csv((d / "labels.csv").string());
  for (const auto& [p, l] : st.T.entries())
    if (!engine.dataset().R.contains(p.r_id) || !engine.dataset().S.contains(p.s_id))
      throw IntegrityError(dir + ": labels reference unknown records");

  json j;
  try {
    j = json::parse(read_text((d / "state.json").string()));
    st.round = j.at("round").get<int>();
    if (status) *status = parse_session_status(j.at("status").get<std::string>());
    if (j.contains("pending")) {
      const auto& p = j["pending"];
      PendingRound pr;
      for (const auto& q : p.at("queue")) pr.queue.push_back(pair_from(q));
      for (const auto& a : p.at("auto_labels"))
        pr.auto_labels.emplace_back(pair_from(a), a.at(2).get<int>() ? LabelValue::duplicate : LabelValue::non_duplicate);
      for (const auto& a : p.at("answers"))
        pr.answers.emplace(pair_from(a), a.at(2).get<int>() ? LabelValue::duplicate : LabelValue::non_duplicate);
      const auto& t = p.at("times");
      pr.times = {t.at(0).get<double>(), t.at(1).get<double>(), t.at(2).get<double>(), t.at(3).get<double>()};
      st.pending = std::move(pr);
    }
  } catch (const json::exception& e) {
    throw ParseError(dir + "/state.json: " + e.what());
  }

  std::istringstream metrics(read_text((d / "metrics.jsonl").string()));
  std::istringstream timings(fs::exists(d / "timings.jsonl") ? read_text((d / "timings.jsonl").string()) : "");
  std::string line, tline;
  while (std::getline(metrics, line)) {
    if (line.empty()) continue;
    Metrics m = parse_metrics_line(line);
    if (std::getline(timings, tline) && !tline.empty()) {
      const auto tj = json::parse(tline);
      const auto& t = tj.at("times");
      m.times = {t.at("matcher").get<double>(), t.at("committee").get<double>(),
                 t.at("index_retrieve").get<double>(), t.at("selection").get<double>()};
    }
    st.history.push_back(m);
  }

  if (fs::exists(d / "matcher.bin")) {
    auto& m = st.models;
    m.matcher = load_matcher((d / "matcher.bin").string());
    if (fs::exists(d / "committee.bin")) m.committee = load_committee((d / "committee.bin").string());
    if (cfg.encoder.trainable) {
      m.emb_r = load_precomputed<float>((d / "emb_r.bin").string(), engine.dataset().R).vectors;
      m.emb_s = load_precomputed<float>((d / "emb_s.bin").string(), engine.dataset().S).vectors;
    } else {
      m.emb_r = engine.base_r();
      m.emb_s = engine.base_s();
    }
    if (m.matcher->input_dim() != 4 * m.emb_r.rows()) throw ShapeError(dir + ": matcher does not fit the embeddings");
    m.cand = read_candidates_csv((d / "candidates.csv").string(), engine.dataset().R, engine.dataset().S);
    m.probs = predict_all(m.cand, *m.matcher, m.emb_r, m.emb_s);
  }
  return st;
}

}  // namespace dial
