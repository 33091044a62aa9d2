#pragma once

#include "dial/blocker.hpp"
#include "dial/config.hpp"
#include "dial/data.hpp"
#include "dial/encoder.hpp"
#include "dial/eval.hpp"
#include "dial/index.hpp"
#include "dial/matcher.hpp"
#include "dial/selection.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dial {

enum class SessionStatus { idle, training, blocking, awaiting_labels, done };
const char* to_string(SessionStatus s);
SessionStatus parse_session_status(const std::string& s);

// Everything trained or derived in one round.
struct RoundModels {
  std::optional<MatcherHead<float>> matcher;
  std::vector<CommitteeMember<float>> committee;
  // Record embeddings the round's models were trained on (d x |R|, d x |S|).
  Mat<float> emb_r;
  Mat<float> emb_s;
  CandidateSet cand;
  std::vector<double> probs;  // matcher probability per cand entry
};

// A round that has selected its queries and is waiting for (some) answers.
struct PendingRound {
  std::vector<PairId> queue;  // selection order
  std::vector<std::pair<PairId, LabelValue>> auto_labels;
  std::map<PairId, LabelValue> answers;
  PhaseTimes times;

  std::size_t remaining() const { return queue.size() - answers.size(); }
  bool queued(const PairId& p) const;
};

struct SessionState {
  int round = 0;  // completed rounds
  LabeledSet T;
  RoundModels models;
  std::vector<Metrics> history;
  std::optional<PendingRound> pending;

  bool finished(const Config& cfg) const { return round >= cfg.loop.rounds && !pending; }
};

// Runs the active-learning loop over one dataset. The engine owns the frozen
// record features and base embeddings; all per-run state lives in SessionState.
class Engine {
public:
  Engine(const Dataset& ds, Config cfg);

  const Config& config() const { return cfg_; }
  const Dataset& dataset() const { return ds_; }
  const Mat<float>& base_r() const { return base_r_; }
  const Mat<float>& base_s() const { return base_s_; }

  // Draws the seed set T (round 0). Throws ConfigError when the dataset cannot
  // supply enough seeds.
  SessionState init_session() const;

  // Trains the matcher and committee on T, retrieves cand and selects the
  // round's queries into state.pending. `on_phase` hears when blocking starts.
  void begin_round(SessionState& st, const std::function<void(SessionStatus)>& on_phase = {}) const;

  // Records one oracle answer for a queued pair. Throws IntegrityError for a
  // pair that is not queued or already answered.
  void answer(SessionState& st, const PairId& pair, LabelValue value) const;

  // Answers every open query from the gold standard.
  void answer_from_gold(SessionState& st) const;

  // Adds the answers and auto labels to T, appends the round metrics and
  // advances the round counter. Requires every query answered.
  void complete_round(SessionState& st) const;

  // begin_round + simulated oracle + complete_round.
  void run_round(SessionState& st) const;

  // Pairs of the current cand with matcher probability > 0.5.
  PairSet final_predictions(const SessionState& st) const;

  Metrics evaluate(const SessionState& st) const;

  std::vector<MatcherExample> examples(const LabeledSet& T) const;

  // Candidate set of a round's models (committee or base-embedding blocker).
  CandidateSet retrieve(const RoundModels& m, int round) const;

private:
  const Dataset& ds_;
  Config cfg_;
  std::vector<SparseFeatures> feat_r_, feat_s_;
  EncoderParams<float> encoder_;
  Mat<float> base_r_, base_s_;
};

// Session checkpoint directory: config.txt, labels.csv, state.json,
// metrics.jsonl, timings.jsonl, and once a round has run matcher.bin,
// committee.bin, candidates.csv (plus emb_r.bin / emb_s.bin for a trainable
// encoder).
void save_session(const std::string& dir, const Config& cfg, const SessionState& st, SessionStatus status);
SessionState load_session(const std::string& dir, const Engine& engine, SessionStatus* status = nullptr);

// Metrics lines of a history, as written to metrics.jsonl.
std::string metrics_jsonl(const std::vector<Metrics>& history);

}  // namespace dial
