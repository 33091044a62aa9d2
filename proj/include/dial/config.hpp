#pragma once

#include "dial/blocker.hpp"
#include "dial/encoder.hpp"
#include "dial/index.hpp"
#include "dial/matcher.hpp"
#include "dial/selection.hpp"

#include <string>
#include <utility>
#include <vector>

namespace dial {

enum class OracleKind { simulated, human };
// committee: the trained index-by-committee blocker. fixed: k-NN over the
// untrained base embeddings (baseline).
enum class BlockerMode { committee, fixed };

struct LoopConfig {
  int rounds = 10;
  std::size_t seed_pos = 64;
  std::size_t seed_neg = 64;
  bool warm_start = false;
  std::uint64_t global_seed = 0;
  OracleKind oracle = OracleKind::simulated;
  BlockerMode blocker = BlockerMode::committee;

  void validate() const {
    if (rounds < 1) throw ConfigError("loop.rounds must be >= 1");
    if (seed_pos < 1 || seed_neg < 1) throw ConfigError("loop.seed_pos and loop.seed_neg must be >= 1");
  }
};

struct Config {
  std::string data_dir;
  std::string out_dir;
  LoopConfig loop;
  EncoderConfig encoder;
  MatcherConfig matcher;
  CommitteeConfig committee;
  IndexConfig index;
  SelectionConfig selection;

  // Throws ConfigError on an unknown key or a malformed value.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  // Every key with its current value, in a stable order; parse(snapshot()) round-trips.
  std::vector<std::pair<std::string, std::string>> entries() const;
  std::string snapshot() const;
};

// Flat "key = value" lines; '#' starts a comment; blank lines are ignored.
// Keys may be short flag names (seed, rounds, budget, strategy) or dotted
// module keys (committee.size, index.k, ...).
void apply_config_text(Config& cfg, const std::string& text);
Config load_config_file(const std::string& path);

const char* to_string(OracleKind k);
const char* to_string(BlockerMode m);
const char* to_string(BlockerObjective o);
const char* to_string(Similarity s);
const char* to_string(NegativeSource n);
const char* to_string(IndexBackend b);
const char* to_string(EncoderProvider p);

}  // namespace dial
