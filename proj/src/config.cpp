#include "dial/config.hpp"

#include "dial/checkpoint.hpp"

#include <charconv>
#include <functional>
#include <map>
#include <sstream>

namespace dial {

const char* to_string(OracleKind k) { return k == OracleKind::human ? "human" : "simulated"; }
const char* to_string(BlockerMode m) { return m == BlockerMode::fixed ? "fixed" : "committee"; }
const char* to_string(BlockerObjective o) {
  switch (o) {
    case BlockerObjective::contrastive: return "contrastive";
    case BlockerObjective::classification: return "classification";
    case BlockerObjective::triplet: return "triplet";
  }
  return "contrastive";
}
const char* to_string(Similarity s) { return s == Similarity::scaled_cosine ? "scaled_cosine" : "neg_sq_l2"; }
const char* to_string(NegativeSource n) { return n == NegativeSource::labeled ? "labeled" : "random"; }
const char* to_string(IndexBackend b) { return b == IndexBackend::ivf ? "ivf" : "exact"; }
const char* to_string(EncoderProvider p) {
  return p == EncoderProvider::precomputed ? "precomputed" : "hashed_ngram";
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

template <typename E>
E parse_enum(const std::string& key, const std::string& v, std::initializer_list<E> values) {
  for (auto e : values)
    if (v == to_string(e)) return e;
  throw ConfigError(key + ": unknown value '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Field {
  std::function<void(Config&, const std::string&, const std::string&)> set;
  std::function<std::string(const Config&)> get;
};

#define INT_FIELD(member, T)                                                                      \
  Field {                                                                                         \
    [](Config& c, const std::string& k, const std::string& v) { c.member = parse_integer<T>(k, v); }, \
        [](const Config& c) { return std::to_string(c.member); }                                  \
  }
#define REAL_FIELD(member)                                                                     \
  Field {                                                                                      \
    [](Config& c, const std::string& k, const std::string& v) { c.member = parse_real(k, v); }, \
        [](const Config& c) { return fmt(c.member); }                                          \
  }
#define BOOL_FIELD(member)                                                                     \
  Field {                                                                                      \
    [](Config& c, const std::string& k, const std::string& v) { c.member = parse_bool(k, v); }, \
        [](const Config& c) { return std::string(c.member ? "true" : "false"); }               \
  }
#define STRING_FIELD(member)                                                         \
  Field {                                                                            \
    [](Config& c, const std::string&, const std::string& v) { c.member = v; },        \
        [](const Config& c) { return c.member; }                                     \
  }
#define ENUM_FIELD(member, ...)                                                                          \
  Field {                                                                                                \
    [](Config& c, const std::string& k, const std::string& v) { c.member = parse_enum(k, v, {__VA_ARGS__}); }, \
        [](const Config& c) { return std::string(to_string(c.member)); }                                 \
  }

const std::vector<std::pair<std::string, Field>>& fields() {
  static const std::vector<std::pair<std::string, Field>> table = {
      {"data", STRING_FIELD(data_dir)},
      {"out", STRING_FIELD(out_dir)},
      {"loop.rounds", INT_FIELD(loop.rounds, int)},
      {"loop.seed_pos", INT_FIELD(loop.seed_pos, std::size_t)},
      {"loop.seed_neg", INT_FIELD(loop.seed_neg, std::size_t)},
      {"loop.warm_start", BOOL_FIELD(loop.warm_start)},
      {"loop.global_seed", INT_FIELD(loop.global_seed, std::uint64_t)},
      {"loop.oracle", ENUM_FIELD(loop.oracle, OracleKind::simulated, OracleKind::human)},
      {"loop.blocker", ENUM_FIELD(loop.blocker, BlockerMode::committee, BlockerMode::fixed)},
      {"encoder.provider",
       ENUM_FIELD(encoder.provider, EncoderProvider::hashed_ngram, EncoderProvider::precomputed)},
      {"encoder.dim", INT_FIELD(encoder.dim, int)},
      {"encoder.ngram_min", INT_FIELD(encoder.ngram_min, int)},
      {"encoder.ngram_max", INT_FIELD(encoder.ngram_max, int)},
      {"encoder.hash_buckets", INT_FIELD(encoder.hash_buckets, std::uint32_t)},
      {"encoder.trainable", BOOL_FIELD(encoder.trainable)},
      {"encoder.row_norm", REAL_FIELD(encoder.row_norm)},
      {"encoder.precomputed_r", STRING_FIELD(encoder.precomputed_R)},
      {"encoder.precomputed_s", STRING_FIELD(encoder.precomputed_S)},
      {"matcher.hidden", INT_FIELD(matcher.hidden, int)},
      {"matcher.epochs", INT_FIELD(matcher.epochs, int)},
      {"matcher.batch_size", INT_FIELD(matcher.batch_size, int)},
      {"matcher.lr", REAL_FIELD(matcher.optim.lr)},
      {"matcher.weight_decay", REAL_FIELD(matcher.optim.weight_decay)},
      {"committee.size", INT_FIELD(committee.size, int)},
      {"committee.keep_prob", REAL_FIELD(committee.keep_prob)},
      {"committee.batch_size", INT_FIELD(committee.batch_size, int)},
      {"committee.epochs", INT_FIELD(committee.epochs, int)},
      {"committee.objective", ENUM_FIELD(committee.objective, BlockerObjective::contrastive,
                                         BlockerObjective::classification, BlockerObjective::triplet)},
      {"committee.margin", REAL_FIELD(committee.margin)},
      {"committee.similarity", ENUM_FIELD(committee.similarity, Similarity::neg_sq_l2, Similarity::scaled_cosine)},
      {"committee.cosine_scale", REAL_FIELD(committee.cosine_scale)},
      {"committee.negatives", ENUM_FIELD(committee.negatives, NegativeSource::random, NegativeSource::labeled)},
      {"committee.lr", REAL_FIELD(committee.optim.lr)},
      {"committee.weight_decay", REAL_FIELD(committee.optim.weight_decay)},
      {"committee.threads", INT_FIELD(committee.threads, int)},
      {"index.k", INT_FIELD(index.k, int)},
      {"index.cand_size", INT_FIELD(index.cand_size, std::size_t)},
      {"index.cand_factor", REAL_FIELD(index.cand_factor)},
      {"index.backend", ENUM_FIELD(index.backend, IndexBackend::exact, IndexBackend::ivf)},
      {"index.ivf_nlist", INT_FIELD(index.ivf_nlist, std::size_t)},
      {"index.ivf_nprobe", INT_FIELD(index.ivf_nprobe, std::size_t)},
      {"index.kmeans_iterations", INT_FIELD(index.kmeans_iterations, int)},
      {"selection.strategy",
       ENUM_FIELD(selection.strategy, Strategy::uncertainty, Strategy::random, Strategy::greedy, Strategy::qbc,
                  Strategy::partition2, Strategy::partition4, Strategy::badge)},
      {"selection.budget", INT_FIELD(selection.budget, std::size_t)},
      {"selection.qbc_committee_size", INT_FIELD(selection.qbc_committee_size, int)},
  };
  return table;
}

const std::map<std::string, std::string>& aliases() {
  static const std::map<std::string, std::string> m = {{"seed", "loop.global_seed"},
                                                       {"rounds", "loop.rounds"},
                                                       {"budget", "selection.budget"},
                                                       {"strategy", "selection.strategy"}};
  return m;
}

}  // namespace

void Config::set(const std::string& key_in, const std::string& value) {
  std::string key = key_in;
  if (auto a = aliases().find(key); a != aliases().end()) key = a->second;
  for (const auto& [name, field] : fields())
    if (name == key) return field.set(*this, key, value);
  throw ConfigError("unknown config key '" + key_in + "'");
}

void Config::validate() const {
  loop.validate();
  encoder.validate();
  matcher.validate();
  committee.validate();
  index.validate();
  selection.validate();
  if (encoder.provider == EncoderProvider::precomputed && encoder.trainable)
    throw ConfigError("encoder.trainable requires the hashed_ngram provider");
  if (encoder.provider == EncoderProvider::precomputed && (encoder.precomputed_R.empty() || encoder.precomputed_S.empty()))
    throw ConfigError("precomputed provider needs encoder.precomputed_r and encoder.precomputed_s");
}

std::vector<std::pair<std::string, std::string>> Config::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& [name, field] : fields()) out.emplace_back(name, field.get(*this));
  return out;
}

std::string Config::snapshot() const {
  std::string s;
  for (const auto& [k, v] : entries()) s += k + " = " + v + "\n";
  return s;
}

void apply_config_text(Config& cfg, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
    cfg.set(key, value);
  }
}

Config load_config_file(const std::string& path) {
  Config cfg;
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error&) {
    throw ConfigError("cannot read config file " + path);
  }
  apply_config_text(cfg, text);
  return cfg;
}

}  // namespace dial
