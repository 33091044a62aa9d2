#include "dial/synth.hpp"

#include "dial/csv.hpp"
#include "dial/error.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <unordered_set>

namespace dial {

namespace {

struct Term {
  const char* full;
  const char* abbrev;
};

const Term kCategories[] = {
    {"headphones", "hdphns"}, {"laptop", "ltop"},     {"camera", "cam"},        {"keyboard", "kbd"},
    {"monitor", "mon"},       {"speaker", "spkr"},    {"router", "rtr"},        {"printer", "prntr"},
    {"tablet", "tab"},        {"charger", "chgr"},    {"microphone", "mic"},    {"projector", "proj"},
    {"television", "tv"},     {"smartwatch", "swtch"}, {"drive", "drv"},        {"mouse", "ms"},
    {"adapter", "adptr"},     {"controller", "ctrlr"}, {"webcam", "wcam"},      {"headset", "hdset"},
};

const Term kColors[] = {{"black", "blk"}, {"white", "wht"}, {"silver", "slvr"}, {"blue", "blu"},
                        {"red", "rd"},    {"gray", "gry"},  {"gold", "gld"},    {"green", "grn"}};

const Term kUnits[] = {{"gb", "g"}, {"inch", "in"}, {"watt", "w"}, {"mah", "mah"}, {"hz", "hz"}};

const char* kOnsets[] = {"b", "br", "c", "cr", "d", "dr", "f", "g", "gr", "k", "l", "m", "n",
                         "p", "pr", "qu", "r", "s", "st", "t", "tr", "v", "x", "z"};
const char* kVowels[] = {"a", "e", "i", "o", "u", "ai", "io", "y"};
const char* kCodas[] = {"", "", "n", "x", "r", "s", "l", "k", "th"};

template <typename T, std::size_t N>
const T& pick(const T (&arr)[N], Rng& rng) {
  return arr[std::uniform_int_distribution<std::size_t>(0, N - 1)(rng)];
}

std::string make_word(Rng& rng, int syllables) {
  std::string w;
  for (int i = 0; i < syllables; ++i) {
    w += pick(kOnsets, rng);
    w += pick(kVowels, rng);
  }
  w += pick(kCodas, rng);
  return w;
}

std::string capitalize(std::string s) {
  if (!s.empty() && s[0] >= 'a' && s[0] <= 'z') s[0] = static_cast<char>(s[0] - 'a' + 'A');
  return s;
}

struct Family {
  std::string brand;
  std::string line;
  std::size_t category = 0;
  std::string prefix;  // model-number letters shared by the family
  std::size_t unit = 0;
};

struct Entity {
  std::size_t family = 0;
  std::string name;
  std::string digits;
  int spec = 0;
  std::size_t color = 0;
  double price = 0.0;
};

std::string model_number(const Family& f, const Entity& e) { return f.prefix + "-" + e.digits; }

std::string format_price(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", p);
  return buf;
}

std::string typo(const std::string& tok, Rng& rng) {
  if (tok.size() < 3) return tok;
  std::string t = tok;
  std::uniform_int_distribution<std::size_t> pos(1, t.size() - 2);
  const auto i = pos(rng);
  switch (std::uniform_int_distribution<int>(0, 3)(rng)) {
    case 0: std::swap(t[i], t[i + 1]); break;
    case 1: t.erase(i, 1); break;
    case 2: t.insert(i, 1, t[i]); break;
    default: t[i] = static_cast<char>('a' + std::uniform_int_distribution<int>(0, 25)(rng)); break;
  }
  return t;
}

std::string reformat_model(const std::string& model, Rng& rng) {
  std::string m = model;
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (u < 0.4) m.erase(std::remove(m.begin(), m.end(), '-'), m.end());
  else if (u < 0.6) std::replace(m.begin(), m.end(), '-', ' ');
  if (std::bernoulli_distribution(0.3)(rng))
    for (auto& c : m) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return m;
}

std::string join(const std::vector<std::string>& toks) {
  std::string out;
  for (const auto& t : toks) {
    if (t.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

}  // namespace

Dataset generate_synthetic(const SynthConfig& cfg) {
  if (cfg.n_dups > cfg.n_r || cfg.n_dups > cfg.n_s) throw ConfigError("synth: more duplicates than records");
  if (cfg.train_pos + cfg.test_pos > cfg.n_dups) throw ConfigError("synth: split needs more duplicates");
  if (cfg.n_families < 1 || cfg.n_templates < 1) throw ConfigError("synth: need families and templates");
  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::string> brands;
  for (std::size_t i = 0; i < std::max<std::size_t>(8, cfg.n_families / 5); ++i)
    brands.push_back(capitalize(make_word(rng, 2)));

  std::vector<Family> families;
  std::set<std::string> prefixes;
  for (std::size_t i = 0; i < cfg.n_families; ++i) {
    Family f;
    f.brand = brands[std::uniform_int_distribution<std::size_t>(0, brands.size() - 1)(rng)];
    f.line = capitalize(make_word(rng, 1 + static_cast<int>(i % 2)));
    f.category = std::uniform_int_distribution<std::size_t>(0, std::size(kCategories) - 1)(rng);
    f.unit = std::uniform_int_distribution<std::size_t>(0, std::size(kUnits) - 1)(rng);
    do {
      f.prefix.clear();
      for (int k = 0; k < 2; ++k) f.prefix.push_back(static_cast<char>('A' + std::uniform_int_distribution<int>(0, 25)(rng)));
    } while (!prefixes.insert(f.prefix).second && prefixes.size() < 676);
    families.push_back(std::move(f));
  }

  auto make_templates = [&] {
    std::vector<std::vector<std::string>> out;
    for (std::size_t t = 0; t < cfg.n_templates; ++t) {
      const auto len = std::uniform_int_distribution<std::size_t>(cfg.desc_min_words, cfg.desc_max_words)(rng);
      std::vector<std::string> words;
      for (std::size_t w = 0; w < len; ++w) words.push_back(make_word(rng, 1 + static_cast<int>(w % 3)));
      out.push_back(std::move(words));
    }
    return out;
  };
  const auto templates = make_templates();
  const auto r_templates = make_templates();

  const std::size_t n_entities = cfg.n_r + cfg.n_s - cfg.n_dups;
  std::vector<Entity> entities;
  std::set<std::string> models;
  while (entities.size() < n_entities) {
    Entity e;
    e.family = std::uniform_int_distribution<std::size_t>(0, families.size() - 1)(rng);
    e.digits = std::to_string(std::uniform_int_distribution<int>(100, 9999)(rng));
    if (!models.insert(model_number(families[e.family], e)).second) continue;
    std::vector<std::string> name;
    for (std::size_t w = 0; w < cfg.name_words; ++w) name.push_back(capitalize(make_word(rng, 2 + static_cast<int>((entities.size() + w) % 2))));
    e.name = join(name);
    e.spec = 8 << std::uniform_int_distribution<int>(0, 5)(rng);
    e.color = std::uniform_int_distribution<std::size_t>(0, std::size(kColors) - 1)(rng);
    e.price = std::round(std::exp(std::uniform_real_distribution<double>(std::log(15.0), std::log(900.0))(rng))) - 0.01;
    entities.push_back(std::move(e));
  }

  auto render_r = [&](const Entity& e) {
    const auto& f = families[e.family];
    const std::string spec = std::to_string(e.spec) + " " + kUnits[f.unit].full;
    Record rec;
    rec.attributes = {
        {"title", join({f.brand, f.line, e.name, kCategories[f.category].full, spec, kColors[e.color].full, model_number(f, e)})},
        {"category", kCategories[f.category].full},
        {"brand", f.brand},
        {"modelno", model_number(f, e)},
        {"price", format_price(e.price)},
        {"features", join(r_templates[std::uniform_int_distribution<std::size_t>(0, r_templates.size() - 1)(rng)])}};
    return rec;
  };

  auto render_s = [&](const Entity& e) {
    const auto& f = families[e.family];
    auto maybe_abbrev = [&](const Term& t) { return std::string(unit(rng) < cfg.abbrev_rate ? t.abbrev : t.full); };
    std::vector<std::string> toks;
    if (unit(rng) < 0.7) toks.push_back(unit(rng) < cfg.abbrev_rate ? f.brand.substr(0, 4) : f.brand);
    toks.push_back(f.line);
    toks.push_back(e.name);
    toks.push_back(maybe_abbrev(kCategories[f.category]));
    toks.push_back(std::to_string(e.spec) + maybe_abbrev(kUnits[f.unit]));
    toks.push_back(maybe_abbrev(kColors[e.color]));
    if (unit(rng) < 0.3) std::swap(toks[toks.size() - 1], toks[toks.size() - 2]);
    for (auto& t : toks)
      if (unit(rng) < cfg.typo_rate) t = typo(t, rng);
    if (unit(rng) >= cfg.drop_model_rate) toks.push_back(reformat_model(model_number(f, e), rng));

    const auto& tpl = templates[std::uniform_int_distribution<std::size_t>(0, templates.size() - 1)(rng)];
    std::vector<std::string> desc(tpl.begin(), tpl.end());
    desc.insert(desc.begin() + static_cast<std::ptrdiff_t>(desc.size() / 2), kCategories[f.category].full);

    const double price = e.price * std::uniform_real_distribution<double>(0.92, 1.08)(rng);
    Record rec;
    rec.attributes = {{"title", join(toks)},
                      {"price", unit(rng) < 0.2 ? std::string() : format_price(price)},
                      {"description", join(desc)}};
    return rec;
  };

  // Entities [0, n_dups) appear on both sides, then R-only, then S-only.
  std::vector<std::size_t> r_entities, s_entities;
  for (std::size_t i = 0; i < cfg.n_r; ++i) r_entities.push_back(i);
  for (std::size_t i = 0; i < cfg.n_dups; ++i) s_entities.push_back(i);
  for (std::size_t i = cfg.n_r; i < n_entities; ++i) s_entities.push_back(i);
  std::shuffle(r_entities.begin(), r_entities.end(), rng);
  std::shuffle(s_entities.begin(), s_entities.end(), rng);

  std::vector<Record> r_records, s_records;
  std::vector<RecordId> r_id_of(n_entities, -1), s_id_of(n_entities, -1);
  for (std::size_t i = 0; i < r_entities.size(); ++i) {
    Record rec = render_r(entities[r_entities[i]]);
    rec.id = static_cast<RecordId>(i);
    r_id_of[r_entities[i]] = rec.id;
    r_records.push_back(std::move(rec));
  }
  for (std::size_t i = 0; i < s_entities.size(); ++i) {
    Record rec = render_s(entities[s_entities[i]]);
    rec.id = static_cast<RecordId>(i);
    s_id_of[s_entities[i]] = rec.id;
    s_records.push_back(std::move(rec));
  }

  Dataset ds;
  ds.R = RecordStore(Side::R, {"title", "category", "brand", "modelno", "price", "features"}, std::move(r_records));
  ds.S = RecordStore(Side::S, {"title", "price", "description"}, std::move(s_records));

  std::vector<PairId> dup_pairs;
  for (std::size_t e = 0; e < cfg.n_dups; ++e) dup_pairs.push_back({r_id_of[e], s_id_of[e]});
  for (const auto& p : dup_pairs) ds.gold.dups.insert(p);
  std::shuffle(dup_pairs.begin(), dup_pairs.end(), rng);

  // Hard negatives: an R record and an S record of the same family.
  std::vector<std::vector<RecordId>> fam_r(families.size()), fam_s(families.size());
  for (std::size_t e = 0; e < n_entities; ++e) {
    if (r_id_of[e] >= 0) fam_r[entities[e].family].push_back(r_id_of[e]);
    if (s_id_of[e] >= 0) fam_s[entities[e].family].push_back(s_id_of[e]);
  }
  std::unordered_set<PairId, PairIdHash> used;
  auto draw_negative = [&](bool hard) -> PairId {
    for (;;) {
      PairId p;
      if (hard) {
        const auto f = std::uniform_int_distribution<std::size_t>(0, families.size() - 1)(rng);
        if (fam_r[f].empty() || fam_s[f].empty()) continue;
        p = {fam_r[f][std::uniform_int_distribution<std::size_t>(0, fam_r[f].size() - 1)(rng)],
             fam_s[f][std::uniform_int_distribution<std::size_t>(0, fam_s[f].size() - 1)(rng)]};
      } else {
        p = {static_cast<RecordId>(std::uniform_int_distribution<std::size_t>(0, cfg.n_r - 1)(rng)),
             static_cast<RecordId>(std::uniform_int_distribution<std::size_t>(0, cfg.n_s - 1)(rng))};
      }
      if (ds.gold.dups.count(p) || !used.insert(p).second) continue;
      return p;
    }
  };

  std::size_t next_dup = 0;
  for (std::size_t i = 0; i < cfg.train_pos; ++i) ds.train_pairs.emplace_back(dup_pairs[next_dup++], true);
  for (std::size_t i = 0; i < cfg.train_neg; ++i) ds.train_pairs.emplace_back(draw_negative(i % 3 != 0), false);
  for (std::size_t i = 0; i < cfg.test_pos; ++i) ds.gold.test_pairs.emplace_back(dup_pairs[next_dup++], true);
  for (std::size_t i = 0; i < cfg.test_neg; ++i) ds.gold.test_pairs.emplace_back(draw_negative(i % 3 != 0), false);
  std::shuffle(ds.train_pairs.begin(), ds.train_pairs.end(), rng);
  std::shuffle(ds.gold.test_pairs.begin(), ds.gold.test_pairs.end(), rng);
  for (const auto& [p, l] : ds.gold.test_pairs) ds.gold.test_set.insert(p);
  return ds;
}

void write_dataset(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  write_table((fs::path(dir) / "tableA.csv").string(), ds.R);
  write_table((fs::path(dir) / "tableB.csv").string(), ds.S);
  auto write_pairs = [&](const char* name, const std::vector<std::pair<PairId, bool>>& pairs, bool with_label) {
    std::ofstream out(fs::path(dir) / name, std::ios::binary);
    if (!out) throw DataError(std::string("cannot write ") + name);
    csv::write_row(out, with_label ? csv::Row{"ltable_id", "rtable_id", "label"} : csv::Row{"ltable_id", "rtable_id"});
    for (const auto& [p, l] : pairs) {
      csv::Row row{std::to_string(p.r_id), std::to_string(p.s_id)};
      if (with_label) row.push_back(l ? "1" : "0");
      csv::write_row(out, row);
    }
  };
  write_pairs("train.csv", ds.train_pairs, true);
  write_pairs("test.csv", ds.gold.test_pairs, true);
  std::vector<PairId> dups(ds.gold.dups.begin(), ds.gold.dups.end());
  std::sort(dups.begin(), dups.end());
  std::vector<std::pair<PairId, bool>> matches;
  for (const auto& p : dups) matches.emplace_back(p, true);
  write_pairs("matches.csv", matches, false);
}

}  // namespace dial
