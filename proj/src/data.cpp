#include "dial/data.hpp"

#include "dial/csv.hpp"
#include "dial/error.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;

namespace dial {

RecordStore::RecordStore(Side side, std::vector<std::string> schema, std::vector<Record> records)
    : side_(side), schema_(std::move(schema)), records_(std::move(records)) {
  index_.reserve(records_.size());
  for (std::size_t i = 0; i < records_.size(); ++i) {
    auto& rec = records_[i];
    if (!index_.emplace(rec.id, i).second)
      throw IntegrityError("duplicate record id " + std::to_string(rec.id));
    if (rec.attributes.size() != schema_.size())
      throw IntegrityError("record " + std::to_string(rec.id) + " does not conform to schema");
    for (std::size_t a = 0; a < schema_.size(); ++a)
      if (rec.attributes[a].first != schema_[a])
        throw IntegrityError("record " + std::to_string(rec.id) + " attribute order mismatch");
  }
}

std::optional<std::size_t> RecordStore::index_of(RecordId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t RecordStore::at_id(RecordId id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw IntegrityError("unknown record id " + std::to_string(id));
  return it->second;
}

const char* to_string(LabelValue v) {
  return v == LabelValue::duplicate ? "duplicate" : "non_duplicate";
}

const char* to_string(LabelSource s) {
  switch (s) {
    case LabelSource::seed: return "seed";
    case LabelSource::oracle_simulated: return "oracle_simulated";
    case LabelSource::oracle_human: return "oracle_human";
    case LabelSource::high_confidence_auto: return "high_confidence_auto";
  }
  return "seed";
}

LabelSource parse_label_source(const std::string& s) {
  if (s == "seed") return LabelSource::seed;
  if (s == "oracle_simulated") return LabelSource::oracle_simulated;
  if (s == "oracle_human") return LabelSource::oracle_human;
  if (s == "high_confidence_auto") return LabelSource::high_confidence_auto;
  throw ParseError("unknown label source '" + s + "'");
}

void LabeledSet::add(const PairId& pair, const Label& label) {
  if (!entries_.emplace(pair, label).second)
    throw IntegrityError("pair (" + std::to_string(pair.r_id) + "," + std::to_string(pair.s_id) +
                         ") already labeled");
  if (label.is_duplicate()) ++positives_;
}

const Label* LabeledSet::find(const PairId& pair) const {
  auto it = entries_.find(pair);
  return it == entries_.end() ? nullptr : &it->second;
}

std::size_t LabeledSet::human_count() const {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(), [](const auto& kv) { return kv.second.is_human(); }));
}

std::vector<PairId> LabeledSet::positives() const {
  std::vector<PairId> out;
  out.reserve(positives_);
  for (const auto& [p, l] : entries_)
    if (l.is_duplicate()) out.push_back(p);
  return out;
}

std::vector<PairId> LabeledSet::negatives() const {
  std::vector<PairId> out;
  out.reserve(negative_count());
  for (const auto& [p, l] : entries_)
    if (!l.is_duplicate()) out.push_back(p);
  return out;
}

std::string serialize_record(const Record& rec) {
  std::string out;
  for (const auto& [name, value] : rec.attributes) {
    if (value.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += name;
    out.push_back(' ');
    out += value;
  }
  return out;
}

namespace {

RecordId parse_id(const std::string& text, const std::string& where) {
  RecordId v = 0;
  auto first = text.data();
  auto last = text.data() + text.size();
  while (first < last && *first == ' ') ++first;
  while (last > first && last[-1] == ' ') --last;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last || first == last)
    throw ParseError(where + ": invalid id '" + text + "'");
  return v;
}

RecordStore load_table(const fs::path& path, Side side) {
  if (!fs::exists(path)) throw DatasetFormatError("missing " + path.string());
  auto rows = csv::read_file(path.string());
  if (rows.empty()) throw DatasetFormatError(path.string() + ": no header row");
  const auto& header = rows.front();
  auto id_col = std::find(header.begin(), header.end(), "id");
  if (id_col == header.end()) throw DatasetFormatError(path.string() + ": no 'id' column");
  const auto id_index = static_cast<std::size_t>(id_col - header.begin());

  std::vector<std::string> schema;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != id_index) schema.push_back(header[c]);

  std::vector<Record> records;
  records.reserve(rows.size() - 1);
  std::unordered_set<RecordId> seen;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() > header.size())
      throw DatasetFormatError(path.string() + ": row " + std::to_string(r) + " has too many fields");
    Record rec;
    rec.id = parse_id(row.size() > id_index ? row[id_index] : "", path.string());
    if (!seen.insert(rec.id).second)
      throw IntegrityError(path.string() + ": duplicate id " + std::to_string(rec.id));
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == id_index) continue;
      rec.attributes.emplace_back(header[c], c < row.size() ? row[c] : std::string());
    }
    records.push_back(std::move(rec));
  }
  return RecordStore(side, std::move(schema), std::move(records));
}

std::vector<std::pair<PairId, bool>> load_pairs(const fs::path& path, const RecordStore& R,
                                                const RecordStore& S, bool require_label) {
  auto rows = csv::read_file(path.string());
  if (rows.empty()) throw DatasetFormatError(path.string() + ": no header row");
  const auto& header = rows.front();
  auto col = [&](const char* name) -> std::optional<std::size_t> {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) return std::nullopt;
    return static_cast<std::size_t>(it - header.begin());
  };
  auto lcol = col("ltable_id");
  auto rcol = col("rtable_id");
  auto labcol = col("label");
  if (!lcol || !rcol) throw DatasetFormatError(path.string() + ": needs ltable_id, rtable_id");
  if (require_label && !labcol) throw DatasetFormatError(path.string() + ": needs label column");

  std::vector<std::pair<PairId, bool>> out;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    auto field = [&](std::size_t c) -> const std::string& {
      static const std::string empty;
      return c < row.size() ? row[c] : empty;
    };
    PairId p{parse_id(field(*lcol), path.string()), parse_id(field(*rcol), path.string())};
    if (!R.contains(p.r_id) || !S.contains(p.s_id))
      throw IntegrityError(path.string() + ": pair references unknown record");
    bool label = true;
    if (labcol) {
      const auto& v = field(*labcol);
      if (v == "1") label = true;
      else if (v == "0") label = false;
      else throw ParseError(path.string() + ": label '" + v + "' not in {0,1}");
    }
    out.emplace_back(p, label);
  }
  return out;
}

}  // namespace

Dataset load_dataset(const std::string& dir_path) {
  const fs::path dir(dir_path);
  if (!fs::is_directory(dir)) throw DatasetFormatError("not a directory: " + dir_path);
  Dataset ds;
  ds.R = load_table(dir / "tableA.csv", Side::R);
  ds.S = load_table(dir / "tableB.csv", Side::S);

  const auto test_path = dir / "test.csv";
  if (!fs::exists(test_path)) throw DatasetFormatError("missing " + test_path.string());
  ds.gold.test_pairs = load_pairs(test_path, ds.R, ds.S, true);
  for (const auto& [p, l] : ds.gold.test_pairs) {
    ds.gold.test_set.insert(p);
    if (l) ds.gold.dups.insert(p);
  }
  for (const char* name : {"train.csv", "valid.csv"}) {
    const auto path = dir / name;
    if (!fs::exists(path)) continue;
    for (const auto& pl : load_pairs(path, ds.R, ds.S, true)) {
      ds.train_pairs.push_back(pl);
      if (pl.second) ds.gold.dups.insert(pl.first);
    }
  }
  const auto matches = dir / "matches.csv";
  if (fs::exists(matches))
    for (const auto& [p, l] : load_pairs(matches, ds.R, ds.S, false))
      if (l) ds.gold.dups.insert(p);
  return ds;
}

void write_table(const std::string& path, const RecordStore& store) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetFormatError("cannot write " + path);
  csv::Row header{"id"};
  header.insert(header.end(), store.schema().begin(), store.schema().end());
  csv::write_row(out, header);
  for (const auto& rec : store.records()) {
    csv::Row row{std::to_string(rec.id)};
    for (const auto& [name, value] : rec.attributes) row.push_back(value);
    csv::write_row(out, row);
  }
}

}  // namespace dial
