#pragma once

#include "dial/types.hpp"

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

namespace dial {

enum class Side { R, S };

struct Record {
  RecordId id = 0;
  std::vector<std::pair<std::string, std::string>> attributes;
};

// One of the two lists. Immutable after construction; records keep file order.
class RecordStore {
public:
  RecordStore() = default;
  RecordStore(Side side, std::vector<std::string> schema, std::vector<Record> records);

  Side side() const { return side_; }
  const std::vector<std::string>& schema() const { return schema_; }
  const std::vector<Record>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  const Record& operator[](std::size_t i) const { return records_[i]; }

  std::optional<std::size_t> index_of(RecordId id) const;
  std::size_t at_id(RecordId id) const;  // throws IntegrityError if absent
  bool contains(RecordId id) const { return index_.count(id) != 0; }

private:
  Side side_ = Side::R;
  std::vector<std::string> schema_;
  std::vector<Record> records_;
  std::unordered_map<RecordId, std::size_t> index_;
};

enum class LabelValue { duplicate, non_duplicate };
enum class LabelSource { seed, oracle_simulated, oracle_human, high_confidence_auto };

const char* to_string(LabelValue v);
const char* to_string(LabelSource s);
LabelSource parse_label_source(const std::string& s);

struct Label {
  LabelValue value = LabelValue::non_duplicate;
  LabelSource source = LabelSource::seed;
  int round = 0;

  bool is_duplicate() const { return value == LabelValue::duplicate; }
  // Seeds and oracle answers count against the human budget; auto labels do not.
  bool is_human() const { return source != LabelSource::high_confidence_auto; }
};

// The growing training set T = T_p ∪ T_n. Each pair is labeled at most once.
class LabeledSet {
public:
  void add(const PairId& pair, const Label& label);  // throws IntegrityError on relabel
  bool contains(const PairId& pair) const { return entries_.count(pair) != 0; }
  const Label* find(const PairId& pair) const;

  std::size_t size() const { return entries_.size(); }
  std::size_t positive_count() const { return positives_; }
  std::size_t negative_count() const { return entries_.size() - positives_; }
  std::size_t human_count() const;

  std::vector<PairId> positives() const;
  std::vector<PairId> negatives() const;
  const std::map<PairId, Label>& entries() const { return entries_; }

private:
  std::map<PairId, Label> entries_;
  std::size_t positives_ = 0;
};

struct GoldStandard {
  std::unordered_set<PairId, PairIdHash> dups;
  std::vector<std::pair<PairId, bool>> test_pairs;
  std::unordered_set<PairId, PairIdHash> test_set;

  bool is_dup(const PairId& p) const { return dups.count(p) != 0; }
  bool in_test(const PairId& p) const { return test_set.count(p) != 0; }
};

struct Dataset {
  RecordStore R;
  RecordStore S;
  GoldStandard gold;
  // Labeled pairs from train.csv / valid.csv, the pool seed sets are drawn from.
  std::vector<std::pair<PairId, bool>> train_pairs;
};

// Reads the DeepMatcher layout: tableA.csv, tableB.csv, test.csv and optional
// train.csv, valid.csv, matches.csv.
Dataset load_dataset(const std::string& dir_path);

// Writes tableA.csv / tableB.csv in the same layout (used by the generator and
// round-trip tests).
void write_table(const std::string& path, const RecordStore& store);

// "name_1 value_1 ... name_m value_m"; empty values are skipped with their names.
std::string serialize_record(const Record& rec);

}  // namespace dial
