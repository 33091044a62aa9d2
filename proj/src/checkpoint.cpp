#include "dial/checkpoint.hpp"

#include "dial/csv.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace dial {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMatcherMagic[8] = {'D', 'I', 'A', 'L', 'M', 'C', 'H', '1'};
constexpr char kCommitteeMagic[8] = {'D', 'I', 'A', 'L', 'C', 'M', 'T', '1'};

class Writer {
public:
  explicit Writer(const std::string& path) : path_(path), tmp_(path + ".tmp"), out_(tmp_, std::ios::binary) {
    if (!out_) throw DataError("cannot open " + tmp_ + " for writing");
  }
  void bytes(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
  void u32(std::uint32_t v) { bytes(&v, 4); }
  void f64(double v) { bytes(&v, 8); }
  template <typename Derived>
  void floats_row_major(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        const float v = static_cast<float>(m(i, j));
        bytes(&v, 4);
      }
  }
  void commit() {
    out_.close();
    if (!out_) throw DataError("write failed: " + tmp_);
    std::filesystem::rename(tmp_, path_);
  }

private:
  std::string path_, tmp_;
  std::ofstream out_;
};

class Reader {
public:
  explicit Reader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DatasetFormatError("cannot open " + path);
  }
  void bytes(void* p, std::size_t n) {
    in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw FormatError(path_ + ": truncated file");
  }
  std::uint32_t u32() {
    std::uint32_t v;
    bytes(&v, 4);
    return v;
  }
  double f64() {
    double v;
    bytes(&v, 8);
    return v;
  }
  void floats_row_major(Mat<float>& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        bytes(&m(i, j), 4);
        if (!std::isfinite(m(i, j))) throw DataError(path_ + ": non-finite parameter");
      }
  }
  void magic(const char (&expected)[8]) {
    char got[8];
    bytes(got, 8);
    if (std::memcmp(got, expected, 8) != 0) throw FormatError(path_ + ": bad magic");
  }
  void expect_end() {
    if (in_.peek() != std::char_traits<char>::eof()) throw FormatError(path_ + ": trailing bytes");
  }

private:
  std::string path_;
  std::ifstream in_;
};

std::int64_t parse_int(const std::string& s, const std::string& what) {
  std::int64_t v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size()) throw ParseError("bad " + what + " '" + s + "'");
  return v;
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

void save_matcher(const std::string& path, const MatcherHead<float>& head) {
  Writer w(path);
  w.bytes(kMatcherMagic, 8);
  w.u32(static_cast<std::uint32_t>(head.input_dim()));
  w.u32(static_cast<std::uint32_t>(head.hidden()));
  w.floats_row_major(head.W1.values);
  w.floats_row_major(head.b1.values.transpose());
  w.floats_row_major(head.w2.values.transpose());
  w.floats_row_major(head.b2.values);
  w.commit();
}

MatcherHead<float> load_matcher(const std::string& path) {
  Reader r(path);
  r.magic(kMatcherMagic);
  const auto in = r.u32(), h = r.u32();
  if (in == 0 || h == 0) throw FormatError(path + ": zero dimension");
  auto head = MatcherHead<float>::zeros(in, h);
  Mat<float> row(1, h);
  r.floats_row_major(head.W1.values);
  r.floats_row_major(row);
  head.b1.values = row.transpose();
  r.floats_row_major(row);
  head.w2.values = row.transpose();
  r.floats_row_major(head.b2.values);
  r.expect_end();
  return head;
}

void save_committee(const std::string& path, const std::vector<CommitteeMember<float>>& committee,
                    double keep_prob) {
  Writer w(path);
  w.bytes(kCommitteeMagic, 8);
  const auto d = committee.empty() ? 0 : committee.front().dim();
  w.u32(static_cast<std::uint32_t>(committee.size()));
  w.u32(static_cast<std::uint32_t>(d));
  w.f64(keep_prob);
  for (const auto& m : committee) {
    std::vector<unsigned char> bits(static_cast<std::size_t>((d + 7) / 8), 0);
    for (Eigen::Index i = 0; i < d; ++i)
      if (m.mask[i] != 0.0f) bits[static_cast<std::size_t>(i / 8)] |= static_cast<unsigned char>(1u << (i % 8));
    w.bytes(bits.data(), bits.size());
    w.floats_row_major(m.U.values);
    w.floats_row_major(m.V.values.transpose());
  }
  w.commit();
}

std::vector<CommitteeMember<float>> load_committee(const std::string& path, double* keep_prob) {
  Reader r(path);
  r.magic(kCommitteeMagic);
  const auto n = r.u32(), d = r.u32();
  const double p = r.f64();
  if (keep_prob) *keep_prob = p;
  std::vector<CommitteeMember<float>> out;
  for (std::uint32_t k = 0; k < n; ++k) {
    CommitteeMember<float> m;
    std::vector<unsigned char> bits((d + 7) / 8);
    r.bytes(bits.data(), bits.size());
    m.mask.resize(d);
    for (std::uint32_t i = 0; i < d; ++i) m.mask[i] = (bits[i / 8] >> (i % 8)) & 1u ? 1.0f : 0.0f;
    m.U = ParamBlock<float>(Mat<float>(d, d));
    r.floats_row_major(m.U.values);
    Mat<float> row(1, d);
    r.floats_row_major(row);
    m.V = ParamBlock<float>(Mat<float>(row.transpose()));
    m.scorer = ParamBlock<float>(Mat<float>::Zero(3 * d + 1, 1));
    out.push_back(std::move(m));
  }
  r.expect_end();
  return out;
}

void write_labels_csv(const std::string& path, const LabeledSet& T) {
  std::ostringstream os;
  csv::write_row(os, {"r_id", "s_id", "label", "source", "round"});
  for (const auto& [pair, label] : T.entries())
    csv::write_row(os, {std::to_string(pair.r_id), std::to_string(pair.s_id), label.is_duplicate() ? "1" : "0",
                        to_string(label.source), std::to_string(label.round)});
  write_text_atomic(path, os.str());
}

LabeledSet read_labels_csv(const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0] != csv::Row{"r_id", "s_id", "label", "source", "round"})
    throw DatasetFormatError(path + ": unexpected header");
  LabeledSet T;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 5) throw ParseError(path + ": row " + std::to_string(i) + " has wrong arity");
    const auto lab = parse_int(row[2], "label");
    if (lab != 0 && lab != 1) throw ParseError(path + ": label must be 0 or 1");
    Label l;
    l.value = lab == 1 ? LabelValue::duplicate : LabelValue::non_duplicate;
    l.source = parse_label_source(row[3]);
    l.round = static_cast<int>(parse_int(row[4], "round"));
    T.add({parse_int(row[0], "r_id"), parse_int(row[1], "s_id")}, l);
  }
  return T;
}

void write_candidates_csv(const std::string& path, const CandidateSet& cand) {
  std::ostringstream os;
  csv::write_row(os, {"r_id", "s_id", "min_dist"});
  for (const auto& e : cand.pairs)
    csv::write_row(os, {std::to_string(e.pair.r_id), std::to_string(e.pair.s_id), format_double(e.min_dist)});
  write_text_atomic(path, os.str());
}

CandidateSet read_candidates_csv(const std::string& path, const RecordStore& R, const RecordStore& S) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows[0] != csv::Row{"r_id", "s_id", "min_dist"})
    throw DatasetFormatError(path + ": unexpected header");
  CandidateSet cand;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() != 3) throw ParseError(path + ": row " + std::to_string(i) + " has wrong arity");
    const PairId p{parse_int(row[0], "r_id"), parse_int(row[1], "s_id")};
    if (!R.contains(p.r_id) || !S.contains(p.s_id)) throw IntegrityError(path + ": unknown record id");
    cand.pairs.push_back({p, *R.index_of(p.r_id), *S.index_of(p.s_id), std::stod(row[2])});
  }
  return cand;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot open " + tmp + " for writing");
    out << content;
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetFormatError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace dial
