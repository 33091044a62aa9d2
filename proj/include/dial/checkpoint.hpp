#pragma once

#include "dial/blocker.hpp"
#include "dial/data.hpp"
#include "dial/index.hpp"
#include "dial/matcher.hpp"

#include <string>
#include <vector>

namespace dial {

// DIALMCH1: magic, u32 in_dim, u32 hidden, then W1 (row-major), b1, w2, b2 as
// little-endian float32.
void save_matcher(const std::string& path, const MatcherHead<float>& head);
MatcherHead<float> load_matcher(const std::string& path);

// DIALCMT1: magic, u32 N, u32 d, f64 keep_prob, then per member the mask as
// ceil(d/8) bytes (bit i of byte i/8, LSB first), U (row-major) and V as float32.
// The classification scorer is not part of the checkpoint.
void save_committee(const std::string& path, const std::vector<CommitteeMember<float>>& committee,
                    double keep_prob);
std::vector<CommitteeMember<float>> load_committee(const std::string& path, double* keep_prob = nullptr);

// r_id,s_id,label,source,round
void write_labels_csv(const std::string& path, const LabeledSet& T);
LabeledSet read_labels_csv(const std::string& path);

// r_id,s_id,min_dist
void write_candidates_csv(const std::string& path, const CandidateSet& cand);
CandidateSet read_candidates_csv(const std::string& path, const RecordStore& R, const RecordStore& S);

// Replaces `path` atomically (write to a sibling temp file, then rename).
void write_text_atomic(const std::string& path, const std::string& content);
std::string read_text(const std::string& path);

}  // namespace dial
