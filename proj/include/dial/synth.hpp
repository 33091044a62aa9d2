#pragma once

#include "dial/data.hpp"

#include <cstdint>
#include <string>

namespace dial {

// Two product lists with perturbed duplicates. R holds clean catalogue rows;
// S uses another schema and noisy titles (typos, abbreviations, reformatted
// model numbers). Each side carries boilerplate text drawn from its own small
// set of templates, which dominates the raw n-gram embedding. Non-duplicates
// are drawn from the same product families as duplicates, so siblings differ
// only by model number, spec or colour.
struct SynthConfig {
  std::size_t n_r = 2000;
  std::size_t n_s = 2000;
  std::size_t n_dups = 500;
  std::size_t n_families = 2000;
  std::uint64_t seed = 7;

  std::size_t train_pos = 150;
  std::size_t train_neg = 300;
  std::size_t test_pos = 100;
  std::size_t test_neg = 300;

  double typo_rate = 0.03;         // per title token
  double abbrev_rate = 0.15;       // per abbreviable token
  double drop_model_rate = 0.05;   // S title omits the model number
  std::size_t desc_min_words = 20;
  std::size_t desc_max_words = 30;
  std::size_t n_templates = 1;
  std::size_t name_words = 3;  // distinctive product-name words per entity
};

Dataset generate_synthetic(const SynthConfig& cfg);

// tableA.csv, tableB.csv, train.csv, test.csv, matches.csv.
void write_dataset(const std::string& dir, const Dataset& ds);

}  // namespace dial
