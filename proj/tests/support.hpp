#pragma once

#include "dial/config.hpp"
#include "dial/data.hpp"
#include "dial/synth.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <string>
#include <unistd.h>

namespace dial::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
  explicit TempDir(const std::string& tag = "t") {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("dial_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// A few hundred records per side; enough for the loop to run in well under a second.
inline SynthConfig small_synth() {
  SynthConfig s;
  s.n_r = 300;
  s.n_s = 300;
  s.n_dups = 80;
  s.n_families = 300;
  s.train_pos = 40;
  s.train_neg = 80;
  s.test_pos = 20;
  s.test_neg = 60;
  return s;
}

inline Config small_config() {
  Config c;
  c.loop.rounds = 2;
  c.loop.seed_pos = 16;
  c.loop.seed_neg = 16;
  c.selection.budget = 8;
  c.committee.epochs = 20;
  c.matcher.epochs = 10;
  c.encoder.hash_buckets = 1u << 12;
  return c;
}

}  // namespace dial::testing
