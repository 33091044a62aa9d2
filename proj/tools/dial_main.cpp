#include "dial/checkpoint.hpp"
#include "dial/config.hpp"
#include "dial/loop.hpp"
#include "dial/service.hpp"
#include "dial/synth.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

struct CommonFlags {
  std::string data;
  std::string config_file;
  std::optional<std::uint64_t> seed;
  std::optional<int> rounds;
  std::optional<std::size_t> budget;
  std::string strategy;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--data", f.data, "dataset directory (tableA.csv, tableB.csv, test.csv, ...)");
  cmd->add_option("--config", f.config_file, "flat key = value config file");
  cmd->add_option("--seed", f.seed, "global seed");
  cmd->add_option("--rounds", f.rounds, "active learning rounds");
  cmd->add_option("--budget", f.budget, "labels per round");
  cmd->add_option("--strategy", f.strategy, "uncertainty|random|greedy|qbc|partition2|partition4|badge");
  cmd->add_option("--out", f.out, "output / checkpoint directory");
  cmd->add_option("--set", f.overrides, "extra config entry key=value (repeatable)");
}

dial::Config build_config(const CommonFlags& f) {
  dial::Config cfg = f.config_file.empty() ? dial::Config{} : dial::load_config_file(f.config_file);
  if (!f.data.empty()) cfg.data_dir = f.data;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.seed) cfg.loop.global_seed = *f.seed;
  if (f.rounds) cfg.loop.rounds = *f.rounds;
  if (f.budget) cfg.selection.budget = *f.budget;
  if (!f.strategy.empty()) cfg.set("strategy", f.strategy);
  for (const auto& kv : f.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw dial::ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const CommonFlags& f, bool resume, bool quiet) {
  dial::Config cfg = build_config(f);
  if (cfg.data_dir.empty()) throw dial::ConfigError("--data is required");
  if (cfg.out_dir.empty()) cfg.out_dir = "dial_out";
  const auto ds = dial::load_dataset(cfg.data_dir);
  const dial::Engine engine(ds, cfg);
  dial::SessionState st;
  if (resume && fs::exists(fs::path(cfg.out_dir) / "state.json")) {
    st = dial::load_session(cfg.out_dir, engine);
    if (st.pending) {
      engine.answer_from_gold(st);
      engine.complete_round(st);
    }
  } else {
    st = engine.init_session();
  }
  dial::save_session(cfg.out_dir, cfg, st, dial::SessionStatus::idle);
  while (st.round < cfg.loop.rounds) {
    engine.run_round(st);
    const auto status = st.round >= cfg.loop.rounds ? dial::SessionStatus::done : dial::SessionStatus::idle;
    dial::save_session(cfg.out_dir, cfg, st, status);
    if (!quiet) std::cout << dial::metrics_json_line(st.history.back()) << std::endl;
  }
  return 0;
}

struct Loaded {
  dial::Dataset ds;
  std::unique_ptr<dial::Engine> engine;
  dial::SessionState st;
};

std::unique_ptr<Loaded> load_checkpoint(const CommonFlags& f) {
  if (f.out.empty()) throw dial::ConfigError("--out (checkpoint directory) is required");
  const auto cfg_path = fs::path(f.out) / "config.txt";
  if (!fs::exists(cfg_path)) throw dial::DataError(f.out + ": not a checkpoint directory");
  dial::Config cfg = dial::load_config_file(cfg_path.string());
  if (!f.data.empty()) cfg.data_dir = f.data;
  auto l = std::make_unique<Loaded>();
  l->ds = dial::load_dataset(cfg.data_dir);
  l->engine = std::make_unique<dial::Engine>(l->ds, cfg);
  l->st = dial::load_session(f.out, *l->engine);
  if (!l->st.models.matcher) throw dial::DataError(f.out + ": no completed round in checkpoint");
  return l;
}

int cmd_eval(const CommonFlags& f) {
  auto l = load_checkpoint(f);
  auto m = l->engine->evaluate(l->st);
  std::cout << dial::metrics_json_line(m) << std::endl;
  return 0;
}

int cmd_dump_cand(const CommonFlags& f, const std::string& file) {
  auto l = load_checkpoint(f);
  const std::string target = file.empty() ? (fs::path(f.out) / "candidates_dump.csv").string() : file;
  dial::write_candidates_csv(target, l->st.models.cand);
  std::cout << target << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-learning entity resolution with an index-by-committee blocker"};
  app.require_subcommand(1);

  CommonFlags flags;
  bool resume = false, quiet = false;
  auto* run = app.add_subcommand("run", "full loop with the simulated oracle");
  add_common(run, flags);
  run->add_flag("--resume", resume, "continue from the checkpoint in --out");
  run->add_flag("--quiet", quiet, "do not echo metrics");

  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "HTTP service (/v1)");
  serve->add_option("--out", flags.out, "session root directory");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 = any)");

  auto* eval = app.add_subcommand("eval", "metrics of the latest round in a checkpoint");
  add_common(eval, flags);

  std::string cand_file;
  auto* dump = app.add_subcommand("dump-cand", "write the checkpoint's candidate set as CSV");
  add_common(dump, flags);
  dump->add_option("--file", cand_file, "target CSV (default <out>/candidates_dump.csv)");

  dial::SynthConfig synth_cfg;
  auto* synth = app.add_subcommand("synth", "write the synthetic benchmark dataset");
  synth->add_option("--out", flags.out, "target directory")->required();
  synth->add_option("--seed", synth_cfg.seed, "generator seed");
  synth->add_option("--n-r", synth_cfg.n_r, "records in R");
  synth->add_option("--n-s", synth_cfg.n_s, "records in S");
  synth->add_option("--dups", synth_cfg.n_dups, "duplicate pairs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*run) return cmd_run(flags, resume, quiet);
    if (*eval) return cmd_eval(flags);
    if (*dump) return cmd_dump_cand(flags, cand_file);
    if (*synth) {
      dial::write_dataset(flags.out, dial::generate_synthetic(synth_cfg));
      return 0;
    }
    if (*serve) {
      dial::Service service(flags.out.empty() ? "dial_sessions" : flags.out);
      const int bound = service.bind(host, port);
      if (bound < 0) throw dial::ConfigError("cannot bind " + host + ":" + std::to_string(port));
      std::cout << "listening on " << host << ":" << bound << std::endl;
      service.listen();
      return 0;
    }
  } catch (const dial::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const dial::Error& e) {
    std::cerr << e.kind() << " error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
