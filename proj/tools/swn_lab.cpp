#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "swn/runner.hpp"

// Batch driver for the lattice Seiberg-Witten laboratory. Exit codes:
// 0 pass, 1 suite failure, 2 config error, 3 I/O error.

int main(int argc, char** argv) {
  CLI::App app{"lattice Seiberg-Witten laboratory"};

  std::string config_path;
  std::string mode_override;
  std::string out_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  int threads = 0;
  bool reference = false;

  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--mode", mode_override,
                 "verify-identities|solve|continue|diagnose|fueter (overrides config)");
  auto* seed_opt = app.add_option("--seed", seed_override, "RNG seed (overrides config)");
  app.add_option("--out", out_override, "output directory (overrides config)");
  app.add_option("--threads", threads, "worker threads for the site loops");
  app.add_flag("--reference", reference, "single-threaded deterministic mode");

  CLI11_PARSE(app, argc, argv);
  seed_given = seed_opt->count() > 0;

  swn::RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = swn::load_config_file(config_path);
  } catch (const swn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  }
  if (!mode_override.empty()) cfg.mode = mode_override;
  if (!out_override.empty()) cfg.out_dir = out_override;
  if (seed_given) cfg.seed = seed_override;
  if (threads > 0) cfg.threads = threads;
  if (reference) cfg.reference = true;

  try {
    return swn::run(cfg);
  } catch (const swn::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const swn::SnapshotError& e) {
    std::fprintf(stderr, "snapshot error: %s\n", e.what());
    return 3;
  } catch (const std::ios_base::failure& e) {
    std::fprintf(stderr, "io error: %s\n", e.what());
    return 3;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
}
