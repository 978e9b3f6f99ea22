#pragma once

#include "occlab/entropy.hpp"
#include "occlab/generator.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace occlab::cli {

struct SdeSection {
  double T = 200.0;
  double h = 0.01;
  int replications = 200;
  Point x0;
  bool dump_path = false;
  int histogram_bins = 0;
};

struct RateSection {
  std::vector<double> T_grid;
  int m = 16;
  int replications = 50;
  double h = 0.01;
};

struct EntropySection {
  BesovBall ball;
  EntropyNorm norm = EntropyNorm::BesovSup;
  EntropyOptions options;
  double decades = 4.0;
  int per_decade = 8;
  std::vector<double> radii;  // empty: derived from decades and per_decade
  bool doubling_check = true;
};

/// A validated configuration with every default filled in. `resolved` is the same
/// content as JSON and is written next to the results.
struct Config {
  nlohmann::json resolved;
  Grid grid;
  DriftSpec drift;
  DiffusivitySpec diffusivity;
  std::vector<PeriodicField> functions;
  SdeSection sde;
  RateSection wasserstein;
  EntropySection entropy;
  std::vector<int> suite_criteria;  // `all`: acceptance criteria to run, 1..10
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output;
};

/// Values that take precedence over the file: flags first, then the environment.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output;
};

/// OCCLAB_SEED and OCCLAB_THREADS; malformed values are config errors.
Overrides environment_overrides();
Overrides merge(const Overrides& primary, const Overrides& fallback);

const std::vector<std::string>& subcommands();

/// Validates `raw` for `subcommand`. Unknown keys, wrong types and out-of-range values
/// throw ConfigError naming the field path (e.g. "sde.h").
Config load_config(const nlohmann::json& raw, const std::string& subcommand, const Overrides& overrides = {});
Config load_config_file(const std::filesystem::path& file, const std::string& subcommand,
                        const Overrides& overrides = {});

}  // namespace occlab::cli
