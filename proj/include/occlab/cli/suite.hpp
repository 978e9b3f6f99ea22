#pragma once

#include "occlab/cli/output.hpp"

#include <json.hpp>

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

namespace occlab::cli {

struct CriterionResult {
  CriterionResult(int id, std::string name) : id(id), name(std::move(name)) {}

  int id = 0;
  std::string name;
  bool passed = false;
  double statistic = 0.0;  // the headline number compared against `threshold`
  std::string threshold;
  std::string summary;     // deterministic: no timings
  double seconds = 0.0;
  nlohmann::json details;
};

struct SuiteOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  std::vector<int> criteria;  // empty: 1..10
};

/// Acceptance criteria 1..10. Each criterion writes its own tables into `out`; the
/// summary goes to acceptance.csv and acceptance.json. Determinism (11) needs two runs
/// and is checked by comparing their CSVs, see compare_csv_outputs.
std::vector<CriterionResult> run_suite(const SuiteOptions& opt, OutputDir& out, std::ostream& log);

/// CSV files present in either directory whose bytes differ, or that exist in only one.
std::vector<std::string> compare_csv_outputs(const std::string& dir_a, const std::string& dir_b);

}  // namespace occlab::cli
