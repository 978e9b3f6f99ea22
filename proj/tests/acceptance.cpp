// Acceptance run: the full suite twice with the default configuration and the same
// seed. Criteria 1..10 come from the first run; 11 compares the CSVs of both runs.
#include "occlab/cli/config.hpp"
#include "occlab/cli/output.hpp"
#include "occlab/cli/suite.hpp"
#include "occlab/errors.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

using namespace occlab::cli;

namespace {

std::vector<CriterionResult> run_once(const std::filesystem::path& dir, const Overrides& o) {
  std::filesystem::remove_all(dir);
  Overrides with_dir = o;
  with_dir.output = dir.string();
  const Config cfg = load_config(nlohmann::json::object(), "all", with_dir);
  OutputDir out(cfg.output);
  out.write_json("config.resolved", cfg.resolved);
  SuiteOptions opt;
  opt.seed = cfg.seed;
  opt.threads = cfg.threads;
  std::vector<CriterionResult> r = run_suite(opt, out, std::cerr);
  out.finish();
  return r;
}

}  // namespace

int main(int argc, char** argv) {
  const std::filesystem::path base = argc > 1 ? argv[1] : "acceptance_out";
  try {
    const Overrides env = environment_overrides();
    std::cerr << "run 1\n";
    const std::vector<CriterionResult> first = run_once(base / "run1", env);
    std::cerr << "run 2\n";
    run_once(base / "run2", env);
    const std::vector<std::string> diff = compare_csv_outputs((base / "run1").string(), (base / "run2").string());

    int failed = 0;
    for (const CriterionResult& r : first) {
      std::printf("criterion %2d %s  %s: %s  [%s]  (%.1f s)\n", r.id, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                  r.summary.c_str(), r.threshold.c_str(), r.seconds);
      failed += !r.passed;
    }
    std::string files;
    for (const std::string& f : diff) files += " " + f;
    std::printf("criterion 11 %s  determinism: %s  [run all twice, byte-identical CSVs]\n", diff.empty() ? "PASS" : "FAIL",
                diff.empty() ? "all CSVs identical" : ("differing:" + files).c_str());
    failed += !diff.empty();
    std::printf("%d of 11 criteria failed\n", failed);
    return failed ? 1 : 0;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance aborted: %s\n", e.what());
    return 2;
  }
}
