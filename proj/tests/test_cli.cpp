#include <doctest.h>

#include "occlab/cli/app.hpp"
#include "occlab/cli/config.hpp"
#include "occlab/cli/output.hpp"
#include "occlab/cli/suite.hpp"
#include "occlab/errors.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace occlab;
using namespace occlab::cli;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("occlab_test_cli_" + name);
  fs::remove_all(p);
  return p;
}

std::string config_error_path(const json& j, const std::string& sub = "simulate") {
  try {
    load_config(j, sub);
  } catch (const ConfigError& e) {
    return e.path();
  }
  return "";
}

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "occlab");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = main_entry(int(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path write_config(const std::string& name, const json& j) {
  const fs::path p = fs::temp_directory_path() / ("occlab_test_cli_" + name + ".json");
  std::ofstream(p) << j.dump();
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("defaults resolve and round-trip") {
  const Config c = load_config(json::object(), "clt");
  CHECK(c.grid.dim == 2);
  CHECK(c.grid.n == 32);
  CHECK(c.functions.size() == 1);
  CHECK(c.resolved["model"]["drift"]["preset"] == "zero-drift");
  CHECK(c.resolved["wasserstein"]["T_grid"].size() == 7);
  CHECK(c.resolved["entropy"]["ball"]["p"] == "inf");
  CHECK(c.resolved["suite"]["criteria"].size() == 10);
  // The resolved config is itself a valid config that resolves to the same thing.
  json again = c.resolved;
  again.erase("subcommand");
  CHECK(load_config(again, "clt").resolved == c.resolved);
}

TEST_CASE("schema violations name the field") {
  CHECK(config_error_path({{"sde", {{"hh", 1}}}}) == "sde.hh");
  CHECK(config_error_path({{"sde", {{"h", "small"}}}}) == "sde.h");
  CHECK(config_error_path({{"sde", {{"h", -0.1}}}}) == "sde.h");
  CHECK(config_error_path({{"sde", {{"x0", {0.1}}}}}) == "sde.x0");
  CHECK(config_error_path({{"grid", {{"dim", 5}}}}) == "grid.dim");
  CHECK(config_error_path({{"grid", {{"resolution", 33}}}}) == "grid.resolution");
  CHECK(config_error_path({{"bogus", 1}}) == "bogus");
  CHECK(config_error_path({{"functions", {{{{"k", {1}}, {"a", 1.0}}}}}}) == "functions[0][0].k");
  CHECK(config_error_path({{"functions", {{{{"k", {1, 0}}, {"c", 1.0}}}}}}) == "functions[0][0].c");
  CHECK(config_error_path({{"model", {{"drift", "swirl"}}}}) == "model.drift.preset");
  CHECK(config_error_path({{"model", {{"drift", {{"preset", "gradient"}}}}}}) == "model.drift.potential");
  CHECK(config_error_path({{"model", {{"diffusivity", {{"preset", "diagonal"}, {"a", {1.0, -1.0}}}}}}}) ==
        "model.diffusivity.a[1]");
  CHECK(config_error_path({{"grid", {{"dim", 1}}}, {"model", {{"drift", "shear"}}}}) == "model.drift.preset");
  CHECK(config_error_path({{"entropy", {{"norm", "sup"}}}}) == "entropy.norm");
  CHECK(config_error_path({{"entropy", {{"ball", {{"p", 3}}}}}}) == "entropy.ball.p");
  CHECK(config_error_path({{"wasserstein", {{"T_grid", {64, 32}}}}}) == "wasserstein.T_grid[1]");
  CHECK(config_error_path({{"suite", {{"criteria", {11}}}}}, "all") == "suite.criteria[0]");
  CHECK(config_error_path({{"seeds", {{"master", -3}}}}) == "seeds.master");
  CHECK(config_error_path(json::array()) == "$");
}

TEST_CASE("modes accept object and array forms") {
  const json obj = {{"functions", {{{{"k", {1, 2}}, {"a", 0.5}, {"b", -1.0}}}}}};
  const json arr = {{"functions", {{json::array({json::array({1, 2}), 0.5, -1.0})}}}};
  const Config a = load_config(obj, "clt"), b = load_config(arr, "clt");
  CHECK(a.resolved["functions"] == b.resolved["functions"]);
  CHECK(max_abs(a.functions[0] - b.functions[0]) == 0.0);
  CHECK(a.functions[0].coeff(wavevector({1, 2})).real() == doctest::Approx(0.25));
}

TEST_CASE("dim 4 is rejected for wasserstein-rate only") {
  const json j = {{"grid", {{"dim", 4}}}};
  try {
    load_config(j, "wasserstein-rate");
    FAIL("dim 4 accepted");
  } catch (const ConfigError& e) {
    CHECK(e.path() == "grid.dim");
    CHECK(std::string(e.what()).find("d <= 3") != std::string::npos);
  }
  const Config c = load_config(j, "clt");
  CHECK(c.grid.dim == 4);
  CHECK(c.grid.n == 8);
}

TEST_CASE("seed and thread precedence: flag, environment, file") {
  const json j = {{"seeds", {{"master", 7}}}, {"threads", 3}};
  CHECK(load_config(j, "clt").seed == 7);
  ::setenv("OCCLAB_SEED", "11", 1);
  ::setenv("OCCLAB_THREADS", "2", 1);
  const Overrides env = environment_overrides();
  CHECK(load_config(j, "clt", env).seed == 11);
  CHECK(load_config(j, "clt", env).threads == 2);
  Overrides flags;
  flags.seed = 13;
  CHECK(load_config(j, "clt", merge(flags, env)).seed == 13);
  CHECK(load_config(j, "clt", merge(flags, env)).threads == 2);
  ::setenv("OCCLAB_SEED", "-1", 1);
  CHECK_THROWS_AS(environment_overrides(), ConfigError);
  ::unsetenv("OCCLAB_SEED");
  ::unsetenv("OCCLAB_THREADS");
}

TEST_CASE("number formatting round-trips") {
  for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324}) {
    const std::string s = format_number(x);
    double y = 0;
    std::from_chars(s.data(), s.data() + s.size(), y);
    CHECK(y == x);
  }
  CHECK(format_number(kInf) == "inf");
}

TEST_CASE("exit codes") {
  const fs::path out = scratch("codes");
  CHECK(invoke({"invariant", "--out", out.string()}).code == kSuccess);
  CHECK(invoke({"frobnicate"}).code == kConfigError);
  CHECK(invoke({"invariant", "--threads", "0"}).code == kConfigError);

  const Run bad = invoke({"simulate", "--config", write_config("bad", {{"sde", {{"T", "long"}}}}).string()});
  CHECK(bad.code == kConfigError);
  CHECK(bad.err.find("sde.T") != std::string::npos);

  const Run d4 = invoke({"wasserstein-rate", "--config", write_config("d4", {{"grid", {{"dim", 4}}}}).string()});
  CHECK(d4.code == kConfigError);
  CHECK(d4.err.find("d <= 3") != std::string::npos);

  // A potential far too steep for 8 nodes makes the spectral invariant density negative.
  const json steep = {{"grid", {{"dim", 1}, {"resolution", 8}}},
                      {"model", {{"drift", {{"preset", "gradient"}, {"potential", {{{2}, 0.0, 2.0}}}}}}}};
  const Run nf = invoke({"invariant", "--config", write_config("steep", steep).string(), "--out", out.string()});
  CHECK(nf.code == kNumericalFailure);
  CHECK(nf.err.find("negative") != std::string::npos);

  std::ofstream(fs::temp_directory_path() / "occlab_test_cli_broken.json") << "{\"sde\": ";
  CHECK(invoke({"clt", "--config", (fs::temp_directory_path() / "occlab_test_cli_broken.json").string()}).code ==
        kConfigError);
}

TEST_CASE("every subcommand writes schemas, a resolved config and a checked manifest") {
  const json small = {{"grid", {{"dim", 2}, {"resolution", 16}}},
                      {"model", {{"drift", "shear"}, {"diffusivity", {{"preset", "modulated"}, {"amplitude", 0.2}}}}},
                      {"functions", {{{{"k", {1, 0}}, {"a", 1.0}}}, {{{"k", {0, 1}}, {"b", 1.0}}}}},
                      {"sde", {{"T", 5.0}, {"replications", 20}, {"dump_path", true}, {"histogram_bins", 4}}},
                      {"wasserstein", {{"T_grid", {8, 16}}, {"replications", 20}, {"m", 8}}},
                      {"entropy", {{"truncation", 16}, {"decades", 2.0}}}};
  const fs::path cfg = write_config("small", small);
  for (const std::string sub : {"invariant", "poisson", "simulate", "clt", "wasserstein-rate", "entropy"}) {
    CAPTURE(sub);
    const fs::path out = scratch("sub_" + sub);
    const Run r = invoke({sub, "--config", cfg.string(), "--out", out.string(), "--seed", "99"});
    REQUIRE(r.code == kSuccess);
    const json resolved = json::parse(slurp(out / "config.resolved.json"));
    CHECK(resolved["seeds"]["master"] == 99);
    CHECK(resolved["subcommand"] == sub);

    const json manifest = json::parse(slurp(out / "manifest.json"));
    std::set<std::string> listed;
    for (const json& f : manifest["files"]) {
      const std::string name = f["path"];
      listed.insert(name);
      CHECK(f["checksum"] == file_checksum(out / name));
      CHECK(f["bytes"] == fs::file_size(out / name));
    }
    int csvs = 0;
    for (const auto& e : fs::directory_iterator(out)) {
      const std::string name = e.path().filename().string();
      if (name != "manifest.json") CHECK(listed.count(name) == 1);
      if (e.path().extension() != ".csv") continue;
      ++csvs;
      const fs::path schema = out / (e.path().stem().string() + ".schema.json");
      REQUIRE(fs::exists(schema));
      const json s = json::parse(slurp(schema));
      std::istringstream lines(slurp(e.path()));
      std::string header;
      std::getline(lines, header);
      std::string expected;
      for (const json& c : s["columns"]) expected += (expected.empty() ? "" : ",") + c["name"].get<std::string>();
      CHECK(header == expected);
      std::size_t rows = 0;
      for (std::string line; std::getline(lines, line);) ++rows;
      CHECK(rows == s["rows"].get<std::size_t>());
    }
    CHECK(csvs >= 1);
  }
}

TEST_CASE("same seed gives byte-identical CSVs, another seed does not") {
  const json cfg = {{"sde", {{"T", 5.0}, {"replications", 20}, {"histogram_bins", 4}}}};
  const fs::path file = write_config("det", cfg);
  const fs::path a = scratch("det_a"), b = scratch("det_b"), c = scratch("det_c");
  for (const fs::path* p : {&a, &b}) REQUIRE(invoke({"clt", "--config", file.string(), "--out", p->string()}).code == 0);
  CHECK(compare_csv_outputs(a.string(), b.string()).empty());
  REQUIRE(invoke({"clt", "--config", file.string(), "--out", c.string(), "--seed", "12345"}).code == 0);
  CHECK_FALSE(compare_csv_outputs(a.string(), c.string()).empty());

  // Thread count does not change results.
  const fs::path t = scratch("det_t");
  REQUIRE(invoke({"clt", "--config", file.string(), "--out", t.string(), "--threads", "3"}).code == 0);
  CHECK(compare_csv_outputs(a.string(), t.string()).empty());
}

TEST_CASE("all runs the selected criteria and writes the report") {
  const fs::path out = scratch("all");
  const fs::path cfg = write_config("all", {{"suite", {{"criteria", {1, 3, 10}}}}});
  const Run r = invoke({"all", "--config", cfg.string(), "--out", out.string()});
  CHECK(r.code == kSuccess);
  std::istringstream rows(slurp(out / "acceptance.csv"));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "criterion,name,passed,statistic,threshold,summary");
  int n = 0;
  while (std::getline(rows, line)) {
    ++n;
    CHECK(line.find(",true,") != std::string::npos);
  }
  CHECK(n == 3);
  CHECK(json::parse(slurp(out / "acceptance.json"))["criteria"].size() == 3);
}
