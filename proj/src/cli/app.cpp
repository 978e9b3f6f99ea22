#include "occlab/cli/app.hpp"

#include "occlab/cli/output.hpp"
#include "occlab/cli/suite.hpp"
#include "occlab/entropy.hpp"
#include "occlab/errors.hpp"
#include "occlab/limit.hpp"
#include "occlab/parallel.hpp"
#include "occlab/rng.hpp"
#include "occlab/stats.hpp"
#include "occlab/wasserstein.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <optional>

namespace occlab::cli {

namespace {

using nlohmann::json;

std::string num(double x) { return format_number(x); }
std::string integer(long long x) { return format_integer(x); }

std::vector<Column> coordinate_columns(int d, const std::string& what) {
  std::vector<Column> c;
  for (int a = 0; a < d; ++a) c.push_back({"x" + std::to_string(a + 1), "number", what + " coordinate " + std::to_string(a + 1)});
  return c;
}

void append_point(std::vector<std::string>& row, const Point& x) {
  for (Eigen::Index a = 0; a < x.size(); ++a) row.push_back(num(x[a]));
}

json measure_report(const InvariantMeasure& mu) {
  return {{"mass", mu.mass},
          {"min", mu.min_density},
          {"max", mu.max_density},
          {"residual", mu.residual},
          {"iterations", mu.iterations},
          {"uniqueness_gap", mu.uniqueness_gap}};
}

InvariantMeasure invariant_of(const Config& c) {
  return solve_invariant(assemble_adjoint(c.drift, c.diffusivity));
}

void run_invariant(const Config& c, OutputDir& out) {
  const InvariantMeasure mu = invariant_of(c);
  const Grid& g = c.grid;
  Table t{"density", "Invariant density on the grid nodes", {{"node", "integer", "flat node index"}}};
  for (const Column& col : coordinate_columns(g.dim, "node")) t.columns.push_back(col);
  t.columns.push_back({"density", "number", "invariant density (integrates to mass)"});
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    std::vector<std::string> row{integer(i)};
    append_point(row, g.node(i));
    row.push_back(num(mu.density.values()[i]));
    t.add(std::move(row));
  }
  out.write(t);
  json r = measure_report(mu);
  r["lipschitz_surrogate"] = mu.lipschitz_surrogate;
  out.write_json("invariant", r);
}

void run_poisson(const Config& c, OutputDir& out) {
  const InvariantMeasure mu = invariant_of(c);
  const GeneratorOperator L = assemble(c.drift, c.diffusivity);
  const Grid& g = c.grid;
  Table t{"poisson_u", "Poisson solution u = L^{-1}[f - mu(f)] on the grid nodes",
          {{"function", "integer", "index into functions"}, {"node", "integer", "flat node index"}}};
  for (const Column& col : coordinate_columns(g.dim, "node")) t.columns.push_back(col);
  t.columns.push_back({"u", "number", "solution value, mean zero in Lebesgue measure"});
  json report = {{"functions", json::array()}, {"invariant", measure_report(mu)}};
  for (std::size_t i = 0; i < c.functions.size(); ++i) {
    const PeriodicField f = center_mu(c.functions[i], mu);
    const PoissonSolution sol = solve_poisson(L, f, mu);
    for (Eigen::Index n = 0; n < g.size(); ++n) {
      std::vector<std::string> row{integer(long(i)), integer(n)};
      append_point(row, g.node(n));
      row.push_back(num(sol.u.values()[n]));
      t.add(std::move(row));
    }
    json ratios = nullptr;
    if (f.coeffs().cwiseAbs().maxCoeff() > 0.0)
      ratios = {{"H2_over_L2", smoothing_ratio(L, f, mu, {2.0, 2.0, 2.0})},
                {"B2inf_over_B0inf", smoothing_ratio(L, f, mu, {2.0, kInf, kInf})}};
    report["functions"].push_back(
        {{"function", i}, {"residual", sol.residual}, {"iterations", sol.iterations}, {"smoothing_ratios", ratios}});
  }
  out.write(t);
  out.write_json("poisson", report);
}

void run_simulate(const Config& c, OutputDir& out) {
  const SdeModel model(c.drift, c.diffusivity);
  const int reps = c.sde.replications;
  const std::uint64_t seed = derive_seed(c.seed, "simulate");
  const int d = c.grid.dim, m = c.sde.histogram_bins;
  std::vector<std::vector<double>> avg{std::size_t(reps)};
  std::vector<Eigen::VectorXd> hist{std::size_t(m ? reps : 0)};
  std::optional<DiffusionPath> first;
  Eigen::Index steps = 0;
  parallel_for(std::size_t(reps), c.threads, [&](std::size_t r) {
    DiffusionPath p = simulate_path(model, c.sde.x0, c.sde.T, c.sde.h, seed, r, false);
    avg[r] = occupation_averages(p, c.functions);
    if (m) hist[r] = occupation_histogram(p, m).weights;
    if (r == 0) {
      steps = p.steps;
      if (c.sde.dump_path) first = std::move(p);
    }
  });

  Table occ{"occupation", "Occupation averages (1/T) int_0^T f(X_s) ds per path",
            {{"rep", "integer", "replication (Philox stream)"},
             {"function", "integer", "index into functions"},
             {"average", "number", "time average"}}};
  json means = json::array();
  for (std::size_t k = 0; k < c.functions.size(); ++k) {
    double s = 0;
    for (int r = 0; r < reps; ++r) {
      occ.add({integer(r), integer(long(k)), num(avg[std::size_t(r)][k])});
      s += avg[std::size_t(r)][k];
    }
    means.push_back(s / reps);
  }
  out.write(occ);
  if (m) {
    Table h{"histogram", "Occupation histogram on m^d cells per path",
            {{"rep", "integer", "replication"}, {"cell", "integer", "flat cell index, last axis fastest"}}};
    for (const Column& col : coordinate_columns(d, "cell center")) h.columns.push_back(col);
    h.columns.push_back({"weight", "number", "fraction of time in the cell"});
    const DiscreteMeasure cells = make_discrete_measure(d, m, Eigen::VectorXd::Constant(Eigen::Index(std::pow(m, d)), 1.0 / std::pow(m, d)));
    for (int r = 0; r < reps; ++r)
      for (Eigen::Index i = 0; i < hist[std::size_t(r)].size(); ++i) {
        std::vector<std::string> row{integer(r), integer(i)};
        append_point(row, cells.center(i));
        row.push_back(num(hist[std::size_t(r)][i]));
        h.add(std::move(row));
      }
    out.write(h);
  }
  if (first) {
    Table p{"path", "Euler-Maruyama states of replication 0, wrapped to [0,1)^d",
            {{"step", "integer", "step index k"}, {"t", "number", "time k h"}}};
    for (const Column& col : coordinate_columns(d, "state")) p.columns.push_back(col);
    for (Eigen::Index k = 0; k <= first->steps; ++k) {
      std::vector<std::string> row{integer(k), num(double(k) * first->h)};
      append_point(row, first->state(k));
      p.add(std::move(row));
    }
    out.write(p);
  }
  out.write_json("simulate", {{"replications", reps},
                              {"steps", steps},
                              {"T", c.sde.T},
                              {"h", c.sde.h},
                              {"seed", seed},
                              {"mean_occupation", means}});
}

void run_clt(const Config& c, OutputDir& out) {
  const InvariantMeasure mu = invariant_of(c);
  const GeneratorOperator L = assemble(c.drift, c.diffusivity);
  const CovarianceGram C = gram(c.functions, L, mu, c.diffusivity);
  const SdeModel model(c.drift, c.diffusivity);
  const int reps = c.sde.replications;
  const std::uint64_t seed = derive_seed(c.seed, "clt");
  std::vector<Eigen::VectorXd> G{std::size_t(reps)};
  parallel_for(std::size_t(reps), c.threads, [&](std::size_t r) {
    const DiffusionPath p = simulate_path(model, c.sde.x0, c.sde.T, c.sde.h, seed, r, false);
    G[r] = empirical_process(p, c.functions, mu).values;
  });

  Table s{"clt_samples", "Empirical process G_T(f) = sqrt(T) (occupation average - mu(f))",
          {{"rep", "integer", "replication (Philox stream)"},
           {"function", "integer", "index into functions"},
           {"G_T", "number", "sample"}}};
  const std::size_t nf = c.functions.size();
  for (int r = 0; r < reps; ++r)
    for (std::size_t k = 0; k < nf; ++k) s.add({integer(r), integer(long(k)), num(G[std::size_t(r)][Eigen::Index(k)])});
  out.write(s);
  Table gt{"gram", "Limit covariance Gamma(f_i, f_j)",
           {{"row", "integer", "function i"}, {"col", "integer", "function j"}, {"value", "number", "covariance"}}};
  for (Eigen::Index i = 0; i < C.gram.rows(); ++i)
    for (Eigen::Index j = 0; j < C.gram.cols(); ++j) gt.add({integer(i), integer(j), num(C.gram(i, j))});
  out.write(gt);

  json ks = json::array();
  for (std::size_t k = 0; k < nf; ++k) {
    std::vector<double> x;
    for (const auto& g : G) x.push_back(g[Eigen::Index(k)]);
    double mean = 0, var = 0;
    for (double v : x) mean += v;
    mean /= reps;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= std::max(1, reps - 1);
    const double sd = std::sqrt(std::max(0.0, C.gram(Eigen::Index(k), Eigen::Index(k))));
    json e = {{"function", k}, {"variance", sd * sd}, {"sample_mean", mean}, {"sample_variance", var}};
    if (sd > 0 && reps >= 20) {
      const TestReport t = ks_one_sample(x, [sd](double v) { return normal_cdf(v, 0.0, sd); });
      e["statistic"] = t.statistic;
      e["p_value"] = t.p_value;
    } else {
      e["statistic"] = nullptr;
      e["p_value"] = nullptr;
    }
    ks.push_back(e);
  }
  out.write_json("clt", {{"T", c.sde.T},
                         {"h", c.sde.h},
                         {"replications", reps},
                         {"seed", seed},
                         {"eigen_floor", C.eigen_floor},
                         {"ks", ks}});
}

void run_rate(const Config& c, OutputDir& out) {
  RateConfig rc;
  rc.drift = c.drift;
  rc.diffusivity = c.diffusivity;
  rc.T = c.wasserstein.T_grid;
  rc.h = c.wasserstein.h;
  rc.m = c.wasserstein.m;
  rc.replications = c.wasserstein.replications;
  rc.seed = derive_seed(c.seed, "wasserstein-rate");
  rc.x0 = c.sde.x0;
  rc.threads = c.threads;
  const RateResult res = rate_experiment(rc);

  Table w{"w1", "W1 between the occupation histogram and the discretized invariant measure",
          {{"T", "number", "horizon"}, {"rep", "integer", "replication"}, {"W1", "number", "W1 on m^d cells"}}};
  Table tab{"rate_table", "Mean and sd of W1 per horizon",
            {{"T", "number", "horizon"},
             {"mean", "number", "mean W1"},
             {"sd", "number", "standard deviation"},
             {"replications", "integer", "paths"}}};
  for (std::size_t i = 0; i < res.table.size(); ++i) {
    const RateRow& row = res.table[i];
    tab.add({num(row.T), num(row.mean), num(row.sd), integer(row.replications)});
    for (std::size_t k = 0; k < res.w1[i].size(); ++k) w.add({num(row.T), integer(long(k)), num(res.w1[i][k])});
  }
  out.write(w);
  out.write(tab);
  json stab = nullptr;
  const std::size_t n = res.table.size();
  // The two-sample KS test needs 20 paths per horizon.
  if (n >= 2 && rc.replications >= 20) {
    auto scaled = [&](std::size_t i) {
      std::vector<double> v = res.w1[i];
      for (double& x : v) x *= std::sqrt(res.table[i].T);
      return v;
    };
    const TestReport ks = ks_two_sample(scaled(n - 1), scaled(n - 2));
    stab = {{"statistic", ks.statistic}, {"p_value", ks.p_value}};
  }
  out.write_json("wasserstein_rate", {{"slope", res.fit.slope},
                                      {"intercept", res.fit.intercept},
                                      {"ci", res.fit.ci},
                                      {"slope_se", res.fit.slope_se},
                                      {"m", res.m},
                                      {"bias_estimate", res.bias_estimate},
                                      {"bias_ok", res.bias_ok},
                                      {"reruns", res.reruns},
                                      {"seed", rc.seed},
                                      {"sqrtT_stability_ks", stab}});
}

void run_entropy(const Config& c, OutputDir& out) {
  const EntropySection& e = c.entropy;
  std::vector<double> radii = e.radii;
  if (radii.empty()) radii = entropy_radii(e.ball, e.norm, e.options, e.decades, e.per_decade);
  std::vector<EntropyCurve> curves{estimate_covering(e.ball, e.norm, radii, e.options)};
  if (e.doubling_check) {
    EntropyOptions o2 = e.options;
    o2.truncation *= 2;
    curves.push_back(estimate_covering(e.ball, e.norm, radii, o2));
  }
  Table t{"entropy", "Two-sided bracket on log N(ball, norm, eps)",
          {{"truncation", "integer", "K"},
           {"eps", "number", "radius"},
           {"lower", "number", "lower bound on log N"},
           {"upper", "number", "upper bound on log N"},
           {"log_covering", "number", "bracket midpoint"},
           {"saturated", "boolean", "top frequency block active at this radius"}}};
  for (const EntropyCurve& cv : curves)
    for (std::size_t i = 0; i < cv.radii.size(); ++i)
      t.add({integer(cv.truncation), num(cv.radii[i]), num(cv.lower[i]), num(cv.upper[i]), num(cv.log_covering[i]),
             format_bool(cv.saturated[i])});
  out.write(t);

  const EntropyCurve& a = curves.front();
  auto attempt = [](auto&& f) -> json {
    try {
      return f();
    } catch (const Error& ex) {
      return {{"error", ex.what()}};
    }
  };
  const json fit = attempt([&]() -> json {
    const ExponentFit f = fit_entropy_exponent(a, curves.size() > 1 ? &curves[1] : nullptr);
    return {{"exponent", f.exponent},
            {"exponent_lower", f.exponent_lower},
            {"exponent_upper", f.exponent_upper},
            {"ci", f.ci},
            {"eps_lo", f.eps_lo},
            {"eps_hi", f.eps_hi},
            {"reference", e.ball.dim / (e.ball.s - a.t)}};
  });
  const json dudley = attempt([&]() -> json {
    const DudleyResult d = dudley_integral(a);
    return {{"value", std::isfinite(d.value) ? json(d.value) : json("inf")},
            {"measured", d.measured},
            {"tail", d.tail},
            {"exponent", d.exponent},
            {"divergent", d.divergent}};
  });
  const json sudakov = attempt([&]() -> json {
    const SudakovTrend s = sudakov_check(a);
    return {{"growth", s.growth}, {"ci", s.ci}};
  });
  out.write_json("entropy", {{"norm", to_string(e.norm)},
                             {"covering_smoothness", a.t},
                             {"radius", a.radius},
                             {"truncation", a.truncation},
                             {"truncated", a.truncated},
                             {"fit", fit},
                             {"dudley", dudley},
                             {"sudakov", sudakov}});
}

bool run_all(const Config& c, OutputDir& out, std::ostream& log) {
  SuiteOptions o;
  o.seed = c.seed;
  o.threads = c.threads;
  o.criteria = c.suite_criteria;
  bool ok = true;
  for (const CriterionResult& r : run_suite(o, out, log)) ok = ok && r.passed;
  return ok;
}

}  // namespace

bool run(const std::string& subcommand, const Config& cfg, std::ostream& log) {
  OutputDir out(cfg.output);
  out.write_json("config.resolved", cfg.resolved);
  bool ok = true;
  if (subcommand == "invariant")
    run_invariant(cfg, out);
  else if (subcommand == "poisson")
    run_poisson(cfg, out);
  else if (subcommand == "simulate")
    run_simulate(cfg, out);
  else if (subcommand == "clt")
    run_clt(cfg, out);
  else if (subcommand == "wasserstein-rate")
    run_rate(cfg, out);
  else if (subcommand == "entropy")
    run_entropy(cfg, out);
  else if (subcommand == "all")
    ok = run_all(cfg, out, log);
  else
    throw ConfigError("subcommand", "unknown subcommand '" + subcommand + "'");
  out.finish();
  return ok;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Occupation-measure experiments for periodic diffusions"};
  app.name("occlab");
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  int threads = 0;
  auto* config_opt = app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  auto* seed_opt = app.add_option("--seed", seed, "master seed (overrides OCCLAB_SEED and the config)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");
  auto* threads_opt =
      app.add_option("--threads", threads, "worker threads (overrides OCCLAB_THREADS)")->check(CLI::Range(1, 1024));
  for (const std::string& name : subcommands()) app.add_subcommand(name)->fallthrough();
  app.require_subcommand(1);
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }
  const std::string sub = app.get_subcommands().front()->get_name();

  try {
    Overrides flags;
    if (*seed_opt) flags.seed = seed;
    if (*threads_opt) flags.threads = threads;
    if (*out_opt) flags.output = out_dir;
    const Overrides o = merge(flags, environment_overrides());
    const Config cfg = *config_opt ? load_config_file(config_path, sub, o) : load_config(json::object(), sub, o);
    const bool ok = run(sub, cfg, out);
    out << "wrote " << cfg.output << "/manifest.json\n";
    return ok ? kSuccess : kFailure;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const InvalidArgument& e) {
    err << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericalFailure& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

}  // namespace occlab::cli
