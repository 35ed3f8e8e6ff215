// Experiment runner: simulation, verification suites, and artifact output.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mfq/fixedpoint.hpp"
#include "mfq/generator.hpp"
#include "mfq/girsanov.hpp"
#include "mfq/io.hpp"
#include "mfq/kernel.hpp"
#include "mfq/simulate.hpp"
#include "mfq/tightness.hpp"

using namespace mfq;
using nlohmann::ordered_json;

namespace {

struct Context {
  ExperimentConfig cfg;
  std::string hash;
  bool any_failure = false;
};

SimConfig sim_config(const ExperimentConfig& cfg) {
  SimConfig sim;
  sim.particles = cfg.particles;
  sim.horizon = cfg.horizon;
  sim.mode = parse_mode(cfg.mode);
  sim.grid_step = cfg.grid_step;
  sim.seed = cfg.seed;
  sim.initial = make_state(cfg.initial_k, cfg.initial_x, cfg.initial_y);
  sim.flow_cells = CellScheme{cfg.cell_width};
  return sim;
}

void stamp(ordered_json& j, const Context& ctx) {
  j["config_hash"] = ctx.hash;
  j["seed"] = ctx.cfg.seed;
}

std::string out_path(const Context& ctx, const std::string& name) {
  std::filesystem::create_directories(ctx.cfg.out_dir);
  return (std::filesystem::path(ctx.cfg.out_dir) / name).string();
}

void write_json(const Context& ctx, const std::string& name, ordered_json j) {
  stamp(j, ctx);
  write_file(out_path(ctx, name), j.dump(2) + "\n");
}

// ---------------------------------------------------------------- simulate --

void suite_simulate(Context& ctx) {
  const Kernel kernel = Kernel::parse(ctx.cfg.kernel_id, ctx.cfg.kernel_params);
  const SimConfig sim = sim_config(ctx.cfg);
  ParticleSystem sys = simulate(sim, kernel);
  sys.validate();

  std::string trajs = "# config_hash," + ctx.hash + "\n";
  for (std::size_t i = 0; i < sys.trajectories.size(); ++i)
    trajs += "# particle," + std::to_string(i) + "\n" +
             trajectory_to_csv(sys.trajectories[i]);
  write_file(out_path(ctx, "trajectories.csv"), trajs);
  write_file(out_path(ctx, "flow.csv"), "# config_hash," + ctx.hash + "\n" +
                                            flow_to_csv(sys.flow, sim.flow_cells));

  ordered_json summary;
  ordered_json hist = ordered_json::object();
  for (const auto& [n, f] : jump_count_distribution(sys)) hist[std::to_string(n)] = f;
  summary["jump_count_histogram"] = hist;
  double mean_k = 0.0;
  std::map<int, double> k_marginal;
  for (const auto& tr : sys.trajectories) {
    const int k = tr.state_at(sim.horizon).k;
    mean_k += k;
    k_marginal[k] += 1.0 / static_cast<double>(sim.particles);
  }
  summary["final_mean_k"] = mean_k / static_cast<double>(sim.particles);
  ordered_json marg = ordered_json::object();
  for (const auto& [k, p] : k_marginal) marg[std::to_string(k)] = p;
  summary["final_k_marginal"] = marg;
  write_json(ctx, "summary.json", summary);
  std::cout << "simulate: ok (" << sim.particles << " particles, T = " << sim.horizon
            << ")\n";
}

// ------------------------------------------------------------------ dynkin --

void suite_dynkin(Context& ctx) {
  const Kernel kernel = Kernel::parse(ctx.cfg.kernel_id, ctx.cfg.kernel_params);
  const SimConfig sim = sim_config(ctx.cfg);
  ParticleSystem sys = simulate(sim, kernel);

  std::vector<TestFunction> gs = {
      TestFunction(TestFunction::Phi::Ramp, 10, 0.0, 0.0),
      TestFunction(TestFunction::Phi::Ramp, 3, 0.3, 0.7),
      TestFunction(TestFunction::Phi::ExpNegK, 0, 0.5, 0.0),
      TestFunction(TestFunction::Phi::ExpNegK, 0, 0.0, 0.5),
      TestFunction(TestFunction::Phi::Bump, 1, 0.2, 0.2),
  };
  ordered_json cases = ordered_json::array();
  std::string csv = "descriptor,t1,t2,mean,se,pass\n";
  for (const auto& g : gs) {
    const double t1 = 0.0, t2 = sim.horizon;
    MCStat stat = dynkin_residual(sys, kernel, g, t1, t2);
    const bool pass = std::abs(stat.mean) <= 3.0 * stat.se + 1e-9;
    if (!pass) ctx.any_failure = true;
    cases.push_back({{"descriptor", g.descriptor()},
                     {"mean", stat.mean},
                     {"se", stat.se},
                     {"pass", pass}});
    csv += g.descriptor() + "," + format_double(t1) + "," + format_double(t2) + "," +
           format_double(stat.mean) + "," + format_double(stat.se) + "," +
           (pass ? "1" : "0") + "\n";
    std::cout << "dynkin " << g.descriptor() << ": mean = " << stat.mean
              << ", se = " << stat.se << (pass ? " [pass]" : " [FAIL]") << "\n";
  }
  ordered_json report;
  report["cases"] = cases;
  write_json(ctx, "dynkin.json", report);
  write_file(out_path(ctx, "dynkin.csv"), "# config_hash," + ctx.hash + "\n" + csv);
}

// ---------------------------------------------------------------- girsanov --

void suite_girsanov(Context& ctx, const std::string& flow1_file,
                    const std::string& flow2_file) {
  const Kernel kernel = Kernel::parse(ctx.cfg.kernel_id, ctx.cfg.kernel_params);
  if (!kernel.bounds().uniqueness_mode()) {
    std::cout << "girsanov: skipped: A4 not satisfied\n";
    write_json(ctx, "girsanov.json", {{"skipped", "A4 not satisfied"}});
    return;
  }
  SimConfig sim = sim_config(ctx.cfg);

  MeasureFlow flow1, flow2;
  if (!flow1_file.empty()) {
    flow1 = flow_from_csv(read_file(flow1_file));
  } else {
    SimConfig base = sim;
    base.mode = SelfConsistentMode{};
    flow1 = simulate(base, kernel).flow;
  }
  if (!flow2_file.empty()) {
    flow2 = flow_from_csv(read_file(flow2_file));
  } else {
    flow2 = MeasureFlow::constant(flow1.measures().back(), sim.horizon,
                                  sim.effective_grid_step());
  }

  SimConfig under1 = sim;
  under1.mode = GivenFlowMode{flow1};
  ParticleSystem sys1 = simulate(under1, kernel);
  SimConfig under2 = sim;
  under2.mode = GivenFlowMode{flow2};
  under2.seed = sim.seed + 1;
  ParticleSystem sys2 = simulate(under2, kernel);

  MCStat rho = normalization_check(sys1, kernel, flow1, flow2);
  MarginalTvResult tv = marginal_tv_check(sys1, sys2, kernel, flow1, flow2, sim.horizon,
                                          sim.flow_cells);
  const bool pass = std::abs(rho.mean - 1.0) <= 3.0 * rho.se &&
                    tv.phi <= tv.psi + 3.0 * tv.combined_se;
  if (!pass) ctx.any_failure = true;
  write_json(ctx, "girsanov.json",
             {{"rho_mean", rho.mean},
              {"rho_se", rho.se},
              {"psi", tv.psi},
              {"phi", tv.phi},
              {"pass", pass}});
  std::cout << "girsanov: rho_mean = " << rho.mean << " +- " << rho.se
            << ", psi = " << tv.psi << ", phi = " << tv.phi
            << (pass ? " [pass]" : " [FAIL]") << "\n";
}

// ------------------------------------------------------------------ picard --

void suite_picard(Context& ctx, std::size_t iterations, bool auto_horizon,
                  std::size_t windows) {
  const Kernel kernel = Kernel::parse(ctx.cfg.kernel_id, ctx.cfg.kernel_params);
  if (!kernel.bounds().uniqueness_mode()) {
    std::cout << "picard: skipped: A4 not satisfied\n";
    write_json(ctx, "picard.json", {{"skipped", "A4 not satisfied"}});
    return;
  }
  SimConfig sim = sim_config(ctx.cfg);
  if (auto_horizon) {
    sim.horizon = choose_horizon(kernel.bounds());
    sim.grid_step = sim.horizon / 20.0;
  }
  const double step = sim.effective_grid_step();
  MeasureFlow start = MeasureFlow::constant(
      EmpiricalMeasure::point_mass(
          make_state(ctx.cfg.initial_k, ctx.cfg.initial_x, ctx.cfg.initial_y)),
      sim.horizon, step);
  PicardRun run = picard_iterate(kernel, start, iterations, sim);

  std::string csv = "m,d_m\n";
  for (std::size_t m = 0; m < run.distances.size(); ++m)
    csv += std::to_string(m + 1) + "," + format_double(run.distances[m]) + "\n";
  write_file(out_path(ctx, "picard.csv"), "# config_hash," + ctx.hash + "\n" + csv);

  ordered_json report;
  report["horizon"] = sim.horizon;
  report["distances"] = run.distances;
  report["contraction_estimate"] = run.contraction_estimate;
  if (windows > 0) {
    MeasureFlow other(std::vector<double>{0.0, step, sim.horizon},
                      {start.at(0.0),
                       EmpiricalMeasure::point_mass(State{5, 0.0, 0.0}),
                       EmpiricalMeasure::point_mass(State{5, 0.0, 0.0})});
    UniquenessReport uniq = uniqueness_experiment(kernel, start, other, sim, windows, 2);
    report["uniqueness"] = {{"window_distances", uniq.window_distances},
                            {"noise_floor", uniq.noise_floor},
                            {"merged", uniq.merged}};
    if (!uniq.merged) ctx.any_failure = true;
  }
  write_json(ctx, "picard.json", report);
  std::cout << "picard: T = " << sim.horizon << ", final d = "
            << (run.distances.empty() ? 0.0 : run.distances.back()) << "\n";
}

// --------------------------------------------------------------- tightness --

void suite_tightness(Context& ctx) {
  const Kernel kernel = Kernel::parse(ctx.cfg.kernel_id, ctx.cfg.kernel_params);
  SimConfig sim = sim_config(ctx.cfg);
  const double T = sim.horizon;

  std::vector<ParticleSystem> systems;
  for (double h : {T / 4.0, T / 8.0, T / 16.0, T / 32.0}) {
    SimConfig cfg = sim;
    cfg.mode = FrozenDelayMode{h};
    if (cfg.effective_grid_step() > h) cfg.grid_step = h;
    systems.push_back(simulate(cfg, kernel));
  }
  const double c_star = derived_sko1_threshold(systems[0], kernel.bounds(), T);
  TightnessTable sko1 =
      sko1_diagnostic(systems, T, {c_star / 4.0, c_star / 2.0, 0.75 * c_star, c_star});
  const double eps = 1.0;
  TightnessTable sko2 = sko2_diagnostic(systems, T, {T / 32.0, T / 16.0, T / 8.0}, eps);

  auto table_csv = [&](const TightnessTable& t, const char* control) {
    std::string csv = std::string("h_scheme,") + control + ",value,se\n";
    for (std::size_t r = 0; r < t.value.size(); ++r)
      for (std::size_t c = 0; c < t.control.size(); ++c)
        csv += format_double(t.scheme_h[r]) + "," + format_double(t.control[c]) + "," +
               format_double(t.value[r][c]) + "," + format_double(t.se[r][c]) + "\n";
    return csv;
  };
  write_file(out_path(ctx, "sko1.csv"),
             "# config_hash," + ctx.hash + "\n" + table_csv(sko1, "c"));
  write_file(out_path(ctx, "sko2.csv"),
             "# config_hash," + ctx.hash + "\n" + table_csv(sko2, "h_window"));

  bool pass = true;
  for (const auto& row : sko1.value)
    if (row.back() > 0.01) pass = false;
  if (!pass) ctx.any_failure = true;
  std::cout << "tightness: sko1 max at derived c = "
            << [&] {
                 double m = 0.0;
                 for (const auto& row : sko1.value) m = std::max(m, row.back());
                 return m;
               }()
            << (pass ? " [pass]" : " [FAIL]") << "\n";
}

// ------------------------------------------------------------ mm1-validate --

void suite_mm1(Context& ctx) {
  const double a = 1.0, b = 2.0;
  Kernel kernel = Kernel::parse("const", {{"a", a}, {"b", b}});
  SimConfig sim;
  sim.particles = ctx.cfg.particles;
  sim.horizon = ctx.cfg.horizon;
  sim.seed = ctx.cfg.seed;
  ParticleSystem sys = simulate(sim, kernel);

  std::map<int, double> emp;
  for (const auto& tr : sys.trajectories)
    emp[tr.state_at(sim.horizon).k] += 1.0 / static_cast<double>(sim.particles);
  const double r = a / b;
  double tv = 0.0;
  const int kmax = emp.rbegin()->first + 50;
  for (int k = 0; k <= kmax; ++k) {
    const double geo = (1.0 - r) * std::pow(r, k);
    const double e = emp.count(k) ? emp.at(k) : 0.0;
    tv += std::abs(e - geo);
  }
  tv *= 0.5;  // mass-1 total variation
  const bool pass = tv <= 0.02;
  if (!pass) ctx.any_failure = true;
  write_json(ctx, "mm1.json", {{"tv", tv}, {"pass", pass}});
  std::cout << "mm1-validate: TV = " << tv << (pass ? " [pass]" : " [FAIL]") << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mean-field GI/GI/1 simulation and verification engine"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_file, out_dir, mode_flag, kernel_flag, params_flag;
  std::optional<std::uint64_t> seed_flag;
  std::optional<std::size_t> particles_flag;
  std::optional<double> horizon_flag, grid_flag;
  int threads = 1;
  app.add_option("--config", config_file, "experiment config JSON");
  app.add_option("--seed", seed_flag, "root RNG seed");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--threads", threads, "worker threads (suites run sequentially)");

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--kernel", kernel_flag, "catalog id, e.g. const or mfqueue+age");
    sub->add_option("--params", params_flag, "comma-separated k=v kernel parameters");
    sub->add_option("--mode", mode_flag, "self | frozen:<h> | flow:<file>");
    sub->add_option("--particles", particles_flag, "particle count N");
    sub->add_option("--horizon", horizon_flag, "time horizon T");
    sub->add_option("--grid", grid_flag, "flow grid step");
  };

  CLI::App* sc_sim = app.add_subcommand("simulate", "simulate a particle system");
  add_common(sc_sim);
  CLI::App* sc_dyn = app.add_subcommand("dynkin", "Dynkin/martingale residual suite");
  add_common(sc_dyn);
  CLI::App* sc_gir = app.add_subcommand("girsanov", "path-density verification");
  add_common(sc_gir);
  std::string flow1_file, flow2_file;
  sc_gir->add_option("--flow1", flow1_file, "reference flow CSV");
  sc_gir->add_option("--flow2", flow2_file, "alternative flow CSV");
  CLI::App* sc_pic = app.add_subcommand("picard", "fixed-point iteration");
  add_common(sc_pic);
  std::size_t iterations = 4, windows = 0;
  bool auto_horizon = false;
  sc_pic->add_option("--iterations", iterations, "Picard iterations");
  sc_pic->add_flag("--auto-horizon", auto_horizon, "derive T from the kernel bounds");
  sc_pic->add_option("--windows", windows, "uniqueness windows (0 = skip)");
  CLI::App* sc_tight = app.add_subcommand("tightness", "sko1/sko2 diagnostic tables");
  add_common(sc_tight);
  CLI::App* sc_mm1 = app.add_subcommand("mm1-validate", "M/M/1 reduction check");
  add_common(sc_mm1);
  CLI::App* sc_run = app.add_subcommand("run", "run the suites selected in the config");
  add_common(sc_run);
  CLI::App* sc_val = app.add_subcommand("validate-config", "check a config file");
  add_common(sc_val);

  CLI11_PARSE(app, argc, argv);

  Context ctx;
  try {
    if (!config_file.empty()) ctx.cfg = config_from_json(read_file(config_file));
    if (!kernel_flag.empty()) ctx.cfg.kernel_id = kernel_flag;
    if (!params_flag.empty()) {
      ctx.cfg.kernel_params.clear();
      std::stringstream ss(params_flag);
      std::string tok;
      while (std::getline(ss, tok, ',')) {
        const auto eq = tok.find('=');
        if (eq == std::string::npos)
          throw std::invalid_argument("--params entries must look like key=value");
        ctx.cfg.kernel_params[tok.substr(0, eq)] = std::stod(tok.substr(eq + 1));
      }
    }
    if (!mode_flag.empty()) ctx.cfg.mode = mode_flag;
    if (particles_flag) ctx.cfg.particles = *particles_flag;
    if (horizon_flag) ctx.cfg.horizon = *horizon_flag;
    if (grid_flag) ctx.cfg.grid_step = *grid_flag;
    if (seed_flag) ctx.cfg.seed = *seed_flag;
    if (!out_dir.empty()) ctx.cfg.out_dir = out_dir;

    const auto issues = validate_config(ctx.cfg);
    if (sc_val->parsed()) {
      for (const auto& v : issues) std::cout << v << "\n";
      std::cout << (issues.empty() ? "config ok\n" : "config invalid\n");
      return issues.empty() ? 0 : 2;
    }
    if (!issues.empty()) {
      for (const auto& v : issues) std::cerr << "config error: " << v << "\n";
      return 2;
    }
    ctx.hash = config_hash(ctx.cfg);

    auto selected = [&](const std::string& name) {
      for (const auto& s : ctx.cfg.suites)
        if (s == name || s == "all") return true;
      return false;
    };
    if (sc_sim->parsed()) suite_simulate(ctx);
    if (sc_dyn->parsed()) suite_dynkin(ctx);
    if (sc_gir->parsed()) suite_girsanov(ctx, flow1_file, flow2_file);
    if (sc_pic->parsed()) suite_picard(ctx, iterations, auto_horizon, windows);
    if (sc_tight->parsed()) suite_tightness(ctx);
    if (sc_mm1->parsed()) suite_mm1(ctx);
    if (sc_run->parsed()) {
      if (selected("simulate")) suite_simulate(ctx);
      if (selected("dynkin")) suite_dynkin(ctx);
      if (selected("girsanov")) suite_girsanov(ctx, "", "");
      if (selected("picard")) suite_picard(ctx, 4, true, 0);
      if (selected("tightness")) suite_tightness(ctx);
      if (selected("mm1-validate")) suite_mm1(ctx);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return ctx.any_failure ? 1 : 0;
}
