#include "mfq/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mfq/rng.hpp"

namespace mfq {

double flow_sup_distance(const MeasureFlow& a, const MeasureFlow& b,
                         const CellScheme& partition) {
  double sup = 0.0;
  for (std::size_t i = 0; i < a.grid().size(); ++i) {
    const double t = std::min(a.grid()[i], b.horizon());
    sup = std::max(sup, tv_distance_proxy(a.measures()[i], b.at(t), partition));
  }
  return sup;
}

PicardRun picard_iterate(const Kernel& kernel, const MeasureFlow& initial_flow,
                         std::size_t iterations, const SimConfig& sim,
                         bool common_random_numbers) {
  if (!kernel.bounds().uniqueness_mode())
    throw std::domain_error("picard_iterate: kernel not bounded away from zero (A4)");
  if (initial_flow.horizon() < sim.horizon - 1e-12)
    throw std::invalid_argument("picard_iterate: initial flow does not cover the horizon");

  PicardRun run;
  run.flows.push_back(initial_flow);
  for (std::size_t m = 0; m < iterations; ++m) {
    SimConfig cfg = sim;
    cfg.mode = GivenFlowMode{run.flows.back()};
    if (!common_random_numbers) {
      std::uint64_t mix = sim.seed + 0x51ed2701u * (m + 1);
      cfg.seed = splitmix64(mix);
    }
    run.flows.push_back(simulate(cfg, kernel).flow);
  }
  for (std::size_t m = 0; m + 1 < run.flows.size(); ++m)
    run.distances.push_back(
        flow_sup_distance(run.flows[m + 1], run.flows[m], sim.flow_cells));
  for (std::size_t m = 1; m + 1 < run.distances.size() + 1; ++m)
    if (run.distances[m - 1] > 0.0)
      run.contraction_estimate =
          std::max(run.contraction_estimate, run.distances[m] / run.distances[m - 1]);
  return run;
}

double choose_horizon(const KernelBounds& bounds) {
  if (!(bounds.lambda_underbar > 0.0))
    throw std::domain_error("choose_horizon: uniqueness regime requires lambda_underbar > 0");
  const double lb = bounds.lambda_bar;
  const double K = bounds.K;
  // series evaluated at unit horizon: ||l|| + sum_n ((n+1) K ||l|| + ||l||)
  // * ||l||^{n+1} / (n+1)!
  double C = lb;
  double pow_term = lb;  // ||l||^{n+1} / (n+1)! at n = 0
  for (std::size_t n = 0;; ++n) {
    const double term = (static_cast<double>(n + 1) * K * lb + lb) * pow_term;
    C += term;
    if (term < 1e-12 && n > 0) break;
    pow_term *= lb / static_cast<double>(n + 2);
    if (n > 10000) break;
  }
  const double T = C > 0.0 ? std::min(1.0, 1.0 / (2.0 * C)) : 1.0;
  return 0.9 * T;
}

double flow_noise_floor(const Kernel& kernel, const MeasureFlow& flow,
                        const SimConfig& sim, const CellScheme& partition) {
  MeasureFlow out[2];
  for (int r = 0; r < 2; ++r) {
    SimConfig cfg = sim;
    cfg.mode = GivenFlowMode{flow};
    std::uint64_t mix = sim.seed + 0x9e3779b9u * (r + 101);
    cfg.seed = splitmix64(mix);
    out[r] = simulate(cfg, kernel).flow;
  }
  return flow_sup_distance(out[0], out[1], partition);
}

namespace {

// One windowed two-branch run: per window, each branch Picard-iterates from
// its current guess and hands its terminal measure to the next window.
std::vector<double> windowed_branch_distances(const Kernel& kernel,
                                              const MeasureFlow& flowA,
                                              const MeasureFlow& flowB,
                                              const SimConfig& sim, std::size_t windows,
                                              std::size_t iters_per_window,
                                              std::uint64_t salt) {
  struct Branch {
    MeasureFlow guess;
    InitialDistribution start;
  };
  Branch branches[2] = {{flowA, sim.initial}, {flowB, sim.initial}};

  std::vector<double> distances;
  MeasureFlow final_flows[2];
  for (std::size_t w = 0; w < windows; ++w) {
    for (int b = 0; b < 2; ++b) {
      SimConfig cfg = sim;
      cfg.initial = branches[b].start;
      std::uint64_t mix =
          sim.seed + salt + 0xc2b2ae35u * (w * 2 + static_cast<std::size_t>(b) + 1);
      cfg.seed = splitmix64(mix);
      const PicardRun run =
          picard_iterate(kernel, branches[b].guess, iters_per_window, cfg);
      final_flows[b] = run.flows.back();
      branches[b].start = final_flows[b].measures().back();
      branches[b].guess = MeasureFlow::constant(final_flows[b].measures().back(),
                                                sim.horizon, sim.effective_grid_step());
    }
    distances.push_back(
        flow_sup_distance(final_flows[0], final_flows[1], sim.flow_cells));
  }
  return distances;
}

}  // namespace

UniquenessReport uniqueness_experiment(const Kernel& kernel, const MeasureFlow& flowA,
                                       const MeasureFlow& flowB, const SimConfig& sim,
                                       std::size_t windows, std::size_t iters_per_window) {
  if (tv_distance_proxy(flowA.at(0.0), flowB.at(0.0), sim.flow_cells) > 0.0)
    throw std::invalid_argument("uniqueness_experiment: starting flows must share the initial measure");
  if (windows < 1 || iters_per_window < 1)
    throw std::invalid_argument("uniqueness_experiment: need at least one window and iteration");

  UniquenessReport report;
  report.window_distances = windowed_branch_distances(kernel, flowA, flowB, sim, windows,
                                                      iters_per_window, 0);
  // noise floor: the same pipeline with both branches started from flowA, so
  // the only remaining discrepancy is Monte-Carlo noise plus its propagation
  const std::vector<double> null_run = windowed_branch_distances(
      kernel, flowA, flowA, sim, windows, iters_per_window, 0x5eedf100du);
  report.noise_floor = *std::max_element(null_run.begin(), null_run.end());
  report.merged = report.window_distances.back() <=
                  2.0 * report.noise_floor + 2.0 / static_cast<double>(sim.particles);
  return report;
}

}  // namespace mfq
