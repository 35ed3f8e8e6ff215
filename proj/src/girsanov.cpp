#include "mfq/girsanov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfq {

namespace {

// Effective total intensity at time s under the given flow: arrivals plus the
// service side, which only acts while the system is nonempty.
double effective_total(const Kernel& kernel, double s, const State& X,
                       const std::vector<double>& stats) {
  double v = kernel.mean_field_stats(JumpType::Arrival, s, X, stats);
  if (X.k > 0) v += kernel.mean_field_stats(JumpType::Service, s, X, stats);
  return v;
}

}  // namespace

PathDensity log_density(const Trajectory& traj, const Kernel& kernel,
                        const MeasureFlow& flow1, const MeasureFlow& flow2,
                        double quad_step) {
  const double T = traj.horizon();
  if (flow1.horizon() < T - 1e-12 || flow2.horizon() < T - 1e-12)
    throw std::invalid_argument("log_density: flows must cover the trajectory horizon");
  if (!kernel.bounds().uniqueness_mode())
    throw std::domain_error("log_density: kernel not bounded away from zero (A4)");
  if (quad_step <= 0.0) quad_step = std::min(0.01 * T, T);

  std::vector<std::vector<double>> stats1, stats2;
  for (const auto& mu : flow1.measures()) stats1.push_back(kernel.stats_of(mu));
  for (const auto& mu : flow2.measures()) stats2.push_back(kernel.stats_of(mu));

  PathDensity out;
  // jump terms: sign-matched intensity ratio at the pre-jump state
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double t = traj.event_time(i);
    const JumpType side = traj.event_kind(i);
    const State pre = traj.pre_state(i);
    const double l2 = kernel.mean_field_stats(side, t, pre, stats2[flow2.index_at(t)]);
    const double l1 = kernel.mean_field_stats(side, t, pre, stats1[flow1.index_at(t)]);
    if (!(l1 > 0.0) || !(l2 > 0.0))
      throw std::domain_error("log_density: A4 violated, density undefined");
    out.jump_terms.push_back(std::log(l2) - std::log(l1));
  }

  // integral term over the union of both flow grids and the event times
  std::vector<double> brk{0.0, T};
  for (double v : flow1.grid())
    if (v > 0.0 && v < T) brk.push_back(v);
  for (double v : flow2.grid())
    if (v > 0.0 && v < T) brk.push_back(v);
  for (std::size_t i = 0; i < traj.size(); ++i)
    if (traj.event_time(i) < T) brk.push_back(traj.event_time(i));
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());

  double integral = 0.0;  // of (total under flow2 - total under flow1)
  State seg_state = traj.state_at(0.0);
  std::size_t ev = traj.events_through(0.0);
  for (std::size_t b = 0; b + 1 < brk.size(); ++b) {
    const double a = brk[b], bb = brk[b + 1];
    const auto& s1 = stats1[flow1.index_at(a)];
    const auto& s2 = stats2[flow2.index_at(a)];
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((bb - a) / quad_step - 1e-12)));
    double prev = effective_total(kernel, a, seg_state, s2) -
                  effective_total(kernel, a, seg_state, s1);
    for (std::size_t j = 1; j <= m; ++j) {
      const double s = a + (bb - a) * static_cast<double>(j) / static_cast<double>(m);
      const State X = drift(seg_state, s - a);
      const double cur =
          effective_total(kernel, s, X, s2) - effective_total(kernel, s, X, s1);
      integral += 0.5 * (prev + cur) * (bb - a) / static_cast<double>(m);
      prev = cur;
    }
    if (ev < traj.size() && traj.event_time(ev) == bb) {
      seg_state = traj.post_state(ev);
      ++ev;
    } else {
      seg_state = drift(seg_state, bb - a);
    }
  }
  out.integral_term = -integral;
  out.log_rho = out.integral_term;
  for (double v : out.jump_terms) out.log_rho += v;
  return out;
}

MCStat normalization_check(const ParticleSystem& system, const Kernel& kernel,
                           const MeasureFlow& flow1, const MeasureFlow& flow2,
                           double quad_step) {
  std::vector<double> rho;
  rho.reserve(system.trajectories.size());
  for (const auto& traj : system.trajectories)
    rho.push_back(std::exp(log_density(traj, kernel, flow1, flow2, quad_step).log_rho));
  return mc_stat(rho);
}

MCStat psi_estimate(const ParticleSystem& system, const Kernel& kernel,
                    const MeasureFlow& flow1, const MeasureFlow& flow2,
                    double quad_step) {
  std::vector<double> vals;
  vals.reserve(system.trajectories.size());
  for (const auto& traj : system.trajectories) {
    const double rho = std::exp(log_density(traj, kernel, flow1, flow2, quad_step).log_rho);
    vals.push_back(2.0 - 2.0 * std::min(rho, 1.0));
  }
  return mc_stat(vals);
}

EmpiricalMeasure empirical_marginal(const std::vector<Trajectory>& trajectories, double t) {
  std::vector<State> states;
  states.reserve(trajectories.size());
  for (const auto& tr : trajectories) states.push_back(tr.state_at(t));
  return EmpiricalMeasure::uniform(std::move(states));
}

MarginalTvResult marginal_tv_check(const ParticleSystem& system1,
                                   const ParticleSystem& system2, const Kernel& kernel,
                                   const MeasureFlow& flow1, const MeasureFlow& flow2,
                                   double t, const CellScheme& partition,
                                   double quad_step) {
  if (std::abs(system1.config.horizon - system2.config.horizon) > 1e-12)
    throw std::invalid_argument("marginal_tv_check: mismatched horizons");

  MarginalTvResult out;
  out.phi = tv_distance_proxy(empirical_marginal(system1.trajectories, t),
                              empirical_marginal(system2.trajectories, t), partition);
  const MCStat psi = psi_estimate(system1, kernel, flow1, flow2, quad_step);
  out.psi = psi.mean;
  out.psi_se = psi.se;

  // sampling noise of the marginal proxy from independent half-samples;
  // halves of size N/2 carry twice the variance of the full-sample mean
  auto half_tv = [&](const std::vector<Trajectory>& trajs) {
    const std::size_t half = trajs.size() / 2;
    std::vector<State> a, b;
    for (std::size_t i = 0; i < 2 * half; ++i)
      (i < half ? a : b).push_back(trajs[i].state_at(t));
    return tv_distance_proxy(EmpiricalMeasure::uniform(std::move(a)),
                             EmpiricalMeasure::uniform(std::move(b)), partition);
  };
  out.phi_floor = 0.5 * (half_tv(system1.trajectories) + half_tv(system2.trajectories)) / 2.0;
  out.combined_se = std::sqrt(out.psi_se * out.psi_se + out.phi_floor * out.phi_floor);
  return out;
}

}  // namespace mfq
