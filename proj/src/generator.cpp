#include "mfq/generator.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>

namespace mfq {

TestFunction::TestFunction(Phi phi, int k_param, double alpha, double beta)
    : phi_(phi), k_param_(k_param), alpha_(alpha), beta_(beta) {
  if (alpha < 0.0 || beta < 0.0)
    throw std::invalid_argument("TestFunction: alpha and beta must be >= 0");
  if (phi == Phi::Ramp && k_param < 1)
    throw std::invalid_argument("TestFunction: ramp cap must be >= 1");
}

double TestFunction::phi_of_k(int k) const {
  switch (phi_) {
    case Phi::One: return 1.0;
    case Phi::ExpNegK: return std::exp(-static_cast<double>(k));
    case Phi::Ramp:
      return static_cast<double>(std::min(k, k_param_)) / static_cast<double>(k_param_);
    case Phi::Bump: return k == k_param_ ? 1.0 : 0.0;
  }
  return 0.0;
}

std::string TestFunction::descriptor() const {
  std::string name;
  switch (phi_) {
    case Phi::One: name = "one"; break;
    case Phi::ExpNegK: name = "expnegk"; break;
    case Phi::Ramp: name = "ramp" + std::to_string(k_param_); break;
    case Phi::Bump: name = "bump" + std::to_string(k_param_); break;
  }
  return name + ":alpha=" + std::to_string(alpha_) + ",beta=" + std::to_string(beta_);
}

double apply_pointwise_generator(const Kernel& kernel, double t, const State& Xp,
                                 const State& Y, const TestFunction& g, const State& X) {
  const double up = kernel.pointwise(JumpType::Arrival, t, Xp, Y);
  const double down = kernel.pointwise(JumpType::Service, t, Xp, Y);
  double acc = up * (g.eval(jump_up(X)) - g.eval(X)) + g.dx(X);
  if (X.k > 0) acc += down * (g.eval(jump_down(X)) - g.eval(X)) + g.dy(X);
  return acc;
}

double apply_generator(const Kernel& kernel, double t, const State& Xp,
                       const EmpiricalMeasure& mu, const TestFunction& g, const State& X) {
  const double up = kernel.mean_field(JumpType::Arrival, t, Xp, mu);
  const double down = kernel.mean_field(JumpType::Service, t, Xp, mu);
  double acc = up * (g.eval(jump_up(X)) - g.eval(X)) + g.dx(X);
  if (X.k > 0) acc += down * (g.eval(jump_down(X)) - g.eval(X)) + g.dy(X);
  return acc;
}

namespace {

// Piecewise-constant interaction statistics of the live ensemble, rebuilt
// from the trajectories; matches what the self-consistent simulator used.
struct EnsembleTrack {
  std::vector<double> times;
  std::vector<std::vector<double>> values;  // values[c][j]: statistic after times[j]
  std::vector<double> initial;

  EnsembleTrack(const std::vector<Trajectory>& trajs, const Kernel& kernel) {
    const auto& inter = kernel.interactions();
    const double n = static_cast<double>(trajs.size());
    initial.assign(inter.size(), 0.0);
    for (const auto& tr : trajs)
      for (std::size_t c = 0; c < inter.size(); ++c)
        initial[c] += phi(tr.initial().k, inter[c].cap) / n;

    struct Ev {
      double time;
      int k_before;
      int k_after;
    };
    std::vector<Ev> evs;
    for (const auto& tr : trajs) {
      int k = tr.initial().k;
      for (std::size_t i = 0; i < tr.size(); ++i) {
        evs.push_back(Ev{tr.event_time(i), k, tr.k_after(i)});
        k = tr.k_after(i);
      }
    }
    std::sort(evs.begin(), evs.end(), [](const Ev& a, const Ev& b) { return a.time < b.time; });

    times.reserve(evs.size());
    values.assign(inter.size(), {});
    std::vector<double> cur = initial;
    for (const auto& e : evs) {
      times.push_back(e.time);
      for (std::size_t c = 0; c < inter.size(); ++c) {
        cur[c] += (phi(e.k_after, inter[c].cap) - phi(e.k_before, inter[c].cap)) / n;
        values[c].push_back(cur[c]);
      }
    }
  }

  static double phi(int k, int cap) {
    return static_cast<double>(std::min(k, cap)) / static_cast<double>(cap);
  }

  void stats_at(double s, std::vector<double>& out) const {
    const auto it = std::upper_bound(times.begin(), times.end(), s);
    const std::ptrdiff_t idx = it - times.begin() - 1;
    out.resize(values.size());
    for (std::size_t c = 0; c < values.size(); ++c)
      out[c] = idx < 0 ? initial[c] : values[c][static_cast<std::size_t>(idx)];
  }
};

struct RateProvider {
  const Kernel& kernel;
  const ParticleSystem& system;
  const DynkinOptions& options;
  std::unique_ptr<EnsembleTrack> track;
  std::vector<std::vector<double>> flow_stats;  // per grid index of lookup flow
  const MeasureFlow* lookup_flow = nullptr;
  double delay = 0.0;  // 0 in undelayed modes
  mutable std::vector<double> buf;

  RateProvider(const ParticleSystem& sys, const Kernel& k, const DynkinOptions& opt)
      : kernel(k), system(sys), options(opt) {
    if (std::holds_alternative<SelfConsistentMode>(sys.config.mode)) {
      track = std::make_unique<EnsembleTrack>(sys.trajectories, kernel);
    } else if (const auto* fd = std::get_if<FrozenDelayMode>(&sys.config.mode)) {
      lookup_flow = &sys.flow;
      delay = opt.delayed_arguments ? fd->h : 0.0;
    } else {
      lookup_flow = &std::get<GivenFlowMode>(sys.config.mode).flow;
    }
    if (lookup_flow)
      for (const auto& mu : lookup_flow->measures())
        flow_stats.push_back(kernel.stats_of(mu));
  }

  // Intensity pair at time s for the particle with trajectory traj whose
  // current state is X.
  void rates(double s, const Trajectory& traj, const State& X, double& up,
             double& down) const {
    if (track) {
      track->stats_at(s, buf);
      up = kernel.mean_field_stats(JumpType::Arrival, s, X, buf);
      down = kernel.mean_field_stats(JumpType::Service, s, X, buf);
      return;
    }
    const double tq = delay > 0.0 ? std::max(s - delay, 0.0) : s;
    const State Xq = delay > 0.0 ? traj.state_at(tq) : X;
    const auto& stats = flow_stats[lookup_flow->index_at(tq)];
    up = kernel.mean_field_stats(JumpType::Arrival, s, Xq, stats);
    down = kernel.mean_field_stats(JumpType::Service, s, Xq, stats);
  }
};

double residual_one(const Trajectory& traj, const RateProvider& provider,
                    const TestFunction& g, double t1, double t2, double quad_step,
                    const std::vector<double>& grid) {
  // breakpoints: interval ends, flow grid points, own events
  std::vector<double> brk{t1};
  for (double v : grid)
    if (v > t1 && v < t2) brk.push_back(v);
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const double te = traj.event_time(i);
    if (te > t1 && te < t2) brk.push_back(te);
  }
  brk.push_back(t2);
  std::sort(brk.begin(), brk.end());

  const double alpha = g.alpha(), beta = g.beta();
  auto integrand = [&](double s, const State& X, double& out) {
    double up, down;
    provider.rates(s, traj, X, up, down);
    const double ex = std::exp(-alpha * X.x);
    const double ey = std::exp(-beta * X.y);
    const double gv = g.phi_of_k(X.k) * ex * ey;
    const double gup = g.phi_of_k(X.k + 1) * ey;  // arrival resets x
    double val = up * (gup - gv) - alpha * gv;
    if (X.k > 0) {
      const double gdn = g.phi_of_k(X.k - 1) * ex;  // service resets y
      val += down * (gdn - gv) - beta * gv;
    }
    out = val;
  };

  double integral = 0.0;
  State seg_state = traj.state_at(t1);
  std::size_t ev = traj.events_through(t1);
  for (std::size_t b = 0; b + 1 < brk.size(); ++b) {
    const double a = brk[b], bb = brk[b + 1];
    if (!(bb > a)) continue;
    const auto m = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil((bb - a) / quad_step - 1e-12)));
    double prev;
    integrand(a, seg_state, prev);
    for (std::size_t j = 1; j <= m; ++j) {
      const double s = a + (bb - a) * static_cast<double>(j) / static_cast<double>(m);
      double cur;
      integrand(s, drift(seg_state, s - a), cur);
      integral += 0.5 * (prev + cur) * (bb - a) / static_cast<double>(m);
      prev = cur;
    }
    // advance across the breakpoint; bb may be an event time
    if (ev < traj.size() && traj.event_time(ev) == bb) {
      seg_state = traj.post_state(ev);
      ++ev;
    } else {
      seg_state = drift(seg_state, bb - a);
    }
  }
  return g.eval(traj.state_at(t2)) - g.eval(traj.state_at(t1)) - integral;
}

}  // namespace

std::vector<double> dynkin_residuals(const ParticleSystem& system, const Kernel& kernel,
                                     const TestFunction& g, double t1, double t2,
                                     const DynkinOptions& options) {
  if (!(0.0 <= t1 && t1 < t2 && t2 <= system.config.horizon + 1e-12))
    throw std::invalid_argument("dynkin_residuals: need 0 <= t1 < t2 <= horizon");
  const double grid_step = system.config.effective_grid_step();
  const double quad_step = options.quad_step > 0.0 ? options.quad_step : grid_step;
  if (quad_step > grid_step * (1.0 + 1e-12))
    throw std::invalid_argument("dynkin_residuals: quadrature step coarser than the flow grid");

  RateProvider provider(system, kernel, options);
  std::vector<double> out;
  out.reserve(system.trajectories.size());
  for (const auto& traj : system.trajectories)
    out.push_back(residual_one(traj, provider, g, t1, t2, quad_step, system.flow.grid()));
  return out;
}

MCStat mc_stat(const std::vector<double>& samples) {
  const auto n = samples.size();
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var = n > 1 ? var / static_cast<double>(n - 1) : 0.0;
  return MCStat{mean, std::sqrt(var / static_cast<double>(n)), n};
}

MCStat dynkin_residual(const ParticleSystem& system, const Kernel& kernel,
                       const TestFunction& g, double t1, double t2,
                       const DynkinOptions& options) {
  return mc_stat(dynkin_residuals(system, kernel, g, t1, t2, options));
}

MCStat martingale_test(const ParticleSystem& system, const Kernel& kernel,
                       const TestFunction& g, const ObservableProduct& obs,
                       const DynkinOptions& options) {
  for (const auto& [t, phi] : obs.weights)
    if (t < 0.0 || t > obs.t_lo)
      throw std::invalid_argument("martingale_test: weight times must lie in [0, t_lo]");
  auto residuals = dynkin_residuals(system, kernel, g, obs.t_lo, obs.t_hi, options);
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    double w = 1.0;
    for (const auto& [t, phi] : obs.weights)
      w *= phi.eval(system.trajectories[i].state_at(t));
    residuals[i] *= w;
  }
  return mc_stat(residuals);
}

}  // namespace mfq
