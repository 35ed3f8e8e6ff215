#include "mfq/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <stdexcept>

#include "mfq/rng.hpp"

namespace mfq {

namespace {

constexpr std::uint64_t kInitStreamTag = ~std::uint64_t{0};

std::vector<double> make_grid(double horizon, double step) {
  std::vector<double> grid;
  for (double t = 0.0; t < horizon - 1e-12; t += step) grid.push_back(t);
  grid.push_back(horizon);
  return grid;
}

State sample_initial(const InitialDistribution& init, RngStream& rng) {
  if (const State* s = std::get_if<State>(&init)) {
    if (!is_canonical(*s)) throw std::invalid_argument("initial state not canonical");
    return *s;
  }
  const auto& mu = std::get<EmpiricalMeasure>(init);
  const double u = rng.uniform();
  double acc = 0.0;
  for (const auto& [s, w] : mu.atoms()) {
    acc += w;
    if (u <= acc) return s;
  }
  return mu.atoms().back().first;
}

// Strictly increasing event times; nudges forward on a floating-point tie.
double append_event(Trajectory& traj, double t, JumpType kind) {
  const double last = traj.size() ? traj.event_time(traj.size() - 1) : 0.0;
  if (t <= last) t = std::nextafter(last, std::numeric_limits<double>::infinity());
  traj.append(t, kind);
  return t;
}

void check_declared_bounds(double up, double down, double total_bar) {
  if (up + down > total_bar * (1.0 + 1e-9) + 1e-12)
    throw std::runtime_error("simulate: kernel violates declared bounds");
}

EmpiricalMeasure snapshot(const std::vector<Trajectory>& trajs, double t,
                          const CellScheme& cells) {
  std::vector<State> states;
  states.reserve(trajs.size());
  for (const auto& tr : trajs) states.push_back(tr.state_at(t));
  return EmpiricalMeasure::uniform(std::move(states)).compressed(cells);
}

ParticleSystem simulate_self_consistent(const SimConfig& cfg, const Kernel& kernel) {
  const std::size_t n = cfg.particles;
  const double T = cfg.horizon;
  const double total_bar = kernel.bounds().total_bar;
  const auto& interactions = kernel.interactions();

  std::vector<Trajectory> trajs;
  trajs.reserve(n);
  std::vector<State> states(n);
  std::vector<double> state_time(n, 0.0);
  std::vector<RngStream> engines;
  engines.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream init_rng(cfg.seed, i, kInitStreamTag);
    states[i] = sample_initial(cfg.initial, init_rng);
    trajs.emplace_back(states[i], T);
    engines.emplace_back(cfg.seed, i, 0);
  }

  // running interaction statistics of the live ensemble (k-dependent only,
  // hence unaffected by drift)
  std::vector<double> stat_sums(interactions.size(), 0.0);
  for (std::size_t c = 0; c < interactions.size(); ++c)
    for (const auto& s : states)
      stat_sums[c] += static_cast<double>(std::min(s.k, interactions[c].cap)) /
                      static_cast<double>(interactions[c].cap);

  const std::vector<double> grid = make_grid(T, cfg.effective_grid_step());
  std::vector<EmpiricalMeasure> recorded;
  recorded.reserve(grid.size());
  std::size_t next_grid = 0;

  // Snapshots are reconstructed from the trajectories rather than by drifting
  // the live states, so the recorded flow agrees bit-for-bit with state_at.
  auto record_through = [&](double t) {
    while (next_grid < grid.size() && grid[next_grid] <= t) {
      recorded.push_back(snapshot(trajs, grid[next_grid], cfg.flow_cells));
      ++next_grid;
    }
  };

  using Candidate = std::pair<double, std::size_t>;
  std::priority_queue<Candidate, std::vector<Candidate>, std::greater<>> queue;
  if (total_bar > 0.0)
    for (std::size_t i = 0; i < n; ++i)
      queue.emplace(engines[i].exponential(total_bar), i);

  std::vector<double> stats(interactions.size());
  while (!queue.empty()) {
    const auto [t, i] = queue.top();
    if (t >= T) break;  // all remaining candidates are later still
    queue.pop();
    record_through(t);

    const State pre = drift(states[i], t - state_time[i]);
    for (std::size_t c = 0; c < interactions.size(); ++c)
      stats[c] = stat_sums[c] / static_cast<double>(n);
    const double up = kernel.mean_field_stats(JumpType::Arrival, t, pre, stats);
    const double down = kernel.mean_field_stats(JumpType::Service, t, pre, stats);
    check_declared_bounds(up, down, total_bar);

    const double u = engines[i].uniform();
    bool jumped = false;
    JumpType kind = JumpType::Arrival;
    if (u < up / total_bar) {
      jumped = true;
      kind = JumpType::Arrival;
    } else if (u < (up + down) / total_bar && pre.k > 0) {
      jumped = true;
      kind = JumpType::Service;
    }
    if (jumped) {
      const double te = append_event(trajs[i], t, kind);
      const State post = apply_jump(pre, kind);
      for (std::size_t c = 0; c < interactions.size(); ++c) {
        const int cap = interactions[c].cap;
        stat_sums[c] += (static_cast<double>(std::min(post.k, cap)) -
                         static_cast<double>(std::min(pre.k, cap))) /
                        static_cast<double>(cap);
      }
      states[i] = post;
      state_time[i] = te;
    } else {
      states[i] = pre;
      state_time[i] = t;
    }
    queue.emplace(t + engines[i].exponential(total_bar), i);
  }
  record_through(T);

  return ParticleSystem{std::move(trajs),
                        MeasureFlow(grid, std::move(recorded)), cfg};
}

ParticleSystem simulate_given_flow(const SimConfig& cfg, const Kernel& kernel) {
  const auto& mode = std::get<GivenFlowMode>(cfg.mode);
  const std::size_t n = cfg.particles;
  const double T = cfg.horizon;
  const double total_bar = kernel.bounds().total_bar;
  const MeasureFlow& flow = mode.flow;

  std::vector<std::vector<double>> flow_stats;
  flow_stats.reserve(flow.measures().size());
  for (const auto& mu : flow.measures()) flow_stats.push_back(kernel.stats_of(mu));

  std::vector<Trajectory> trajs;
  trajs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream init_rng(cfg.seed, i, kInitStreamTag);
    State s = sample_initial(cfg.initial, init_rng);
    Trajectory traj(s, T);
    double s_time = 0.0;
    if (total_bar > 0.0) {
      RngStream engine(cfg.seed, i, 0);
      double t = 0.0;
      while (true) {
        t += engine.exponential(total_bar);
        if (t >= T) break;
        const State pre = drift(s, t - s_time);
        const auto& stats = flow_stats[flow.index_at(t)];
        const double up = kernel.mean_field_stats(JumpType::Arrival, t, pre, stats);
        const double down = kernel.mean_field_stats(JumpType::Service, t, pre, stats);
        check_declared_bounds(up, down, total_bar);
        const double u = engine.uniform();
        if (u < up / total_bar) {
          const double te = append_event(traj, t, JumpType::Arrival);
          s = jump_up(pre);
          s_time = te;
        } else if (u < (up + down) / total_bar && pre.k > 0) {
          const double te = append_event(traj, t, JumpType::Service);
          s = jump_down(pre);
          s_time = te;
        }
      }
    }
    trajs.push_back(std::move(traj));
  }

  const std::vector<double> grid = make_grid(T, cfg.effective_grid_step());
  std::vector<EmpiricalMeasure> recorded;
  recorded.reserve(grid.size());
  for (double g : grid) recorded.push_back(snapshot(trajs, g, cfg.flow_cells));

  return ParticleSystem{std::move(trajs), MeasureFlow(grid, std::move(recorded)), cfg};
}

}  // namespace

void SimConfig::validate(const Kernel& kernel) const {
  if (particles < 1) throw std::invalid_argument("SimConfig: particles must be >= 1");
  if (horizon <= 0.0) throw std::invalid_argument("SimConfig: horizon must be positive");
  if (effective_grid_step() <= 0.0) throw std::invalid_argument("SimConfig: grid step must be positive");
  if (!std::isfinite(kernel.bounds().total_bar))
    throw std::invalid_argument("SimConfig: kernel bounds not finite");
  if (const auto* fd = std::get_if<FrozenDelayMode>(&mode)) {
    if (fd->h <= 0.0) throw std::invalid_argument("SimConfig: frozen-delay h must be positive");
    if (effective_grid_step() > fd->h + 1e-12)
      throw std::invalid_argument("SimConfig: grid step must not exceed frozen-delay h");
  }
  if (const auto* gf = std::get_if<GivenFlowMode>(&mode)) {
    if (gf->flow.horizon() < horizon - 1e-12)
      throw std::invalid_argument("SimConfig: given flow does not cover the horizon");
  }
}

void ParticleSystem::validate() const {
  for (const auto& traj : trajectories) traj.validate();
  for (std::size_t g = 0; g < flow.grid().size(); ++g) {
    std::vector<State> snap;
    snap.reserve(trajectories.size());
    for (const auto& tr : trajectories) snap.push_back(tr.state_at(flow.grid()[g]));
    const auto expect =
        EmpiricalMeasure::uniform(std::move(snap)).compressed(config.flow_cells);
    if (tv_distance_proxy(expect, flow.measures()[g], config.flow_cells) > 1e-12)
      throw std::logic_error("ParticleSystem: recorded flow inconsistent with trajectories");
  }
}

FrozenSimulation::FrozenSimulation(const SimConfig& config, const Kernel& kernel)
    : config_(config), kernel_(kernel) {
  config_.validate(kernel_);
  const auto* fd = std::get_if<FrozenDelayMode>(&config_.mode);
  if (!fd) throw std::invalid_argument("FrozenSimulation: mode is not FrozenDelay");
  h_ = fd->h;
  window_count_ = static_cast<std::size_t>(std::ceil(config_.horizon / h_ - 1e-12));
  grid_ = make_grid(config_.horizon, config_.effective_grid_step());

  const std::size_t n = config_.particles;
  trajs_.reserve(n);
  states_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream init_rng(config_.seed, i, kInitStreamTag);
    states_[i] = sample_initial(config_.initial, init_rng);
    trajs_.emplace_back(states_[i], config_.horizon);
  }
  record_through(0.0);
}

void FrozenSimulation::record_through(double t) {
  while (next_grid_ < grid_.size() && grid_[next_grid_] <= t + 1e-12) {
    recorded_.push_back(snapshot(trajs_, grid_[next_grid_], config_.flow_cells));
    recorded_stats_.push_back(kernel_.stats_of(recorded_.back()));
    ++next_grid_;
  }
}

void FrozenSimulation::step_window(std::size_t j) {
  if (j != next_window_) throw std::logic_error("FrozenSimulation: windows must be stepped in order");
  if (j >= window_count_) throw std::logic_error("FrozenSimulation: no such window");
  const double t0 = static_cast<double>(j) * h_;
  const double t1 = std::min(t0 + h_, config_.horizon);
  const double total_bar = kernel_.bounds().total_bar;

  for (std::size_t i = 0; i < config_.particles; ++i) {
    if (total_bar <= 0.0) break;
    RngStream engine(config_.seed, i, j + 1);
    State s = states_[i];
    double s_time = t0;
    double t = t0;
    while (true) {
      t += engine.exponential(total_bar);
      if (t >= t1) break;
      const double td = std::max(t - h_, 0.0);
      if (td > completed_ + 1e-9)
        throw std::logic_error("FrozenSimulation: intensity look-up beyond completed history");
      const State frozen = trajs_[i].state_at(std::min(td, completed_));
      // recorded grid covers [0, t0], so the flow value at td is available
      auto git = std::upper_bound(grid_.begin(), grid_.begin() + next_grid_, td);
      const auto& stats = recorded_stats_[static_cast<std::size_t>(git - grid_.begin()) - 1];
      const double up = kernel_.mean_field_stats(JumpType::Arrival, t, frozen, stats);
      const double down = kernel_.mean_field_stats(JumpType::Service, t, frozen, stats);
      check_declared_bounds(up, down, total_bar);
      const double u = engine.uniform();
      const State pre = drift(s, t - s_time);
      if (u < up / total_bar) {
        const double te = append_event(trajs_[i], t, JumpType::Arrival);
        s = jump_up(pre);
        s_time = te;
      } else if (u < (up + down) / total_bar && pre.k > 0) {
        const double te = append_event(trajs_[i], t, JumpType::Service);
        s = jump_down(pre);
        s_time = te;
      }
    }
    states_[i] = drift(s, t1 - s_time);
  }
  if (total_bar <= 0.0)
    for (std::size_t i = 0; i < config_.particles; ++i)
      states_[i] = drift(states_[i], t1 - completed_);

  completed_ = t1;
  ++next_window_;
  record_through(completed_);
}

ParticleSystem FrozenSimulation::finish() {
  if (next_window_ != window_count_)
    throw std::logic_error("FrozenSimulation: not all windows completed");
  return ParticleSystem{std::move(trajs_),
                        MeasureFlow(std::move(grid_), std::move(recorded_)), config_};
}

ParticleSystem simulate(const SimConfig& config, const Kernel& kernel) {
  config.validate(kernel);
  if (std::holds_alternative<SelfConsistentMode>(config.mode))
    return simulate_self_consistent(config, kernel);
  if (std::holds_alternative<GivenFlowMode>(config.mode))
    return simulate_given_flow(config, kernel);
  FrozenSimulation sim(config, kernel);
  for (std::size_t j = 0; j < sim.window_count(); ++j) sim.step_window(j);
  return sim.finish();
}

std::map<int, double> jump_count_distribution(const ParticleSystem& system) {
  std::map<int, double> hist;
  for (const auto& traj : system.trajectories)
    hist[static_cast<int>(traj.size())] += 1.0;
  for (auto& [n, v] : hist) v /= static_cast<double>(system.trajectories.size());
  return hist;
}

FirstJumpProbs one_jump_probability_oracle(const Kernel& kernel, const MeasureFlow& flow,
                                           const State& s, double t, double delta,
                                           double quad_step) {
  if (delta < 0.0) throw std::invalid_argument("one_jump_probability_oracle: negative delta");
  if (delta == 0.0) return FirstJumpProbs{0.0, 0.0, 1.0};
  if (!(quad_step > 0.0) || quad_step > delta / 10.0 * (1.0 + 1e-12))
    throw std::invalid_argument("one_jump_probability_oracle: quadrature step must be <= delta/10");
  if (flow.horizon() < t + delta - 1e-12)
    throw std::invalid_argument("one_jump_probability_oracle: flow does not cover the window");

  // nodes: flow grid breakpoints within the window, refined to <= quad_step
  std::vector<double> nodes{t};
  for (double g : flow.grid())
    if (g > t && g < t + delta) nodes.push_back(g);
  nodes.push_back(t + delta);
  std::vector<double> refined;
  for (std::size_t c = 0; c + 1 < nodes.size(); ++c) {
    const double a = nodes[c], b = nodes[c + 1];
    const auto m = static_cast<std::size_t>(std::ceil((b - a) / quad_step - 1e-12));
    for (std::size_t r = 0; r < m; ++r)
      refined.push_back(a + (b - a) * static_cast<double>(r) / static_cast<double>(m));
  }
  refined.push_back(t + delta);

  auto rate = [&](JumpType side, double r) {
    return kernel.mean_field(side, r, s, flow.at(r));
  };

  double cum = 0.0;        // integral of the total rate from t
  double p_up = 0.0, p_down = 0.0;
  double prev_r = refined[0];
  double prev_total = rate(JumpType::Arrival, prev_r) + rate(JumpType::Service, prev_r);
  double prev_fu = rate(JumpType::Arrival, prev_r) * std::exp(-cum);
  double prev_fd = rate(JumpType::Service, prev_r) * std::exp(-cum);
  for (std::size_t i = 1; i < refined.size(); ++i) {
    const double r = refined[i];
    const double lu = rate(JumpType::Arrival, r);
    const double ld = rate(JumpType::Service, r);
    const double total = lu + ld;
    cum += 0.5 * (prev_total + total) * (r - prev_r);
    const double fu = lu * std::exp(-cum);
    const double fd = ld * std::exp(-cum);
    p_up += 0.5 * (prev_fu + fu) * (r - prev_r);
    p_down += 0.5 * (prev_fd + fd) * (r - prev_r);
    prev_r = r;
    prev_total = total;
    prev_fu = fu;
    prev_fd = fd;
  }
  return FirstJumpProbs{p_up, p_down, std::exp(-cum)};
}

}  // namespace mfq
