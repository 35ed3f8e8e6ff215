#ifndef MFQ_SIMULATE_HPP
#define MFQ_SIMULATE_HPP

#include <cstdint>
#include <map>
#include <variant>
#include <vector>

#include "mfq/kernel.hpp"
#include "mfq/measure.hpp"
#include "mfq/state.hpp"

namespace mfq {

// Intensity arguments at a candidate event time t:
//   SelfConsistent — current state and the current ensemble empirical measure;
//   FrozenDelay    — state and recorded flow at (t - h)+, built window by window;
//   GivenFlow      — current state and a fixed measure flow at t.
struct SelfConsistentMode {};
struct FrozenDelayMode {
  double h = 0.0;
};
struct GivenFlowMode {
  MeasureFlow flow;
};
using SimMode = std::variant<SelfConsistentMode, FrozenDelayMode, GivenFlowMode>;

// Initial distribution: a point mass or a finite atomic measure.
using InitialDistribution = std::variant<State, EmpiricalMeasure>;

struct SimConfig {
  std::size_t particles = 1;
  double horizon = 1.0;
  SimMode mode = SelfConsistentMode{};
  double grid_step = 0.0;  // 0 -> 0.01 * horizon
  std::uint64_t seed = 1;
  InitialDistribution initial = State{};
  CellScheme flow_cells{};  // recorded flow measures are compressed to these cells

  double effective_grid_step() const { return grid_step > 0.0 ? grid_step : 0.01 * horizon; }
  void validate(const Kernel& kernel) const;  // throws on violation
};

struct ParticleSystem {
  std::vector<Trajectory> trajectories;
  MeasureFlow flow;
  SimConfig config;

  void validate() const;  // structural invariants of every trajectory + flow consistency
};

ParticleSystem simulate(const SimConfig& config, const Kernel& kernel);

// Window-by-window construction used by the frozen-delay mode; all intensity
// look-ups inside window j reference times <= j*h only.
class FrozenSimulation {
 public:
  FrozenSimulation(const SimConfig& config, const Kernel& kernel);

  std::size_t window_count() const { return window_count_; }
  double completed_time() const { return completed_; }

  // Extends all particles over [j*h, (j+1)*h ^ horizon]; windows must be
  // stepped in order.
  void step_window(std::size_t j);

  ParticleSystem finish();

 private:
  void record_through(double t);

  SimConfig config_;
  const Kernel& kernel_;
  double h_;
  std::size_t window_count_ = 0;
  double completed_ = 0.0;
  std::size_t next_window_ = 0;

  std::vector<Trajectory> trajs_;
  std::vector<State> states_;      // state at completed_
  std::vector<double> grid_;
  std::vector<EmpiricalMeasure> recorded_;
  std::vector<std::vector<double>> recorded_stats_;
  std::size_t next_grid_ = 0;
};

// Fraction of particles with exactly n jumps, keyed by n.
std::map<int, double> jump_count_distribution(const ParticleSystem& system);

// First-event probabilities over (t, t+delta] for a frozen history: the state
// argument of the intensities is held at s and the measure argument follows
// the given flow, exactly as in the frozen-delay scheme with h >= delta.
// p_up/p_down are the probabilities that the first jump in the window is an
// arrival/service; p_none that there is no jump at all.
struct FirstJumpProbs {
  double p_up = 0.0;
  double p_down = 0.0;
  double p_none = 1.0;
};

FirstJumpProbs one_jump_probability_oracle(const Kernel& kernel, const MeasureFlow& flow,
                                           const State& s, double t, double delta,
                                           double quad_step);

}  // namespace mfq

#endif
