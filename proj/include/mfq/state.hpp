#ifndef MFQ_STATE_HPP
#define MFQ_STATE_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace mfq {

// Hybrid queue state: k customers in system, x elapsed time since the last
// arrival, y elapsed service time of the customer in service. Canonical form
// keeps y == 0 whenever k == 0 (the empty system has no service in progress).
struct State {
  int k = 0;
  double x = 0.0;
  double y = 0.0;

  bool operator==(const State& o) const { return k == o.k && x == o.x && y == o.y; }
};

inline bool is_canonical(const State& s) {
  return s.k >= 0 && s.x >= 0.0 && s.y >= 0.0 && (s.k > 0 || s.y == 0.0);
}

inline State make_state(int k, double x, double y) {
  State s{k, x, k == 0 ? 0.0 : y};
  if (k < 0 || x < 0.0 || y < 0.0)
    throw std::invalid_argument("make_state: negative coordinate");
  return s;
}

// Deterministic motion between jumps: x and y grow at unit rate, y frozen at
// zero while the system is empty.
inline State drift(const State& s, double delta) {
  if (delta < 0.0) throw std::invalid_argument("drift: negative duration");
  return State{s.k, s.x + delta, s.k > 0 ? s.y + delta : 0.0};
}

inline State jump_up(const State& s) {
  return State{s.k + 1, 0.0, s.y};
}

inline State jump_down(const State& s) {
  if (s.k < 1) throw std::domain_error("jump_down: service jump from empty system");
  return State{s.k - 1, s.x, 0.0};
}

inline double state_distance(const State& a, const State& b) {
  return std::abs(a.k - b.k) + std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

// Distance to the zero state, used as the magnitude |X| in the tightness
// diagnostics.
inline double state_norm(const State& s) { return s.k + s.x + s.y; }

enum class JumpType : std::uint8_t { Arrival = 0, Service = 1 };

inline State apply_jump(const State& s, JumpType kind) {
  return kind == JumpType::Arrival ? jump_up(s) : jump_down(s);
}

struct TrajectoryEvent {
  double time = 0.0;
  JumpType kind = JumpType::Arrival;
  State pre_state;   // left limit at the event time
  State post_state;  // value at the event time (right-continuous)
};

// Cadlag piecewise-linear path: an initial state plus an ordered list of jump
// events, with unit-rate drift in between. Events are stored compactly as
// (time, kind, k after the jump); pre/post states are reconstructed on demand
// from the reset structure of the jump maps (arrivals reset x, services and
// arrivals into an empty system reset y).
class Trajectory {
 public:
  Trajectory() = default;
  Trajectory(State initial, double horizon);

  void append(double time, JumpType kind);
  void extend_horizon(double horizon);

  const State& initial() const { return initial_; }
  double horizon() const { return horizon_; }
  std::size_t size() const { return recs_.size(); }

  double event_time(std::size_t i) const { return recs_[i].time; }
  JumpType event_kind(std::size_t i) const { return recs_[i].kind; }
  int k_after(std::size_t i) const { return recs_[i].k_after; }

  State pre_state(std::size_t i) const;
  State post_state(std::size_t i) const;
  TrajectoryEvent event(std::size_t i) const;

  // Right-continuous state at t in [0, horizon].
  State state_at(double t) const;

  // Index of the first event with time > t, i.e. events [0, idx) have
  // happened by time t.
  std::size_t events_through(double t) const;

  // Throws std::logic_error on any structural violation.
  void validate() const;

 private:
  struct Rec {
    double time;
    std::int32_t k_after;
    JumpType kind;
  };

  State reconstruct(std::ptrdiff_t idx, double t) const;

  State initial_;
  double horizon_ = 0.0;
  std::vector<Rec> recs_;
};

}  // namespace mfq

#endif
