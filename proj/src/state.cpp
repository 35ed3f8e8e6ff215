#include "mfq/state.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mfq {

Trajectory::Trajectory(State initial, double horizon)
    : initial_(initial), horizon_(horizon) {
  if (!is_canonical(initial)) throw std::invalid_argument("Trajectory: initial state not canonical");
  if (horizon <= 0.0) throw std::invalid_argument("Trajectory: horizon must be positive");
}

void Trajectory::append(double time, JumpType kind) {
  const double last = recs_.empty() ? 0.0 : recs_.back().time;
  if (!(time > last)) throw std::invalid_argument("Trajectory::append: event times must be strictly increasing");
  if (time > horizon_) throw std::invalid_argument("Trajectory::append: event beyond horizon");
  int k = recs_.empty() ? initial_.k : recs_.back().k_after;
  if (kind == JumpType::Service && k < 1)
    throw std::domain_error("Trajectory::append: service jump from empty system");
  k += kind == JumpType::Arrival ? 1 : -1;
  recs_.push_back(Rec{time, k, kind});
}

void Trajectory::extend_horizon(double horizon) {
  if (horizon < horizon_) throw std::invalid_argument("Trajectory::extend_horizon: cannot shrink");
  horizon_ = horizon;
}

// State at time t given that events [0, idx] have happened (idx == -1 means
// none). k is read off the last event; x is measured from the last arrival;
// y is measured from the last reset of the service clock, which is either a
// service completion or an arrival into an empty system.
State Trajectory::reconstruct(std::ptrdiff_t idx, double t) const {
  int k = idx < 0 ? initial_.k : recs_[static_cast<std::size_t>(idx)].k_after;

  double x;
  std::ptrdiff_t i = idx;
  for (; i >= 0; --i) {
    if (recs_[static_cast<std::size_t>(i)].kind == JumpType::Arrival) break;
  }
  x = i >= 0 ? t - recs_[static_cast<std::size_t>(i)].time : initial_.x + t;

  double y = 0.0;
  if (k > 0) {
    std::ptrdiff_t j = idx;
    for (; j >= 0; --j) {
      const Rec& r = recs_[static_cast<std::size_t>(j)];
      if (r.kind == JumpType::Service || (r.kind == JumpType::Arrival && r.k_after == 1)) break;
    }
    y = j >= 0 ? t - recs_[static_cast<std::size_t>(j)].time : initial_.y + t;
  }
  return State{k, x, y};
}

std::size_t Trajectory::events_through(double t) const {
  auto it = std::upper_bound(recs_.begin(), recs_.end(), t,
                             [](double v, const Rec& r) { return v < r.time; });
  return static_cast<std::size_t>(it - recs_.begin());
}

State Trajectory::state_at(double t) const {
  if (t < 0.0 || t > horizon_) throw std::out_of_range("Trajectory::state_at: time outside [0, horizon]");
  const std::ptrdiff_t idx = static_cast<std::ptrdiff_t>(events_through(t)) - 1;
  return reconstruct(idx, t);
}

State Trajectory::pre_state(std::size_t i) const {
  return reconstruct(static_cast<std::ptrdiff_t>(i) - 1, recs_[i].time);
}

State Trajectory::post_state(std::size_t i) const {
  return reconstruct(static_cast<std::ptrdiff_t>(i), recs_[i].time);
}

TrajectoryEvent Trajectory::event(std::size_t i) const {
  return TrajectoryEvent{recs_[i].time, recs_[i].kind, pre_state(i), post_state(i)};
}

void Trajectory::validate() const {
  if (!is_canonical(initial_)) throw std::logic_error("trajectory: initial state not canonical");
  if (horizon_ <= 0.0) throw std::logic_error("trajectory: nonpositive horizon");
  double last = 0.0;
  State cur = initial_;
  for (std::size_t i = 0; i < recs_.size(); ++i) {
    const Rec& r = recs_[i];
    if (!(r.time > last) || r.time > horizon_)
      throw std::logic_error("trajectory: event time out of order or beyond horizon");
    const State pre = pre_state(i);
    if (!is_canonical(pre)) throw std::logic_error("trajectory: pre-state not canonical");
    if (pre.k != cur.k) throw std::logic_error("trajectory: inconsistent customer count");
    // pre-state must equal the previous post-state drifted over the gap
    const State drifted = drift(cur, r.time - last);
    if (std::abs(drifted.x - pre.x) > 1e-9 || std::abs(drifted.y - pre.y) > 1e-9)
      throw std::logic_error("trajectory: pre-state inconsistent with drift");
    if (r.kind == JumpType::Service && pre.k < 1)
      throw std::logic_error("trajectory: service jump from empty system");
    const State post = apply_jump(pre, r.kind);
    if (post.k != r.k_after) throw std::logic_error("trajectory: inconsistent post-jump count");
    const State stored = post_state(i);
    if (!(stored == post)) throw std::logic_error("trajectory: post-state does not match jump map");
    last = r.time;
    cur = post;
  }
}

}  // namespace mfq
