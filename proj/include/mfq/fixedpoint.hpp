#ifndef MFQ_FIXEDPOINT_HPP
#define MFQ_FIXEDPOINT_HPP

#include <vector>

#include "mfq/kernel.hpp"
#include "mfq/simulate.hpp"

namespace mfq {

// Picard iteration on measure flows: each iterate simulates the process under
// the current flow and records the resulting marginal flow.
struct PicardRun {
  std::vector<MeasureFlow> flows;   // iterates, flows[0] == the initial flow
  std::vector<double> distances;    // d_m = sup-over-grid tv proxy between iterates m, m+1
  double contraction_estimate = 0.0;  // max over m >= 1 of d_{m+1}/d_m
};

// Sup over the grid of the first flow of the tv proxy between the flows.
double flow_sup_distance(const MeasureFlow& a, const MeasureFlow& b,
                         const CellScheme& partition);

PicardRun picard_iterate(const Kernel& kernel, const MeasureFlow& initial_flow,
                         std::size_t iterations, const SimConfig& sim,
                         bool common_random_numbers = false);

// Series bound on the contraction constant, evaluated at unit horizon;
// returns 0.9 * min(1, 1/(2C)).
double choose_horizon(const KernelBounds& bounds);

// Sup tv proxy between two independent simulations of the same flow; the
// statistical resolution limit of the iteration distances.
double flow_noise_floor(const Kernel& kernel, const MeasureFlow& flow,
                        const SimConfig& sim, const CellScheme& partition);

struct UniquenessReport {
  std::vector<double> window_distances;  // terminal-flow distance per window
  double noise_floor = 0.0;
  bool merged = false;
};

// Window-by-window merging of two Picard iterations started from distinct
// flows over the same initial measure.
UniquenessReport uniqueness_experiment(const Kernel& kernel, const MeasureFlow& flowA,
                                       const MeasureFlow& flowB, const SimConfig& sim,
                                       std::size_t windows, std::size_t iters_per_window);

}  // namespace mfq

#endif
