#ifndef MFQ_GIRSANOV_HPP
#define MFQ_GIRSANOV_HPP

#include <vector>

#include "mfq/generator.hpp"
#include "mfq/kernel.hpp"
#include "mfq/simulate.hpp"

namespace mfq {

// Log Radon-Nikodym density of the path law induced by flow2 against the one
// induced by flow1, along a single trajectory: sign-matched intensity ratios
// at the jumps, evaluated at the pre-jump state, plus the exponential
// correction -integral of the difference of total intensities.
struct PathDensity {
  double log_rho = 0.0;
  std::vector<double> jump_terms;
  double integral_term = 0.0;
};

PathDensity log_density(const Trajectory& traj, const Kernel& kernel,
                        const MeasureFlow& flow1, const MeasureFlow& flow2,
                        double quad_step = 0.0);

// Monte-Carlo mean of rho_T over a system simulated under flow1 dynamics;
// contract |mean - 1| <= 3 se.
MCStat normalization_check(const ParticleSystem& system, const Kernel& kernel,
                           const MeasureFlow& flow1, const MeasureFlow& flow2,
                           double quad_step = 0.0);

// Path-law total-variation estimator 2 - 2 E(rho_T ^ 1) under flow1.
MCStat psi_estimate(const ParticleSystem& system, const Kernel& kernel,
                    const MeasureFlow& flow1, const MeasureFlow& flow2,
                    double quad_step = 0.0);

struct MarginalTvResult {
  double phi = 0.0;       // tv proxy between the two empirical marginals at t
  double psi = 0.0;       // path-law estimate, dominates phi
  double psi_se = 0.0;
  double phi_floor = 0.0;  // half-sample estimate of the sampling noise in phi
  double combined_se = 0.0;
};

MarginalTvResult marginal_tv_check(const ParticleSystem& system1,
                                   const ParticleSystem& system2, const Kernel& kernel,
                                   const MeasureFlow& flow1, const MeasureFlow& flow2,
                                   double t, const CellScheme& partition,
                                   double quad_step = 0.0);

EmpiricalMeasure empirical_marginal(const std::vector<Trajectory>& trajectories, double t);

}  // namespace mfq

#endif
