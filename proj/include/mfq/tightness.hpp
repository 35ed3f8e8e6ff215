#ifndef MFQ_TIGHTNESS_HPP
#define MFQ_TIGHTNESS_HPP

#include <vector>

#include "mfq/kernel.hpp"
#include "mfq/simulate.hpp"

namespace mfq {

// Diagnostics for the two conditions of Skorokhod's lemma, evaluated over a
// family of frozen-delay systems (one row per scheme step h).
struct TightnessTable {
  std::vector<double> scheme_h;            // row labels
  std::vector<double> control;             // column labels: c, or window width
  std::vector<std::vector<double>> value;  // value[row][col]
  std::vector<std::vector<double>> se;     // Monte-Carlo standard error of each entry
};

// Per (h, c): sup over the recorded grid of the empirical probability that
// |X_t| = k + x + y exceeds c.
TightnessTable sko1_diagnostic(const std::vector<ParticleSystem>& systems, double T,
                               const std::vector<double>& c_grid);

// Per (h, window width w): max over grid pairs |t - s| <= w of the empirical
// probability that rho(X_t, X_s) > eps.
TightnessTable sko2_diagnostic(const std::vector<ParticleSystem>& systems, double T,
                               const std::vector<double>& window_grid, double eps);

// Threshold c = c0 + 2T + q at which the sko1 column is expected to be small:
// c0 bounds the initial states, drift contributes at most 2T, and q is the
// 0.995 quantile of the Poisson bound on the number of jumps up.
double derived_sko1_threshold(const ParticleSystem& system, const KernelBounds& bounds,
                              double T);

double poisson_quantile(double rate, double p);
double poisson_upper_tail(double rate, int n);  // P(Poisson(rate) >= n)

}  // namespace mfq

#endif
