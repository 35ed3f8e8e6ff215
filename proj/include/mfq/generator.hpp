#ifndef MFQ_GENERATOR_HPP
#define MFQ_GENERATOR_HPP

#include <string>
#include <vector>

#include "mfq/kernel.hpp"
#include "mfq/simulate.hpp"

namespace mfq {

// Catalog of test functions g(k, x, y) = phi(k) * exp(-alpha x - beta y),
// bounded with bounded partials in (x, y).
class TestFunction {
 public:
  enum class Phi { One, ExpNegK, Ramp, Bump };

  TestFunction(Phi phi, int k_param, double alpha, double beta);

  double eval(const State& s) const { return phi_of_k(s.k) * std::exp(-alpha_ * s.x - beta_ * s.y); }
  double dx(const State& s) const { return -alpha_ * eval(s); }
  double dy(const State& s) const { return -beta_ * eval(s); }

  double phi_of_k(int k) const;
  double bound() const { return 1.0; }  // every catalog phi has |phi| <= 1
  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  std::string descriptor() const;

 private:
  Phi phi_;
  int k_param_;
  double alpha_;
  double beta_;
};

// Weighted Dynkin increment: weight functions evaluated at fixed times, all
// <= t_lo, times the increment of g over [t_lo, t_hi]. An empty weight list
// is the plain Dynkin residual.
struct ObservableProduct {
  std::vector<std::pair<double, TestFunction>> weights;
  double t_lo = 0.0;
  double t_hi = 0.0;
};

// Pointwise generator L(t, X', Y) applied to g at X.
double apply_pointwise_generator(const Kernel& kernel, double t, const State& Xp,
                                 const State& Y, const TestFunction& g, const State& X);

// Mean-field generator L[t, X', mu] applied to g at X; equals the mu-average
// of the pointwise form.
double apply_generator(const Kernel& kernel, double t, const State& Xp,
                       const EmpiricalMeasure& mu, const TestFunction& g, const State& X);

struct MCStat {
  double mean = 0.0;
  double se = 0.0;
  std::size_t n = 0;
};

struct DynkinOptions {
  double quad_step = 0.0;  // 0 -> the system's flow grid step
  // Use the delayed state/measure inside L for frozen-delay systems (the
  // finite-h identity); false evaluates L at the undelayed arguments, which
  // is only exact in the h -> 0 limit.
  bool delayed_arguments = true;
};

// Per-particle Monte-Carlo residuals of Dynkin's identity over [t1, t2].
std::vector<double> dynkin_residuals(const ParticleSystem& system, const Kernel& kernel,
                                     const TestFunction& g, double t1, double t2,
                                     const DynkinOptions& options = {});

MCStat dynkin_residual(const ParticleSystem& system, const Kernel& kernel,
                       const TestFunction& g, double t1, double t2,
                       const DynkinOptions& options = {});

MCStat martingale_test(const ParticleSystem& system, const Kernel& kernel,
                       const TestFunction& g, const ObservableProduct& obs,
                       const DynkinOptions& options = {});

MCStat mc_stat(const std::vector<double>& samples);

}  // namespace mfq

#endif
