#ifndef MFQ_KERNEL_HPP
#define MFQ_KERNEL_HPP

#include <map>
#include <span>
#include <string>
#include <vector>

#include "mfq/measure.hpp"
#include "mfq/state.hpp"

namespace mfq {

// Sup/inf bounds of a kernel. lambda_bar is the per-side sup norm, total_bar
// bounds the sum of both sides, lambda_underbar is the infimum away from the
// empty-system service case (zero allowed in existence-only mode), and K is
// the Lipschitz constant of ln on [lambda_underbar, lambda_bar].
struct KernelBounds {
  double lambda_bar = 0.0;
  double lambda_underbar = 0.0;
  double total_bar = 0.0;
  double K = 0.0;

  bool uniqueness_mode() const { return lambda_underbar > 0.0; }
};

// One entry of the built-in kernel catalog. Every catalog kernel has the form
//   lambda_plus(t, X, Y)  = base_up(X)   + coef_up   * min(k(Y), cap)/cap
//   lambda_minus(t, X, Y) = base_down(X) + coef_down * min(k(Y), cap)/cap
// with the service side forced to zero when k(X) == 0. Sums of catalog
// entries stay in the same family.
struct KernelComponent {
  enum class Type { Const, MeanFieldQueue, AgeService };
  Type type = Type::Const;
  std::map<std::string, double> params;
};

class Kernel {
 public:
  struct Interaction {
    int cap;
    double coef_up;
    double coef_down;
  };

  Kernel() = default;
  explicit Kernel(std::vector<KernelComponent> components);

  // "const", "mfqueue", "age", or sums joined with '+'. Parameter keys:
  //   const:   a, b
  //   mfqueue: a0, a1, b0, b1, kmax
  //   age:     a0, b0, b1
  // For sums the i-th summand reads keys prefixed "<i>." (1-based), e.g.
  // "const+age" with {1.a, 1.b, 2.a0, 2.b0, 2.b1}.
  static Kernel parse(const std::string& id, const std::map<std::string, double>& params);

  double pointwise(JumpType side, double t, const State& X, const State& Y) const;
  double mean_field(JumpType side, double t, const State& X, const EmpiricalMeasure& mu) const;
  double total_rate(double t, const State& X, const EmpiricalMeasure& mu) const;

  // Mean-field rate from precomputed interaction statistics, stats[i] =
  // E[min(k, interactions()[i].cap)/cap] under the measure. Hot path of the
  // simulator.
  double mean_field_stats(JumpType side, double t, const State& X,
                          std::span<const double> stats) const;

  // State-dependent part, excluding the measure interaction.
  double base(JumpType side, double t, const State& X) const;

  const std::vector<Interaction>& interactions() const { return interactions_; }
  std::vector<double> stats_of(const EmpiricalMeasure& mu) const;

  const KernelBounds& bounds() const { return bounds_; }
  const std::vector<KernelComponent>& components() const { return components_; }
  std::string id() const;
  std::map<std::string, double> params() const;

 private:
  std::vector<KernelComponent> components_;
  std::vector<Interaction> interactions_;
  KernelBounds bounds_;
};

}  // namespace mfq

#endif
