#ifndef MFQ_TESTS_BIRTH_DEATH_HPP
#define MFQ_TESTS_BIRTH_DEATH_HPP

// Truncated birth-death chain on {0, ..., kmax} with constant birth rate a
// and death rate b (from k >= 1). Transient distributions via uniformization;
// used as an independent oracle for constant-kernel simulations, where the
// customer count decouples from the clock coordinates.

#include <cmath>
#include <cstddef>
#include <vector>

namespace bd {

// p(t) given p(0) = p0, to absolute accuracy ~tail_tol.
inline std::vector<double> distribution(double a, double b, int kmax,
                                        const std::vector<double>& p0, double t,
                                        double tail_tol = 1e-13) {
  const std::size_t dim = static_cast<std::size_t>(kmax) + 1;
  std::vector<double> init = p0;
  init.resize(dim, 0.0);
  const double rate = a + b;  // uniformization rate
  if (rate <= 0.0 || t <= 0.0) return init;

  // one step of the uniformized DTMC, v' = P^T v
  auto step = [&](const std::vector<double>& v) {
    std::vector<double> out(dim, 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      const double pa = k + 1 < dim ? a / rate : 0.0;       // birth (absorbing cap)
      const double pb = k >= 1 ? b / rate : 0.0;            // death
      out[k] += v[k] * (1.0 - pa - pb);
      if (k + 1 < dim) out[k + 1] += v[k] * pa;
      if (k >= 1) out[k - 1] += v[k] * pb;
    }
    return out;
  };

  std::vector<double> acc(dim, 0.0), v = init;
  double pois = std::exp(-rate * t);  // Poisson(rate*t) pmf at n
  double covered = 0.0;
  for (std::size_t n = 0;; ++n) {
    for (std::size_t k = 0; k < dim; ++k) acc[k] += pois * v[k];
    covered += pois;
    if (1.0 - covered < tail_tol) break;
    if (n > 100000) break;
    v = step(v);
    pois *= rate * t / static_cast<double>(n + 1);
  }
  // distribute the truncated tail proportionally (it is below tail_tol)
  for (std::size_t k = 0; k < dim; ++k) acc[k] /= covered;
  return acc;
}

inline double expectation(const std::vector<double>& p,
                          const std::vector<double>& g) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * g[k];
  return acc;
}

// Stationary law of the untruncated M/M/1 chain, P(k) = (1 - r) r^k, r = a/b.
inline std::vector<double> mm1_stationary(double a, double b, int kmax) {
  const double r = a / b;
  std::vector<double> p(static_cast<std::size_t>(kmax) + 1);
  for (std::size_t k = 0; k < p.size(); ++k) p[k] = (1.0 - r) * std::pow(r, k);
  return p;
}

}  // namespace bd

#endif
