#include "mfq/tightness.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <variant>

namespace mfq {

namespace {

double scheme_h_of(const ParticleSystem& sys) {
  if (const auto* fd = std::get_if<FrozenDelayMode>(&sys.config.mode)) return fd->h;
  return 0.0;  // exact (undelayed) modes enter the family with label 0
}

double binom_se(double p, std::size_t n) {
  return std::sqrt(std::max(p * (1.0 - p), 0.0) / static_cast<double>(n));
}

}  // namespace

TightnessTable sko1_diagnostic(const std::vector<ParticleSystem>& systems, double T,
                               const std::vector<double>& c_grid) {
  if (systems.empty()) throw std::invalid_argument("sko1_diagnostic: no systems");
  TightnessTable table;
  table.control = c_grid;
  for (const auto& sys : systems) {
    if (std::abs(sys.config.horizon - T) > 1e-12)
      throw std::invalid_argument("sko1_diagnostic: systems must share the horizon");
    table.scheme_h.push_back(scheme_h_of(sys));
    const std::size_t n = sys.trajectories.size();

    // state norms per particle per grid time
    const auto& grid = sys.flow.grid();
    std::vector<double> row(c_grid.size(), 0.0), row_se(c_grid.size(), 0.0);
    std::vector<double> norms(n);
    for (double t : grid) {
      for (std::size_t i = 0; i < n; ++i)
        norms[i] = state_norm(sys.trajectories[i].state_at(t));
      for (std::size_t ci = 0; ci < c_grid.size(); ++ci) {
        std::size_t exceed = 0;
        for (double v : norms)
          if (v > c_grid[ci]) ++exceed;
        const double p = static_cast<double>(exceed) / static_cast<double>(n);
        if (p > row[ci]) {
          row[ci] = p;
          row_se[ci] = binom_se(p, n);
        }
      }
    }
    table.value.push_back(std::move(row));
    table.se.push_back(std::move(row_se));
  }
  return table;
}

TightnessTable sko2_diagnostic(const std::vector<ParticleSystem>& systems, double T,
                               const std::vector<double>& window_grid, double eps) {
  if (systems.empty()) throw std::invalid_argument("sko2_diagnostic: no systems");
  if (!(eps > 0.0)) throw std::invalid_argument("sko2_diagnostic: eps must be positive");
  TightnessTable table;
  table.control = window_grid;
  for (const auto& sys : systems) {
    if (std::abs(sys.config.horizon - T) > 1e-12)
      throw std::invalid_argument("sko2_diagnostic: systems must share the horizon");
    table.scheme_h.push_back(scheme_h_of(sys));
    const std::size_t n = sys.trajectories.size();
    const auto& grid = sys.flow.grid();

    // states per particle per grid time
    std::vector<std::vector<State>> states(grid.size(), std::vector<State>(n));
    for (std::size_t gi = 0; gi < grid.size(); ++gi)
      for (std::size_t i = 0; i < n; ++i)
        states[gi][i] = sys.trajectories[i].state_at(grid[gi]);

    std::vector<double> row(window_grid.size(), 0.0), row_se(window_grid.size(), 0.0);
    for (std::size_t wi = 0; wi < window_grid.size(); ++wi) {
      const double w = window_grid[wi];
      for (std::size_t a = 0; a < grid.size(); ++a) {
        for (std::size_t b = a + 1; b < grid.size(); ++b) {
          if (grid[b] - grid[a] > w + 1e-12) break;
          std::size_t exceed = 0;
          for (std::size_t i = 0; i < n; ++i)
            if (state_distance(states[a][i], states[b][i]) > eps) ++exceed;
          const double p = static_cast<double>(exceed) / static_cast<double>(n);
          if (p > row[wi]) {
            row[wi] = p;
            row_se[wi] = binom_se(p, n);
          }
        }
      }
    }
    table.value.push_back(std::move(row));
    table.se.push_back(std::move(row_se));
  }
  return table;
}

double poisson_upper_tail(double rate, int n) {
  // P(Poisson(rate) >= n)
  if (n <= 0) return 1.0;
  double term = std::exp(-rate);
  double cdf = term;
  for (int j = 1; j < n; ++j) {
    term *= rate / static_cast<double>(j);
    cdf += term;
  }
  return std::max(0.0, 1.0 - cdf);
}

double poisson_quantile(double rate, double p) {
  double term = std::exp(-rate);
  double cdf = term;
  int q = 0;
  while (cdf < p && q < 100000000) {
    ++q;
    term *= rate / static_cast<double>(q);
    cdf += term;
  }
  return static_cast<double>(q);
}

double derived_sko1_threshold(const ParticleSystem& system, const KernelBounds& bounds,
                              double T) {
  double c0 = 0.0;
  if (const auto* s = std::get_if<State>(&system.config.initial)) {
    c0 = state_norm(*s);
  } else {
    for (const auto& [st, w] : std::get<EmpiricalMeasure>(system.config.initial).atoms())
      c0 = std::max(c0, state_norm(st));
  }
  return c0 + 2.0 * T + poisson_quantile(bounds.lambda_bar * T, 0.995);
}

}  // namespace mfq
