#ifndef MFQ_MEASURE_HPP
#define MFQ_MEASURE_HPP

#include <map>
#include <tuple>
#include <vector>

#include "mfq/state.hpp"

namespace mfq {

// Partition of the hybrid state space used by the total-variation proxy and
// by flow serialization: k is kept exact, x and y are binned into cells of
// the given width.
struct CellScheme {
  double width = 0.25;
};

struct Cell {
  int k;
  long ix;
  long iy;
  auto operator<=>(const Cell&) const = default;
};

// Finite atomic measure with weights summing to one.
class EmpiricalMeasure {
 public:
  using Atom = std::pair<State, double>;

  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<Atom> atoms);
  static EmpiricalMeasure point_mass(const State& s);
  static EmpiricalMeasure uniform(std::vector<State> states);

  const std::vector<Atom>& atoms() const { return atoms_; }
  std::size_t size() const { return atoms_.size(); }

  // E[min(k, cap)/cap] under the measure; the only statistic the kernel
  // catalog needs from the third variable. Cached per cap; call once before
  // sharing the measure across threads.
  double k_capped_mean(int cap) const;

  std::map<Cell, double> binned(const CellScheme& scheme) const;

  // Merge atoms that land in the same cell, placing the merged atom at the
  // cell center (k is preserved exactly).
  EmpiricalMeasure compressed(const CellScheme& scheme) const;

 private:
  std::vector<Atom> atoms_;
  mutable std::map<int, double> stat_cache_;
};

Cell cell_of(const State& s, const CellScheme& scheme);

// Sum over cells of |mu1(cell) - mu2(cell)|; total-variation with the mass-2
// normalization, coarsened to the partition. Exact TV for measures whose
// atoms are separated by the partition.
double tv_distance_proxy(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         const CellScheme& scheme);

inline double tv_half(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                      const CellScheme& scheme) {
  return 0.5 * tv_distance_proxy(a, b, scheme);
}

// Time-indexed family of empirical measures on a strictly increasing grid
// with grid.front() == 0; piecewise-constant, right-continuous in time.
class MeasureFlow {
 public:
  MeasureFlow() = default;
  MeasureFlow(std::vector<double> grid, std::vector<EmpiricalMeasure> measures);

  static MeasureFlow constant(const EmpiricalMeasure& mu, double horizon,
                              double grid_step);

  const std::vector<double>& grid() const { return grid_; }
  const std::vector<EmpiricalMeasure>& measures() const { return measures_; }
  double horizon() const { return grid_.back(); }

  // Index of the largest grid point <= t.
  std::size_t index_at(double t) const;
  const EmpiricalMeasure& at(double t) const;

 private:
  std::vector<double> grid_;
  std::vector<EmpiricalMeasure> measures_;
};

inline const EmpiricalMeasure& flow_at(const MeasureFlow& flow, double t) {
  return flow.at(t);
}

}  // namespace mfq

#endif
