#include "mfq/measure.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mfq {

EmpiricalMeasure::EmpiricalMeasure(std::vector<Atom> atoms) : atoms_(std::move(atoms)) {
  if (atoms_.empty()) throw std::invalid_argument("EmpiricalMeasure: no atoms");
  double total = 0.0;
  for (const auto& [s, w] : atoms_) {
    if (w < 0.0) throw std::invalid_argument("EmpiricalMeasure: negative weight");
    if (!is_canonical(s)) throw std::invalid_argument("EmpiricalMeasure: atom not canonical");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("EmpiricalMeasure: weights must sum to 1");
}

EmpiricalMeasure EmpiricalMeasure::point_mass(const State& s) {
  return EmpiricalMeasure({{s, 1.0}});
}

EmpiricalMeasure EmpiricalMeasure::uniform(std::vector<State> states) {
  if (states.empty()) throw std::invalid_argument("EmpiricalMeasure::uniform: empty");
  std::vector<Atom> atoms;
  atoms.reserve(states.size());
  const double w = 1.0 / static_cast<double>(states.size());
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    atoms.emplace_back(states[i], w);
    acc += w;
  }
  atoms.emplace_back(states.back(), 1.0 - acc);  // exact unit mass
  return EmpiricalMeasure(std::move(atoms));
}

double EmpiricalMeasure::k_capped_mean(int cap) const {
  if (cap < 1) throw std::invalid_argument("k_capped_mean: cap must be >= 1");
  auto it = stat_cache_.find(cap);
  if (it != stat_cache_.end()) return it->second;
  double acc = 0.0;
  for (const auto& [s, w] : atoms_)
    acc += w * static_cast<double>(std::min(s.k, cap)) / static_cast<double>(cap);
  stat_cache_.emplace(cap, acc);
  return acc;
}

Cell cell_of(const State& s, const CellScheme& scheme) {
  return Cell{s.k, static_cast<long>(std::floor(s.x / scheme.width)),
              static_cast<long>(std::floor(s.y / scheme.width))};
}

std::map<Cell, double> EmpiricalMeasure::binned(const CellScheme& scheme) const {
  std::map<Cell, double> out;
  for (const auto& [s, w] : atoms_) out[cell_of(s, scheme)] += w;
  return out;
}

EmpiricalMeasure EmpiricalMeasure::compressed(const CellScheme& scheme) const {
  auto bins = binned(scheme);
  std::vector<Atom> atoms;
  atoms.reserve(bins.size());
  for (const auto& [c, w] : bins) {
    State s{c.k, (static_cast<double>(c.ix) + 0.5) * scheme.width,
            c.k > 0 ? (static_cast<double>(c.iy) + 0.5) * scheme.width : 0.0};
    atoms.emplace_back(s, w);
  }
  // renormalize away accumulated rounding
  double total = 0.0;
  for (const auto& [s, w] : atoms) total += w;
  for (auto& [s, w] : atoms) w /= total;
  return EmpiricalMeasure(std::move(atoms));
}

double tv_distance_proxy(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                         const CellScheme& scheme) {
  auto ba = a.binned(scheme);
  auto bb = b.binned(scheme);
  double tv = 0.0;
  auto ia = ba.begin();
  auto ib = bb.begin();
  while (ia != ba.end() || ib != bb.end()) {
    if (ib == bb.end() || (ia != ba.end() && ia->first < ib->first)) {
      tv += ia->second;
      ++ia;
    } else if (ia == ba.end() || ib->first < ia->first) {
      tv += ib->second;
      ++ib;
    } else {
      tv += std::abs(ia->second - ib->second);
      ++ia;
      ++ib;
    }
  }
  return tv;
}

MeasureFlow::MeasureFlow(std::vector<double> grid, std::vector<EmpiricalMeasure> measures)
    : grid_(std::move(grid)), measures_(std::move(measures)) {
  if (grid_.empty() || grid_.size() != measures_.size())
    throw std::invalid_argument("MeasureFlow: grid/measure length mismatch");
  if (grid_.front() != 0.0) throw std::invalid_argument("MeasureFlow: grid must start at 0");
  for (std::size_t i = 1; i < grid_.size(); ++i)
    if (!(grid_[i] > grid_[i - 1]))
      throw std::invalid_argument("MeasureFlow: grid must be strictly increasing");
}

MeasureFlow MeasureFlow::constant(const EmpiricalMeasure& mu, double horizon,
                                  double grid_step) {
  if (horizon <= 0.0 || grid_step <= 0.0)
    throw std::invalid_argument("MeasureFlow::constant: bad horizon or step");
  std::vector<double> grid;
  for (double t = 0.0; t < horizon - 1e-12; t += grid_step) grid.push_back(t);
  grid.push_back(horizon);
  std::vector<EmpiricalMeasure> ms(grid.size(), mu);
  return MeasureFlow(std::move(grid), std::move(ms));
}

std::size_t MeasureFlow::index_at(double t) const {
  if (t < 0.0 || t > grid_.back() + 1e-12)
    throw std::out_of_range("MeasureFlow: time outside [0, horizon]");
  auto it = std::upper_bound(grid_.begin(), grid_.end(), t);
  return static_cast<std::size_t>(it - grid_.begin()) - 1;
}

const EmpiricalMeasure& MeasureFlow::at(double t) const {
  return measures_[index_at(t)];
}

}  // namespace mfq
