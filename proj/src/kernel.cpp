#include "mfq/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace mfq {

namespace {

double get_param(const std::map<std::string, double>& p, const std::string& key) {
  auto it = p.find(key);
  if (it == p.end()) throw std::invalid_argument("kernel: missing parameter " + key);
  if (it->second < 0.0) throw std::invalid_argument("kernel: parameter " + key + " must be >= 0");
  return it->second;
}

const char* type_name(KernelComponent::Type t) {
  switch (t) {
    case KernelComponent::Type::Const: return "const";
    case KernelComponent::Type::MeanFieldQueue: return "mfqueue";
    case KernelComponent::Type::AgeService: return "age";
  }
  return "?";
}

}  // namespace

Kernel::Kernel(std::vector<KernelComponent> components) : components_(std::move(components)) {
  if (components_.empty()) throw std::invalid_argument("Kernel: no components");
  double sup_up = 0.0, sup_down = 0.0, inf_up = 0.0, inf_down = 0.0;
  for (const auto& c : components_) {
    const auto& p = c.params;
    switch (c.type) {
      case KernelComponent::Type::Const: {
        const double a = get_param(p, "a"), b = get_param(p, "b");
        sup_up += a;
        sup_down += b;
        inf_up += a;
        inf_down += b;
        break;
      }
      case KernelComponent::Type::MeanFieldQueue: {
        const double a0 = get_param(p, "a0"), a1 = get_param(p, "a1");
        const double b0 = get_param(p, "b0"), b1 = get_param(p, "b1");
        const double kmax = get_param(p, "kmax");
        if (kmax < 1.0 || kmax != std::floor(kmax))
          throw std::invalid_argument("kernel: kmax must be a positive integer");
        interactions_.push_back(Interaction{static_cast<int>(kmax), a1, b1});
        sup_up += a0 + a1;
        sup_down += b0 + b1;
        inf_up += a0;
        inf_down += b0;
        break;
      }
      case KernelComponent::Type::AgeService: {
        const double a0 = get_param(p, "a0");
        const double b0 = get_param(p, "b0"), b1 = get_param(p, "b1");
        sup_up += a0;
        sup_down += b0 + b1;
        inf_up += a0;
        inf_down += b0;
        break;
      }
    }
  }
  bounds_.lambda_bar = std::max(sup_up, sup_down);
  bounds_.lambda_underbar = std::min(inf_up, inf_down);
  bounds_.total_bar = sup_up + sup_down;
  bounds_.K = bounds_.lambda_underbar > 0.0 ? 1.0 / bounds_.lambda_underbar
                                            : std::numeric_limits<double>::infinity();
}

Kernel Kernel::parse(const std::string& id, const std::map<std::string, double>& params) {
  std::vector<std::string> names;
  std::stringstream ss(id);
  std::string tok;
  while (std::getline(ss, tok, '+'))
    if (!tok.empty()) names.push_back(tok);
  if (names.empty()) throw std::invalid_argument("kernel: empty id");

  std::vector<KernelComponent> comps;
  for (std::size_t i = 0; i < names.size(); ++i) {
    KernelComponent c;
    if (names[i] == "const")
      c.type = KernelComponent::Type::Const;
    else if (names[i] == "mfqueue")
      c.type = KernelComponent::Type::MeanFieldQueue;
    else if (names[i] == "age")
      c.type = KernelComponent::Type::AgeService;
    else
      throw std::invalid_argument("kernel: unknown catalog id " + names[i]);
    const std::string prefix =
        names.size() > 1 ? std::to_string(i + 1) + "." : std::string{};
    for (const auto& [key, value] : params) {
      if (names.size() == 1) {
        c.params[key] = value;
      } else if (key.rfind(prefix, 0) == 0) {
        c.params[key.substr(prefix.size())] = value;
      }
    }
    comps.push_back(std::move(c));
  }
  return Kernel(std::move(comps));
}

double Kernel::base(JumpType side, double t, const State& X) const {
  (void)t;  // catalog kernels are time-homogeneous
  if (side == JumpType::Service && X.k == 0) return 0.0;
  double acc = 0.0;
  for (const auto& c : components_) {
    const auto& p = c.params;
    switch (c.type) {
      case KernelComponent::Type::Const:
        acc += side == JumpType::Arrival ? p.at("a") : p.at("b");
        break;
      case KernelComponent::Type::MeanFieldQueue:
        acc += side == JumpType::Arrival ? p.at("a0") : p.at("b0");
        break;
      case KernelComponent::Type::AgeService:
        acc += side == JumpType::Arrival ? p.at("a0")
                                         : p.at("b0") + p.at("b1") * (1.0 - std::exp(-X.y));
        break;
    }
  }
  return acc;
}

double Kernel::pointwise(JumpType side, double t, const State& X, const State& Y) const {
  if (side == JumpType::Service && X.k == 0) return 0.0;  // (A4)
  double acc = base(side, t, X);
  for (const auto& in : interactions_) {
    const double coef = side == JumpType::Arrival ? in.coef_up : in.coef_down;
    acc += coef * static_cast<double>(std::min(Y.k, in.cap)) / static_cast<double>(in.cap);
  }
  return acc;
}

double Kernel::mean_field(JumpType side, double t, const State& X,
                          const EmpiricalMeasure& mu) const {
  if (side == JumpType::Service && X.k == 0) return 0.0;
  double acc = base(side, t, X);
  for (const auto& in : interactions_) {
    const double coef = side == JumpType::Arrival ? in.coef_up : in.coef_down;
    acc += coef * mu.k_capped_mean(in.cap);
  }
  return acc;
}

double Kernel::mean_field_stats(JumpType side, double t, const State& X,
                                std::span<const double> stats) const {
  if (side == JumpType::Service && X.k == 0) return 0.0;
  double acc = base(side, t, X);
  for (std::size_t i = 0; i < interactions_.size(); ++i) {
    const double coef = side == JumpType::Arrival ? interactions_[i].coef_up
                                                  : interactions_[i].coef_down;
    acc += coef * stats[i];
  }
  return acc;
}

double Kernel::total_rate(double t, const State& X, const EmpiricalMeasure& mu) const {
  return mean_field(JumpType::Arrival, t, X, mu) + mean_field(JumpType::Service, t, X, mu);
}

std::vector<double> Kernel::stats_of(const EmpiricalMeasure& mu) const {
  std::vector<double> out;
  out.reserve(interactions_.size());
  for (const auto& in : interactions_) out.push_back(mu.k_capped_mean(in.cap));
  return out;
}

std::string Kernel::id() const {
  std::string out;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    if (i) out += '+';
    out += type_name(components_[i].type);
  }
  return out;
}

std::map<std::string, double> Kernel::params() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const std::string prefix =
        components_.size() > 1 ? std::to_string(i + 1) + "." : std::string{};
    for (const auto& [k, v] : components_[i].params) out[prefix + k] = v;
  }
  return out;
}

}  // namespace mfq
