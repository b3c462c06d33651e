#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace capillary {

// A gauge function phi: [0, inf) -> [0, inf) used to weight the capillary
// measure. Instances are immutable; share them freely.
class OrliczGauge {
public:
  virtual ~OrliczGauge() = default;

  virtual double value(double x) const = 0;
  virtual double deriv(double x) const = 0;
  virtual double deriv2(double x) const = 0;
  virtual std::string label() const = 0;
  virtual nlohmann::json spec() const = 0;

  // Exponent if this gauge is a pure power c*x^p with c == 1, else nullopt.
  virtual std::optional<double> power_exponent() const { return std::nullopt; }

  double value_at_one() const { return value(1.0); }

  // Inverse on [0, sup phi). Monotonicity makes this well defined.
  double inverse(double y) const;
};

using GaugePtr = std::shared_ptr<const OrliczGauge>;

GaugePtr make_power_gauge(double p);
// sum of c_k * x^(p_k), all c_k > 0, p_k >= 1
GaugePtr make_power_sum_gauge(const std::vector<std::pair<double, double>>& terms);

// Registry keyed by the "kind" field of a JSON spec, e.g.
//   {"kind": "power", "p": 3}
//   {"kind": "power_sum", "terms": [[0.5, 3], [0.5, 4]]}
// Additional kinds can be installed at runtime.
using GaugeFactory = std::function<GaugePtr(const nlohmann::json&)>;
void register_gauge_kind(const std::string& kind, GaugeFactory factory);
GaugePtr make_gauge(const nlohmann::json& spec);

// One checked property of a membership report.
struct PropertyCheck {
  bool pass = false;
  bool analytic = false;      // proved from the gauge's structure vs sampled
  double worst_margin = 0.0;  // most adverse sampled value (sign convention per property)
  double worst_x = 0.0;
  std::string note;
};

// Report of the admissible-class membership test for dimension n:
// phi(0) = 0, strictly increasing, convex, log-concave, plus
//   A1: phi'(x) -> 0 as x -> 0+
//   A2: liminf phi(x)/x^(n+1) > 0 as x -> inf
//   A3: x phi'(x) >= phi(x) on (0, inf)
// Sampled checks are evidence, not proof; `analytic` marks the ones that are.
struct MembershipReport {
  bool pass = false;
  int dim = 0;
  std::string label;
  PropertyCheck zero_at_zero, increasing, convex, log_concave, a1, a2, a3;
  nlohmann::json to_json() const;
};

MembershipReport validate_membership(const OrliczGauge& phi, int dim);

}  // namespace capillary
