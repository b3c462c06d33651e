#include "orlicz.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "util.hpp"

namespace capillary {

namespace {

class PowerGauge final : public OrliczGauge {
public:
  explicit PowerGauge(double p) : p_(p) {
    if (!(p >= 1.0) || !std::isfinite(p))
      fail(ErrorCode::invalid_argument, "power gauge needs exponent p >= 1");
  }
  double value(double x) const override { return x == 0.0 ? 0.0 : std::pow(x, p_); }
  double deriv(double x) const override {
    if (x == 0.0) return p_ == 1.0 ? 1.0 : 0.0;
    return p_ * std::pow(x, p_ - 1.0);
  }
  double deriv2(double x) const override {
    if (p_ == 1.0) return 0.0;
    if (x == 0.0) return p_ == 2.0 ? 2.0 : 0.0;
    return p_ * (p_ - 1.0) * std::pow(x, p_ - 2.0);
  }
  std::string label() const override {
    std::ostringstream os;
    os << "power:" << p_;
    return os.str();
  }
  nlohmann::json spec() const override { return {{"kind", "power"}, {"p", p_}}; }
  std::optional<double> power_exponent() const override { return p_; }
  double p() const { return p_; }

private:
  double p_;
};

class PowerSumGauge final : public OrliczGauge {
public:
  explicit PowerSumGauge(std::vector<std::pair<double, double>> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) fail(ErrorCode::invalid_argument, "power_sum gauge needs at least one term");
    for (auto& [c, p] : terms_) {
      if (!(c > 0.0) || !std::isfinite(c))
        fail(ErrorCode::invalid_argument, "power_sum coefficients must be positive");
      if (!(p >= 1.0) || !std::isfinite(p))
        fail(ErrorCode::invalid_argument, "power_sum exponents must be >= 1");
    }
  }
  double value(double x) const override {
    double s = 0.0;
    for (auto& [c, p] : terms_) s += c * (x == 0.0 ? 0.0 : std::pow(x, p));
    return s;
  }
  double deriv(double x) const override {
    double s = 0.0;
    for (auto& [c, p] : terms_) {
      if (x == 0.0)
        s += p == 1.0 ? c : 0.0;
      else
        s += c * p * std::pow(x, p - 1.0);
    }
    return s;
  }
  double deriv2(double x) const override {
    double s = 0.0;
    for (auto& [c, p] : terms_) {
      if (p == 1.0) continue;
      if (x == 0.0)
        s += p == 2.0 ? 2.0 * c : 0.0;
      else
        s += c * p * (p - 1.0) * std::pow(x, p - 2.0);
    }
    return s;
  }
  std::string label() const override {
    std::ostringstream os;
    os << "power_sum:";
    for (size_t i = 0; i < terms_.size(); ++i) {
      if (i) os << "+";
      os << terms_[i].first << "x^" << terms_[i].second;
    }
    return os.str();
  }
  nlohmann::json spec() const override {
    nlohmann::json t = nlohmann::json::array();
    for (auto& [c, p] : terms_) t.push_back({c, p});
    return {{"kind", "power_sum"}, {"terms", t}};
  }
  double min_exponent() const {
    double m = terms_[0].second;
    for (auto& t : terms_) m = std::min(m, t.second);
    return m;
  }
  double max_exponent() const {
    double m = terms_[0].second;
    for (auto& t : terms_) m = std::max(m, t.second);
    return m;
  }

private:
  std::vector<std::pair<double, double>> terms_;
};

std::map<std::string, GaugeFactory>& registry() {
  static std::map<std::string, GaugeFactory> reg = {
      {"power",
       [](const nlohmann::json& spec) {
         if (!spec.contains("p") || !spec["p"].is_number())
           fail(ErrorCode::invalid_argument, "power gauge spec needs numeric field 'p'");
         return make_power_gauge(spec["p"].get<double>());
       }},
      {"power_sum",
       [](const nlohmann::json& spec) {
         if (!spec.contains("terms") || !spec["terms"].is_array())
           fail(ErrorCode::invalid_argument, "power_sum gauge spec needs array field 'terms'");
         std::vector<std::pair<double, double>> terms;
         for (const auto& t : spec["terms"]) {
           if (!t.is_array() || t.size() != 2 || !t[0].is_number() || !t[1].is_number())
             fail(ErrorCode::invalid_argument, "power_sum terms must be [coefficient, exponent] pairs");
           terms.emplace_back(t[0].get<double>(), t[1].get<double>());
         }
         return make_power_sum_gauge(terms);
       }},
  };
  return reg;
}

}  // namespace

GaugePtr make_power_gauge(double p) { return std::make_shared<PowerGauge>(p); }

GaugePtr make_power_sum_gauge(const std::vector<std::pair<double, double>>& terms) {
  return std::make_shared<PowerSumGauge>(terms);
}

void register_gauge_kind(const std::string& kind, GaugeFactory factory) {
  registry()[kind] = std::move(factory);
}

GaugePtr make_gauge(const nlohmann::json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec["kind"].is_string())
    fail(ErrorCode::invalid_argument, "gauge spec must be an object with a string 'kind'");
  auto it = registry().find(spec["kind"].get<std::string>());
  if (it == registry().end())
    fail(ErrorCode::invalid_argument, "unknown gauge kind '" + spec["kind"].get<std::string>() + "'");
  return it->second(spec);
}

double OrliczGauge::inverse(double y) const {
  if (!(y >= 0.0) || !std::isfinite(y))
    fail(ErrorCode::invalid_argument, "gauge inverse needs finite y >= 0");
  if (y == 0.0) return 0.0;
  if (auto p = power_exponent()) return std::pow(y, 1.0 / *p);

  double hi = 1.0;
  while (value(hi) < y) {
    hi *= 2.0;
    if (!std::isfinite(value(hi)) || hi > 1e154)
      fail(ErrorCode::out_of_range, "gauge inverse: y exceeds the attainable range");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    double mid = 0.5 * (lo + hi);
    (value(mid) < y ? lo : hi) = mid;
  }
  double x = 0.5 * (lo + hi);
  for (int it = 0; it < 8; ++it) {  // Newton polish
    double d = deriv(x);
    if (!(d > 0.0)) break;
    double step = (value(x) - y) / d;
    double next = x - step;
    if (next <= lo || next >= hi) break;
    x = next;
    if (std::abs(step) <= 1e-15 * x) break;
  }
  return x;
}

namespace {

// Log-spaced sample grid used by the non-analytic membership checks.
std::vector<double> sample_grid() {
  std::vector<double> g;
  for (double e = -6.0; e <= 6.0; e += 0.125) g.push_back(std::pow(10.0, e));
  return g;
}

bool finite_or_note(double v, PropertyCheck& chk) {
  if (std::isfinite(v)) return true;
  chk.pass = false;
  chk.note = "non-finite evaluation";
  return false;
}

nlohmann::json check_to_json(const PropertyCheck& c) {
  nlohmann::json j = {{"pass", c.pass},
                      {"mode", c.analytic ? "analytic" : "sampled"},
                      {"worst_margin", c.worst_margin},
                      {"worst_x", c.worst_x}};
  if (!c.note.empty()) j["note"] = c.note;
  return j;
}

}  // namespace

nlohmann::json MembershipReport::to_json() const {
  return {{"pass", pass},
          {"dim", dim},
          {"label", label},
          {"zero_at_zero", check_to_json(zero_at_zero)},
          {"increasing", check_to_json(increasing)},
          {"convex", check_to_json(convex)},
          {"log_concave", check_to_json(log_concave)},
          {"a1", check_to_json(a1)},
          {"a2", check_to_json(a2)},
          {"a3", check_to_json(a3)}};
}

MembershipReport validate_membership(const OrliczGauge& phi, int dim) {
  if (dim != 1 && dim != 2) fail(ErrorCode::invalid_argument, "membership check: dim must be 1 or 2");
  MembershipReport rep;
  rep.dim = dim;
  rep.label = phi.label();

  const auto grid = sample_grid();
  const double growth_exponent = dim + 1.0;

  // phi(0) = 0
  {
    double v0 = phi.value(0.0);
    rep.zero_at_zero.pass = std::isfinite(v0) && std::abs(v0) <= 1e-14;
    rep.zero_at_zero.worst_margin = v0;
    if (!std::isfinite(v0)) rep.zero_at_zero.note = "non-finite evaluation";
  }

  auto p_power = phi.power_exponent();
  const auto* psum = dynamic_cast<const PowerSumGauge*>(&phi);

  // strictly increasing: min phi'(x) > 0
  if (p_power || psum) {
    rep.increasing = {true, true, 0.0, 0.0, "positive-coefficient power terms"};
  } else {
    rep.increasing.pass = true;
    rep.increasing.worst_margin = std::numeric_limits<double>::infinity();
    for (double x : grid) {
      double d = phi.deriv(x);
      if (!finite_or_note(d, rep.increasing)) break;
      if (d < rep.increasing.worst_margin) {
        rep.increasing.worst_margin = d;
        rep.increasing.worst_x = x;
      }
      if (d <= 0.0) rep.increasing.pass = false;
    }
  }

  // convex: phi'' >= 0
  if (p_power || psum) {
    rep.convex = {true, true, 0.0, 0.0, "all exponents >= 1"};
  } else {
    rep.convex.pass = true;
    rep.convex.worst_margin = std::numeric_limits<double>::infinity();
    for (double x : grid) {
      double d2 = phi.deriv2(x);
      if (!finite_or_note(d2, rep.convex)) break;
      if (d2 < rep.convex.worst_margin) {
        rep.convex.worst_margin = d2;
        rep.convex.worst_x = x;
      }
      if (d2 < -1e-12 * std::max(1.0, std::abs(phi.value(x)))) rep.convex.pass = false;
    }
  }

  // log-concave: (phi'' phi - phi'^2) / phi^2 <= 0
  if (p_power) {
    rep.log_concave = {true, true, 0.0, 0.0, "pure power"};
  } else {
    rep.log_concave.pass = true;
    rep.log_concave.worst_margin = -std::numeric_limits<double>::infinity();
    for (double x : grid) {
      double v = phi.value(x), d = phi.deriv(x), d2 = phi.deriv2(x);
      if (!finite_or_note(v, rep.log_concave) || !finite_or_note(d, rep.log_concave) ||
          !finite_or_note(d2, rep.log_concave))
        break;
      if (v <= 0.0) continue;
      double curv = (d2 * v - d * d) / (v * v);
      if (curv > rep.log_concave.worst_margin) {
        rep.log_concave.worst_margin = curv;
        rep.log_concave.worst_x = x;
      }
      if (curv > 1e-10) rep.log_concave.pass = false;
    }
  }

  // A1: phi'(x) -> 0 as x -> 0+
  if (p_power) {
    rep.a1 = {*p_power > 1.0, true, phi.deriv(1e-8), 1e-8, ""};
  } else if (psum) {
    rep.a1 = {psum->min_exponent() > 1.0, true, phi.deriv(1e-8), 1e-8, ""};
  } else {
    double d_small = phi.deriv(1e-8);
    double d_smaller = phi.deriv(1e-10);
    rep.a1.worst_margin = d_small;
    rep.a1.worst_x = 1e-8;
    rep.a1.pass = std::isfinite(d_small) && std::isfinite(d_smaller) && d_small <= 1e-4 &&
                  d_smaller <= d_small;
    if (!std::isfinite(d_small) || !std::isfinite(d_smaller)) rep.a1.note = "non-finite evaluation";
  }

  // A2: liminf phi(x)/x^(n+1) > 0 as x -> inf
  if (p_power) {
    rep.a2 = {*p_power >= growth_exponent, true, 0.0, 0.0, ""};
  } else if (psum) {
    rep.a2 = {psum->max_exponent() >= growth_exponent, true, 0.0, 0.0, ""};
  } else {
    rep.a2.pass = true;
    rep.a2.note = "sampled evidence only";
    double prev_ratio = -1.0;
    for (double x : {1e2, 1e3, 1e4, 1e5, 1e6}) {
      double v = phi.value(x);
      if (!finite_or_note(v, rep.a2)) break;
      double ratio = v / std::pow(x, growth_exponent);
      rep.a2.worst_margin = ratio;
      rep.a2.worst_x = x;
      if (prev_ratio >= 0.0 && ratio < 0.5 * prev_ratio) rep.a2.pass = false;  // decaying
      if (ratio < 1e-9) rep.a2.pass = false;
      prev_ratio = ratio;
    }
  }

  // A3: x phi'(x) - phi(x) >= 0
  if (p_power || psum) {
    rep.a3 = {true, true, 0.0, 0.0, "all exponents >= 1"};
  } else {
    rep.a3.pass = true;
    rep.a3.worst_margin = std::numeric_limits<double>::infinity();
    for (double x : grid) {
      double m = x * phi.deriv(x) - phi.value(x);
      if (!finite_or_note(m, rep.a3)) break;
      double scale = std::max(1.0, std::abs(phi.value(x)));
      if (m / scale < rep.a3.worst_margin) {
        rep.a3.worst_margin = m / scale;
        rep.a3.worst_x = x;
      }
      if (m < -1e-12 * scale) rep.a3.pass = false;
    }
  }

  rep.pass = rep.zero_at_zero.pass && rep.increasing.pass && rep.convex.pass &&
             rep.log_concave.pass && rep.a1.pass && rep.a2.pass && rep.a3.pass;
  return rep;
}

}  // namespace capillary
