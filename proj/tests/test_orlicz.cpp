#include <doctest.h>

#include <cmath>

#include "core/orlicz.hpp"
#include "core/util.hpp"

using namespace capillary;

TEST_CASE("power gauge evaluates value and derivatives") {
  GaugePtr p3 = make_power_gauge(3.0);
  CHECK(p3->value(2.0) == doctest::Approx(8.0));
  CHECK(p3->deriv(2.0) == doctest::Approx(12.0));
  CHECK(p3->deriv2(2.0) == doctest::Approx(12.0));
  CHECK(p3->value_at_one() == doctest::Approx(1.0));
  CHECK(p3->power_exponent().has_value());
  CHECK(*p3->power_exponent() == doctest::Approx(3.0));
}

TEST_CASE("power sum gauge evaluates value and derivatives") {
  GaugePtr g = make_power_sum_gauge({{0.5, 3.0}, {0.5, 4.0}});
  CHECK(g->value(1.0) == doctest::Approx(1.0));
  CHECK(g->value(2.0) == doctest::Approx(0.5 * 8 + 0.5 * 16));
  CHECK(g->deriv(2.0) == doctest::Approx(0.5 * 12 + 0.5 * 32));
  CHECK(g->deriv2(2.0) == doctest::Approx(0.5 * 12 + 0.5 * 48));
  CHECK(!g->power_exponent().has_value());
}

TEST_CASE("inverse inverts on the range") {
  for (GaugePtr g : {make_power_gauge(3.0), make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}})}) {
    for (double x : {0.25, 0.7, 1.0, 1.9, 6.0}) {
      CHECK(g->inverse(g->value(x)) == doctest::Approx(x).epsilon(1e-12));
    }
  }
  // The gauge used where phi(1) = 1 is required, via its normalization point.
  GaugePtr sum = make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}});
  double m = sum->inverse(1.0);
  CHECK(sum->value(m) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m < 1.0);
}

TEST_CASE("json specs round-trip through the registry") {
  nlohmann::json spec = {{"kind", "power"}, {"p", 3.0}};
  GaugePtr g = make_gauge(spec);
  CHECK(g->value(2.0) == doctest::Approx(8.0));
  CHECK(make_gauge(g->spec())->value(1.7) == doctest::Approx(g->value(1.7)));

  nlohmann::json sum_spec = {{"kind", "power_sum"}, {"terms", {{1.0, 3.0}, {1.0, 4.0}}}};
  GaugePtr sum = make_gauge(sum_spec);
  CHECK(sum->value(1.0) == doctest::Approx(2.0));
  CHECK(make_gauge(sum->spec())->value(0.6) == doctest::Approx(sum->value(0.6)));

  CHECK_THROWS_AS(make_gauge(nlohmann::json{{"kind", "unknown"}}), Error);
}

TEST_CASE("labels identify the gauge") {
  CHECK(make_power_gauge(3.0)->label() == "power:3");
  CHECK(!make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}})->label().empty());
}

TEST_CASE("construction rejects out-of-class parameters") {
  CHECK_THROWS_AS(make_power_gauge(0.5), Error);
  CHECK_THROWS_AS(make_power_sum_gauge({}), Error);
  CHECK_THROWS_AS(make_power_sum_gauge({{-1.0, 3.0}}), Error);
  CHECK_THROWS_AS(make_power_sum_gauge({{1.0, 0.5}}), Error);
}

TEST_CASE("membership depends on the growth exponent") {
  // x^3 grows exactly at degree n+1 for the 2-d cap and passes; x^2 passes
  // only for the 1-d cap.
  MembershipReport p3_d2 = validate_membership(*make_power_gauge(3.0), 2);
  CHECK(p3_d2.pass);
  CHECK(p3_d2.a2.pass);
  CHECK(p3_d2.a3.pass);

  MembershipReport p2_d2 = validate_membership(*make_power_gauge(2.0), 2);
  CHECK(!p2_d2.pass);
  CHECK(!p2_d2.a2.pass);

  MembershipReport p2_d1 = validate_membership(*make_power_gauge(2.0), 1);
  CHECK(p2_d1.pass);

  MembershipReport sum_d2 =
      validate_membership(*make_power_sum_gauge({{1.0, 3.0}, {1.0, 4.0}}), 2);
  CHECK(sum_d2.pass);
  CHECK(sum_d2.log_concave.pass);

  nlohmann::json j = sum_d2.to_json();
  CHECK(j["pass"].get<bool>());
  CHECK(j.contains("a1"));
  CHECK(j.contains("a2"));
  CHECK(j.contains("a3"));
}

TEST_CASE("linear growth fails the vanishing-derivative condition") {
  MembershipReport lin = validate_membership(*make_power_gauge(1.0), 1);
  CHECK(!lin.a1.pass);
  CHECK(!lin.pass);
}
