#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <vector>

#include "qrps/quantum.hpp"
#include "qrps/rng.hpp"

using namespace qrps;

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kRoot2Over2 = 0.70710678118654752440;
constexpr double kTsirelson = 2.0 * std::numbers::sqrt2;
}  // namespace

TEST_CASE("angles normalize into [0, 2pi)") {
  CHECK(MeasurementAngle(2.5 * kPi).radians() == Catch::Approx(0.5 * kPi).margin(1e-12));
  CHECK(MeasurementAngle::from_degrees(-90.0).radians() ==
        Catch::Approx(1.5 * kPi).margin(1e-12));
  CHECK(MeasurementAngle::from_degrees(360.0).radians() == Catch::Approx(0.0).margin(1e-12));
  CHECK_THROWS_AS(MeasurementAngle(std::nan("")), std::invalid_argument);
}

TEST_CASE("equal settings force opposite outcomes") {
  const MeasurementAngle theta(1.234);
  const OutcomePairDistribution d = singlet_joint(theta, theta);
  CHECK(d.entry(+1, +1) == 0.0);
  CHECK(d.entry(-1, -1) == 0.0);
  CHECK(d.entry(+1, -1) == Catch::Approx(0.5).margin(1e-15));
  CHECK(d.entry(-1, +1) == Catch::Approx(0.5).margin(1e-15));
}

TEST_CASE("opposite settings force equal outcomes") {
  const OutcomePairDistribution d =
      singlet_joint(MeasurementAngle(kPi), MeasurementAngle(0.0));
  CHECK(d.entry(+1, -1) == Catch::Approx(0.0).margin(1e-12));
  CHECK(d.entry(-1, +1) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("disagreement probability at 120 degrees is 1/4") {
  // By the closed form, P(a != b) = (1 + cos(delta)) / 2 = (1 - 1/2) / 2.
  const OutcomePairDistribution d =
      singlet_joint(MeasurementAngle(2.0 * kPi / 3.0), MeasurementAngle(0.0));
  CHECK(d.entry(+1, -1) + d.entry(-1, +1) == Catch::Approx(0.25).margin(1e-12));
}

TEST_CASE("correlation values") {
  CHECK(correlation(MeasurementAngle(0.7), MeasurementAngle(0.7)) ==
        Catch::Approx(-1.0).margin(1e-12));
  CHECK(correlation(MeasurementAngle(kPi / 2.0), MeasurementAngle(0.0)) ==
        Catch::Approx(0.0).margin(1e-12));
  CHECK(correlation(MeasurementAngle(kPi / 4.0), MeasurementAngle(0.0)) ==
        Catch::Approx(-kRoot2Over2).margin(1e-12));
}

TEST_CASE("correlation is consistent with the joint table") {
  RandomStream s(31, 0);
  for (int i = 0; i < 100; ++i) {
    const MeasurementAngle a(s.next_unit() * 2.0 * kPi);
    const MeasurementAngle b(s.next_unit() * 2.0 * kPi);
    const OutcomePairDistribution d = singlet_joint(a, b);
    double e = 0.0;
    for (int cell = 0; cell < kOutcomeCells; ++cell)
      e += outcome_a_of_cell(cell) * outcome_b_of_cell(cell) * d.p[cell];
    CHECK(e == Catch::Approx(correlation(a, b)).margin(1e-12));
  }
}

TEST_CASE("marginals are uniform for every angle pair") {
  RandomStream s(37, 0);
  for (int i = 0; i < 100; ++i) {
    const OutcomePairDistribution d = singlet_joint(
        MeasurementAngle(s.next_unit() * 2.0 * kPi),
        MeasurementAngle(s.next_unit() * 2.0 * kPi));
    CHECK(d.is_distribution(1e-12));
    CHECK(std::abs(d.marginal_a_plus() - 0.5) <= 1e-12);
    CHECK(std::abs(d.marginal_b_plus() - 0.5) <= 1e-12);
  }
}

TEST_CASE("the joint depends only on the angle difference") {
  RandomStream s(41, 0);
  for (int i = 0; i < 50; ++i) {
    const double a = s.next_unit() * 2.0 * kPi;
    const double b = s.next_unit() * 2.0 * kPi;
    const double shift = s.next_unit() * 2.0 * kPi;
    const OutcomePairDistribution base =
        singlet_joint(MeasurementAngle(a), MeasurementAngle(b));
    const OutcomePairDistribution rotated =
        singlet_joint(MeasurementAngle(a + shift), MeasurementAngle(b + shift));
    for (int cell = 0; cell < kOutcomeCells; ++cell)
      CHECK(rotated.p[cell] == Catch::Approx(base.p[cell]).margin(1e-9));
  }
}

TEST_CASE("chsh value at the canonical settings") {
  CHECK(std::abs(chsh_value(chsh_quadruple())) == Catch::Approx(kTsirelson).margin(1e-12));

  const MeasurementAngle same(0.4);
  CHECK(chsh_value({same, same, same, same}) == Catch::Approx(-2.0).margin(1e-12));
}

TEST_CASE("tsirelson bound holds on a settings grid") {
  // Axis includes multiples of pi/8, so the canonical optimum is on the grid.
  std::vector<MeasurementAngle> axis;
  for (int k = 0; k < 20; ++k) axis.push_back(MeasurementAngle(k * kPi / 8.0));
  double best = 0.0;
  for (const auto& a0 : axis)
    for (const auto& a1 : axis)
      for (const auto& b0 : axis)
        for (const auto& b1 : axis) {
          const double s = std::abs(chsh_value({a0, a1, b0, b1}));
          REQUIRE(s <= kTsirelson + 1e-9);
          best = std::max(best, s);
        }
  CHECK(best == Catch::Approx(kTsirelson).margin(1e-3));
}

TEST_CASE("singlet target over the Mermin triple") {
  const auto angles = mermin_triple();
  const ConditionalTable t = target_conditional(angles, angles);
  REQUIRE(t.rows.size() == 9);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) {
      const OutcomePairDistribution& d = t.row(i, j);
      if (i == j) {
        CHECK(d.entry(+1, +1) == 0.0);
        CHECK(d.entry(-1, -1) == 0.0);
      } else {
        CHECK(d.entry(+1, -1) + d.entry(-1, +1) == Catch::Approx(0.25).margin(1e-12));
      }
    }
}

TEST_CASE("singlet target over the chsh quadruple") {
  const auto alice = chsh_alice_angles();
  const auto bob = chsh_bob_angles();
  const ConditionalTable t = target_conditional(alice, bob);
  CHECK(t.row(0, 0).correlation() == Catch::Approx(-kRoot2Over2).margin(1e-12));
  CHECK(t.row(0, 1).correlation() == Catch::Approx(+kRoot2Over2).margin(1e-12));
  CHECK(t.row(1, 0).correlation() == Catch::Approx(-kRoot2Over2).margin(1e-12));
  CHECK(t.row(1, 1).correlation() == Catch::Approx(-kRoot2Over2).margin(1e-12));
  CHECK(std::abs(table_chsh(t)) == Catch::Approx(kTsirelson).margin(1e-12));
  CHECK(table_nosignal_delta(t) <= 1e-12);
}

TEST_CASE("product target is uniform and signal-free") {
  const ConditionalTable t = product_target(2, 2);
  for (const auto& row : t.rows)
    for (double p : row.p) CHECK(p == 0.25);
  CHECK(table_nosignal_delta(t) == 0.0);
  CHECK(table_chsh(t) == 0.0);
}
