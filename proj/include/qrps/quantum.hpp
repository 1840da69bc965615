#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrps/errors.hpp"

namespace qrps {

// Analyzer angle in radians, normalized to [0, 2*pi).
class MeasurementAngle {
 public:
  MeasurementAngle() = default;

  explicit MeasurementAngle(double radians) {
    if (!std::isfinite(radians))
      throw std::invalid_argument("measurement angle must be finite");
    constexpr double tau = 2.0 * std::numbers::pi;
    theta_ = std::fmod(radians, tau);
    if (theta_ < 0.0) theta_ += tau;
  }

  static MeasurementAngle from_degrees(double degrees) {
    return MeasurementAngle(degrees * std::numbers::pi / 180.0);
  }

  double radians() const { return theta_; }
  double degrees() const { return theta_ * 180.0 / std::numbers::pi; }

 private:
  double theta_ = 0.0;
};

// Outcome-pair cells in canonical order (+,+), (+,-), (-,+), (-,-).
inline constexpr int kOutcomeCells = 4;
inline constexpr int outcome_a_of_cell(int cell) { return (cell & 2) ? -1 : +1; }
inline constexpr int outcome_b_of_cell(int cell) { return (cell & 1) ? -1 : +1; }
inline constexpr int cell_of_outcomes(int a, int b) {
  return ((a < 0) ? 2 : 0) | ((b < 0) ? 1 : 0);
}

// Joint law of one +-1 outcome pair, cells in canonical order.
struct OutcomePairDistribution {
  std::array<double, kOutcomeCells> p{};

  double entry(int a, int b) const { return p[cell_of_outcomes(a, b)]; }
  double marginal_a_plus() const { return p[0] + p[1]; }
  double marginal_b_plus() const { return p[0] + p[2]; }

  double correlation() const { return p[0] - p[1] - p[2] + p[3]; }

  bool is_distribution(double tol = 1e-9) const {
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) return false;
      sum += v;
    }
    return std::abs(sum - 1.0) <= tol;
  }

  bool has_uniform_marginals(double tol = 1e-9) const {
    return std::abs(marginal_a_plus() - 0.5) <= tol &&
           std::abs(marginal_b_plus() - 0.5) <= tol;
  }
};

// Spin-singlet outcome law: p(a,b) = (1 - a*b*cos(theta_a - theta_b)) / 4.
// At equal settings the diagonal cells vanish exactly, so the two outcomes
// must be different.
inline OutcomePairDistribution singlet_joint(MeasurementAngle theta_a,
                                             MeasurementAngle theta_b) {
  const double c = std::cos(theta_a.radians() - theta_b.radians());
  OutcomePairDistribution d;
  for (int cell = 0; cell < kOutcomeCells; ++cell) {
    const int ab = outcome_a_of_cell(cell) * outcome_b_of_cell(cell);
    d.p[cell] = (1.0 - ab * c) / 4.0;
  }
  return d;
}

// E(theta_a, theta_b) = sum over cells of a*b*p(a,b) = -cos(theta_a - theta_b).
inline double correlation(MeasurementAngle theta_a, MeasurementAngle theta_b) {
  return -std::cos(theta_a.radians() - theta_b.radians());
}

struct ChshSettings {
  MeasurementAngle a0, a1, b0, b1;
};

// S = E(a0,b0) - E(a0,b1) + E(a1,b0) + E(a1,b1). Callers test |S|.
inline double chsh_value(const ChshSettings& s) {
  return correlation(s.a0, s.b0) - correlation(s.a0, s.b1) +
         correlation(s.a1, s.b0) + correlation(s.a1, s.b1);
}

// Target outcome law per setting pair: row (i, j) at index i * n_b + j.
struct ConditionalTable {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<OutcomePairDistribution> rows;

  const OutcomePairDistribution& row(std::size_t i, std::size_t j) const {
    return rows[i * n_b + j];
  }
  OutcomePairDistribution& row(std::size_t i, std::size_t j) {
    return rows[i * n_b + j];
  }

  bool rows_valid(double tol = 1e-9) const {
    for (const auto& r : rows)
      if (!r.is_distribution(tol)) return false;
    return true;
  }

  bool no_signalling(double tol = 1e-9) const {
    for (const auto& r : rows)
      if (!r.has_uniform_marginals(tol)) return false;
    return true;
  }
};

// Singlet target over the cross product of two setting alphabets.
inline ConditionalTable target_conditional(std::span<const MeasurementAngle> alice,
                                           std::span<const MeasurementAngle> bob) {
  if (alice.empty() || bob.empty())
    throw std::invalid_argument("setting alphabets must be non-empty");
  ConditionalTable t;
  t.n_a = alice.size();
  t.n_b = bob.size();
  t.rows.reserve(t.n_a * t.n_b);
  for (const auto& a : alice)
    for (const auto& b : bob) t.rows.push_back(singlet_joint(a, b));
  return t;
}

// Two independent fair coins, whatever the settings.
inline ConditionalTable product_target(std::size_t n_a, std::size_t n_b) {
  ConditionalTable t;
  t.n_a = n_a;
  t.n_b = n_b;
  t.rows.assign(n_a * n_b, OutcomePairDistribution{{0.25, 0.25, 0.25, 0.25}});
  return t;
}

// Exact analogue of the empirical no-signalling delta: largest spread, over
// the other party's settings, of one party's outcome marginal. Zero (to
// rounding) for any table built from singlet_joint rows.
inline double table_nosignal_delta(const ConditionalTable& t) {
  double delta = 0.0;
  for (std::size_t j = 0; j < t.n_b; ++j) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t i = 0; i < t.n_a; ++i) {
      const double m = t.row(i, j).marginal_b_plus();
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    delta = std::max(delta, hi - lo);
  }
  for (std::size_t i = 0; i < t.n_a; ++i) {
    double lo = 1.0, hi = 0.0;
    for (std::size_t j = 0; j < t.n_b; ++j) {
      const double m = t.row(i, j).marginal_a_plus();
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
    delta = std::max(delta, hi - lo);
  }
  return delta;
}

// S of a 2x2-setting table, same sign convention as chsh_value.
inline double table_chsh(const ConditionalTable& t) {
  if (t.n_a != 2 || t.n_b != 2)
    throw std::invalid_argument("table_chsh needs 2x2 setting alphabets");
  return t.row(0, 0).correlation() - t.row(0, 1).correlation() +
         t.row(1, 0).correlation() + t.row(1, 1).correlation();
}

// Default setting alphabets. Both are plain data; callers may use any angles.
inline std::vector<MeasurementAngle> mermin_triple() {
  return {MeasurementAngle::from_degrees(0.0), MeasurementAngle::from_degrees(120.0),
          MeasurementAngle::from_degrees(240.0)};
}

inline ChshSettings chsh_quadruple() {
  return {MeasurementAngle::from_degrees(0.0), MeasurementAngle::from_degrees(90.0),
          MeasurementAngle::from_degrees(45.0), MeasurementAngle::from_degrees(135.0)};
}

inline std::vector<MeasurementAngle> chsh_alice_angles() {
  const ChshSettings s = chsh_quadruple();
  return {s.a0, s.a1};
}

inline std::vector<MeasurementAngle> chsh_bob_angles() {
  const ChshSettings s = chsh_quadruple();
  return {s.b0, s.b1};
}

}  // namespace qrps
