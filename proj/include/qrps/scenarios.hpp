#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "qrps/causal.hpp"
#include "qrps/parallel.hpp"
#include "qrps/quantum.hpp"
#include "qrps/rng.hpp"
#include "qrps/stats.hpp"

namespace qrps {

// ---------------------------------------------------------------------------
// Toy causal scenarios
// ---------------------------------------------------------------------------

struct WardCParams {
  double p_a = 0.01;
  double p_b = 0.01;
};

struct RpsFilterParams {
  double keep_bob_win = 0.1;  // fraction of Bob-win rounds retained
  double keep_other = 1.0;
};

inline constexpr int kRock = 0;
inline constexpr int kPaper = 1;
inline constexpr int kScissors = 2;

inline constexpr int kDraw = 0;
inline constexpr int kAliceWins = 1;
inline constexpr int kBobWins = 2;

// rock beats scissors, scissors beats paper, paper beats rock
inline constexpr int rps_winner(int alice, int bob) { return (alice - bob + 3) % 3; }

struct ScenarioModel {
  CausalModel model;
  ColliderConstraint constraint;
};

// Two independent rare infections; admission to the ward is their OR, and
// the constraint selects admitted patients.
inline ScenarioModel ward_c_model(const WardCParams& params) {
  if (!(params.p_a > 0.0 && params.p_a < 1.0 && params.p_b > 0.0 && params.p_b < 1.0))
    throw ModelError("ward_c infection probabilities must lie in (0,1)");
  CausalModel m;
  const NodeId a = m.add_node("virus_a", {}, {{1.0 - params.p_a, params.p_a}});
  const NodeId b = m.add_node("virus_b", {}, {{1.0 - params.p_b, params.p_b}});
  std::vector<std::vector<double>> admit_cpt;
  for (int va = 0; va < 2; ++va)
    for (int vb = 0; vb < 2; ++vb)
      admit_cpt.push_back((va || vb) ? std::vector<double>{0.0, 1.0}
                                     : std::vector<double>{1.0, 0.0});
  const NodeId c = m.add_node("admitted", {a, b}, std::move(admit_cpt));
  m.seal();
  return {std::move(m), ColliderConstraint{c, {1}}};
}

// Uniform choices, a deterministic win label, and Charlie's keep/discard
// coin, biased against rounds Bob wins. The constraint selects kept rounds.
inline ScenarioModel rps_filter_model(const RpsFilterParams& params) {
  if (params.keep_bob_win < 0.0 || params.keep_bob_win > 1.0 ||
      params.keep_other < 0.0 || params.keep_other > 1.0)
    throw ModelError("rps keep probabilities must lie in [0,1]");
  CausalModel m;
  const std::vector<double> uniform3{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const NodeId alice = m.add_node("alice_choice", {}, {uniform3});
  const NodeId bob = m.add_node("bob_choice", {}, {uniform3});
  std::vector<std::vector<double>> win_cpt;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      std::vector<double> row(3, 0.0);
      row[rps_winner(a, b)] = 1.0;
      win_cpt.push_back(std::move(row));
    }
  const NodeId win = m.add_node("win_label", {alice, bob}, std::move(win_cpt));
  std::vector<std::vector<double>> keep_cpt(3);
  for (int w = 0; w < 3; ++w) {
    const double k = (w == kBobWins) ? params.keep_bob_win : params.keep_other;
    keep_cpt[w] = {1.0 - k, k};
  }
  const NodeId keep = m.add_node("kept", {win}, std::move(keep_cpt));
  m.seal();
  return {std::move(m), ColliderConstraint{keep, {1}}};
}

// The same game with the win label itself constrained: Alice never loses.
// Meant for `constrain` (keep rate 1), in contrast with rps_filter_model's
// rejection semantics.
inline ScenarioModel sunday_model() {
  CausalModel m;
  const std::vector<double> uniform3{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
  const NodeId alice = m.add_node("alice_choice", {}, {uniform3});
  const NodeId bob = m.add_node("bob_choice", {}, {uniform3});
  std::vector<std::vector<double>> win_cpt;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) {
      std::vector<double> row(3, 0.0);
      row[rps_winner(a, b)] = 1.0;
      win_cpt.push_back(std::move(row));
    }
  const NodeId win = m.add_node("win_label", {alice, bob}, std::move(win_cpt));
  (void)alice;
  (void)bob;
  m.seal();
  return {std::move(m), ColliderConstraint{win, {kDraw, kAliceWins}}};
}

// ---------------------------------------------------------------------------
// Filter and selector derivation
// ---------------------------------------------------------------------------

// Charlie's discard rule for the wedge game: keep probability per
// (setting pair, outcome cell), scaled so the most likely target cell is
// kept with probability 1.
struct FilterRule {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<std::array<double, kOutcomeCells>> keep;
  double expected_keep_rate = 1.0;  // 1/(4m), the same for every setting pair

  double keep_prob(std::size_t i, std::size_t j, int cell) const {
    return keep[i * n_b + j][cell];
  }
};

// Acceptance-rejection against the fair-coin proposal q(x,y) = 1/4:
// keep(a,b,x,y) = target(x,y|a,b) / m with m the largest entry anywhere in
// the target. The kept ensemble's outcome law given settings is then the
// target exactly, and the expected keep rate is 1/(4m) for every pair.
inline FilterRule derive_wedge_filter(const ConditionalTable& target) {
  if (!target.rows_valid())
    throw ModelError("invalid target distribution");
  double m = 0.0;
  for (const auto& row : target.rows)
    for (double v : row.p) m = std::max(m, v);
  if (m <= 0.0) throw DegenerateTargetError("target has no positive entry");
  FilterRule f;
  f.n_a = target.n_a;
  f.n_b = target.n_b;
  f.keep.reserve(target.rows.size());
  for (const auto& row : target.rows) {
    std::array<double, kOutcomeCells> k{};
    for (int cell = 0; cell < kOutcomeCells; ++cell) k[cell] = row.p[cell] / m;
    f.keep.push_back(k);
  }
  f.expected_keep_rate = 1.0 / (4.0 * m);
  return f;
}

// Crystal-ball Charlie's outcome rule for the vee game: per setting pair, a
// cdf over the outcome cells in canonical order. One uniform draw selects
// the first cell with u < cdf, so zero-probability cells are never chosen
// and the selected pair reproduces the target row exactly.
struct SelectorRule {
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::vector<std::array<double, kOutcomeCells>> cdf;

  int select(std::size_t i, std::size_t j, double u) const {
    const auto& row = cdf[i * n_b + j];
    for (int cell = 0; cell < kOutcomeCells; ++cell)
      if (u < row[cell]) return cell;
    return kOutcomeCells - 1;  // unreachable: cdf ends at 1 and u < 1
  }
};

inline SelectorRule derive_vee_selector(const ConditionalTable& target) {
  if (!target.rows_valid())
    throw ModelError("invalid target distribution");
  SelectorRule s;
  s.n_a = target.n_a;
  s.n_b = target.n_b;
  s.cdf.reserve(target.rows.size());
  for (const auto& row : target.rows) {
    std::array<double, kOutcomeCells> cdf{};
    double cum = 0.0;
    for (int cell = 0; cell < kOutcomeCells; ++cell) {
      cum += row.p[cell];
      cdf[cell] = cum;
    }
    cdf[kOutcomeCells - 1] = 1.0;  // rows sum to 1 within 1e-9; close the gap
    s.cdf.push_back(cdf);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Game runners
// ---------------------------------------------------------------------------

// Per-side setting distributions over alphabet indices.
struct SettingsDist {
  std::vector<double> alice;
  std::vector<double> bob;

  static SettingsDist uniform(std::size_t n_a, std::size_t n_b) {
    return {std::vector<double>(n_a, 1.0 / static_cast<double>(n_a)),
            std::vector<double>(n_b, 1.0 / static_cast<double>(n_b))};
  }

  static SettingsDist point_mass(std::size_t n_a, std::size_t a, std::size_t n_b,
                                 std::size_t b) {
    SettingsDist d{std::vector<double>(n_a, 0.0), std::vector<double>(n_b, 0.0)};
    d.alice[a] = 1.0;
    d.bob[b] = 1.0;
    return d;
  }
};

struct RunOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  bool store_discarded = false;
  std::uint64_t budget = 1'000'000'000;
};

namespace detail {

inline void check_settings_dist(const SettingsDist& dist, const ConditionalTable& target) {
  auto check_side = [](const std::vector<double>& p, std::size_t n, const char* side) {
    if (p.size() != n)
      throw ModelError(std::string(side) + " settings distribution has wrong size");
    double sum = 0.0;
    for (double v : p) {
      if (v < 0.0) throw ModelError(std::string(side) + " settings weight negative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      throw ModelError(std::string(side) + " settings distribution does not sum to 1");
  };
  check_side(dist.alice, target.n_a, "alice");
  check_side(dist.bob, target.n_b, "bob");
}

}  // namespace detail

// Wedge game: i.i.d. settings and two independent fair coins per round,
// then Charlie's filter decides what survives. Runs until n_kept rounds are
// kept; trial t draws from stream (seed, t).
inline Ensemble run_wedge_qrps(const ConditionalTable& target, const SettingsDist& dist,
                               std::uint64_t n_kept, const RunOptions& opt = {}) {
  detail::check_settings_dist(dist, target);
  const FilterRule filter = derive_wedge_filter(target);
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    const int sa = s.categorical(dist.alice);
    const int sb = s.categorical(dist.bob);
    const int xa = s.next_unit() < 0.5 ? +1 : -1;
    const int xb = s.next_unit() < 0.5 ? +1 : -1;
    const int cell = cell_of_outcomes(xa, xb);
    const bool kept = s.next_unit() < filter.keep_prob(sa, sb, cell);
    RoundRecord r;
    r.setting_a = static_cast<std::uint8_t>(sa);
    r.setting_b = static_cast<std::uint8_t>(sb);
    r.outcome_a = static_cast<std::int8_t>(xa);
    r.outcome_b = static_cast<std::int8_t>(xb);
    r.kept = kept;
    return std::pair<RoundRecord, bool>(r, kept);
  };
  auto res = qrps::detail::run_until_kept<RoundRecord>(n_kept, opt.budget, opt.threads,
                                                       opt.store_discarded, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "wedge_qrps";
  e.n_settings_a = static_cast<std::uint32_t>(target.n_a);
  e.n_settings_b = static_cast<std::uint32_t>(target.n_b);
  return e;
}

// Vee game: settings are sampled first (the crystal ball is nothing more
// than this data-flow order), then the selector rule chooses both outcomes
// from one uniform draw. Nothing is ever discarded.
inline Ensemble run_vee_qrps(const ConditionalTable& target, const SettingsDist& dist,
                             std::uint64_t n_rounds, const RunOptions& opt = {}) {
  detail::check_settings_dist(dist, target);
  const SelectorRule selector = derive_vee_selector(target);
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    const int sa = s.categorical(dist.alice);
    const int sb = s.categorical(dist.bob);
    const int cell = selector.select(sa, sb, s.next_unit());
    RoundRecord r;
    r.setting_a = static_cast<std::uint8_t>(sa);
    r.setting_b = static_cast<std::uint8_t>(sb);
    r.outcome_a = static_cast<std::int8_t>(outcome_a_of_cell(cell));
    r.outcome_b = static_cast<std::int8_t>(outcome_b_of_cell(cell));
    r.kept = true;
    return std::pair<RoundRecord, bool>(r, true);
  };
  auto res = qrps::detail::run_fixed_rounds<RoundRecord>(n_rounds, opt.threads,
                                                         opt.store_discarded, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "vee_qrps";
  e.n_settings_a = static_cast<std::uint32_t>(target.n_a);
  e.n_settings_b = static_cast<std::uint32_t>(target.n_b);
  return e;
}

// ---------------------------------------------------------------------------
// Black box and signalling
// ---------------------------------------------------------------------------

// The selector sealed behind a panel: Charlie chooses among a small set of
// named no-signalling targets with a knob and sees nothing else.
struct BlackBoxDevice {
  std::vector<std::string> knob_names;
  std::vector<ConditionalTable> knob_options;
  std::size_t current_knob = 0;

  void validate() const {
    if (knob_options.empty()) throw ModelError("black box needs at least one knob option");
    if (knob_names.size() != knob_options.size())
      throw ModelError("black box knob names and options disagree");
    if (current_knob >= knob_options.size())
      throw ModelError("black box knob index out of range");
    for (std::size_t k = 0; k < knob_options.size(); ++k) {
      const ConditionalTable& t = knob_options[k];
      if (t.n_a != knob_options[0].n_a || t.n_b != knob_options[0].n_b)
        throw ModelError("black box knob options must share setting alphabets");
      if (!t.rows_valid())
        throw ModelError("black box target '" + knob_names[k] +
                         "' is not a distribution");
      if (!t.no_signalling())
        throw ModelError("black box target '" + knob_names[k] +
                         "' has non-uniform marginals");
    }
  }

  const ConditionalTable& selected() const { return knob_options[current_knob]; }
};

// knob 0: singlet statistics for the given alphabets; knob 1: two
// independent fair coins.
inline BlackBoxDevice standard_black_box(std::span<const MeasurementAngle> alice,
                                         std::span<const MeasurementAngle> bob,
                                         std::size_t knob = 0) {
  BlackBoxDevice d;
  d.knob_names = {"singlet", "product"};
  d.knob_options = {target_conditional(alice, bob), product_target(alice.size(), bob.size())};
  d.current_knob = knob;
  d.validate();
  return d;
}

inline Ensemble run_black_box(const BlackBoxDevice& device, const SettingsDist& dist,
                              std::uint64_t n_rounds, const RunOptions& opt = {}) {
  device.validate();
  Ensemble e = run_vee_qrps(device.selected(), dist, n_rounds, opt);
  e.scenario_id = "black_box";
  return e;
}

// What the unrestricted crystal ball leaks: Charlie's per-round log carries
// Alice's future setting verbatim, so its mutual information with her
// setting equals her setting entropy. The black-box variant logs only the
// knob position, a constant, so the information is exactly zero.
struct SignallingReport {
  double crystal_ball_bits = 0.0;
  double black_box_bits = 0.0;
  std::uint64_t n_rounds = 0;
};

inline SignallingReport crystal_ball_signalling(std::uint64_t n_rounds,
                                                const RunOptions& opt = {}) {
  std::vector<std::vector<std::uint64_t>> foreseen(2, std::vector<std::uint64_t>(2, 0));
  std::vector<std::vector<std::uint64_t>> boxed(2, std::vector<std::uint64_t>(1, 0));
  const std::vector<double> fair{0.5, 0.5};
  for (std::uint64_t t = 0; t < n_rounds; ++t) {
    RandomStream s(opt.seed, t);
    const int setting = s.categorical(fair);
    ++foreseen[setting][setting];  // Charlie writes down what the ball shows
    ++boxed[setting][0];           // the box shows him nothing per-round
  }
  SignallingReport rep;
  rep.n_rounds = n_rounds;
  rep.crystal_ball_bits = mutual_information_bits(foreseen);
  rep.black_box_bits = mutual_information_bits(boxed);
  return rep;
}

// Settings-only ensemble for the signalling scenario, so it flows through
// the same reporting pipeline as everything else.
inline Ensemble crystal_ball_ensemble(std::uint64_t n_rounds, const RunOptions& opt = {}) {
  const std::vector<double> fair{0.5, 0.5};
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    RoundRecord r;
    r.setting_a = static_cast<std::uint8_t>(s.categorical(fair));
    r.setting_b = 0;
    r.outcome_a = 0;
    r.outcome_b = 0;
    r.kept = true;
    return std::pair<RoundRecord, bool>(r, true);
  };
  auto res = qrps::detail::run_fixed_rounds<RoundRecord>(n_rounds, opt.threads, false, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "crystal_ball_signalling";
  e.n_settings_a = 2;
  e.n_settings_b = 1;
  e.n_outcomes_a = 1;
  e.n_outcomes_b = 1;
  e.outcomes_pm_one = false;
  return e;
}

// ---------------------------------------------------------------------------
// Causal-scenario ensembles (for the reporting pipeline)
// ---------------------------------------------------------------------------

// Ward C: every trial recorded, kept = admitted. Outcomes are the two virus
// indicators coded +1 (infected) / -1 (clear).
inline Ensemble run_ward_c(const WardCParams& params, std::uint64_t n_trials,
                           const RunOptions& opt = {}) {
  const ScenarioModel sc = ward_c_model(params);
  const NodeId a = sc.model.id_of("virus_a");
  const NodeId b = sc.model.id_of("virus_b");
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    const Assignment x = sample(sc.model, s);
    RoundRecord r;
    r.setting_a = 0;
    r.setting_b = 0;
    r.outcome_a = static_cast<std::int8_t>(x[a] ? +1 : -1);
    r.outcome_b = static_cast<std::int8_t>(x[b] ? +1 : -1);
    r.kept = sc.constraint.allows(x[sc.constraint.node]);
    return std::pair<RoundRecord, bool>(r, r.kept);
  };
  auto res = qrps::detail::run_fixed_rounds<RoundRecord>(n_trials, opt.threads,
                                                         /*store_discarded=*/true, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "ward_c";
  return e;
}

// RPS with Charlie's filter: rejection-sampled until n_kept official rounds
// exist. Outcomes are the two choices (0 rock, 1 paper, 2 scissors).
inline Ensemble run_rps_filter(const RpsFilterParams& params, std::uint64_t n_kept,
                               const RunOptions& opt = {}) {
  const ScenarioModel sc = rps_filter_model(params);
  const NodeId alice = sc.model.id_of("alice_choice");
  const NodeId bob = sc.model.id_of("bob_choice");
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    const Assignment x = sample(sc.model, s);
    RoundRecord r;
    r.setting_a = 0;
    r.setting_b = 0;
    r.outcome_a = static_cast<std::int8_t>(x[alice]);
    r.outcome_b = static_cast<std::int8_t>(x[bob]);
    r.kept = sc.constraint.allows(x[sc.constraint.node]);
    return std::pair<RoundRecord, bool>(r, r.kept);
  };
  auto res = qrps::detail::run_until_kept<RoundRecord>(n_kept, opt.budget, opt.threads,
                                                       opt.store_discarded, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "rps_filter";
  e.n_outcomes_a = 3;
  e.n_outcomes_b = 3;
  e.outcomes_pm_one = false;
  return e;
}

// Sunday: the win label is constrained, nothing is discarded, keep rate 1.
inline Ensemble run_sunday(std::uint64_t n_rounds, const RunOptions& opt = {}) {
  const ScenarioModel sc = sunday_model();
  const ConstrainedSampler sampler = constrain(sc.model, sc.constraint);
  const NodeId alice = sc.model.id_of("alice_choice");
  const NodeId bob = sc.model.id_of("bob_choice");
  auto fn = [&](std::uint64_t t) {
    RandomStream s(opt.seed, t);
    Assignment x;
    sampler.draw_into(s, x);
    RoundRecord r;
    r.setting_a = 0;
    r.setting_b = 0;
    r.outcome_a = static_cast<std::int8_t>(x[alice]);
    r.outcome_b = static_cast<std::int8_t>(x[bob]);
    r.kept = true;
    return std::pair<RoundRecord, bool>(r, true);
  };
  auto res = qrps::detail::run_fixed_rounds<RoundRecord>(n_rounds, opt.threads, false, fn);
  Ensemble e;
  e.records = std::move(res.records);
  e.trials = res.trials;
  e.n_kept = res.kept;
  e.seed = opt.seed;
  e.scenario_id = "sunday_rps";
  e.n_outcomes_a = 3;
  e.n_outcomes_b = 3;
  e.outcomes_pm_one = false;
  return e;
}

// Kept rounds whose two settings are the same angle, and how many of those
// ended with opposite outcomes. The Bell signature is opposite == rounds.
struct EqualSettingSummary {
  std::uint64_t rounds = 0;
  std::uint64_t opposite = 0;
};

inline EqualSettingSummary equal_setting_summary(const Ensemble& e,
                                                 std::span<const MeasurementAngle> alice,
                                                 std::span<const MeasurementAngle> bob) {
  EqualSettingSummary sum;
  for (const RoundRecord& r : e.records) {
    if (!r.kept) continue;
    const double da = alice[r.setting_a].radians();
    const double db = bob[r.setting_b].radians();
    if (std::abs(da - db) > 1e-12) continue;
    ++sum.rounds;
    if (static_cast<int>(r.outcome_a) * static_cast<int>(r.outcome_b) < 0) ++sum.opposite;
  }
  return sum;
}

}  // namespace qrps
