#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qrps/errors.hpp"

namespace qrps {

// One play: two setting choices, two outcomes, and whether the round
// survived selection. Outcomes are +-1 for coin-like scenarios
// (Ensemble::outcomes_pm_one), category indices otherwise.
struct RoundRecord {
  std::uint8_t setting_a = 0;
  std::uint8_t setting_b = 0;
  std::int8_t outcome_a = 0;
  std::int8_t outcome_b = 0;
  bool kept = true;
};

struct Ensemble {
  std::vector<RoundRecord> records;  // kept rounds; discarded too if requested
  std::uint64_t trials = 0;
  std::uint64_t n_kept = 0;
  std::uint64_t seed = 0;
  std::string scenario_id;
  std::uint32_t n_settings_a = 1;
  std::uint32_t n_settings_b = 1;
  std::uint32_t n_outcomes_a = 2;
  std::uint32_t n_outcomes_b = 2;
  bool outcomes_pm_one = true;  // +1 maps to index 0, -1 to index 1

  int outcome_index_a(const RoundRecord& r) const {
    return outcomes_pm_one ? (r.outcome_a < 0 ? 1 : 0) : r.outcome_a;
  }
  int outcome_index_b(const RoundRecord& r) const {
    return outcomes_pm_one ? (r.outcome_b < 0 ? 1 : 0) : r.outcome_b;
  }

  double keep_rate() const {
    return trials == 0 ? 0.0 : static_cast<double>(n_kept) / static_cast<double>(trials);
  }
};

// Dense integer counts over (setting_a, setting_b, outcome_a, outcome_b).
// Every statistic below is a pure function of this table, so anything
// recomputed from a serialized ensemble is bit-exact.
struct CountsTable {
  std::size_t n_sa = 0, n_sb = 0, n_oa = 0, n_ob = 0;
  std::vector<std::uint64_t> n;

  std::uint64_t& at(std::size_t sa, std::size_t sb, std::size_t oa, std::size_t ob) {
    return n[((sa * n_sb + sb) * n_oa + oa) * n_ob + ob];
  }
  std::uint64_t at(std::size_t sa, std::size_t sb, std::size_t oa, std::size_t ob) const {
    return n[((sa * n_sb + sb) * n_oa + oa) * n_ob + ob];
  }

  std::uint64_t pair_total(std::size_t sa, std::size_t sb) const {
    std::uint64_t t = 0;
    for (std::size_t oa = 0; oa < n_oa; ++oa)
      for (std::size_t ob = 0; ob < n_ob; ++ob) t += at(sa, sb, oa, ob);
    return t;
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto v : n) t += v;
    return t;
  }
};

inline CountsTable counts_from(const Ensemble& e) {
  CountsTable c;
  c.n_sa = e.n_settings_a;
  c.n_sb = e.n_settings_b;
  c.n_oa = e.n_outcomes_a;
  c.n_ob = e.n_outcomes_b;
  c.n.assign(c.n_sa * c.n_sb * c.n_oa * c.n_ob, 0);
  for (const RoundRecord& r : e.records) {
    if (!r.kept) continue;
    ++c.at(r.setting_a, r.setting_b, e.outcome_index_a(r), e.outcome_index_b(r));
  }
  return c;
}

// Normalized outcome table for one setting pair; `populated` is false when a
// pair has no rounds (absences are flagged, never fabricated).
struct PairDistribution {
  std::vector<double> p;  // dense (outcome_a, outcome_b)
  std::uint64_t rounds = 0;
  bool populated = false;
};

inline std::vector<PairDistribution> empirical_joint(const CountsTable& c) {
  std::vector<PairDistribution> out(c.n_sa * c.n_sb);
  for (std::size_t sa = 0; sa < c.n_sa; ++sa)
    for (std::size_t sb = 0; sb < c.n_sb; ++sb) {
      PairDistribution& d = out[sa * c.n_sb + sb];
      d.rounds = c.pair_total(sa, sb);
      d.populated = d.rounds > 0;
      d.p.assign(c.n_oa * c.n_ob, 0.0);
      if (!d.populated) continue;
      for (std::size_t oa = 0; oa < c.n_oa; ++oa)
        for (std::size_t ob = 0; ob < c.n_ob; ++ob)
          d.p[oa * c.n_ob + ob] = static_cast<double>(c.at(sa, sb, oa, ob)) /
                                  static_cast<double>(d.rounds);
    }
  return out;
}

inline std::vector<PairDistribution> empirical_joint(const Ensemble& e) {
  if (e.n_kept == 0) throw EmptyEnsembleError("ensemble has no kept rounds");
  return empirical_joint(counts_from(e));
}

// E for one setting pair: mean of outcome_a * outcome_b over kept rounds.
// Outcome index 0 carries +1, index 1 carries -1.
inline double e_value(const CountsTable& c, std::size_t sa, std::size_t sb) {
  const std::uint64_t total = c.pair_total(sa, sb);
  if (total == 0)
    throw EmptyCellError("no rounds for setting pair (" + std::to_string(sa) + "," +
                         std::to_string(sb) + ")");
  const double agree = static_cast<double>(c.at(sa, sb, 0, 0) + c.at(sa, sb, 1, 1));
  const double differ = static_cast<double>(c.at(sa, sb, 0, 1) + c.at(sa, sb, 1, 0));
  return (agree - differ) / static_cast<double>(total);
}

inline double correlation_E(const Ensemble& e, std::size_t sa, std::size_t sb) {
  return e_value(counts_from(e), sa, sb);
}

// Which setting-alphabet indices play the roles a0/a1 and b0/b1.
struct ChshIndices {
  std::size_t a0 = 0, a1 = 1, b0 = 0, b1 = 1;
};

inline double chsh_s(const CountsTable& c, const ChshIndices& ix = {}) {
  return e_value(c, ix.a0, ix.b0) - e_value(c, ix.a0, ix.b1) +
         e_value(c, ix.a1, ix.b0) + e_value(c, ix.a1, ix.b1);
}

inline double chsh_S(const Ensemble& e, const ChshIndices& ix = {}) {
  return chsh_s(counts_from(e), ix);
}

// Largest spread, across the other party's settings, of one party's
// conditional outcome frequency given its own setting; symmetrized over both
// parties. Zero for any no-signalling law.
inline double nosignal_delta(const CountsTable& c) {
  for (std::size_t sa = 0; sa < c.n_sa; ++sa)
    for (std::size_t sb = 0; sb < c.n_sb; ++sb)
      if (c.pair_total(sa, sb) == 0)
        throw EmptyCellError("no rounds for setting pair (" + std::to_string(sa) + "," +
                             std::to_string(sb) + ")");
  double delta = 0.0;
  // Bob's outcome frequencies across Alice's settings.
  for (std::size_t sb = 0; sb < c.n_sb; ++sb)
    for (std::size_t ob = 0; ob < c.n_ob; ++ob) {
      double lo = 1.0, hi = 0.0;
      for (std::size_t sa = 0; sa < c.n_sa; ++sa) {
        std::uint64_t hits = 0;
        for (std::size_t oa = 0; oa < c.n_oa; ++oa) hits += c.at(sa, sb, oa, ob);
        const double f = static_cast<double>(hits) /
                         static_cast<double>(c.pair_total(sa, sb));
        lo = std::min(lo, f);
        hi = std::max(hi, f);
      }
      delta = std::max(delta, hi - lo);
    }
  // Alice's outcome frequencies across Bob's settings.
  for (std::size_t sa = 0; sa < c.n_sa; ++sa)
    for (std::size_t oa = 0; oa < c.n_oa; ++oa) {
      double lo = 1.0, hi = 0.0;
      for (std::size_t sb = 0; sb < c.n_sb; ++sb) {
        std::uint64_t hits = 0;
        for (std::size_t ob = 0; ob < c.n_ob; ++ob) hits += c.at(sa, sb, oa, ob);
        const double f = static_cast<double>(hits) /
                         static_cast<double>(c.pair_total(sa, sb));
        lo = std::min(lo, f);
        hi = std::max(hi, f);
      }
      delta = std::max(delta, hi - lo);
    }
  return delta;
}

inline double nosignal_delta(const Ensemble& e) { return nosignal_delta(counts_from(e)); }

struct AssociationResult {
  double value = 0.0;
  bool degenerate = false;  // some marginal was zero; value forced to 0
};

// Signed phi coefficient of a 2x2 count table.
inline AssociationResult association_2x2(const std::array<std::array<std::uint64_t, 2>, 2>& t) {
  const double n00 = static_cast<double>(t[0][0]);
  const double n01 = static_cast<double>(t[0][1]);
  const double n10 = static_cast<double>(t[1][0]);
  const double n11 = static_cast<double>(t[1][1]);
  const double r0 = n00 + n01, r1 = n10 + n11;
  const double c0 = n00 + n10, c1 = n01 + n11;
  if (r0 == 0.0 || r1 == 0.0 || c0 == 0.0 || c1 == 0.0) return {0.0, true};
  return {(n00 * n11 - n01 * n10) / std::sqrt(r0 * r1 * c0 * c1), false};
}

// Cramer's V of an r x c count table (|phi| in the 2x2 case). Rows and
// columns with zero marginals are ignored.
inline AssociationResult cramers_v(const std::vector<std::vector<std::uint64_t>>& t) {
  const std::size_t rows = t.size();
  const std::size_t cols = rows == 0 ? 0 : t.front().size();
  std::vector<double> rsum(rows, 0.0), csum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = static_cast<double>(t[i][j]);
      rsum[i] += v;
      csum[j] += v;
      total += v;
    }
  std::size_t live_rows = 0, live_cols = 0;
  for (double v : rsum) live_rows += v > 0.0;
  for (double v : csum) live_cols += v > 0.0;
  if (total == 0.0 || live_rows < 2 || live_cols < 2) return {0.0, true};
  double chi2 = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      if (rsum[i] == 0.0 || csum[j] == 0.0) continue;
      const double expected = rsum[i] * csum[j] / total;
      const double diff = static_cast<double>(t[i][j]) - expected;
      chi2 += diff * diff / expected;
    }
  const double k = static_cast<double>(std::min(live_rows, live_cols) - 1);
  return {std::sqrt(chi2 / (total * k)), false};
}

// Association between the two outcome columns over kept rounds, pooled
// across settings: signed phi when both sides are binary, Cramer's V
// otherwise.
inline AssociationResult outcome_association(const Ensemble& e) {
  if (e.n_outcomes_a == 2 && e.n_outcomes_b == 2) {
    std::array<std::array<std::uint64_t, 2>, 2> t{};
    for (const RoundRecord& r : e.records)
      if (r.kept) ++t[e.outcome_index_a(r)][e.outcome_index_b(r)];
    return association_2x2(t);
  }
  std::vector<std::vector<std::uint64_t>> t(e.n_outcomes_a,
                                            std::vector<std::uint64_t>(e.n_outcomes_b, 0));
  for (const RoundRecord& r : e.records)
    if (r.kept) ++t[e.outcome_index_a(r)][e.outcome_index_b(r)];
  return cramers_v(t);
}

// Plug-in mutual information of a discrete pair, in bits.
inline double mutual_information_bits(const std::vector<std::vector<std::uint64_t>>& joint) {
  const std::size_t rows = joint.size();
  const std::size_t cols = rows == 0 ? 0 : joint.front().size();
  std::vector<double> rsum(rows, 0.0), csum(cols, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = static_cast<double>(joint[i][j]);
      rsum[i] += v;
      csum[j] += v;
      total += v;
    }
  if (total == 0.0) throw EmptyEnsembleError("mutual information needs samples");
  double mi = 0.0;
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) {
      const auto v = static_cast<double>(joint[i][j]);
      if (v == 0.0) continue;
      mi += (v / total) * std::log2(v * total / (rsum[i] * csum[j]));
    }
  return mi;
}

inline double mutual_information_bits(std::span<const std::pair<int, int>> samples,
                                      std::size_t card_x, std::size_t card_y) {
  std::vector<std::vector<std::uint64_t>> joint(card_x,
                                                std::vector<std::uint64_t>(card_y, 0));
  for (const auto& [x, y] : samples) ++joint[x][y];
  return mutual_information_bits(joint);
}

// Everything the scenarios report. Optional fields stay empty when the
// quantity does not apply (no 2x2 setting grid, unpopulated cells, ...).
struct StatsReport {
  CountsTable counts;
  std::vector<double> e_values;              // [sa][sb]; only for +-1 outcomes
  std::vector<std::uint8_t> pair_populated;  // [sa][sb]
  std::optional<double> chsh;
  double keep_rate = 0.0;
  std::optional<double> nosignal;
  AssociationResult association;
  std::uint64_t n_kept = 0;
  std::uint64_t n_trials = 0;
};

inline StatsReport build_report(const Ensemble& e) {
  StatsReport rep;
  rep.counts = counts_from(e);
  rep.n_kept = e.n_kept;
  rep.n_trials = e.trials;
  rep.keep_rate = e.keep_rate();
  rep.association = outcome_association(e);

  const CountsTable& c = rep.counts;
  rep.pair_populated.assign(c.n_sa * c.n_sb, 0);
  bool all_populated = true;
  for (std::size_t sa = 0; sa < c.n_sa; ++sa)
    for (std::size_t sb = 0; sb < c.n_sb; ++sb) {
      const bool pop = c.pair_total(sa, sb) > 0;
      rep.pair_populated[sa * c.n_sb + sb] = pop;
      all_populated = all_populated && pop;
    }

  const bool pm_one = e.outcomes_pm_one && c.n_oa == 2 && c.n_ob == 2;
  if (pm_one) {
    rep.e_values.assign(c.n_sa * c.n_sb, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t sa = 0; sa < c.n_sa; ++sa)
      for (std::size_t sb = 0; sb < c.n_sb; ++sb)
        if (rep.pair_populated[sa * c.n_sb + sb])
          rep.e_values[sa * c.n_sb + sb] = e_value(c, sa, sb);
    if (c.n_sa == 2 && c.n_sb == 2 && all_populated) rep.chsh = chsh_s(c);
  }
  if (all_populated && e.n_kept > 0) rep.nosignal = nosignal_delta(c);
  return rep;
}

}  // namespace qrps
