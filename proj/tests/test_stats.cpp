#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "qrps/report.hpp"
#include "qrps/rng.hpp"
#include "qrps/stats.hpp"

using namespace qrps;

namespace {

Ensemble bell_ensemble(std::uint32_t n_sa, std::uint32_t n_sb) {
  Ensemble e;
  e.n_settings_a = n_sa;
  e.n_settings_b = n_sb;
  e.scenario_id = "synthetic";
  return e;
}

void push(Ensemble& e, int sa, int sb, int oa, int ob, bool kept = true,
          std::uint64_t copies = 1) {
  RoundRecord r;
  r.setting_a = static_cast<std::uint8_t>(sa);
  r.setting_b = static_cast<std::uint8_t>(sb);
  r.outcome_a = static_cast<std::int8_t>(oa);
  r.outcome_b = static_cast<std::int8_t>(ob);
  r.kept = kept;
  for (std::uint64_t i = 0; i < copies; ++i) e.records.push_back(r);
  e.trials += copies;
  if (kept) e.n_kept += copies;
}

}  // namespace

TEST_CASE("empirical_joint of a single record is one-hot") {
  Ensemble e = bell_ensemble(1, 1);
  push(e, 0, 0, +1, -1);
  const auto tables = empirical_joint(e);
  REQUIRE(tables.size() == 1);
  CHECK(tables[0].populated);
  CHECK(tables[0].p[0 * 2 + 1] == 1.0);  // (+, -) cell
  CHECK(tables[0].p[0] == 0.0);
}

TEST_CASE("empirical_joint flags unpopulated pairs and empty ensembles") {
  Ensemble empty = bell_ensemble(1, 1);
  CHECK_THROWS_AS(empirical_joint(empty), EmptyEnsembleError);

  Ensemble e = bell_ensemble(2, 1);
  push(e, 0, 0, +1, +1);
  const auto tables = empirical_joint(e);
  CHECK(tables[0].populated);
  CHECK_FALSE(tables[1].populated);
}

TEST_CASE("correlation_E of pure anticorrelation is -1") {
  Ensemble e = bell_ensemble(1, 1);
  push(e, 0, 0, +1, -1, true, 50);
  push(e, 0, 0, -1, +1, true, 50);
  CHECK(correlation_E(e, 0, 0) == -1.0);
  CHECK_THROWS_AS(correlation_E(bell_ensemble(1, 1), 0, 0), EmptyCellError);
}

TEST_CASE("chsh_S of an always-(+,-) device is -2") {
  Ensemble e = bell_ensemble(2, 2);
  for (int sa = 0; sa < 2; ++sa)
    for (int sb = 0; sb < 2; ++sb) push(e, sa, sb, +1, -1, true, 10);
  CHECK(chsh_S(e) == -2.0);
}

TEST_CASE("nosignal_delta vanishes on balanced tables") {
  Ensemble e = bell_ensemble(2, 2);
  for (int sa = 0; sa < 2; ++sa)
    for (int sb = 0; sb < 2; ++sb) {
      push(e, sa, sb, +1, -1, true, 25);
      push(e, sa, sb, -1, +1, true, 25);
    }
  CHECK(nosignal_delta(e) == 0.0);
}

TEST_CASE("nosignal_delta catches a marginal that tracks the far setting") {
  // Bob's +1 rate is 0.5 under Alice setting 0 and 0.7 under setting 1,
  // written out as exact counts at 1e5 rounds.
  Ensemble e = bell_ensemble(2, 1);
  push(e, 0, 0, +1, +1, true, 12500);
  push(e, 0, 0, +1, -1, true, 12500);
  push(e, 0, 0, -1, +1, true, 12500);
  push(e, 0, 0, -1, -1, true, 12500);
  push(e, 1, 0, +1, +1, true, 17500);
  push(e, 1, 0, +1, -1, true, 7500);
  push(e, 1, 0, -1, +1, true, 17500);
  push(e, 1, 0, -1, -1, true, 7500);
  CHECK(nosignal_delta(e) >= 0.19);

  Ensemble missing = bell_ensemble(2, 1);
  push(missing, 0, 0, +1, +1);
  CHECK_THROWS_AS(nosignal_delta(missing), EmptyCellError);
}

TEST_CASE("phi coefficient") {
  // outer product of marginals -> no association
  CHECK(association_2x2({{{40, 60}, {60, 90}}}).value == 0.0);
  // perfect diagonal
  const auto diag = association_2x2({{{50, 0}, {0, 50}}});
  CHECK(diag.value == 1.0);
  CHECK_FALSE(diag.degenerate);
  // degenerate marginal
  const auto deg = association_2x2({{{100, 0}, {100, 0}}});
  CHECK(deg.value == 0.0);
  CHECK(deg.degenerate);
}

TEST_CASE("cramers_v") {
  const std::vector<std::vector<std::uint64_t>> indep{{10, 20, 30}, {20, 40, 60}};
  CHECK(cramers_v(indep).value == Catch::Approx(0.0).margin(1e-12));
  const std::vector<std::vector<std::uint64_t>> perfect{{50, 0, 0}, {0, 50, 0}, {0, 0, 50}};
  CHECK(cramers_v(perfect).value == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("mutual information of exact tables") {
  // identical fair binary pair
  const std::vector<std::vector<std::uint64_t>> copy{{50000, 0}, {0, 50000}};
  CHECK(mutual_information_bits(copy) == Catch::Approx(1.0).margin(1e-12));
  // exactly independent pair
  const std::vector<std::vector<std::uint64_t>> indep{{2500, 7500}, {2500, 7500}};
  CHECK(mutual_information_bits(indep) == Catch::Approx(0.0).margin(1e-12));
  // constant second coordinate: zero exactly, no rounding slack needed
  const std::vector<std::vector<std::uint64_t>> constant{{60000}, {40000}};
  CHECK(mutual_information_bits(constant) == 0.0);
}

TEST_CASE("mutual information of sampled pairs") {
  std::vector<std::pair<int, int>> identical, independent;
  for (std::uint64_t t = 0; t < 100000; ++t) {
    RandomStream s(53, t);
    const int x = s.next_unit() < 0.5 ? 0 : 1;
    const int y = s.next_unit() < 0.5 ? 0 : 1;
    identical.emplace_back(x, x);
    independent.emplace_back(x, y);
  }
  CHECK(mutual_information_bits(identical, 2, 2) == Catch::Approx(1.0).margin(0.01));
  CHECK(mutual_information_bits(independent, 2, 2) <= 0.01);
}

TEST_CASE("statistics recomputed from serialized counts are bit-exact") {
  Ensemble e = bell_ensemble(2, 2);
  RandomStream s(61, 0);
  for (int i = 0; i < 5000; ++i)
    push(e, s.next_u32() % 2, s.next_u32() % 2, s.next_unit() < 0.5 ? +1 : -1,
         s.next_unit() < 0.5 ? +1 : -1);
  const CountsTable counts = counts_from(e);
  const CountsTable round_trip = counts_from_json(counts_to_json(counts));
  REQUIRE(round_trip.n == counts.n);
  for (std::size_t sa = 0; sa < 2; ++sa)
    for (std::size_t sb = 0; sb < 2; ++sb)
      CHECK(e_value(round_trip, sa, sb) == e_value(counts, sa, sb));
  CHECK(chsh_s(round_trip) == chsh_s(counts));
  CHECK(nosignal_delta(round_trip) == nosignal_delta(counts));
}

TEST_CASE("report invariants hold on random ensembles") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Ensemble e = bell_ensemble(2, 2);
    e.seed = seed;
    RandomStream s(seed, 7);
    const std::uint64_t rounds = 200 + s.next_u32() % 800;
    for (std::uint64_t i = 0; i < rounds; ++i)
      push(e, s.next_u32() % 2, s.next_u32() % 2, s.next_unit() < 0.7 ? +1 : -1,
           s.next_unit() < 0.3 ? +1 : -1, s.next_unit() < 0.9);
    const StatsReport rep = build_report(e);
    CHECK(rep.counts.total() == rep.n_kept);
    CHECK(rep.n_kept == e.n_kept);
    for (std::size_t p = 0; p < 4; ++p)
      if (rep.pair_populated[p]) {
        CHECK(rep.e_values[p] >= -1.0);
        CHECK(rep.e_values[p] <= 1.0);
      }
    if (rep.chsh) {
      CHECK(*rep.chsh >= -4.0);
      CHECK(*rep.chsh <= 4.0);
    }
    if (rep.nosignal) {
      CHECK(*rep.nosignal >= 0.0);
      CHECK(*rep.nosignal <= 1.0);
    }
    CHECK(rep.keep_rate >= 0.0);
    CHECK(rep.keep_rate <= 1.0);
  }
}

TEST_CASE("tv_distance is half the l1 gap") {
  const std::vector<double> a{0.5, 0.5, 0.0, 0.0};
  const std::vector<double> b{0.0, 0.5, 0.5, 0.0};
  CHECK(tv_distance(a, b) == Catch::Approx(0.5).margin(1e-15));
  CHECK(tv_distance(a, a) == 0.0);
}
