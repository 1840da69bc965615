#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdint>
#include <vector>

#include "qrps/rng.hpp"

using namespace qrps;

TEST_CASE("philox4x32-10 known-answer vectors") {
  // Reference vectors from the Random123 distribution (kat_vectors).
  {
    auto out = philox4x32({0u, 0u, 0u, 0u}, {0u, 0u});
    CHECK(out[0] == 0x6627e8d5u);
    CHECK(out[1] == 0xe169c58du);
    CHECK(out[2] == 0xbc57ac4cu);
    CHECK(out[3] == 0x9b00dbd8u);
  }
  {
    auto out = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu},
                          {0xffffffffu, 0xffffffffu});
    CHECK(out[0] == 0x408f276du);
    CHECK(out[1] == 0x41c83b0eu);
    CHECK(out[2] == 0xa20bc7c6u);
    CHECK(out[3] == 0x6d5451fdu);
  }
  {
    auto out = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u},
                          {0xa4093822u, 0x299f31d0u});
    CHECK(out[0] == 0xd16cfe09u);
    CHECK(out[1] == 0x94fdccebu);
    CHECK(out[2] == 0x5001e420u);
    CHECK(out[3] == 0x24126ea1u);
  }
}

TEST_CASE("streams are reproducible and distinct") {
  RandomStream a(42, 7);
  RandomStream b(42, 7);
  RandomStream c(42, 8);
  RandomStream d(43, 7);
  bool same = true, differs_stream = false, differs_seed = false;
  for (int i = 0; i < 64; ++i) {
    const auto va = a.next_u32();
    same = same && (va == b.next_u32());
    differs_stream = differs_stream || (va != c.next_u32());
    differs_seed = differs_seed || (va != d.next_u32());
  }
  CHECK(same);
  CHECK(differs_stream);
  CHECK(differs_seed);
}

TEST_CASE("next_unit stays in [0,1) and covers the range") {
  RandomStream s(1, 0);
  double lo = 1.0, hi = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    lo = std::min(lo, u);
    hi = std::max(hi, u);
  }
  CHECK(lo < 1e-3);
  CHECK(hi > 1.0 - 1e-3);
}

TEST_CASE("fair coin frequency at 2e6 draws") {
  // Binomial 3-sigma at N=2e6 is ~0.00106; the bound below sits above it.
  const std::uint64_t n = 2000000;
  std::uint64_t zeros = 0;
  const std::vector<double> fair{0.5, 0.5};
  for (std::uint64_t i = 0; i < n; ++i) {
    RandomStream s(123, i);
    if (s.categorical(fair) == 0) ++zeros;
  }
  const double freq = static_cast<double>(zeros) / static_cast<double>(n);
  CHECK(freq == Catch::Approx(0.5).margin(0.002));
}

TEST_CASE("categorical never selects zero-probability categories") {
  const std::vector<double> row{0.0, 0.5, 0.0, 0.5};
  for (std::uint64_t i = 0; i < 20000; ++i) {
    RandomStream s(9, i);
    const int k = s.categorical(row);
    REQUIRE((k == 1 || k == 3));
  }
}

TEST_CASE("categorical inverse-CDF uses index order") {
  // With u < 0.3 the first category wins; the draw consumes one uniform.
  const std::vector<double> row{0.3, 0.7};
  RandomStream probe(5, 11);
  const double u = probe.next_unit();
  RandomStream s(5, 11);
  CHECK(s.categorical(row) == (u < 0.3 ? 0 : 1));
}
