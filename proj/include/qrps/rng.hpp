#pragma once

#include <array>
#include <cassert>
#include <cstdint>
#include <span>

namespace qrps {

// Philox4x32-10 block function (Salmon et al., "Parallel random numbers:
// as easy as 1, 2, 3", SC 2011). A keyed bijection on 128-bit counters;
// distinct (key, counter) pairs yield independent-looking 128-bit blocks,
// which is what makes per-round streams cheap.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
    ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
           static_cast<std::uint32_t>(p1),
           static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
           static_cast<std::uint32_t>(p0)};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

// One logical random stream, identified by (seed, stream_id). Simulations
// give round i the stream with id i, so the values drawn in a round depend
// only on (seed, i) and never on how rounds are scheduled across threads.
class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        stream_lo_(static_cast<std::uint32_t>(stream_id)),
        stream_hi_(static_cast<std::uint32_t>(stream_id >> 32)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return block_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t lo = next_u32();
    const std::uint64_t hi = next_u32();
    return (hi << 32) | lo;
  }

  // Uniform on [0, 1) with 53 random bits.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Inverse-CDF draw over category indices in index order. Consumes exactly
  // one uniform. Zero-probability categories are never selected, even when
  // the row sums to 1 only within rounding (the slack lands on the last
  // positive category).
  int categorical(std::span<const double> probs) {
    const double u = next_unit();
    double cum = 0.0;
    int last_positive = -1;
    for (std::size_t k = 0; k < probs.size(); ++k) {
      if (probs[k] > 0.0) {
        cum += probs[k];
        last_positive = static_cast<int>(k);
        if (u < cum) return last_positive;
      }
    }
    assert(last_positive >= 0 && "categorical row has no positive entry");
    return last_positive;
  }

 private:
  void refill() {
    block_ = philox4x32({stream_lo_, stream_hi_, static_cast<std::uint32_t>(draw_),
                         static_cast<std::uint32_t>(draw_ >> 32)},
                        key_);
    ++draw_;
    pos_ = 0;
  }

  std::array<std::uint32_t, 2> key_;
  std::uint32_t stream_lo_;
  std::uint32_t stream_hi_;
  std::uint64_t draw_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int pos_ = 4;
};

}  // namespace qrps
