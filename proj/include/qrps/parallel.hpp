#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "qrps/errors.hpp"

namespace qrps::detail {

template <typename Record>
struct RunResult {
  std::vector<Record> records;  // trial order; kept only, unless store_discarded
  std::uint64_t trials = 0;
  std::uint64_t kept = 0;
};

// Runs fn(t) -> {record, kept} for t in [0, n_rounds). fn must be a pure
// function of the trial index, so records and counts come out identical for
// every thread count.
template <typename Record, typename Fn>
RunResult<Record> run_fixed_rounds(std::uint64_t n_rounds, int threads,
                                   bool store_discarded, Fn&& fn) {
  RunResult<Record> out;
  out.trials = n_rounds;
  if (threads <= 1) {
    if (store_discarded) out.records.reserve(n_rounds);
    for (std::uint64_t t = 0; t < n_rounds; ++t) {
      auto [rec, keep] = fn(t);
      if (keep) ++out.kept;
      if (keep || store_discarded) out.records.push_back(std::move(rec));
    }
    return out;
  }

  const int n_chunks = threads;
  std::vector<std::vector<Record>> chunk_records(n_chunks);
  std::vector<std::uint64_t> chunk_kept(n_chunks, 0);
  std::vector<std::thread> pool;
  pool.reserve(n_chunks);
  for (int c = 0; c < n_chunks; ++c) {
    pool.emplace_back([&, c] {
      const std::uint64_t lo = n_rounds * c / n_chunks;
      const std::uint64_t hi = n_rounds * (c + 1) / n_chunks;
      auto& recs = chunk_records[c];
      for (std::uint64_t t = lo; t < hi; ++t) {
        auto [rec, keep] = fn(t);
        if (keep) ++chunk_kept[c];
        if (keep || store_discarded) recs.push_back(std::move(rec));
      }
    });
  }
  for (auto& th : pool) th.join();
  for (int c = 0; c < n_chunks; ++c) {
    out.kept += chunk_kept[c];
    out.records.insert(out.records.end(),
                       std::make_move_iterator(chunk_records[c].begin()),
                       std::make_move_iterator(chunk_records[c].end()));
  }
  return out;
}

// Runs fn(t) over t = 0, 1, 2, ... until n_kept records are kept, stopping
// exactly at the trial that keeps the n_kept-th record. Trials are evaluated
// in fixed-size blocks (parallel inside a block, scanned serially in trial
// order), so the result is independent of the thread count.
template <typename Record, typename Fn>
RunResult<Record> run_until_kept(std::uint64_t n_kept, std::uint64_t budget,
                                 int threads, bool store_discarded, Fn&& fn) {
  RunResult<Record> out;
  if (n_kept == 0) return out;
  out.records.reserve(store_discarded ? 0 : n_kept);

  constexpr std::uint64_t kBlock = 1u << 16;
  std::vector<std::pair<Record, bool>> block;
  for (std::uint64_t base = 0; base < budget; base += kBlock) {
    const std::uint64_t len = std::min<std::uint64_t>(kBlock, budget - base);
    block.clear();
    block.resize(len);
    if (threads <= 1) {
      for (std::uint64_t i = 0; i < len; ++i) block[i] = fn(base + i);
    } else {
      std::vector<std::thread> pool;
      pool.reserve(threads);
      for (int c = 0; c < threads; ++c) {
        pool.emplace_back([&, c] {
          const std::uint64_t lo = len * c / threads;
          const std::uint64_t hi = len * (c + 1) / threads;
          for (std::uint64_t i = lo; i < hi; ++i) block[i] = fn(base + i);
        });
      }
      for (auto& th : pool) th.join();
    }
    for (std::uint64_t i = 0; i < len; ++i) {
      ++out.trials;
      auto& [rec, keep] = block[i];
      if (keep || store_discarded) out.records.push_back(std::move(rec));
      if (keep && ++out.kept == n_kept) return out;
    }
  }
  throw BudgetExceededError("constraint too selective: " + std::to_string(out.kept) +
                            " of " + std::to_string(n_kept) + " draws kept after " +
                            std::to_string(out.trials) + " trials");
}

}  // namespace qrps::detail
