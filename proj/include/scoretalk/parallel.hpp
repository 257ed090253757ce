#ifndef SCORETALK_PARALLEL_HPP
#define SCORETALK_PARALLEL_HPP

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace scoretalk {

/// SplitMix64 finaliser; used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Engine for sub-stream (seed, stream, block). Distinct triples give
/// unrelated sequences, so work can be split into blocks and reduced in
/// block order independently of the worker count.
inline std::mt19937_64 stream_engine(std::uint64_t seed, std::uint64_t stream, std::uint64_t block) {
  const std::uint64_t s = mix64(mix64(mix64(seed) ^ stream) ^ block);
  std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(block)};
  return std::mt19937_64(seq);
}

/// Runs body(chunk) for chunk in [0, chunks) on up to `threads` workers.
/// Callers write results into per-chunk slots and reduce in chunk order.
template <class Body> void parallel_chunks(std::size_t chunks, unsigned threads, Body &&body) {
  threads = std::max(1U, std::min<unsigned>(threads, static_cast<unsigned>(chunks)));
  if (threads <= 1) {
    for (std::size_t c = 0; c < chunks; ++c)
      body(c);
    return;
  }
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> workers;
  workers.reserve(threads);
  for (unsigned t = 0; t < threads; ++t)
    workers.emplace_back([&, t] {
      try {
        for (std::size_t c = t; c < chunks; c += threads)
          body(c);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error)
          error = std::current_exception();
      }
    });
  for (auto &w : workers)
    w.join();
  if (error)
    std::rethrow_exception(error);
}

} // namespace scoretalk

#endif // SCORETALK_PARALLEL_HPP
