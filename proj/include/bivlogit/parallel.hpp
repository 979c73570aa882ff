#pragma once

#include <cstddef>
#include <vector>

namespace bivlogit::parallel {

// Chunk boundaries depend only on n and chunk, never on the thread count, and
// partial results are combined in chunk order. Results are therefore
// bit-identical for any OMP_NUM_THREADS.
template <class T, class Fn>
T chunked_reduce(std::size_t n, std::size_t chunk, const T& zero, Fn&& fn) {
  if (chunk == 0) chunk = 1;
  const std::size_t nchunks = (n + chunk - 1) / chunk;
  std::vector<T> partial(nchunks, zero);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t c = 0; c < static_cast<std::ptrdiff_t>(nchunks); ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * chunk;
    const std::size_t end = begin + chunk < n ? begin + chunk : n;
    fn(begin, end, partial[static_cast<std::size_t>(c)]);
  }
  T total = zero;
  for (auto& p : partial) total += p;
  return total;
}

// Same chunking, evaluated in a single thread.
template <class T, class Fn>
T chunked_reduce_serial(std::size_t n, std::size_t chunk, const T& zero, Fn&& fn) {
  if (chunk == 0) chunk = 1;
  T total = zero;
  for (std::size_t begin = 0; begin < n; begin += chunk) {
    const std::size_t end = begin + chunk < n ? begin + chunk : n;
    T part = zero;
    fn(begin, end, part);
    total += part;
  }
  return total;
}

}  // namespace bivlogit::parallel
