/* Copyright 2026 The hemoseg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <vector>

namespace hemoseg {

/// Fixed block size for reductions. Partial sums are formed per block and folded
/// in block order, so results do not depend on the number of OpenMP threads.
inline constexpr std::size_t kReductionBlock = 4096;

/// Voxel loops below this size run on the calling thread.
inline constexpr std::size_t kParallelMinVoxels = 1u << 15;

/// Deterministic parallel reduction over [0, n).
///
/// `body(begin, end, acc)` accumulates one block into a zero-initialized `acc`;
/// `fold(total, acc)` merges blocks serially in ascending block order.
template <typename Acc, typename Body, typename Fold>
Acc blocked_reduce(std::size_t n, const Acc& zero, Body&& body, Fold&& fold) {
  const std::size_t blocks = (n + kReductionBlock - 1) / kReductionBlock;
  std::vector<Acc> partial(blocks, zero);
  const long nblocks = static_cast<long>(blocks);
#pragma omp parallel for schedule(static) if (blocks > 1)
  for (long b = 0; b < nblocks; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReductionBlock;
    const std::size_t end = begin + kReductionBlock < n ? begin + kReductionBlock : n;
    body(begin, end, partial[static_cast<std::size_t>(b)]);
  }
  Acc total = zero;
  for (const Acc& acc : partial) fold(total, acc);
  return total;
}

/// Runs `body(i)` for i in [0, n), across threads when `parallel` is set.
template <typename Body>
void parallel_for(long n, bool parallel, Body&& body) {
  if (parallel) {
#pragma omp parallel for schedule(static)
    for (long i = 0; i < n; ++i) body(i);
  } else {
    for (long i = 0; i < n; ++i) body(i);
  }
}

}  // namespace hemoseg
