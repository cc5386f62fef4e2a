// SPDX-License-Identifier: Apache-2.0
#include "stssl/common/allocator.hpp"

#if defined(__GLIBC__)
#include <malloc.h>
#endif

namespace stssl {

void retain_freed_memory() {
#if defined(__GLIBC__)
  constexpr int kThreshold = 1 << 30;
  mallopt(M_MMAP_THRESHOLD, kThreshold);
  mallopt(M_TRIM_THRESHOLD, kThreshold);
#endif
}

}  // namespace stssl
