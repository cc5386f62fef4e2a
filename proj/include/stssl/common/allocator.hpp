// SPDX-License-Identifier: Apache-2.0
#pragma once

namespace stssl {

/// Keeps large activation buffers on the heap instead of returning them to
/// the kernel after every pass. No-op outside glibc.
void retain_freed_memory();

}  // namespace stssl
