// Copyright Contributors to the splatstyle Project
// SPDX-License-Identifier: Apache-2.0
//
#pragma once

#include <functional>

namespace splatstyle {

/// Worker count used by the internal kernels. Defaults to the number of hardware threads.
int thread_count();
void set_thread_count(int n);

/// Runs fn(chunk) for chunk in [0, chunks). Chunks are handed out to at most thread_count()
/// workers; callers that reduce per-chunk partials must merge them in chunk order so the result
/// does not depend on the worker count.
void parallel_chunks(int chunks, const std::function<void(int)>& fn);

} // namespace splatstyle
