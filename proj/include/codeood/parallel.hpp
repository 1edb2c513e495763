/*
 * Copyright 2026 The CodeOOD Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef CODEOOD_PARALLEL_HPP_
#define CODEOOD_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace codeood {

// Worker count: CODEOOD_THREADS when set to a positive integer, otherwise the
// hardware concurrency (at least 1).
std::size_t WorkerCount();

// Runs body(i) for i in [0, count). Each index must write only to its own
// output slot; results are then independent of the worker count. The first
// exception thrown by any body is rethrown on the calling thread.
void ParallelFor(std::size_t count, const std::function<void(std::size_t)>& body,
                 std::size_t max_workers = 0);

}  // namespace codeood

#endif  // CODEOOD_PARALLEL_HPP_
