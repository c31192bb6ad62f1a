// Copyright 2026 The camnorm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CAMNORM_PARALLEL_HPP_
#define CAMNORM_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace camnorm {

// Worker count: CAMNORM_THREADS if set and positive, otherwise the hardware
// concurrency (at least 1).
std::size_t thread_budget();

// Runs fn(i) for i in [0, n). Tasks must write to disjoint state; the first
// exception thrown by any task is rethrown after all workers join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace camnorm

#endif  // CAMNORM_PARALLEL_HPP_
