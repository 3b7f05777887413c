// Copyright 2026 The distwave Authors.
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

#pragma once

namespace distwave {

// Selects between the OpenMP kernels and their serial reference versions.
// Both paths produce bit-identical results; the serial one is kept for tests
// and for benchmarking the parallel speedup.
enum class Exec { kSerial, kParallel };

// Number of threads the parallel paths will use (1 without OpenMP).
int max_threads();

// Sets the OpenMP thread count; values < 1 are ignored.
void set_threads(int threads);

}  // namespace distwave
