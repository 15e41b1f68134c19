// Copyright 2026 The branchlab Authors.
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

#ifndef BRANCHLAB_KERNELS_HPP_
#define BRANCHLAB_KERNELS_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace branchlab {

// Execution backend for the dense kernels. Both produce bit-identical
// results: each output element is reduced in the same fixed order.
enum class Backend { kSerial, kOpenMP };

Backend DefaultBackend();
bool OpenMPAvailable();

// Applies BRANCHLAB_THREADS (if set) as the OpenMP thread cap. Returns the
// number of threads the OpenMP backend will use.
int ConfigureThreadsFromEnv();

// out[k] = sum_{j<=k} a[j] b[k-j] for k < out.size().
void TruncatedProduct(std::span<const double> a, std::span<const double> b,
                      std::span<double> out, Backend backend);

// out[j] = sum_i v[i] m[i * cols + j]; m is row-major with v.size() rows.
void RowVectorTimesMatrix(std::span<const double> v, std::span<const double> m,
                          std::size_t cols, std::span<double> out, Backend backend);

}  // namespace branchlab

#endif  // BRANCHLAB_KERNELS_HPP_
