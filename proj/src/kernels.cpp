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

#include "branchlab/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <string>

#ifdef BRANCHLAB_HAVE_OPENMP
#include <omp.h>
#endif

#include "branchlab/error.hpp"

namespace branchlab {

bool OpenMPAvailable() {
#ifdef BRANCHLAB_HAVE_OPENMP
  return true;
#else
  return false;
#endif
}

Backend DefaultBackend() { return OpenMPAvailable() ? Backend::kOpenMP : Backend::kSerial; }

int ConfigureThreadsFromEnv() {
#ifdef BRANCHLAB_HAVE_OPENMP
  if (const char* env = std::getenv("BRANCHLAB_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) omp_set_num_threads(static_cast<int>(n));
  }
  return omp_get_max_threads();
#else
  return 1;
#endif
}

namespace {

inline double ProductTerm(std::span<const double> a, std::span<const double> b, std::size_t k) {
  const std::size_t lo = k >= b.size() ? k - b.size() + 1 : 0;
  const std::size_t hi = std::min(k, a.size() - 1);
  double acc = 0.0;
  for (std::size_t j = lo; j <= hi; ++j) acc += a[j] * b[k - j];
  return acc;
}

}  // namespace

void TruncatedProduct(std::span<const double> a, std::span<const double> b,
                      std::span<double> out, Backend backend) {
  const std::size_t n = out.size();
  if (a.empty() || b.empty()) {
    std::fill(out.begin(), out.end(), 0.0);
    return;
  }
  if (backend == Backend::kOpenMP && OpenMPAvailable()) {
    const long long nn = static_cast<long long>(n);
#ifdef BRANCHLAB_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 16) if (nn >= 128)
#endif
    for (long long k = 0; k < nn; ++k) {
      const auto kk = static_cast<std::size_t>(k);
      out[kk] = kk <= a.size() + b.size() - 2 ? ProductTerm(a, b, kk) : 0.0;
    }
    return;
  }
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = k <= a.size() + b.size() - 2 ? ProductTerm(a, b, k) : 0.0;
  }
}

void RowVectorTimesMatrix(std::span<const double> v, std::span<const double> m,
                          std::size_t cols, std::span<double> out, Backend backend) {
  if (m.size() != v.size() * cols || out.size() != cols) {
    throw DomainError("RowVectorTimesMatrix: shape mismatch");
  }
  const std::size_t rows = v.size();
  auto column = [&](std::size_t j) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rows; ++i) acc += v[i] * m[i * cols + j];
    return acc;
  };
  if (backend == Backend::kOpenMP && OpenMPAvailable()) {
    const long long nc = static_cast<long long>(cols);
#ifdef BRANCHLAB_HAVE_OPENMP
#pragma omp parallel for schedule(static) if (nc >= 64)
#endif
    for (long long j = 0; j < nc; ++j) out[static_cast<std::size_t>(j)] = column(static_cast<std::size_t>(j));
    return;
  }
  for (std::size_t j = 0; j < cols; ++j) out[j] = column(j);
}

}  // namespace branchlab
