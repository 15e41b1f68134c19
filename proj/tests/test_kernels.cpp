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

#include <random>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/kernels.hpp"
#include "doctest.h"

using branchlab::Backend;

namespace {

std::vector<double> RandomVector(std::size_t n, unsigned seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

}  // namespace

TEST_CASE("truncated product against the schoolbook definition") {
  const auto a = RandomVector(37, 1);
  const auto b = RandomVector(53, 2);
  std::vector<double> ref(100, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j)
      if (i + j < ref.size()) ref[i + j] += a[i] * b[j];
  for (Backend backend : {Backend::kSerial, Backend::kOpenMP}) {
    std::vector<double> out(100);
    branchlab::TruncatedProduct(a, b, out, backend);
    for (std::size_t k = 0; k < out.size(); ++k) CHECK(out[k] == doctest::Approx(ref[k]).epsilon(1e-13));
  }
}

TEST_CASE("backends agree bit for bit") {
  const auto a = RandomVector(2000, 3);
  const auto b = RandomVector(2000, 4);
  std::vector<double> s(2000), p(2000);
  branchlab::TruncatedProduct(a, b, s, Backend::kSerial);
  branchlab::TruncatedProduct(a, b, p, Backend::kOpenMP);
  CHECK(s == p);

  const std::size_t rows = 300, cols = 257;
  const auto m = RandomVector(rows * cols, 5);
  const auto v = RandomVector(rows, 6);
  std::vector<double> vs(cols), vp(cols);
  branchlab::RowVectorTimesMatrix(v, m, cols, vs, Backend::kSerial);
  branchlab::RowVectorTimesMatrix(v, m, cols, vp, Backend::kOpenMP);
  CHECK(vs == vp);
  double ref = 0.0;
  for (std::size_t i = 0; i < rows; ++i) ref += v[i] * m[i * cols + 17];
  CHECK(vs[17] == doctest::Approx(ref).epsilon(1e-14));
}

TEST_CASE("shape mismatch is rejected") {
  std::vector<double> v(3), m(10), out(4);
  CHECK_THROWS_AS(branchlab::RowVectorTimesMatrix(v, m, 4, out, Backend::kSerial), branchlab::DomainError);
}

TEST_CASE("thread configuration") { CHECK(branchlab::ConfigureThreadsFromEnv() >= 1); }
