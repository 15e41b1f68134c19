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

#include <cmath>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/series.hpp"
#include "doctest.h"
#include "oracles.hpp"

using branchlab::OffspringLaw;
using branchlab::TruncatedSeries;

namespace {

const OffspringLaw kSub({0.5, 0.25, 0.25});
const OffspringLaw kCrit({0.25, 0.5, 0.25});
const OffspringLaw kSuper({0.25, 0.25, 0.5});

// Critical linear-fractional law with B = 1.
const branchlab::LinearFractionalParams kLfCrit{0.25, 0.5};
const branchlab::LinearFractionalParams kLfSub{0.3, 0.4};
const branchlab::LinearFractionalParams kLfSuper{0.45, 0.4};

}  // namespace

TEST_CASE("compose with the identity") {
  const auto f = TruncatedSeries::FromLaw(kCrit);
  const auto id = TruncatedSeries::Identity(8);
  const auto a = branchlab::compose(f, id);
  const auto b = branchlab::compose(id, TruncatedSeries(std::vector<double>{0.25, 0.5, 0.25, 0, 0, 0, 0, 0, 0}, 0.0));
  for (std::size_t j = 0; j <= 8; ++j) {
    CHECK(a[j] == f[j]);
    CHECK(b[j] == f[j]);
  }
}

TEST_CASE("compose F with F") {
  const auto f = TruncatedSeries::FromLaw(kCrit);
  const auto ff = branchlab::compose(f, TruncatedSeries(std::vector<double>{0.25, 0.5, 0.25, 0, 0}, 0.0));
  CHECK(ff[0] == doctest::Approx(0.390625).epsilon(1e-15));
  CHECK(*ff.tail_bound() < 1e-15);
}

TEST_CASE("compose rejects a truncated outer series at inner[0] = 1") {
  TruncatedSeries outer(std::vector<double>{0.5, 0.25}, 0.25);
  TruncatedSeries inner(std::vector<double>{1.0, 0.0}, 0.0);
  CHECK_THROWS_AS(branchlab::compose(outer, inner), branchlab::DomainError);
  CHECK_THROWS_AS(branchlab::iterate_gf(kCrit, 2, branchlab::kMaxOrder + 1),
                  branchlab::TruncationError);
}

TEST_CASE("iterate_gf small cases") {
  const auto f0 = branchlab::iterate_gf(kCrit, 0, 10);
  CHECK(f0[0] == 0.0);
  CHECK(f0[1] == 1.0);
  CHECK(f0[2] == 0.0);
  const auto f1 = branchlab::iterate_gf(kCrit, 1, 10);
  CHECK(f1[0] == 0.25);
  CHECK(f1[1] == 0.5);
  CHECK(f1[2] == 0.25);
  const auto f2 = branchlab::iterate_gf(kCrit, 2, 10);
  CHECK(f2[0] == doctest::Approx(0.390625).epsilon(1e-15));
}

TEST_CASE("iterates match exhaustive enumeration") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    for (unsigned n = 1; n <= 4; ++n) {
      const auto ref = oracle::NStepByEnumeration(*law, 1, n);
      const auto fn = branchlab::iterate_gf(*law, n, ref.size() - 1);
      for (std::size_t j = 0; j < ref.size(); ++j) CHECK(fn[j] == doctest::Approx(ref[j]).epsilon(1e-13));
    }
  }
}

TEST_CASE("transition probabilities") {
  CHECK(branchlab::transition_prob(kCrit, 3, 3, 0, 16) == 1.0);
  CHECK(branchlab::transition_prob(kCrit, 3, 2, 0, 16) == 0.0);
  CHECK(branchlab::transition_prob(kCrit, 1, 0, 1, 16) == 0.25);
  double chapman = 0.0;
  for (unsigned k = 0; k <= 2; ++k) {
    const double p1k = kCrit.p(k);
    const double pk2 = k == 0 ? 0.0 : oracle::SumOfOffspringByEnumeration(kCrit, k)[2];
    chapman += p1k * pk2;
  }
  CHECK(branchlab::transition_prob(kCrit, 1, 2, 2, 16) == doctest::Approx(chapman).epsilon(1e-15));
  for (unsigned i = 1; i <= 3; ++i) {
    const auto ref = oracle::NStepByEnumeration(kSuper, i, 2);
    for (std::size_t j = 0; j < ref.size(); ++j) {
      CHECK(branchlab::transition_prob(kSuper, i, j, 2, 32) == doctest::Approx(ref[j]).epsilon(1e-14));
    }
  }
  CHECK_THROWS_AS(branchlab::transition_prob(kCrit, 1, 17, 3, 16), branchlab::TruncationError);
}

TEST_CASE("semigroup property") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    for (unsigned n = 0; n <= 6; ++n) {
      for (unsigned m = 0; n + m <= 12; m += 3) {
        const std::size_t order = 128;
        const auto lhs = branchlab::iterate_gf(*law, n + m, order);
        const auto rhs = branchlab::compose(branchlab::iterate_gf(*law, n, order),
                                            branchlab::iterate_gf(*law, m, order));
        for (std::size_t j = 0; j <= order; ++j) CHECK(std::abs(lhs[j] - rhs[j]) < 1e-12);
      }
    }
  }
}

TEST_CASE("rows are stochastic once the tail is counted") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    for (unsigned n : {1U, 5U, 20U, 60U}) {
      for (unsigned i : {1U, 3U}) {
        const auto row = branchlab::TransitionRow(*law, i, n, 64);
        const double total = row.mass() + *row.tail_bound();
        CHECK(total >= 1.0 - 1e-10);
        CHECK(total <= 1.0 + 1e-10);
        for (double v : row.coeffs()) CHECK(v >= -1e-16);
      }
    }
  }
}

TEST_CASE("mean identity with tail-adjusted tolerance") {
  for (const auto* law : {&kSub, &kCrit}) {
    const auto fn = branchlab::iterate_gf(*law, 15, 256);
    CHECK(*fn.tail_bound() < 1e-12);
    CHECK(fn.FirstMoment() == doctest::Approx(std::pow(law->mean(), 15)).epsilon(1e-10));
  }
}

TEST_CASE("F_n(s) increases to q for s below q") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    const double q = branchlab::extinction_probability(*law);
    for (double s : {0.0, 0.2, 0.45}) {
      if (s >= q) continue;
      double prev = s;
      for (unsigned n = 1; n <= 40; ++n) {
        const double fn = static_cast<double>(q - branchlab::r_function(*law, n, s));
        CHECK(fn >= prev);
        CHECK(fn <= q);
        prev = fn;
      }
    }
  }
}

TEST_CASE("R_n at the fixed point and at n = 0") {
  const double q = branchlab::extinction_probability(kSuper);
  for (unsigned n : {0U, 1U, 10U, 400U}) CHECK(branchlab::r_function(kSuper, n, q) == 0.0L);
  CHECK(static_cast<double>(branchlab::r_function(kSuper, 0, 0.0)) == doctest::Approx(q));
  CHECK(static_cast<double>(branchlab::r_function(kCrit, 0, 0.0)) == 1.0);
}

TEST_CASE("recentred R_n agrees with naive iteration where the latter is accurate") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    const double q = branchlab::extinction_probability(*law);
    for (unsigned n : {1U, 3U, 10U}) {
      for (double s : {0.0, 0.3, 0.7}) {
        const long double naive = q - oracle::NaiveIterate(*law, n, s);
        CHECK(static_cast<double>(branchlab::r_function(*law, n, s)) ==
              doctest::Approx(static_cast<double>(naive)).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("chain-rule derivative matches finite differences") {
  const double h = 1e-6;
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    for (unsigned n : {1U, 5U, 50U}) {
      for (double s : {0.1, 0.4, 0.8}) {
        const long double fd =
            (branchlab::r_function(*law, n, s + h) - branchlab::r_function(*law, n, s - h)) / (2 * h);
        const double d = branchlab::r_derivative(*law, n, s);
        CHECK(std::abs(d - static_cast<double>(fd)) < 1e-6 * std::abs(d));
      }
    }
  }
}

TEST_CASE("linear-fractional closed form") {
  CHECK(branchlab::lf_iterate(kLfCrit, 0, 0.3) == 0.3);
  CHECK(kLfCrit.critical());
  CHECK(kLfCrit.B() == doctest::Approx(1.0));
  CHECK(kLfCrit.p0() == doctest::Approx(0.5));
  for (unsigned n = 1; n <= 50; ++n) {
    CHECK(branchlab::lf_iterate(kLfCrit, n, 0.0) == doctest::Approx(n / (n + 1.0)).epsilon(1e-15));
  }
  // One step of the closed form is F itself.
  for (const auto& lf : {kLfSub, kLfSuper, kLfCrit}) {
    for (double s : {0.0, 0.3, 0.9}) CHECK(branchlab::lf_iterate(lf, 1, s) == doctest::Approx(lf.Eval(s)).epsilon(1e-14));
  }
  CHECK_THROWS_AS(branchlab::LinearFractionalParams({0.6, 0.5}).Validate(), branchlab::InvalidModel);
}

TEST_CASE("linear-fractional closed form agrees with the series engine") {
  for (const auto& lf : {kLfSub, kLfCrit, kLfSuper}) {
    const auto law = lf.TruncatedLaw();
    const TruncatedSeries f = TruncatedSeries::FromLaw(law);
    TruncatedSeries fn = TruncatedSeries::Identity(512);
    for (unsigned n = 1; n <= 30; ++n) {
      fn = branchlab::compose(f, fn);
      for (double s : {0.0, 0.3, 0.7, 0.9}) {
        CHECK(std::abs(fn.Evaluate(s) - branchlab::lf_iterate(lf, n, s)) < 1e-12);
      }
    }
  }
}

TEST_CASE("critical linear-fractional R_n has no error term") {
  const auto law = kLfCrit.TruncatedLaw();
  for (unsigned n : {1U, 10U, 100U, 400U}) {
    for (double s : {0.0, 0.5}) {
      const double expect = (1.0 - s) / ((1.0 - s) * n + 1.0);
      CHECK(static_cast<double>(branchlab::r_function(law, n, s)) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("serial and OpenMP products are bit-identical") {
  const auto a = branchlab::iterate_gf(kCrit, 30, 700, branchlab::Backend::kSerial);
  const auto b = branchlab::iterate_gf(kCrit, 30, 700, branchlab::Backend::kOpenMP);
  for (std::size_t j = 0; j <= 700; ++j) CHECK(a[j] == b[j]);
}
