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
#include "branchlab/offspring_model.hpp"
#include "branchlab/series.hpp"
#include "doctest.h"

using branchlab::OffspringLaw;

namespace {

const OffspringLaw kSub({0.5, 0.25, 0.25});
const OffspringLaw kCrit({0.25, 0.5, 0.25});
const OffspringLaw kSuper({0.25, 0.25, 0.5});

}  // namespace

TEST_CASE("gf_eval on the reference laws") {
  CHECK(branchlab::gf_eval(kCrit, 1.0, 0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(branchlab::gf_eval(kCrit, 1.0, 2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(branchlab::gf_eval(kSuper, 0.5, 1) == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(branchlab::gf_eval(kSuper, 0.3, 3) == 0.0);
  CHECK_THROWS_AS(branchlab::gf_eval(kCrit, 1.5, 0), branchlab::DomainError);
  CHECK_THROWS_AS(branchlab::gf_eval(kCrit, 0.5, 4), branchlab::DomainError);
}

TEST_CASE("higher derivatives match term-by-term sums") {
  const OffspringLaw law({0.1, 0.2, 0.3, 0.15, 0.25});
  const double s = 0.7;
  double f3 = 0.0;
  for (int k = 3; k <= 4; ++k) f3 += k * (k - 1) * (k - 2) * law.p(k) * std::pow(s, k - 3);
  CHECK(law.Eval(s, 3) == doctest::Approx(f3).epsilon(1e-14));
  CHECK(static_cast<double>(law.EvalLong(s, 3)) == doctest::Approx(f3).epsilon(1e-14));
}

TEST_CASE("validation rejects laws outside the standing assumptions") {
  CHECK_THROWS_AS(OffspringLaw({0.0, 0.5, 0.5}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw({0.5, 0.5}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw({1.0}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw({0.5, 0.6, -0.1}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw({0.5, 0.25, 0.26}), branchlab::InvalidModel);
  CHECK(OffspringLaw({0.5, 0.0, 0.5, 0.0, 0.0}).max_offspring() == 2);
}

TEST_CASE("JSON ingestion normalizes only near-unit sums") {
  auto law = OffspringLaw::FromJson({{"p", {0.5, 0.25, 0.25 + 5e-10}}});
  double sum = 0.0;
  for (double v : law.probs()) sum += v;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(OffspringLaw::FromJson({{"p", {0.5, 0.25, 0.26}}}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw::FromJson({{"q", {0.5, 0.5}}}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw::FromJson({{"p", {"a"}}}), branchlab::InvalidModel);
  CHECK_THROWS_AS(OffspringLaw::FromFile("/nonexistent/model.json"), branchlab::InvalidModel);
}

TEST_CASE("hash depends on the probabilities only") {
  CHECK(kCrit.Hash() == OffspringLaw({0.25, 0.5, 0.25}).Hash());
  CHECK(kCrit.Hash() != kSub.Hash());
}

TEST_CASE("extinction probability") {
  CHECK(branchlab::extinction_probability(kCrit) == 1.0);
  CHECK(branchlab::extinction_probability(kSub) == 1.0);
  const double q = branchlab::extinction_probability(kSuper);
  CHECK(q == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::abs(kSuper.Eval(q) - q) < 1e-14);
  // Quartic law with an irrational root: check the fixed point and that it
  // is the smaller root.
  const OffspringLaw law({0.2, 0.1, 0.3, 0.1, 0.3});
  const double r = branchlab::extinction_probability(law);
  CHECK(r > 0.0);
  CHECK(r < 1.0);
  CHECK(std::abs(law.Eval(r) - r) < 1e-14);
  for (double s = 0.0; s < r - 1e-6; s += 0.01) CHECK(law.Eval(s) > s);
}

TEST_CASE("model constants of the reference laws") {
  auto sub = branchlab::model_constants(kSub);
  CHECK(sub.regime == branchlab::Regime::kSubcritical);
  CHECK(sub.beta == doctest::Approx(0.75));
  CHECK(sub.alpha == doctest::Approx(5.0 / 3.0).epsilon(1e-14));
  CHECK(sub.gamma() == doctest::Approx(8.0 / 3.0).epsilon(1e-14));
  CHECK(sub.psi() == doctest::Approx(40.0).epsilon(1e-13));
  CHECK(sub.decay_rate() == doctest::Approx(0.2876820724517809).epsilon(1e-14));

  auto crit = branchlab::model_constants(kCrit);
  CHECK(crit.critical());
  CHECK(crit.beta == 1.0);
  CHECK(crit.q == 1.0);
  CHECK(crit.B == doctest::Approx(0.25));
  CHECK(crit.alpha == doctest::Approx(1.5));
  CHECK_THROWS_AS(crit.gamma(), branchlab::RegimeError);

  auto sup = branchlab::model_constants(kSuper);
  CHECK(sup.regime == branchlab::Regime::kSupercritical);
  CHECK(sup.q == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sup.beta == doctest::Approx(0.75).epsilon(1e-14));
  // b = q F''(q) = 0.5 * 1.
  CHECK(sup.alpha == doctest::Approx(1.0 + 0.5 / 0.75).epsilon(1e-13));
}

TEST_CASE("F is non-decreasing and convex on [0, 1]") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    for (double s1 = 0.0; s1 < 1.0; s1 += 0.05) {
      const double s2 = s1 + 0.05;
      CHECK(law->Eval(s1) <= law->Eval(s2));
      CHECK(law->Eval(s1, 1) <= law->Eval(s2, 1));
    }
  }
}

TEST_CASE("beta equals the mean below criticality and is below 1 off criticality") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    auto k = branchlab::model_constants(*law);
    if (k.regime != branchlab::Regime::kSupercritical) CHECK(k.beta == doctest::Approx(k.A));
    CHECK((k.beta < 1.0) == (k.A != 1.0));
    if (k.b > 0.0) CHECK(k.alpha > 1.0);
  }
}

TEST_CASE("mean of the n-step law is A^n") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    const double A = law->mean();
    for (unsigned n = 0; n <= 10; ++n) {
      const auto fn = branchlab::iterate_gf(*law, n, std::size_t{1} << n);
      REQUIRE(*fn.tail_bound() < 1e-12);
      CHECK(fn.FirstMoment() == doctest::Approx(std::pow(A, n)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dual law") {
  auto dual = branchlab::DualLaw(kSuper, 0.5);
  // F(0.5 s)/0.5 = 0.5 + 0.25 s + 0.25 s^2.
  CHECK(dual.p(0) == doctest::Approx(0.5));
  CHECK(dual.p(1) == doctest::Approx(0.25));
  CHECK(dual.p(2) == doctest::Approx(0.25));
  CHECK(branchlab::DualLaw(kCrit, 1.0).Hash() == kCrit.Hash());
}

TEST_CASE("fixed point expansion reproduces q - F(q - r)") {
  for (const auto* law : {&kSub, &kCrit, &kSuper}) {
    const auto k = branchlab::model_constants(*law);
    const branchlab::FixedPointExpansion fx(*law, k);
    for (double r : {-0.3, -0.01, 0.0, 0.2, 0.45}) {
      CHECK(static_cast<double>(fx.Decay(r)) ==
            doctest::Approx(k.q - law->Eval(k.q - r)).epsilon(1e-13));
      CHECK(static_cast<double>(fx.Slope(r)) ==
            doctest::Approx(law->Eval(k.q - r, 1)).epsilon(1e-13));
    }
  }
}
