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

#include "branchlab/cumulative_state.hpp"
#include "branchlab/error.hpp"
#include "branchlab/q_process.hpp"
#include "doctest.h"
#include "oracles.hpp"

using branchlab::JointGF;
using branchlab::OffspringLaw;

namespace {

const OffspringLaw kSub({0.5, 0.25, 0.25});
const OffspringLaw kCrit({0.25, 0.5, 0.25});
const OffspringLaw kSuper({0.25, 0.25, 0.5});

struct ExactMoments {
  double ew = 0, es = 0, vw = 0, vs = 0, cov = 0;
};

ExactMoments Enumerated(const OffspringLaw& law, unsigned n) {
  ExactMoments m;
  const auto dist = oracle::JointByEnumeration(law, n);
  double ew2 = 0, es2 = 0, ews = 0;
  for (const auto& [state, p] : dist) {
    const double w = state.first, s = state.second;
    m.ew += p * w;
    m.es += p * s;
    ew2 += p * w * w;
    es2 += p * s * s;
    ews += p * w * s;
  }
  m.vw = ew2 - m.ew * m.ew;
  m.vs = es2 - m.es * m.es;
  m.cov = ews - m.ew * m.es;
  return m;
}

}  // namespace

TEST_CASE("total progeny generating function") {
  CHECK(branchlab::h_total_progeny(kSub, 1.0) == 1.0);
  CHECK(branchlab::h_total_progeny(kCrit, 1.0) == 1.0);
  // h = x F^(h) is a quadratic for these laws.
  CHECK(branchlab::h_total_progeny(kSub, 0.5) == doctest::Approx((7.0 - std::sqrt(41.0)) / 2.0).epsilon(1e-15));
  CHECK(branchlab::h_total_progeny(kSuper, 0.5) == doctest::Approx((7.0 - std::sqrt(41.0)) / 2.0).epsilon(1e-15));
  CHECK(branchlab::h_total_progeny(kCrit, 0.5) == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-15));
  const double d = 1e-6;
  CHECK((1.0 - branchlab::h_total_progeny(kSub, 1.0 - d)) / d == doctest::Approx(4.0).epsilon(1e-4));
  for (double x : {0.1, 0.5, 0.9}) {
    CHECK(branchlab::h_total_progeny(kSub, x) >= x * kSub.p(0));
    CHECK(branchlab::h_total_progeny(kSub, x) <= x);
  }
  CHECK_THROWS_AS(branchlab::h_total_progeny(kSub, 0.0), branchlab::DomainError);
  CHECK_THROWS_AS(branchlab::h_total_progeny(kSub, 3.0), branchlab::ConvergenceError);
}

TEST_CASE("R_n contraction") {
  for (const OffspringLaw& law : {kSub, kCrit, kSuper}) {
    const double beta = branchlab::model_constants(law).beta;
    for (double x : {0.3, 0.7, 0.99}) {
      const double h = branchlab::h_total_progeny(law, x);
      for (unsigned n = 1; n <= 60; ++n) {
        const double r = std::abs(h - branchlab::h_iterate(law, n, x));
        CHECK(r <= std::pow(beta, n - 1.0) * std::abs(h - x) + 1e-15);
      }
    }
  }
}

TEST_CASE("joint generating function") {
  for (const OffspringLaw& law : {kSub, kCrit, kSuper}) {
    const JointGF gf(law);
    const branchlab::QKernel kernel(law);
    for (unsigned n : {0u, 1u, 5u, 40u}) CHECK(gf.Evaluate(n, 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(branchlab::joint_gf(gf, 7, 1.0, 1.0) == 1.0);
    for (double s : {0.1, 0.5, 0.9}) {
      for (double x : {0.2, 0.8}) {
        CHECK(gf.Evaluate(1, s, x) == doctest::Approx(x * branchlab::y_gf(kernel, 1, 1, s)).epsilon(1e-14));
      }
      for (unsigned n : {1u, 10u, 60u}) {
        CHECK(std::abs(gf.Evaluate(n, s, 1.0) - branchlab::y_gf(kernel, 1, n, s)) < 1e-10);
      }
    }
  }
  const JointGF gf(kCrit);
  CHECK_THROWS_AS(branchlab::joint_gf(gf, 3, 1.0, 0.9995), branchlab::DomainError);
  CHECK_THROWS_AS(branchlab::joint_gf(gf, 3, 1.2, 0.5), branchlab::DomainError);
  CHECK(std::abs(branchlab::joint_gf(gf, 3, -0.5, 0.5)) <= 1.0);
}

TEST_CASE("joint coefficients match enumeration") {
  for (const OffspringLaw& law : {kSub, kCrit}) {
    const JointGF gf(law);
    for (unsigned n = 1; n <= 4; ++n) {
      const std::size_t max_w = 1u << n, max_s = (1u << n) - 1;
      const auto c = branchlab::JointCoefficients(gf, n, max_w, max_s);
      const auto dist = oracle::JointByEnumeration(law, n);
      double worst = 0.0, lowest = 0.0, mass = 0.0;
      for (std::size_t w = 0; w <= max_w; ++w) {
        for (std::size_t v = 0; v <= max_s; ++v) {
          const auto it = dist.find({w, v});
          const double expect = it == dist.end() ? 0.0 : it->second;
          const double got = c[w * (max_s + 1) + v];
          worst = std::max(worst, std::abs(got - expect));
          lowest = std::min(lowest, got);
          mass += got;
        }
      }
      CHECK(worst < 1e-12);
      CHECK(lowest >= -1e-9);
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("expected S_n") {
  for (const OffspringLaw& law : {kSub, kCrit, kSuper}) {
    CHECK(branchlab::expected_s(branchlab::model_constants(law), 1) == doctest::Approx(1.0).epsilon(1e-15));
  }
  const auto kc = branchlab::model_constants(kCrit);
  for (unsigned n = 1; n <= 50; ++n) {
    CHECK(branchlab::expected_s(kc, n) == doctest::Approx(0.25 * n * (n - 1.0) + n).epsilon(1e-15));
  }
  const auto ks = branchlab::model_constants(kSub);
  CHECK(branchlab::expected_s(ks, 100000) / 100000 == doctest::Approx(11.0 / 3.0).epsilon(1e-4));
}

TEST_CASE("moments from the transform match enumeration") {
  for (const OffspringLaw& law : {kSub, kCrit}) {
    const JointGF gf(law);
    const std::vector<unsigned> ns = {1, 2, 3, 4, 5, 6};
    const auto m = branchlab::moment_asymptotics(gf, ns);
    for (const auto& r : m.rows) {
      const ExactMoments e = Enumerated(law, r.n);
      CHECK(r.mean_w == doctest::Approx(e.ew).epsilon(1e-8));
      CHECK(r.mean_s == doctest::Approx(e.es).epsilon(1e-8));
      CHECK(r.mean_s == doctest::Approx(branchlab::expected_s(gf.constants(), r.n)).epsilon(1e-8));
      CHECK(r.var_w == doctest::Approx(e.vw).epsilon(1e-6));
      if (r.n > 1) {
        CHECK(r.var_s == doctest::Approx(e.vs).epsilon(1e-6));
        CHECK(r.cov_ws == doctest::Approx(e.cov).epsilon(1e-6));
      }
      CHECK(std::abs(r.rho) <= 1.0);
    }
  }
}

TEST_CASE("critical moment asymptotics") {
  const JointGF gf(kCrit);
  const std::vector<unsigned> ns = {200, 400};
  const auto m = branchlab::moment_asymptotics(gf, ns);
  CHECK(m.rho_limit == doctest::Approx(std::sqrt(6.0) / 3.0));
  for (const auto& r : m.rows) {
    CHECK(r.rho == doctest::Approx(m.rho_limit).epsilon(0.05));
    const double n4 = std::pow(static_cast<double>(r.n), 4);
    CHECK(r.var_s / n4 == doctest::Approx(0.25 / 12.0).epsilon(0.1));
    CHECK(r.var_w / r.var_w_target == doctest::Approx(1.0).epsilon(0.02));
    CHECK(r.cov_ws / r.cov_target == doctest::Approx(1.0).epsilon(0.02));
  }
  const auto sub = branchlab::moment_asymptotics(JointGF(kSub), std::vector<unsigned>{100, 400});
  // Var W_n bounded, Var S_n linear, rho to 0.
  CHECK(sub.rows[1].var_w == doctest::Approx(sub.rows[0].var_w).epsilon(1e-6));
  CHECK(sub.rows[1].var_s / 400 > sub.rows[0].var_s / 100);
  CHECK(sub.rows[1].rho < sub.rows[0].rho);
}

TEST_CASE("asymptotic variance of S_n, subcritical") {
  // E[W_k | W_0] - E_pi W decays like beta^k, so Var S_n / n tends to
  // Var_pi(W) (1 + beta) / (1 - beta), with pi the stationary law of the
  // kernel. This is not 2 Psi.
  const branchlab::QKernel kernel(kSub);
  const auto pd = branchlab::pi_distribution(kernel, std::vector<double>{0.5});
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t j = 0; j < pd.stationary.size(); ++j) {
    m1 += (j + 1.0) * pd.stationary[j];
    m2 += (j + 1.0) * (j + 1.0) * pd.stationary[j];
  }
  const double var_pi = m2 - m1 * m1;
  const double beta = kernel.constants().beta;
  const double sigma2 = var_pi * (1.0 + beta) / (1.0 - beta);
  const auto m = branchlab::moment_asymptotics(JointGF(kSub), std::vector<unsigned>{3000, 10000});
  const double slope = (m.rows[1].var_s - m.rows[0].var_s) / 7000.0;
  CHECK(slope == doctest::Approx(sigma2).epsilon(1e-6));
  CHECK(sigma2 == doctest::Approx(296.0 / 9.0).epsilon(1e-9));
  CHECK(std::abs(sigma2 - 2.0 * branchlab::model_constants(kSub).psi()) > 40.0);
}

TEST_CASE("limit transforms") {
  CHECK(branchlab::limit_transform(0.0, 0.0) == 1.0);
  for (double lambda : {0.5, 1.0, 3.0}) {
    CHECK(branchlab::limit_transform(lambda, 0.0) == doctest::Approx(1.0 / ((1 + lambda / 2) * (1 + lambda / 2))));
    CHECK(branchlab::limit_transform(lambda, 1e-9) == doctest::Approx(branchlab::limit_transform(lambda, 0.0)).epsilon(1e-8));
  }
  CHECK(branchlab::limit_transform(0.0, 1.0) == doctest::Approx(0.41997434161402614).epsilon(1e-14));
  CHECK(branchlab::limit_transform(1.0, 1.0) ==
        doctest::Approx(1.0 / std::pow(std::cosh(1.0) + 0.5 * std::sinh(1.0), 2)).epsilon(1e-14));
  // dF_W = 4u e^(-2u) du has Laplace transform (1 + lambda/2)^-2.
  const double lambda = 1.7, du = 1e-4;
  double acc = 0.0;
  for (double u = 0.5 * du; u < 40.0; u += du) {
    acc += std::exp(-lambda * u) * (branchlab::limit_cdf_w(u + 0.5 * du) - branchlab::limit_cdf_w(u - 0.5 * du));
  }
  CHECK(acc == doctest::Approx(branchlab::limit_transform(lambda, 0.0)).epsilon(1e-7));
  CHECK(branchlab::limit_cdf_w(0.0) == 0.0);
  CHECK_THROWS_AS(branchlab::limit_transform(-1.0, 0.0), branchlab::DomainError);
  CHECK_THROWS_AS(branchlab::limit_cdf_w(-0.1), branchlab::DomainError);
}

TEST_CASE("law of large numbers and normal scaling constants") {
  const auto c = branchlab::lln_clt_constants(branchlab::model_constants(kSub));
  CHECK(c.limit == doctest::Approx(11.0 / 3.0).epsilon(1e-14));
  CHECK(c.psi == doctest::Approx(40.0).epsilon(1e-13));
  CHECK(c.clt_scale(3000) == doctest::Approx(std::sqrt(80.0 * 3000)).epsilon(1e-13));
  double prev = 1e300;
  for (double eps : {1e-2, 1e-4, 1e-6}) {
    const auto k = branchlab::model_constants(OffspringLaw({0.5, 0.5 - eps, eps}));
    CHECK(k.psi() < prev);
    prev = k.psi();
  }
  CHECK(prev < 1e-4);
  CHECK_THROWS_AS(branchlab::lln_clt_constants(branchlab::model_constants(kCrit)), branchlab::RegimeError);
}

TEST_CASE("Laplace transform of S_n / n") {
  // At n = 2000 the 1/n terms of E S_n/n and Var S_n/n^2 still move the
  // transform by 1.36%; at n = 20000 they are ten times smaller.
  const auto near = branchlab::laplace_check(kSub, 2000, 1.0);
  CHECK(near.relative_error > 0.01);
  CHECK(near.relative_error < 0.02);
  const auto far = branchlab::laplace_check(kSub, 20000, 1.0);
  CHECK(far.relative_error < 0.01);
  CHECK(far.value == doctest::Approx(far.mean_corrected).epsilon(1e-3));
  CHECK(std::exp(branchlab::LogT(kSub, 10, 1.0L)) == doctest::Approx(1.0));
}

TEST_CASE("small-theta expansions") {
  const std::vector<double> thetas = {1e-2, 1e-3, 1e-4};
  const auto e = branchlab::expansion_oracles(kSub, thetas);
  CHECK(e.theta_zero_residual == 0.0);
  CHECK(e.h_first_order_target == doctest::Approx(4.0));
  CHECK(e.rows[1].h_first_order == doctest::Approx(4.0).epsilon(0.01));
  // Second-order coefficient of h(e^theta) - 1 is (h'(1) + h''(1)) / 2 = 30,
  // while the stated expansion uses 56; residuals are second order.
  const double c2 = (e.rows[2].h_minus_one - 4.0 * 1e-4) / 1e-8;
  CHECK(c2 == doctest::Approx(30.0).epsilon(0.01));
  CHECK(e.h_halving_ratio == doctest::Approx(4.0).epsilon(0.1));
  CHECK(e.u_halving_ratio == doctest::Approx(4.0).epsilon(0.1));
  for (std::size_t t = 1; t < e.rows.size(); ++t) {
    CHECK(e.rows[t].u_residual < e.rows[t - 1].u_residual);
    CHECK(e.rows[t].r_residual < e.rows[t - 1].r_residual);
  }
  CHECK_THROWS_AS(branchlab::expansion_oracles(kCrit, thetas), branchlab::RegimeError);
}
