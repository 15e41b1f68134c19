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

#ifndef BRANCHLAB_CUMULATIVE_STATE_HPP_
#define BRANCHLAB_CUMULATIVE_STATE_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include "branchlab/offspring_model.hpp"
#include "json.hpp"

namespace branchlab {

// Generating functions of the pair (W_n, S_n), S_n = W_0 + ... + W_(n-1),
// for the Q-process started from W_0 = 1.
//
//   H_0(s;x) = s,  H_(k+1)(s;x) = x F^(H_k(s;x)),
//   J_n(s;x) = s prod_(k<n) x F^'(H_k(s;x)) / beta.
class JointGF {
 public:
  explicit JointGF(const OffspringLaw& law);

  const OffspringLaw& law() const { return law_; }
  const OffspringLaw& dual() const { return dual_; }
  const ModelConstants& constants() const { return constants_; }

  // log J_n(s;x) for s, x > 0. The polynomial form extends past (1,1), which
  // the moment finite differences rely on.
  long double LogJ(unsigned n, long double s, long double x) const;
  // J_n(s;x) for real s, x; no domain restriction.
  double Evaluate(unsigned n, double s, double x) const;
  // H_n(s;x).
  long double H(unsigned n, long double s, long double x) const;

 private:
  OffspringLaw law_;
  ModelConstants constants_;
  OffspringLaw dual_;
};

// J_n(s;x) on {|s| <= 1, |x| <= 1} minus the disc of the given radius around
// (1,1); exactly (1,1) returns 1.
double joint_gf(const JointGF& gf, unsigned n, double s, double x, double radius = 1e-3);

// P(W_n = w, S_n = v) for w <= max_w, v <= max_s, read off J_n by a 2-D DFT
// on the unit torus. Entry [w * (max_s + 1) + v]. Exact up to rounding when
// max_w and max_s cover the support.
std::vector<double> JointCoefficients(const JointGF& gf, unsigned n, std::size_t max_w,
                                      std::size_t max_s);

// E S_n.
double expected_s(const ModelConstants& k, unsigned n);

// Least fixed point of h = x F^(h), by iteration from 0. x may exceed 1
// as long as the fixed point exists.
double h_total_progeny(const OffspringLaw& law, double x, double tol = 1e-15);
// h_n(x) = H_n(1;x) = E x^(V_n).
double h_iterate(const OffspringLaw& law, unsigned n, double x);

struct MomentRow {
  unsigned n = 0;
  double mean_w = 0.0, mean_s = 0.0;
  double var_w = 0.0, var_s = 0.0, cov_ws = 0.0, rho = 0.0;
  // Critical asymptotes; zero otherwise.
  double var_w_target = 0.0, var_s_target = 0.0, cov_target = 0.0;
};

struct CumulativeMoments {
  bool critical = false;
  double psi = 0.0;  // non-critical only
  double rho_limit = 0.0;
  std::vector<MomentRow> rows;

  nlohmann::json ToJson() const;
};

// Moments of (W_n, S_n) from second-order central differences of log J_n in
// the coordinates s = exp(-a / E W_n), x = exp(-b / E S_n).
CumulativeMoments moment_asymptotics(const JointGF& gf, std::span<const unsigned> ns);

// [ch sqrt(theta) + (lambda/2) sh sqrt(theta) / sqrt(theta)]^-2.
double limit_transform(double lambda, double theta);
// 1 - exp(-2u) - 2u exp(-2u).
double limit_cdf_w(double u);

struct LlnClt {
  double limit = 0.0;  // 1 + gamma
  double psi = 0.0;
  double clt_scale(unsigned n) const;  // sqrt(2 psi n)
};

LlnClt lln_clt_constants(const ModelConstants& k);

struct LaplaceCheck {
  unsigned n = 0;
  double theta = 0.0;
  double value = 0.0;         // T_n(exp(-theta / n))
  double target = 0.0;        // exp(-theta (1 + gamma))
  double relative_error = 0.0;
  double mean_corrected = 0.0;  // exp(-theta E S_n / n)
};

// T_n(x) = prod_(k<n) u_k(x), u_k(x) = x F^'(h_k(x)) / beta.
LaplaceCheck laplace_check(const OffspringLaw& law, unsigned n, double theta);
long double LogT(const OffspringLaw& law, unsigned n, long double x);

struct ExpansionRow {
  double theta = 0.0;
  double h_minus_one = 0.0, h_expansion = 0.0, h_first_order = 0.0, h_residual = 0.0;
  double u = 0.0, u_expansion = 0.0, u_residual = 0.0;
  double r_ratio = 0.0, r_residual = 0.0;
  double log_t = 0.0, log_t_expansion = 0.0, log_t_residual = 0.0;
};

struct ExpansionOracles {
  unsigned n_fixed = 0;
  double h_first_order_target = 0.0;  // 1 / (1 - beta)
  std::vector<ExpansionRow> rows;
  // residual(theta) / residual(theta / 2) at theta = 1e-3.
  double h_halving_ratio = 0.0;
  double u_halving_ratio = 0.0;
  // Exact identities at theta = 0: |h(1) - 1| and |u(1) - beta|.
  double theta_zero_residual = 0.0;

  nlohmann::json ToJson() const;
};

// Both sides of the small-theta expansions of h(e^theta), u(e^theta),
// R_n(e^theta)/u^n(e^theta) and ln prod u_k(e^theta), u(x) = x F^'(h(x)).
ExpansionOracles expansion_oracles(const OffspringLaw& law, std::span<const double> thetas,
                                   unsigned n_fixed = 5);

}  // namespace branchlab

#endif  // BRANCHLAB_CUMULATIVE_STATE_HPP_
