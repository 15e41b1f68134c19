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

#ifndef BRANCHLAB_Q_PROCESS_HPP_
#define BRANCHLAB_Q_PROCESS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "branchlab/asymptotics.hpp"
#include "branchlab/kernels.hpp"
#include "branchlab/offspring_model.hpp"
#include "branchlab/series.hpp"
#include "json.hpp"

namespace branchlab {

// Law of W_n over states 1..cap; mass pushed beyond the cap is counted in
// `lost` rather than dropped silently.
struct StateDistribution {
  std::vector<double> p;  // p[j - 1] = P(W = j)
  double lost = 0.0;

  double at(std::size_t j) const { return j >= 1 && j <= p.size() ? p[j - 1] : 0.0; }
  double mass() const;
  double Mean() const;
};

// One-step kernel of the Q-process truncated to states 1..cap. Row i has
// generating function F^(i-1)(s) Y(s), with F^(s) = F(qs)/q and
// Y(s) = s F'(qs) / beta.
class QKernel {
 public:
  explicit QKernel(const OffspringLaw& law, std::size_t cap = 256);

  const OffspringLaw& law() const { return law_; }
  const OffspringLaw& dual() const { return dual_; }
  const ModelConstants& constants() const { return constants_; }
  std::size_t cap() const { return cap_; }

  // Coefficients of Y(s); index j is the coefficient of s^j.
  std::span<const double> y_law() const { return y_; }

  double one_step(std::size_t i, std::size_t j) const;
  // 1 - sum_{j <= cap} Q_ij(1).
  double row_tail(std::size_t i) const { return tails_.at(i - 1); }
  std::span<const double> matrix() const { return matrix_; }

  StateDistribution Point(std::size_t i) const;
  StateDistribution Step(const StateDistribution& d, Backend backend = DefaultBackend()) const;
  StateDistribution Propagate(StateDistribution d, unsigned steps,
                              Backend backend = DefaultBackend()) const;

 private:
  OffspringLaw law_;
  ModelConstants constants_;
  OffspringLaw dual_;
  std::size_t cap_;
  std::vector<double> y_;
  std::vector<double> matrix_;  // row-major, (i - 1) * cap + (j - 1)
  std::vector<double> tails_;
};

// Q_ij(n) = j q^(j-i) P_ij(n) / (i beta^n) from the exact transition row.
double q_transition(const QKernel& kernel, unsigned i, std::size_t j, unsigned n,
                    std::size_t order = 0);
// Row i of Q(n) through the given order.
std::vector<double> QTransitionRow(const QKernel& kernel, unsigned i, unsigned n,
                                   std::size_t order);

// Y_n^(i)(s) = [F_n(qs)/q]^(i-1) s F_n'(qs) / beta^n.
double y_gf(const QKernel& kernel, unsigned i, unsigned n, double s);

// E_i W_n.
double expected_w(const QKernel& kernel, unsigned i, unsigned n);

// s exp(-gamma (1 - s) / (1 + (gamma / 2)(1 - s))).
double PiClosedForm(double gamma, double s);
// Its coefficients through the given order.
TruncatedSeries PiClosedFormSeries(double gamma, std::size_t order);

struct PiDistribution {
  double gamma = 0.0;
  double pi1_limit = 0.0;  // exp(-2 gamma / (2 + gamma))
  TruncatedSeries closed_form;
  double closed_form_mass = 0.0;
  double derivative_at_one = 0.0;  // 1 + gamma, from the closed form
  double series_mean = 0.0;        // sum_j j pi_j of the closed-form coefficients
  // Stationary law of the truncated kernel by power iteration.
  std::vector<double> stationary;
  double stationary_mean = 0.0;
  double stationary_residual = 0.0;  // max_j |pi_j - (pi Q)_j|
  unsigned n_check = 0;
  double q11_kernel = 0.0;  // Q_11(n_check) by kernel powers
  double q11_series = 0.0;  // Q_11(n_check) by the exact series
  double kernel_lost_mass = 0.0;
  // max_j |pi_j - (pi Q(n))_j| for the closed form, n = 1, 2, 3.
  std::vector<double> closed_form_fixed_point_residual;
  // max over s and n <= 5 of |pi(s) - Y_n(s) / F^_n(s) pi(F^_n(s))|.
  double functional_residual = 0.0;
  nlohmann::json ToJson() const;
};

PiDistribution pi_distribution(const QKernel& kernel, std::span<const double> s_grid,
                               unsigned n_check = 60, Backend backend = DefaultBackend());

struct MuCritical {
  std::vector<double> s;
  // [2 Y(s) / ((alpha-1)(F(s)-s)), 2 s / ((alpha-1)(F(s)-s))], estimate n^2 Y_n(s).
  std::vector<IntervalConstant> mu_bracket;
  unsigned n_max = 0;
  double cesaro_target = 0.0;  // 2 / (alpha - 1)^2
  double cesaro_estimate = 0.0;
  unsigned cesaro_terms = 0;
  // [2 Q_11(1) / ((alpha-1) p_0), 2 / ((alpha-1) p_0)], estimate n^2 Q_11(n_max).
  IntervalConstant q11_bracket;
  // mu(s)(1-s)^2 at s = 0.999 from the bracket ends; target 4/(alpha-1)^2.
  IntervalConstant edge_bracket;
  double edge_target = 0.0;
  nlohmann::json ToJson() const;
};

MuCritical mu_critical(const QKernel& kernel, std::span<const double> s_grid, unsigned n_max = 400);

// n^2 Q_1j(n) for j = 1..terms: the measured mu_j at horizon n.
std::vector<double> MeasuredMu(const QKernel& kernel, unsigned n, std::size_t terms);

struct Upsilon {
  std::vector<double> from_i1;  // index j - 1
  std::vector<double> from_i2;
  double i_spread = 0.0;             // max_j |from_i1 - from_i2|
  double invariance_residual = 0.0;  // max_j |v_j - sum_i v_i Q_ij(1)|
  unsigned n_max = 0;
  nlohmann::json ToJson() const;
};

Upsilon upsilon_measure(const QKernel& kernel, unsigned n_max, std::size_t j_max);

enum class RateReference { kBracketMidpoint, kExtrapolated };

struct RateCheck {
  double s = 0.0;
  unsigned i = 1;
  std::vector<unsigned> ns;
  std::vector<double> scaled;  // n^2 Y_n^(i)(s)
  IntervalConstant bracket;
  RateReference mode = RateReference::kBracketMidpoint;
  std::string reference_label;
  double reference = 0.0;
  std::vector<double> r;  // scaled / reference - 1
  double c = 0.0;         // least squares r_n ~ c ln(n) / n
  double fit_rms = 0.0;
  double loglog_slope = 0.0;  // of log|r_n| against log(ln(n) / n)
  nlohmann::json ToJson() const;
};

RateCheck rate_check(const QKernel& kernel, double s, std::span<const unsigned> ns, unsigned i = 1,
                     RateReference mode = RateReference::kBracketMidpoint);

}  // namespace branchlab

#endif  // BRANCHLAB_Q_PROCESS_HPP_
