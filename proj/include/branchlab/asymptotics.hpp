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

#ifndef BRANCHLAB_ASYMPTOTICS_HPP_
#define BRANCHLAB_ASYMPTOTICS_HPP_

#include <optional>
#include <span>
#include <vector>

#include "branchlab/offspring_model.hpp"
#include "branchlab/series.hpp"
#include "json.hpp"

namespace branchlab {

// A constant known only to lie in [lo, hi].
struct IntervalConstant {
  double lo = 0.0;
  double hi = 0.0;
  std::optional<double> point_estimate;

  bool Contains(double x) const { return x >= lo && x <= hi; }
  // True when there is no estimate or the estimate lies in the bracket.
  bool Consistent() const { return !point_estimate || Contains(*point_estimate); }
  double midpoint() const { return 0.5 * (lo + hi); }
  nlohmann::json ToJson() const;
};

struct LimitEstimate {
  double value = 0.0;  // extrapolated limit
  double raw = 0.0;    // last term of the sequence
  unsigned iterations = 0;
  double last_change = 0.0;  // between the last two extrapolants, relative
  bool converged = false;
  nlohmann::json ToJson() const;
};

// Extrapolates a geometrically convergent sequence from its successive
// differences: a + d * rho / (1 - rho) with rho the ratio of the last two
// differences.
class GeometricExtrapolator {
 public:
  explicit GeometricExtrapolator(double tol) : tol_(tol) {}
  // Returns true once two consecutive extrapolants agree within tol.
  bool Add(long double term);
  LimitEstimate Estimate() const;

 private:
  double tol_;
  long double a0_ = 0.0L, a1_ = 0.0L, a2_ = 0.0L;
  long double extrapolant_ = 0.0L;
  double change_ = 0.0;
  unsigned count_ = 0;
  unsigned agreements_ = 0;
};

// R_n(s) / beta^n in extended precision.
long double NormalizedR(const OffspringLaw& law, double s, unsigned n);

// A(s) = lim R_n(s) / beta^n. Non-critical laws only.
LimitEstimate LimitA(const OffspringLaw& law, double s, double tol = 1e-10,
                     unsigned n_max = 50000);

// lim F_n'(s) / beta^n = lim -R_n'(s) / beta^n. Non-critical laws only.
LimitEstimate LimitDerivative(const OffspringLaw& law, double s, double tol = 1e-12,
                              unsigned n_max = 50000);

struct BasicLemmaPoint {
  double s = 0.0;
  LimitEstimate a;                // A(s)
  double a1 = 0.0, a2 = 0.0;      // bracket ends from 1/A_i = 1/(q - s) + Delta_i / 2
  double delta = 0.0;             // 2 (1/A(s) - 1/(q - s)); NaN at s = q
  double k_formula = 0.0;         // exp(-delta A(s))
  LimitEstimate k_measured;       // lim -R_n'(s) / beta^n
  bool a_in_bracket = false;      // a2 <= A(s) <= a1
  bool delta_in_range = false;    // Delta_1 <= delta <= Delta_2
  IntervalConstant k_exp_bracket;  // [exp(-Delta_2 A), exp(-Delta_1 A)] around the measured K
  IntervalConstant k_log_bracket;  // [exp(-A_1 Delta_2), exp(-A_2 Delta_1)] around the measured K
  nlohmann::json ToJson() const;
};

struct BasicLemmaConstants {
  double q = 1.0, beta = 1.0;
  double delta1 = 0.0, delta2 = 0.0;
  double gamma_over_q = 0.0;
  std::vector<BasicLemmaPoint> points;
  // Whether delta(s) is constant across the grid (spread below 1e-6).
  bool delta_constant = false;
  nlohmann::json ToJson() const;
};

// Delta_1 = sum_k F''(q(1 - beta^k)) beta^(k-1).
double Delta1(const OffspringLaw& law, const ModelConstants& k);
// Delta_2 = sum_k F''(q) beta^k / F'(q(1 - beta^k)); +inf when p_1 = 0.
double Delta2(const OffspringLaw& law, const ModelConstants& k);

BasicLemmaConstants basic_lemma_constants(const OffspringLaw& law, std::span<const double> s_grid,
                                          unsigned n_max = 50000, double tol = 1e-10);

// (1 - s) / ((1 - s) B n + 1). Critical laws only.
double critical_decay(const OffspringLaw& law, double s, unsigned n);

struct ConvergenceRow {
  unsigned n = 0;
  double exact = 0.0;
  double asymptote = 0.0;
  double ratio = 0.0;
};

// Exact R_n(s) against the critical asymptote.
std::vector<ConvergenceRow> CriticalDecayTable(const OffspringLaw& law, double s,
                                               std::span<const unsigned> ns);

// exp(-delta(s) A(s)). Non-critical laws only.
double k_function(const OffspringLaw& law, double s);

// P_11(n) = F_n'(0) for n = 0..n_max, as logarithms.
std::vector<long double> LogReturnProbabilities(const OffspringLaw& law, unsigned n_max);

struct LocalLimitRow {
  unsigned n = 0;
  double p11 = 0.0;     // P_11(n)
  double scaled = 0.0;  // beta^-n P_11(n), or n^2 P_11(n) when critical
};

struct LocalLimitReport {
  Regime regime = Regime::kCritical;
  std::vector<LocalLimitRow> rows;
  // Non-critical: lim beta^-n P_11(n).
  std::optional<LimitEstimate> limit;
  // Critical: [p_1 / (p_0 B), 1 / (p_0 B)].
  std::optional<IntervalConstant> bracket;
  nlohmann::json ToJson() const;
};

LocalLimitReport local_limit(const OffspringLaw& law, std::span<const unsigned> ns);

struct InvariantMeasure {
  TruncatedSeries mu;      // mu_j = lim P_1j(n) / P_11(n)
  double m_at_q = 0.0;     // M(q), from the truncated series
  TruncatedSeries nu;      // nu_j = mu_j q^j / M(q); its GF is V(s)
  unsigned n_max = 0;
  double convergence = 0.0;          // max relative change of mu_j, j <= 20, from n_max - 1
  double invariance_residual = 0.0;  // max_{j <= 20} |sum_k mu_k P_kj - beta mu_j|
  // Non-critical: max relative gap between the series M and (A(0) - A(s)) / K(0).
  std::optional<double> closed_form_deviation;
  // Critical: M(s) (1 - s) / s must lie in [p_0 / B, p_0 / (p_1 B)].
  std::optional<IntervalConstant> critical_bracket;
  std::vector<double> check_grid;
  std::vector<bool> bracket_ok;

  double V(double s) const { return nu.Evaluate(s); }
  nlohmann::json ToJson() const;
};

InvariantMeasure invariant_measure(const OffspringLaw& law, std::size_t order, unsigned n_max);

// Closed-form M(s) = (A(0) - A(s)) / K(0) for non-critical laws.
class ClosedFormM {
 public:
  explicit ClosedFormM(const OffspringLaw& law, double tol = 1e-13);
  double operator()(double s) const;
  double k0() const { return k0_; }

 private:
  const OffspringLaw* law_;
  double tol_;
  double a0_;
  double k0_;
};

// P(Z_n = j | n < H < infinity) starting from i particles.
double conditioned_transition(const OffspringLaw& law, unsigned i, std::size_t j, unsigned n,
                              std::size_t order = 0);

// The whole conditioned row j = 0..order.
std::vector<double> ConditionedRow(const OffspringLaw& law, unsigned i, unsigned n,
                                   std::size_t order);

// q^i - F_n(0)^i, the probability that i particles survive n steps but die
// out eventually; computed without cancellation.
long double SurvivalDenominator(const OffspringLaw& law, unsigned i, unsigned n);

// 1 - (1 - F_n(s)^i) / (1 - F_n(0)^i). Critical laws only.
double yaglom_gf(const OffspringLaw& law, unsigned i, unsigned n, double s);

enum class DecayClass { kRPositive, kRNull, kRTransient };
const char* DecayClassName(DecayClass c);

struct DecayClassification {
  double R = 0.0;
  DecayClass decay_class = DecayClass::kRPositive;
  LimitEstimate limit;  // lim e^(Rn) P_11(n)
  nlohmann::json ToJson() const;
};

DecayClassification decay_classification(const OffspringLaw& law);

struct SchroederResiduals {
  std::vector<double> s_grid;
  // |1 - V(F(qs)/q) - beta (1 - V(s))|
  std::vector<double> v_residual;
  // max over n <= 5 of |A(F_n(qs)) - beta^n A(qs)| / |beta^n A(qs)|
  std::vector<double> a_residual;
  double max_v_residual = 0.0;
  double max_a_residual = 0.0;
  nlohmann::json ToJson() const;
};

SchroederResiduals schroeder_check(const OffspringLaw& law, std::span<const double> s_grid,
                                   std::size_t order = 512, unsigned n_max = 200);

}  // namespace branchlab

#endif  // BRANCHLAB_ASYMPTOTICS_HPP_
