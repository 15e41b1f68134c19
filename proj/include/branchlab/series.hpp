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

#ifndef BRANCHLAB_SERIES_HPP_
#define BRANCHLAB_SERIES_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "branchlab/kernels.hpp"
#include "branchlab/offspring_model.hpp"

namespace branchlab {

inline constexpr std::size_t kMaxOrder = 4096;

// Power series a_0..a_N. Probability series also carry a bound on the mass
// beyond order N; other series (measures, derivatives) leave it empty.
class TruncatedSeries {
 public:
  TruncatedSeries() = default;
  TruncatedSeries(std::vector<double> coeffs, std::optional<double> tail_bound);

  static TruncatedSeries Identity(std::size_t order);
  static TruncatedSeries Constant(double c, std::size_t order);
  // The offspring GF itself, as an exact probability series.
  static TruncatedSeries FromLaw(const OffspringLaw& law);

  std::size_t order() const { return coeffs_.size() - 1; }
  double operator[](std::size_t j) const { return j < coeffs_.size() ? coeffs_[j] : 0.0; }
  std::span<const double> coeffs() const { return coeffs_; }
  std::vector<double>& mutable_coeffs() { return coeffs_; }
  std::optional<double> tail_bound() const { return tail_; }
  void set_tail_bound(std::optional<double> t) { tail_ = t; }

  bool is_probability() const { return tail_.has_value(); }
  double mass() const;
  double Evaluate(double s) const;
  double Derivative(double s) const;
  // sum_j j a_j.
  double FirstMoment() const;
  // The tail bound 1 - mass, clamped at 0; for probability series only.
  void RecomputeTail();

 private:
  std::vector<double> coeffs_{0.0};
  std::optional<double> tail_;
};

// a * b through the given order.
TruncatedSeries Multiply(const TruncatedSeries& a, const TruncatedSeries& b, std::size_t order,
                         Backend backend = DefaultBackend());

// a^i through the given order, by binary powering.
TruncatedSeries Power(const TruncatedSeries& a, unsigned i, std::size_t order,
                      Backend backend = DefaultBackend());

// outer(inner(s)) through inner's order, by Horner's scheme. Requires
// inner[0] in [0, 1) unless outer is an exact polynomial.
TruncatedSeries compose(const TruncatedSeries& outer, const TruncatedSeries& inner,
                        Backend backend = DefaultBackend());

// max(64, K n) capped at kMaxOrder.
std::size_t DefaultOrder(const OffspringLaw& law, unsigned n);

// F_n through order N.
TruncatedSeries iterate_gf(const OffspringLaw& law, unsigned n, std::size_t order,
                           Backend backend = DefaultBackend());

// [F_n]^i through order N, the generating function of row i of P(n).
TruncatedSeries TransitionRow(const OffspringLaw& law, unsigned i, unsigned n, std::size_t order,
                              Backend backend = DefaultBackend());

// P_ij(n). Throws TruncationError when j > order.
double transition_prob(const OffspringLaw& law, unsigned i, std::size_t j, unsigned n,
                       std::size_t order);

// q - F_n(s) by the recentred iteration, for s in [0, 1).
long double r_function(const OffspringLaw& law, unsigned n, double s);
// -F_n'(s) from the chain-rule product, for s in [0, 1).
double r_derivative(const OffspringLaw& law, unsigned n, double s);
// log F_n'(s); -inf when the product vanishes.
long double LogIterateDerivative(const OffspringLaw& law, unsigned n, double s);

// p_0 = 1 - b/(1-c), p_k = b c^(k-1) for k >= 1.
struct LinearFractionalParams {
  double b = 0.0;
  double c = 0.0;

  void Validate() const;
  double p0() const { return 1.0 - b / (1.0 - c); }
  double mean() const { return b / ((1.0 - c) * (1.0 - c)); }
  bool critical() const;
  // F''(1) / 2 = b c / (1 - c)^3.
  double B() const { return b * c / ((1.0 - c) * (1.0 - c) * (1.0 - c)); }
  double Eval(double s) const { return p0() + b * s / (1.0 - c * s); }
  // Offspring law truncated where the geometric tail drops below tail_tol;
  // the dropped mass is folded into the last kept coefficient.
  OffspringLaw TruncatedLaw(double tail_tol = 1e-17) const;
};

// Closed-form F_n(s) for a linear-fractional law.
double lf_iterate(const LinearFractionalParams& params, unsigned n, double s);

}  // namespace branchlab

#endif  // BRANCHLAB_SERIES_HPP_
