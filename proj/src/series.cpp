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

#include "branchlab/series.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "branchlab/error.hpp"

namespace branchlab {

TruncatedSeries::TruncatedSeries(std::vector<double> coeffs, std::optional<double> tail_bound)
    : coeffs_(std::move(coeffs)), tail_(tail_bound) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
}

TruncatedSeries TruncatedSeries::Identity(std::size_t order) {
  std::vector<double> c(order + 1, 0.0);
  if (order >= 1) c[1] = 1.0;
  return TruncatedSeries(std::move(c), order >= 1 ? 0.0 : 1.0);
}

TruncatedSeries TruncatedSeries::Constant(double v, std::size_t order) {
  std::vector<double> c(order + 1, 0.0);
  c[0] = v;
  return TruncatedSeries(std::move(c), std::nullopt);
}

TruncatedSeries TruncatedSeries::FromLaw(const OffspringLaw& law) {
  return TruncatedSeries(std::vector<double>(law.probs().begin(), law.probs().end()), 0.0);
}

double TruncatedSeries::mass() const {
  double acc = 0.0;
  for (double v : coeffs_) acc += v;
  return acc;
}

double TruncatedSeries::Evaluate(double s) const {
  double acc = 0.0;
  for (std::size_t j = coeffs_.size(); j-- > 0;) acc = acc * s + coeffs_[j];
  return acc;
}

double TruncatedSeries::Derivative(double s) const {
  double acc = 0.0;
  for (std::size_t j = coeffs_.size(); j-- > 1;) acc = acc * s + static_cast<double>(j) * coeffs_[j];
  return acc;
}

double TruncatedSeries::FirstMoment() const {
  double acc = 0.0;
  for (std::size_t j = 1; j < coeffs_.size(); ++j) acc += static_cast<double>(j) * coeffs_[j];
  return acc;
}

void TruncatedSeries::RecomputeTail() { tail_ = std::max(0.0, 1.0 - mass()); }

TruncatedSeries Multiply(const TruncatedSeries& a, const TruncatedSeries& b, std::size_t order,
                         Backend backend) {
  std::vector<double> out(order + 1, 0.0);
  TruncatedProduct(a.coeffs(), b.coeffs(), out, backend);
  TruncatedSeries result(std::move(out), std::nullopt);
  if (a.is_probability() && b.is_probability()) result.RecomputeTail();
  return result;
}

TruncatedSeries Power(const TruncatedSeries& a, unsigned i, std::size_t order, Backend backend) {
  TruncatedSeries result = TruncatedSeries::Constant(1.0, order);
  if (a.is_probability()) result.set_tail_bound(0.0);
  TruncatedSeries base(std::vector<double>(a.coeffs().begin(),
                                           a.coeffs().begin() +
                                               static_cast<std::ptrdiff_t>(std::min(a.order(), order) + 1)),
                       a.tail_bound());
  if (base.is_probability()) base.RecomputeTail();
  while (i > 0) {
    if (i & 1U) result = Multiply(result, base, order, backend);
    i >>= 1U;
    if (i > 0) base = Multiply(base, base, order, backend);
  }
  return result;
}

TruncatedSeries compose(const TruncatedSeries& outer, const TruncatedSeries& inner,
                        Backend backend) {
  const std::size_t n = inner.order();
  if (n > kMaxOrder) {
    throw TruncationError("compose: order " + std::to_string(n) + " exceeds the limit " +
                          std::to_string(kMaxOrder));
  }
  const bool exact_outer = outer.tail_bound().has_value() && *outer.tail_bound() == 0.0;
  if (!exact_outer && !(inner[0] >= 0.0 && inner[0] < 1.0)) {
    throw DomainError("compose: inner constant term must lie in [0, 1) for a truncated outer series");
  }
  std::size_t top = outer.order();
  while (top > 0 && outer[top] == 0.0) --top;
  std::vector<double> acc(n + 1, 0.0), next(n + 1, 0.0);
  acc[0] = outer[top];
  for (std::size_t k = top; k-- > 0;) {
    TruncatedProduct(acc, inner.coeffs(), next, backend);
    next[0] += outer[k];
    acc.swap(next);
  }
  TruncatedSeries result(std::move(acc), std::nullopt);
  if (outer.is_probability() && inner.is_probability()) result.RecomputeTail();
  return result;
}

std::size_t DefaultOrder(const OffspringLaw& law, unsigned n) {
  const std::size_t kn = law.max_offspring() * static_cast<std::size_t>(n);
  return std::min<std::size_t>(std::max<std::size_t>(64, kn), kMaxOrder);
}

TruncatedSeries iterate_gf(const OffspringLaw& law, unsigned n, std::size_t order,
                           Backend backend) {
  if (order > kMaxOrder) {
    throw TruncationError("iterate_gf: order " + std::to_string(order) + " exceeds the limit " +
                          std::to_string(kMaxOrder));
  }
  const TruncatedSeries f = TruncatedSeries::FromLaw(law);
  TruncatedSeries cur = TruncatedSeries::Identity(order);
  for (unsigned k = 0; k < n; ++k) cur = compose(f, cur, backend);
  return cur;
}

TruncatedSeries TransitionRow(const OffspringLaw& law, unsigned i, unsigned n, std::size_t order,
                              Backend backend) {
  return Power(iterate_gf(law, n, order, backend), i, order, backend);
}

double transition_prob(const OffspringLaw& law, unsigned i, std::size_t j, unsigned n,
                       std::size_t order) {
  if (i < 1) throw DomainError("transition_prob: i must be at least 1");
  if (j > order) {
    throw TruncationError("transition_prob: state " + std::to_string(j) +
                          " is beyond truncation order " + std::to_string(order) +
                          "; raise the order");
  }
  return TransitionRow(law, i, n, order)[j];
}

namespace {

void CheckUnitInterval(double s, const char* what) {
  if (!(s >= 0.0 && s < 1.0)) throw DomainError(std::string(what) + ": s must lie in [0, 1)");
}

}  // namespace

long double r_function(const OffspringLaw& law, unsigned n, double s) {
  CheckUnitInterval(s, "r_function");
  const ModelConstants k = model_constants(law);
  const FixedPointExpansion fx(law, k);
  long double r = static_cast<long double>(k.q) - s;
  for (unsigned t = 0; t < n && r != 0.0L; ++t) r = fx.Decay(r);
  return r;
}

long double LogIterateDerivative(const OffspringLaw& law, unsigned n, double s) {
  CheckUnitInterval(s, "LogIterateDerivative");
  const ModelConstants k = model_constants(law);
  const FixedPointExpansion fx(law, k);
  long double r = static_cast<long double>(k.q) - s;
  long double acc = 0.0L;
  for (unsigned t = 0; t < n; ++t) {
    const long double slope = fx.Slope(r);
    if (!(slope > 0.0L)) return -std::numeric_limits<long double>::infinity();
    acc += std::log(slope);
    r = fx.Decay(r);
  }
  return acc;
}

double r_derivative(const OffspringLaw& law, unsigned n, double s) {
  return -static_cast<double>(std::exp(LogIterateDerivative(law, n, s)));
}

void LinearFractionalParams::Validate() const {
  if (!(b > 0.0 && b < 1.0 && c > 0.0 && c < 1.0)) {
    throw InvalidModel("linear-fractional parameters b, c must lie in (0, 1)");
  }
  if (!(b < 1.0 - c)) throw InvalidModel("linear-fractional law needs b < 1 - c so that p_0 > 0");
}

bool LinearFractionalParams::critical() const { return std::abs(mean() - 1.0) <= kCriticalTolerance; }

OffspringLaw LinearFractionalParams::TruncatedLaw(double tail_tol) const {
  Validate();
  std::vector<double> probs{p0()};
  double pk = b;
  while (true) {
    probs.push_back(pk);
    pk *= c;
    if (pk < tail_tol) break;
  }
  probs.back() += b * std::pow(c, static_cast<double>(probs.size() - 1)) / (1.0 - c);
  double sum = 0.0;
  for (double v : probs) sum += v;
  for (double& v : probs) v /= sum;
  return OffspringLaw(std::move(probs));
}

double lf_iterate(const LinearFractionalParams& params, unsigned n, double s) {
  params.Validate();
  if (n == 0) return s;
  if (s == 1.0) return 1.0;
  if (params.critical()) {
    const double bn = params.B() * static_cast<double>(n);
    return 1.0 - (1.0 - s) / (1.0 + bn * (1.0 - s));
  }
  // phi(s) = (s - s0)/(s - 1) satisfies phi(F(s)) = phi(s) / m.
  const double m = params.mean();
  const double s0 = (1.0 - params.b - params.c) / (params.c * (1.0 - params.c));
  const double y = (s - s0) / (s - 1.0) * std::pow(m, -static_cast<double>(n));
  return (s0 - y) / (1.0 - y);
}

}  // namespace branchlab
