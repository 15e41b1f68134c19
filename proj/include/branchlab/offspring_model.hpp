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

#ifndef BRANCHLAB_OFFSPRING_MODEL_HPP_
#define BRANCHLAB_OFFSPRING_MODEL_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace branchlab {

enum class Regime { kSubcritical, kCritical, kSupercritical };

const char* RegimeName(Regime regime);

// Laws whose mean is within this distance of 1 are treated as critical.
inline constexpr double kCriticalTolerance = 1e-12;

// Finite offspring distribution p_0..p_K with generating function
// F(s) = sum_k p_k s^k.
class OffspringLaw {
 public:
  // Throws InvalidModel unless the probabilities are non-negative, sum to
  // 1 within 1e-12, p_0 > 0 and p_0 + p_1 < 1. Trailing zeros are dropped.
  explicit OffspringLaw(std::vector<double> probs);

  // Parses {"p": [...]}. Sums within 1e-9 of 1 are renormalized.
  static OffspringLaw FromJson(const nlohmann::json& doc);
  static OffspringLaw FromFile(const std::string& path);

  std::span<const double> probs() const { return probs_; }
  std::size_t max_offspring() const { return probs_.size() - 1; }
  double p(std::size_t k) const { return k < probs_.size() ? probs_[k] : 0.0; }
  double mean() const;

  // k-th derivative of F at any real s. No domain check.
  double Eval(double s, int order = 0) const;
  long double EvalLong(long double s, int order = 0) const;

  nlohmann::json ToJson() const;

  // FNV-1a over the IEEE bit patterns of the probabilities.
  std::uint64_t Hash() const;

 private:
  std::vector<double> probs_;
};

// F, F', F'' or F''' at s in [0, 1]. Throws DomainError otherwise.
double gf_eval(const OffspringLaw& law, double s, int order);

// Least non-negative root of F(s) = s.
double extinction_probability(const OffspringLaw& law, double tol = 1e-14);

struct ModelConstants {
  double A = 0.0;      // mean
  double q = 1.0;      // extinction probability
  double beta = 1.0;   // F'(q)
  double B = 0.0;      // F''(1) / 2
  double b = 0.0;      // q F''(q), the second factorial moment of the dual law
  double alpha = 1.0;  // 1 + b / beta
  Regime regime = Regime::kCritical;

  bool critical() const { return regime == Regime::kCritical; }
  // (alpha - 1) / (1 - beta). Throws RegimeError for critical laws.
  double gamma() const;
  // gamma (1 + beta (1 + gamma)) / (1 - beta).
  double psi() const;
  // |ln beta|; zero for critical laws.
  double decay_rate() const;

  nlohmann::json ToJson() const;
};

ModelConstants model_constants(const OffspringLaw& law, double tol = 1e-14);

// The law with GF F(qs)/q: coefficients p_k q^(k-1). Equal to the input
// when q = 1.
OffspringLaw DualLaw(const OffspringLaw& law, double q);

// Taylor coefficients of F about q, used for recentred iteration: with
// r = q - s, q - F(s) = sum_m c_m (-1)^(m+1) r^m and c_0 dropped since
// F(q) = q. Avoids the cancellation in q - F_n(s) once F_n(s) is near q.
class FixedPointExpansion {
 public:
  FixedPointExpansion(const OffspringLaw& law, const ModelConstants& k);

  // q - F(q - r).
  long double Decay(long double r) const;
  // F'(q - r).
  long double Slope(long double r) const;

  long double q() const { return q_; }

 private:
  long double q_;
  std::vector<long double> decay_;  // coefficient of r^m in q - F(q - r)
  std::vector<long double> slope_;  // coefficient of r^m in F'(q - r)
};

}  // namespace branchlab

#endif  // BRANCHLAB_OFFSPRING_MODEL_HPP_
