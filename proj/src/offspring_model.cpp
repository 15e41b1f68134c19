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

#include "branchlab/offspring_model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "branchlab/error.hpp"

namespace branchlab {

const char* RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kSubcritical:
      return "subcritical";
    case Regime::kCritical:
      return "critical";
    case Regime::kSupercritical:
      return "supercritical";
  }
  return "unknown";
}

OffspringLaw::OffspringLaw(std::vector<double> probs) : probs_(std::move(probs)) {
  while (probs_.size() > 1 && probs_.back() == 0.0) probs_.pop_back();
  if (probs_.empty()) throw InvalidModel("offspring law is empty");
  double sum = 0.0;
  for (std::size_t k = 0; k < probs_.size(); ++k) {
    const double pk = probs_[k];
    if (!std::isfinite(pk) || pk < 0.0) {
      throw InvalidModel("p_" + std::to_string(k) + " is not a probability");
    }
    sum += pk;
  }
  if (std::abs(sum - 1.0) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "probabilities sum to " << sum << ", not 1";
    throw InvalidModel(msg.str());
  }
  if (!(probs_[0] > 0.0)) throw InvalidModel("p_0 must be positive");
  if (!(p(0) + p(1) < 1.0)) throw InvalidModel("p_0 + p_1 must be below 1");
}

OffspringLaw OffspringLaw::FromJson(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("p") || !doc["p"].is_array()) {
    throw InvalidModel("model must be an object with an array field \"p\"");
  }
  std::vector<double> probs;
  for (const auto& v : doc["p"]) {
    if (!v.is_number()) throw InvalidModel("\"p\" entries must be numbers");
    probs.push_back(v.get<double>());
  }
  double sum = 0.0;
  for (double v : probs) sum += v;
  if (std::isfinite(sum) && sum > 0.0 && std::abs(sum - 1.0) < 1e-9) {
    for (double& v : probs) v /= sum;
  }
  return OffspringLaw(std::move(probs));
}

OffspringLaw OffspringLaw::FromFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidModel("cannot open model file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidModel("cannot parse '" + path + "': " + e.what());
  }
  return FromJson(doc);
}

double OffspringLaw::mean() const { return Eval(1.0, 1); }

long double OffspringLaw::EvalLong(long double s, int order) const {
  const std::size_t K = max_offspring();
  if (order < 0) throw DomainError("negative derivative order");
  if (static_cast<std::size_t>(order) > K) return 0.0L;
  long double acc = 0.0L;
  for (std::size_t j = K + 1; j-- > static_cast<std::size_t>(order);) {
    long double falling = 1.0L;
    for (int m = 0; m < order; ++m) falling *= static_cast<long double>(j - m);
    acc = acc * s + falling * probs_[j];
  }
  return acc;
}

double OffspringLaw::Eval(double s, int order) const {
  const std::size_t K = max_offspring();
  if (order < 0) throw DomainError("negative derivative order");
  if (static_cast<std::size_t>(order) > K) return 0.0;
  double acc = 0.0;
  for (std::size_t j = K + 1; j-- > static_cast<std::size_t>(order);) {
    double falling = 1.0;
    for (int m = 0; m < order; ++m) falling *= static_cast<double>(j - m);
    acc = acc * s + falling * probs_[j];
  }
  return acc;
}

nlohmann::json OffspringLaw::ToJson() const { return {{"p", probs_}}; }

std::uint64_t OffspringLaw::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (double v : probs_) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (bits >> (8 * byte)) & 0xffU;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double gf_eval(const OffspringLaw& law, double s, int order) {
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("gf_eval: s must lie in [0, 1]");
  if (order < 0 || order > 3) throw DomainError("gf_eval: order must be 0..3");
  return law.Eval(s, order);
}

double extinction_probability(const OffspringLaw& law, double tol) {
  if (!(tol > 0.0)) throw DomainError("extinction_probability: tol must be positive");
  if (law.mean() <= 1.0 + kCriticalTolerance) return 1.0;
  // G(s) = F(s) - s is convex with G(0) > 0 = G(1) and G'(1) > 0, so it
  // is negative at its minimiser, which brackets the smaller root.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (law.Eval(mid, 1) < 1.0) lo = mid; else hi = mid;
  }
  const double smin = lo;
  lo = 0.0;
  hi = smin;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    if (law.Eval(mid) - mid > 0.0) lo = mid; else hi = mid;
  }
  long double q = 0.5L * (lo + hi);
  for (int step = 0; step < 2; ++step) {
    const long double slope = law.EvalLong(q, 1) - 1.0L;
    if (slope >= 0.0L) break;
    const long double next = q - (law.EvalLong(q) - q) / slope;
    if (next >= 0.0L && next < smin) q = next;
  }
  return static_cast<double>(q);
}

double ModelConstants::gamma() const {
  if (critical()) throw RegimeError("gamma is defined only for beta < 1");
  return (alpha - 1.0) / (1.0 - beta);
}

double ModelConstants::psi() const {
  const double g = gamma();
  return g * (1.0 + beta * (1.0 + g)) / (1.0 - beta);
}

double ModelConstants::decay_rate() const { return critical() ? 0.0 : -std::log(beta); }

nlohmann::json ModelConstants::ToJson() const {
  nlohmann::json out = {{"A", A},       {"q", q},         {"beta", beta},
                        {"B", B},       {"b", b},         {"alpha", alpha},
                        {"regime", RegimeName(regime)}, {"R", decay_rate()}};
  if (!critical()) {
    out["gamma"] = gamma();
    out["psi"] = psi();
  } else {
    out["gamma"] = nullptr;
    out["psi"] = nullptr;
  }
  return out;
}

ModelConstants model_constants(const OffspringLaw& law, double tol) {
  ModelConstants k;
  k.A = law.mean();
  k.B = 0.5 * law.Eval(1.0, 2);
  if (std::abs(k.A - 1.0) <= kCriticalTolerance) {
    k.regime = Regime::kCritical;
    k.q = 1.0;
    k.beta = 1.0;
  } else if (k.A < 1.0) {
    k.regime = Regime::kSubcritical;
    k.q = 1.0;
    k.beta = k.A;
  } else {
    k.regime = Regime::kSupercritical;
    k.q = extinction_probability(law, tol);
    k.beta = law.Eval(k.q, 1);
  }
  k.b = k.q * law.Eval(k.q, 2);
  k.alpha = 1.0 + k.b / k.beta;
  return k;
}

OffspringLaw DualLaw(const OffspringLaw& law, double q) {
  if (q == 1.0) return law;
  std::vector<double> probs(law.probs().begin(), law.probs().end());
  double scale = 1.0 / q;
  double sum = 0.0;
  for (double& v : probs) {
    v *= scale;
    scale *= q;
    sum += v;
  }
  for (double& v : probs) v /= sum;
  return OffspringLaw(std::move(probs));
}

FixedPointExpansion::FixedPointExpansion(const OffspringLaw& law, const ModelConstants& k)
    : q_(k.q) {
  const std::size_t K = law.max_offspring();
  // c_m = F^(m)(q) / m! = sum_j p_j C(j, m) q^(j - m).
  std::vector<long double> c(K + 2, 0.0L);
  for (std::size_t m = 0; m <= K; ++m) {
    long double acc = 0.0L;
    for (std::size_t j = K + 1; j-- > m;) {
      long double binom = 1.0L;
      for (std::size_t t = 0; t < m; ++t) binom = binom * (j - t) / (t + 1);
      acc = acc * q_ + binom * law.p(j);
    }
    c[m] = acc;
  }
  c[1] = k.beta;
  decay_.assign(K + 1, 0.0L);
  for (std::size_t m = 1; m <= K; ++m) decay_[m] = (m % 2 == 1) ? c[m] : -c[m];
  slope_.assign(K == 0 ? 1 : K, 0.0L);
  for (std::size_t m = 0; m + 1 <= K; ++m) {
    const long double v = static_cast<long double>(m + 1) * c[m + 1];
    slope_[m] = (m % 2 == 0) ? v : -v;
  }
}

long double FixedPointExpansion::Decay(long double r) const {
  long double acc = 0.0L;
  for (std::size_t m = decay_.size(); m-- > 1;) acc = (acc + decay_[m]) * r;
  return acc;
}

long double FixedPointExpansion::Slope(long double r) const {
  long double acc = 0.0L;
  for (std::size_t m = slope_.size(); m-- > 0;) acc = acc * r + slope_[m];
  return acc;
}

}  // namespace branchlab
