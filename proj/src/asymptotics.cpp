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

#include "branchlab/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void RequireNonCritical(const ModelConstants& k, const char* what) {
  if (k.critical()) {
    throw RegimeError(std::string(what) +
                      " needs a non-critical law (beta < 1); for A = 1 use the critical decay "
                      "(1 - s) / ((1 - s) B n + 1)");
  }
}

void RequireCritical(const ModelConstants& k, const char* what) {
  if (!k.critical()) throw RegimeError(std::string(what) + " needs a critical law (A = 1)");
}

bool AtFixedPoint(double s, double q) { return std::abs(s - q) <= 1e-12; }

nlohmann::json NullableNumber(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json IntervalConstant::ToJson() const {
  nlohmann::json out = {{"lo", lo}, {"hi", hi}};
  out["estimate"] = point_estimate ? nlohmann::json(*point_estimate) : nlohmann::json(nullptr);
  out["consistent"] = Consistent();
  return out;
}

nlohmann::json LimitEstimate::ToJson() const {
  return {{"value", value},
          {"last_term", raw},
          {"iterations", iterations},
          {"last_change", last_change},
          {"converged", converged}};
}

bool GeometricExtrapolator::Add(long double term) {
  a0_ = a1_;
  a1_ = a2_;
  a2_ = term;
  ++count_;
  if (count_ < 3) {
    extrapolant_ = term;
    return false;
  }
  const long double d1 = a1_ - a0_;
  const long double d2 = a2_ - a1_;
  long double e = a2_;
  const long double noise = 16.0L * std::numeric_limits<long double>::epsilon() * std::fabs(a2_);
  if (std::fabs(d2) > noise && d1 != 0.0L) {
    const long double rho = d2 / d1;
    if (std::fabs(rho) < 1.0L) e = a2_ + d2 * rho / (1.0L - rho);
  }
  const long double scale = std::max(std::fabs(e), std::numeric_limits<long double>::min());
  change_ = static_cast<double>(std::fabs(e - extrapolant_) / scale);
  extrapolant_ = e;
  agreements_ = change_ <= tol_ ? agreements_ + 1 : 0;
  return agreements_ >= 2;
}

LimitEstimate GeometricExtrapolator::Estimate() const {
  LimitEstimate out;
  out.value = static_cast<double>(extrapolant_);
  out.raw = static_cast<double>(a2_);
  out.iterations = count_;
  out.last_change = change_;
  out.converged = agreements_ >= 2;
  return out;
}

long double NormalizedR(const OffspringLaw& law, double s, unsigned n) {
  const ModelConstants k = model_constants(law);
  const FixedPointExpansion fx(law, k);
  long double r = static_cast<long double>(k.q) - s;
  long double inv = 1.0L;
  const long double inv_beta = 1.0L / static_cast<long double>(k.beta);
  for (unsigned t = 0; t < n; ++t) {
    r = fx.Decay(r);
    inv *= inv_beta;
  }
  return r * inv;
}

LimitEstimate LimitA(const OffspringLaw& law, double s, double tol, unsigned n_max) {
  const ModelConstants k = model_constants(law);
  RequireNonCritical(k, "A(s)");
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("A(s): s must lie in [0, 1)");
  if (AtFixedPoint(s, k.q)) return LimitEstimate{0.0, 0.0, 0, 0.0, true};
  const FixedPointExpansion fx(law, k);
  const long double inv_beta = 1.0L / static_cast<long double>(k.beta);
  long double r = static_cast<long double>(k.q) - s;
  long double inv = 1.0L;
  GeometricExtrapolator ex(tol);
  for (unsigned n = 0; n <= n_max; ++n) {
    if (ex.Add(r * inv)) break;
    r = fx.Decay(r);
    inv *= inv_beta;
  }
  return ex.Estimate();
}

LimitEstimate LimitDerivative(const OffspringLaw& law, double s, double tol, unsigned n_max) {
  const ModelConstants k = model_constants(law);
  RequireNonCritical(k, "lim -R_n'(s) / beta^n");
  if (!(s >= 0.0 && s < 1.0)) throw DomainError("lim -R_n'(s) / beta^n: s must lie in [0, 1)");
  const FixedPointExpansion fx(law, k);
  const long double log_beta = std::log(static_cast<long double>(k.beta));
  long double r = static_cast<long double>(k.q) - s;
  long double log_sum = 0.0L;
  GeometricExtrapolator ex(tol);
  for (unsigned n = 0; n <= n_max; ++n) {
    if (ex.Add(std::exp(log_sum))) break;
    const long double slope = fx.Slope(r);
    if (!(slope > 0.0L)) return LimitEstimate{0.0, 0.0, n, 0.0, true};
    log_sum += std::log(slope) - log_beta;
    r = fx.Decay(r);
  }
  return ex.Estimate();
}

double Delta1(const OffspringLaw& law, const ModelConstants& k) {
  RequireNonCritical(k, "Delta_1");
  double sum = 0.0;
  double bk = 1.0;  // beta^k
  for (unsigned n = 0; n < 1000000; ++n) {
    const double term = law.Eval(k.q * (1.0 - bk), 2) * bk / k.beta;
    sum += term;
    if (n > 0 && term < 1e-16 * sum) break;
    bk *= k.beta;
  }
  return sum;
}

double Delta2(const OffspringLaw& law, const ModelConstants& k) {
  RequireNonCritical(k, "Delta_2");
  if (law.p(1) == 0.0) return std::numeric_limits<double>::infinity();
  const double f2q = law.Eval(k.q, 2);
  double sum = 0.0;
  double bk = 1.0;
  for (unsigned n = 0; n < 1000000; ++n) {
    const double term = f2q * bk / law.Eval(k.q * (1.0 - bk), 1);
    sum += term;
    if (n > 0 && term < 1e-16 * sum) break;
    bk *= k.beta;
  }
  return sum;
}

nlohmann::json BasicLemmaPoint::ToJson() const {
  return {{"s", s},
          {"A", a.ToJson()},
          {"A1", NullableNumber(a1)},
          {"A2", NullableNumber(a2)},
          {"A_in_bracket", a_in_bracket},
          {"delta", NullableNumber(delta)},
          {"delta_in_range", delta_in_range},
          {"K_formula", k_formula},
          {"K_measured", k_measured.ToJson()},
          {"K_exp_bracket", k_exp_bracket.ToJson()},
          {"K_log_bracket", k_log_bracket.ToJson()}};
}

nlohmann::json BasicLemmaConstants::ToJson() const {
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) pts.push_back(p.ToJson());
  return {{"q", q},
          {"beta", beta},
          {"Delta1", delta1},
          {"Delta2", NullableNumber(delta2)},
          {"gamma_over_q", gamma_over_q},
          {"delta_constant", delta_constant},
          {"points", pts}};
}

namespace {

IntervalConstant SortedInterval(double a, double b, double estimate) {
  IntervalConstant out;
  out.lo = std::min(a, b);
  out.hi = std::max(a, b);
  out.point_estimate = estimate;
  return out;
}

}  // namespace

BasicLemmaConstants basic_lemma_constants(const OffspringLaw& law, std::span<const double> s_grid,
                                          unsigned n_max, double tol) {
  const ModelConstants k = model_constants(law);
  if (k.critical()) {
    throw RegimeError("the Basic Lemma constants need beta < 1; use critical_decay for A = 1");
  }
  BasicLemmaConstants out;
  out.q = k.q;
  out.beta = k.beta;
  out.delta1 = Delta1(law, k);
  out.delta2 = Delta2(law, k);
  out.gamma_over_q = k.gamma() / k.q;
  double dmin = std::numeric_limits<double>::infinity();
  double dmax = -dmin;
  for (double s : s_grid) {
    BasicLemmaPoint p;
    p.s = s;
    p.a = LimitA(law, s, tol, n_max);
    p.k_measured = LimitDerivative(law, s, std::max(tol, 1e-13), n_max);
    const double A = p.a.value;
    if (AtFixedPoint(s, k.q)) {
      p.a1 = p.a2 = 0.0;
      p.a_in_bracket = true;
      p.delta = kNaN;
      p.delta_in_range = true;
      p.k_formula = 1.0;
      p.k_exp_bracket = SortedInterval(1.0, 1.0, p.k_measured.value);
      p.k_log_bracket = SortedInterval(1.0, 1.0, p.k_measured.value);
    } else {
      const double inv = 1.0 / (k.q - s);
      p.a1 = 1.0 / (inv + 0.5 * out.delta1);
      p.a2 = 1.0 / (inv + 0.5 * out.delta2);
      p.a_in_bracket = p.a2 <= A && A <= p.a1;
      p.delta = 2.0 * (1.0 / A - inv);
      p.delta_in_range = out.delta1 <= p.delta && p.delta <= out.delta2;
      p.k_formula = std::exp(-p.delta * A);
      p.k_exp_bracket =
          SortedInterval(std::exp(-out.delta2 * A), std::exp(-out.delta1 * A), p.k_measured.value);
      p.k_log_bracket = SortedInterval(std::exp(-p.a1 * out.delta2), std::exp(-p.a2 * out.delta1),
                                       p.k_measured.value);
      dmin = std::min(dmin, p.delta);
      dmax = std::max(dmax, p.delta);
    }
    out.points.push_back(p);
  }
  out.delta_constant = !(dmax > dmin) || (dmax - dmin) < 1e-6 * std::abs(dmax);
  return out;
}

double critical_decay(const OffspringLaw& law, double s, unsigned n) {
  const ModelConstants k = model_constants(law);
  RequireCritical(k, "critical_decay");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("critical_decay: s must lie in [0, 1]");
  return (1.0 - s) / ((1.0 - s) * k.B * n + 1.0);
}

std::vector<ConvergenceRow> CriticalDecayTable(const OffspringLaw& law, double s,
                                               std::span<const unsigned> ns) {
  std::vector<ConvergenceRow> rows;
  for (unsigned n : ns) {
    ConvergenceRow row;
    row.n = n;
    row.exact = static_cast<double>(r_function(law, n, s));
    row.asymptote = critical_decay(law, s, n);
    row.ratio = row.exact / row.asymptote;
    rows.push_back(row);
  }
  return rows;
}

double k_function(const OffspringLaw& law, double s) {
  const ModelConstants k = model_constants(law);
  RequireNonCritical(k, "K(s)");
  if (AtFixedPoint(s, k.q)) return 1.0;
  const double A = LimitA(law, s, 1e-13).value;
  const double delta = 2.0 * (1.0 / A - 1.0 / (k.q - s));
  return std::exp(-delta * A);
}

std::vector<long double> LogReturnProbabilities(const OffspringLaw& law, unsigned n_max) {
  const ModelConstants k = model_constants(law);
  const FixedPointExpansion fx(law, k);
  std::vector<long double> out(n_max + 1, 0.0L);
  long double r = static_cast<long double>(k.q);
  for (unsigned n = 1; n <= n_max; ++n) {
    const long double slope = fx.Slope(r);
    out[n] = slope > 0.0L ? out[n - 1] + std::log(slope)
                          : -std::numeric_limits<long double>::infinity();
    r = fx.Decay(r);
  }
  return out;
}

nlohmann::json LocalLimitReport::ToJson() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) rows_json.push_back({{"n", r.n}, {"P11", r.p11}, {"scaled", r.scaled}});
  nlohmann::json out = {{"regime", RegimeName(regime)}, {"rows", rows_json}};
  out["scaling"] = regime == Regime::kCritical ? "n^2 P11(n)" : "beta^-n P11(n)";
  if (limit) out["limit"] = limit->ToJson();
  if (bracket) out["bracket"] = bracket->ToJson();
  return out;
}

LocalLimitReport local_limit(const OffspringLaw& law, std::span<const unsigned> ns) {
  const ModelConstants k = model_constants(law);
  LocalLimitReport out;
  out.regime = k.regime;
  unsigned n_max = 0;
  for (unsigned n : ns) n_max = std::max(n_max, n);
  const auto logp = LogReturnProbabilities(law, n_max);
  const long double log_beta = std::log(static_cast<long double>(k.beta));
  for (unsigned n : ns) {
    LocalLimitRow row;
    row.n = n;
    row.p11 = static_cast<double>(std::exp(logp[n]));
    if (k.critical()) {
      row.scaled = static_cast<double>(static_cast<long double>(n) * n * std::exp(logp[n]));
    } else {
      row.scaled = static_cast<double>(std::exp(logp[n] - n * log_beta));
    }
    out.rows.push_back(row);
  }
  if (k.critical()) {
    IntervalConstant bracket;
    bracket.lo = law.p(1) / (law.p(0) * k.B);
    bracket.hi = 1.0 / (law.p(0) * k.B);
    if (!out.rows.empty()) bracket.point_estimate = out.rows.back().scaled;
    out.bracket = bracket;
  } else {
    out.limit = LimitDerivative(law, 0.0);
  }
  return out;
}

ClosedFormM::ClosedFormM(const OffspringLaw& law, double tol) : law_(&law), tol_(tol) {
  a0_ = LimitA(law, 0.0, tol).value;
  k0_ = LimitDerivative(law, 0.0, tol).value;
}

double ClosedFormM::operator()(double s) const {
  return (a0_ - LimitA(*law_, s, tol_).value) / k0_;
}

nlohmann::json InvariantMeasure::ToJson() const {
  nlohmann::json out = {{"n_max", n_max},
                        {"order", mu.order()},
                        {"M_at_q", m_at_q},
                        {"convergence", convergence},
                        {"invariance_residual", invariance_residual},
                        {"mu_head", std::vector<double>(mu.coeffs().begin(),
                                                        mu.coeffs().begin() + std::min<std::size_t>(21, mu.order() + 1))},
                        {"nu_head", std::vector<double>(nu.coeffs().begin(),
                                                        nu.coeffs().begin() + std::min<std::size_t>(21, nu.order() + 1))},
                        {"nu_mass", nu.mass()}};
  if (closed_form_deviation) out["closed_form_deviation"] = *closed_form_deviation;
  if (critical_bracket) {
    out["critical_bracket"] = critical_bracket->ToJson();
    out["check_grid"] = check_grid;
    out["bracket_ok"] = bracket_ok;
  }
  return out;
}

namespace {

// mu_j = P_1j(n) / P_11(n), mu_0 = 0.
TruncatedSeries RatioSeries(const TruncatedSeries& fn) {
  std::vector<double> mu(fn.order() + 1, 0.0);
  const double p11 = fn[1];
  for (std::size_t j = 1; j < mu.size(); ++j) mu[j] = fn[j] / p11;
  return TruncatedSeries(std::move(mu), std::nullopt);
}

}  // namespace

InvariantMeasure invariant_measure(const OffspringLaw& law, std::size_t order, unsigned n_max) {
  if (law.p(1) == 0.0) throw DomainError("invariant_measure: unsupported for p_1 = 0");
  if (n_max < 2) throw DomainError("invariant_measure: n_max must be at least 2");
  if (order < 2) throw DomainError("invariant_measure: order must be at least 2");
  const ModelConstants k = model_constants(law);
  const TruncatedSeries f = TruncatedSeries::FromLaw(law);
  const TruncatedSeries prev = iterate_gf(law, n_max - 1, order);
  const TruncatedSeries cur = compose(f, prev);

  InvariantMeasure out;
  out.n_max = n_max;
  out.mu = RatioSeries(cur);
  const TruncatedSeries mu_prev = RatioSeries(prev);
  const std::size_t jmax = std::min<std::size_t>(20, order);
  for (std::size_t j = 1; j <= jmax; ++j) {
    out.convergence = std::max(out.convergence, std::abs(out.mu[j] - mu_prev[j]) / out.mu[j]);
  }

  out.m_at_q = out.mu.Evaluate(k.q);
  std::vector<double> nu(order + 1, 0.0);
  double qj = 1.0;
  for (std::size_t j = 0; j <= order; ++j) {
    nu[j] = out.mu[j] * qj / out.m_at_q;
    qj *= k.q;
  }
  out.nu = TruncatedSeries(std::move(nu), std::nullopt);

  // Rows P_kj(1), j <= jmax, as successive powers of F.
  std::vector<double> fk(jmax + 1, 0.0), next(jmax + 1, 0.0), acc(jmax + 1, 0.0);
  for (std::size_t j = 0; j <= jmax; ++j) fk[j] = law.p(j);
  for (std::size_t kk = 1; kk <= order; ++kk) {
    for (std::size_t j = 0; j <= jmax; ++j) acc[j] += out.mu[kk] * fk[j];
    TruncatedProduct(fk, f.coeffs(), next, Backend::kSerial);
    fk.swap(next);
  }
  for (std::size_t j = 1; j <= jmax; ++j) {
    out.invariance_residual = std::max(out.invariance_residual, std::abs(acc[j] - k.beta * out.mu[j]));
  }

  if (!k.critical()) {
    const ClosedFormM closed(law);
    double dev = 0.0;
    for (double frac : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      const double s = frac * k.q;
      const double m = closed(s);
      dev = std::max(dev, std::abs(out.mu.Evaluate(s) - m) / std::abs(m));
    }
    out.closed_form_deviation = dev;
  } else {
    IntervalConstant bracket;
    bracket.lo = law.p(0) / k.B;
    bracket.hi = law.p(0) / (law.p(1) * k.B);
    const std::size_t m = std::min<std::size_t>(
        order, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n_max)))));
    double partial = 0.0;
    for (std::size_t j = 1; j <= m; ++j) partial += out.mu[j];
    bracket.point_estimate = partial / static_cast<double>(m);
    out.critical_bracket = bracket;
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
      out.check_grid.push_back(s);
      out.bracket_ok.push_back(bracket.Contains(out.mu.Evaluate(s) * (1.0 - s) / s));
    }
  }
  return out;
}

long double SurvivalDenominator(const OffspringLaw& law, unsigned i, unsigned n) {
  const long double q = extinction_probability(law);
  const long double r = r_function(law, n, 0.0);
  const long double fn0 = q - r;
  long double sum = 0.0L;
  for (unsigned m = 0; m < i; ++m) sum += std::pow(q, static_cast<long double>(i - 1 - m)) *
                                          std::pow(fn0, static_cast<long double>(m));
  return r * sum;
}

std::vector<double> ConditionedRow(const OffspringLaw& law, unsigned i, unsigned n,
                                   std::size_t order) {
  if (i < 1) throw DomainError("conditioned_transition: i must be at least 1");
  const auto row = TransitionRow(law, i, n, order);
  const long double q = extinction_probability(law);
  const long double log_q = std::log(q);
  const long double log_denom = std::log(SurvivalDenominator(law, i, n));
  std::vector<double> out(order + 1, 0.0);
  for (std::size_t j = 1; j <= order; ++j) {
    if (!(row[j] > 0.0)) continue;
    out[j] = static_cast<double>(std::exp(std::log(static_cast<long double>(row[j])) +
                                          static_cast<long double>(j) * log_q - log_denom));
  }
  return out;
}

double conditioned_transition(const OffspringLaw& law, unsigned i, std::size_t j, unsigned n,
                              std::size_t order) {
  if (order == 0) order = std::max<std::size_t>(64, j);
  if (j > order) throw TruncationError("conditioned_transition: j beyond truncation order");
  return ConditionedRow(law, i, n, order)[j];
}

double yaglom_gf(const OffspringLaw& law, unsigned i, unsigned n, double s) {
  const ModelConstants k = model_constants(law);
  RequireCritical(k, "yaglom_gf");
  if (i < 1) throw DomainError("yaglom_gf: i must be at least 1");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("yaglom_gf: s must lie in [0, 1]");
  if (s == 1.0) return 1.0;
  auto survival = [&](double x) {
    const long double r = r_function(law, n, x);
    long double sum = 0.0L;
    for (unsigned m = 0; m < i; ++m) sum += std::pow(1.0L - r, static_cast<long double>(m));
    return r * sum;
  };
  return static_cast<double>(1.0L - survival(s) / survival(0.0));
}

const char* DecayClassName(DecayClass c) {
  switch (c) {
    case DecayClass::kRPositive:
      return "R-positive";
    case DecayClass::kRNull:
      return "R-null";
    case DecayClass::kRTransient:
      return "R-transient";
  }
  return "unknown";
}

nlohmann::json DecayClassification::ToJson() const {
  return {{"R", R}, {"class", DecayClassName(decay_class)}, {"limit", limit.ToJson()}};
}

DecayClassification decay_classification(const OffspringLaw& law) {
  const ModelConstants k = model_constants(law);
  if (k.critical()) throw RegimeError("decay classification needs beta < 1 (R > 0)");
  DecayClassification out;
  out.R = -std::log(k.beta);
  out.limit = LimitDerivative(law, 0.0);
  // sum e^(Rn) P_11(n) diverges whenever the limit is positive.
  out.decay_class = out.limit.value > 0.0 ? DecayClass::kRPositive : DecayClass::kRNull;
  return out;
}

nlohmann::json SchroederResiduals::ToJson() const {
  return {{"s", s_grid},
          {"V_residual", v_residual},
          {"A_residual", a_residual},
          {"max_V_residual", max_v_residual},
          {"max_A_residual", max_a_residual}};
}

SchroederResiduals schroeder_check(const OffspringLaw& law, std::span<const double> s_grid,
                                   std::size_t order, unsigned n_max) {
  const ModelConstants k = model_constants(law);
  RequireNonCritical(k, "schroeder_check");
  const InvariantMeasure im = invariant_measure(law, order, n_max);
  SchroederResiduals out;
  for (double s : s_grid) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("schroeder_check: s must lie in [0, 1]");
    out.s_grid.push_back(s);
    const double fhat = law.Eval(k.q * s) / k.q;
    const double vres = std::abs(1.0 - im.V(fhat) - k.beta * (1.0 - im.V(s)));
    out.v_residual.push_back(vres);
    out.max_v_residual = std::max(out.max_v_residual, vres);

    double ares = 0.0;
    const double x = k.q * s;
    if (x < k.q) {
      const double a = LimitA(law, x, 1e-13).value;
      double bn = 1.0;
      for (unsigned n = 1; n <= 5; ++n) {
        bn *= k.beta;
        const double xn = static_cast<double>(static_cast<long double>(k.q) - r_function(law, n, x));
        if (xn >= k.q) break;
        const double an = LimitA(law, xn, 1e-13).value;
        ares = std::max(ares, std::abs(an - bn * a) / std::abs(bn * a));
      }
    }
    out.a_residual.push_back(ares);
    out.max_a_residual = std::max(out.max_a_residual, ares);
  }
  return out;
}

}  // namespace branchlab
