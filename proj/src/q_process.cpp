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

#include "branchlab/q_process.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

void RequireNonCritical(const ModelConstants& k, const char* what) {
  if (k.critical()) {
    throw RegimeError(std::string(what) +
                      " needs beta < 1: the stationary distribution of the Q-process exists "
                      "only in the positive-recurrent regime; this law is critical");
  }
}

void RequireCritical(const ModelConstants& k, const char* what) {
  if (!k.critical()) {
    throw RegimeError(std::string(what) +
                      " needs beta = 1: the invariant measure with quadratic growth describes "
                      "the critical Q-process only");
  }
}

}  // namespace

double StateDistribution::mass() const {
  double acc = 0.0;
  for (double v : p) acc += v;
  return acc;
}

double StateDistribution::Mean() const {
  double acc = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) acc += static_cast<double>(j + 1) * p[j];
  return acc;
}

QKernel::QKernel(const OffspringLaw& law, std::size_t cap)
    : law_(law),
      constants_(model_constants(law)),
      dual_(DualLaw(law, constants_.q)),
      cap_(cap) {
  if (cap_ < 1) throw DomainError("QKernel: the state cap must be at least 1");
  const std::size_t K = law_.max_offspring();
  y_.assign(K + 1, 0.0);
  double qpow = 1.0;
  for (std::size_t j = 1; j <= K; ++j) {
    y_[j] = static_cast<double>(j) * law_.p(j) * qpow / constants_.beta;
    qpow *= constants_.q;
  }
  matrix_.assign(cap_ * cap_, 0.0);
  tails_.assign(cap_, 0.0);
  std::vector<double> row(cap_ + 1, 0.0), next(cap_ + 1, 0.0);
  for (std::size_t j = 1; j <= std::min(K, cap_); ++j) row[j] = y_[j];
  for (std::size_t i = 1; i <= cap_; ++i) {
    double mass = 0.0;
    for (std::size_t j = 1; j <= cap_; ++j) {
      matrix_[(i - 1) * cap_ + (j - 1)] = row[j];
      mass += row[j];
    }
    tails_[i - 1] = std::max(0.0, 1.0 - mass);
    if (i < cap_) {
      TruncatedProduct(row, dual_.probs(), next, Backend::kSerial);
      row.swap(next);
    }
  }
}

double QKernel::one_step(std::size_t i, std::size_t j) const {
  if (i < 1 || i > cap_ || j < 1 || j > cap_) {
    throw TruncationError("QKernel: state outside 1.." + std::to_string(cap_));
  }
  return matrix_[(i - 1) * cap_ + (j - 1)];
}

StateDistribution QKernel::Point(std::size_t i) const {
  if (i < 1 || i > cap_) throw TruncationError("QKernel: initial state outside the cap");
  StateDistribution d;
  d.p.assign(cap_, 0.0);
  d.p[i - 1] = 1.0;
  return d;
}

StateDistribution QKernel::Step(const StateDistribution& d, Backend backend) const {
  if (d.p.size() != cap_) throw DomainError("QKernel::Step: distribution size differs from the cap");
  StateDistribution out;
  out.p.assign(cap_, 0.0);
  RowVectorTimesMatrix(d.p, matrix_, cap_, out.p, backend);
  out.lost = d.lost;
  for (std::size_t i = 0; i < cap_; ++i) out.lost += d.p[i] * tails_[i];
  return out;
}

StateDistribution QKernel::Propagate(StateDistribution d, unsigned steps, Backend backend) const {
  for (unsigned t = 0; t < steps; ++t) d = Step(d, backend);
  return d;
}

std::vector<double> QTransitionRow(const QKernel& kernel, unsigned i, unsigned n,
                                   std::size_t order) {
  if (i < 1) throw DomainError("q_transition: i must be at least 1");
  const ModelConstants& k = kernel.constants();
  const auto row = TransitionRow(kernel.law(), i, n, order);
  const long double log_q = std::log(static_cast<long double>(k.q));
  const long double log_beta_n = static_cast<long double>(n) * std::log(static_cast<long double>(k.beta));
  std::vector<double> out(order + 1, 0.0);
  for (std::size_t j = 1; j <= order; ++j) {
    if (!(row[j] > 0.0)) continue;
    const long double lv = std::log(static_cast<long double>(j)) +
                           (static_cast<long double>(j) - i) * log_q +
                           std::log(static_cast<long double>(row[j])) -
                           std::log(static_cast<long double>(i)) - log_beta_n;
    out[j] = static_cast<double>(std::exp(lv));
  }
  return out;
}

double q_transition(const QKernel& kernel, unsigned i, std::size_t j, unsigned n,
                    std::size_t order) {
  if (order == 0) order = std::max<std::size_t>(64, j);
  if (j > order) {
    throw TruncationError("q_transition: state " + std::to_string(j) + " is beyond order " +
                          std::to_string(order));
  }
  if (j < 1) throw DomainError("q_transition: j must be at least 1");
  return QTransitionRow(kernel, i, n, order)[j];
}

double y_gf(const QKernel& kernel, unsigned i, unsigned n, double s) {
  if (i < 1) throw DomainError("y_gf: i must be at least 1");
  if (!(s >= 0.0 && s <= 1.0)) throw DomainError("y_gf: s must lie in [0, 1]");
  if (s == 0.0) return 0.0;
  if (s == 1.0) return 1.0;
  const ModelConstants& k = kernel.constants();
  const double x = k.q * s;
  const long double log_d = LogIterateDerivative(kernel.law(), n, x);
  const long double fn = static_cast<long double>(k.q) - r_function(kernel.law(), n, x);
  const long double lv = std::log(static_cast<long double>(s)) + log_d -
                         static_cast<long double>(n) * std::log(static_cast<long double>(k.beta)) +
                         static_cast<long double>(i - 1) * std::log(fn / static_cast<long double>(k.q));
  return static_cast<double>(std::exp(lv));
}

double expected_w(const QKernel& kernel, unsigned i, unsigned n) {
  const ModelConstants& k = kernel.constants();
  if (k.critical()) return static_cast<double>(i - 1) + (k.alpha - 1.0) * n + 1.0;
  const double bn = std::pow(k.beta, static_cast<double>(n));
  return (i - 1.0) * bn + 1.0 + k.gamma() * (1.0 - bn);
}

double PiClosedForm(double gamma, double s) {
  const double u = 1.0 - s;
  return s * std::exp(-gamma * u / (1.0 + 0.5 * gamma * u));
}

TruncatedSeries PiClosedFormSeries(double gamma, std::size_t order) {
  // g(s) = -gamma (1 - s) / (c (1 - d s)), c = 1 + gamma/2, d = gamma / (2c).
  const double c = 1.0 + 0.5 * gamma;
  const double d = 0.5 * gamma / c;
  std::vector<double> g(order + 1, 0.0);
  g[0] = -gamma / c;
  double dk = 1.0;
  for (std::size_t k = 1; k <= order; ++k) {
    const double prev = dk;
    dk *= d;
    g[k] = -gamma / c * (dk - prev);
  }
  // e = exp(g) via n e_n = sum_k k g_k e_(n-k).
  std::vector<double> e(order + 1, 0.0);
  e[0] = std::exp(g[0]);
  for (std::size_t n = 1; n <= order; ++n) {
    double acc = 0.0;
    for (std::size_t k = 1; k <= n; ++k) acc += static_cast<double>(k) * g[k] * e[n - k];
    e[n] = acc / static_cast<double>(n);
  }
  std::vector<double> pi(order + 1, 0.0);
  for (std::size_t j = 1; j <= order; ++j) pi[j] = e[j - 1];
  TruncatedSeries out(std::move(pi), std::nullopt);
  out.RecomputeTail();
  return out;
}

nlohmann::json PiDistribution::ToJson() const {
  const std::size_t head = std::min<std::size_t>(20, stationary.size());
  std::vector<double> closed_head, stat_head;
  for (std::size_t j = 1; j <= head; ++j) {
    closed_head.push_back(closed_form[j]);
    stat_head.push_back(stationary[j - 1]);
  }
  return {{"gamma", gamma},
          {"pi1_limit", pi1_limit},
          {"closed_form_head", closed_head},
          {"closed_form_mass", closed_form_mass},
          {"derivative_at_one", derivative_at_one},
          {"closed_form_series_mean", series_mean},
          {"stationary_head", stat_head},
          {"stationary_mean", stationary_mean},
          {"stationary_residual", stationary_residual},
          {"n_check", n_check},
          {"Q11_kernel", q11_kernel},
          {"Q11_series", q11_series},
          {"kernel_lost_mass", kernel_lost_mass},
          {"closed_form_fixed_point_residual", closed_form_fixed_point_residual},
          {"functional_residual", functional_residual}};
}

PiDistribution pi_distribution(const QKernel& kernel, std::span<const double> s_grid,
                               unsigned n_check, Backend backend) {
  const ModelConstants& k = kernel.constants();
  RequireNonCritical(k, "pi_distribution");
  const std::size_t cap = kernel.cap();
  PiDistribution out;
  out.gamma = k.gamma();
  out.pi1_limit = std::exp(-2.0 * out.gamma / (2.0 + out.gamma));
  out.closed_form = PiClosedFormSeries(out.gamma, cap);
  out.closed_form_mass = out.closed_form.mass();
  out.derivative_at_one = 1.0 + out.gamma;
  out.series_mean = out.closed_form.FirstMoment();

  StateDistribution v = kernel.Point(1);
  for (int it = 0; it < 100000; ++it) {
    StateDistribution next = kernel.Step(v, backend);
    const double m = next.mass();
    double diff = 0.0;
    for (std::size_t j = 0; j < cap; ++j) {
      next.p[j] /= m;
      diff = std::max(diff, std::abs(next.p[j] - v.p[j]));
    }
    next.lost = 0.0;
    v = std::move(next);
    if (diff < 1e-16) break;
  }
  out.stationary = v.p;
  out.stationary_mean = v.Mean();
  const StateDistribution vq = kernel.Step(v, backend);
  for (std::size_t j = 0; j < cap; ++j) {
    out.stationary_residual = std::max(out.stationary_residual, std::abs(vq.p[j] - v.p[j]));
  }

  out.n_check = n_check;
  const StateDistribution qn = kernel.Propagate(kernel.Point(1), n_check, backend);
  out.q11_kernel = qn.p[0];
  out.kernel_lost_mass = qn.lost;
  out.q11_series = q_transition(kernel, 1, 1, n_check);

  StateDistribution pi;
  pi.p.assign(out.closed_form.coeffs().begin() + 1, out.closed_form.coeffs().end());
  StateDistribution pin = pi;
  for (unsigned n = 1; n <= 3; ++n) {
    pin = kernel.Step(pin, backend);
    double res = 0.0;
    for (std::size_t j = 0; j < cap; ++j) res = std::max(res, std::abs(pi.p[j] - pin.p[j]));
    out.closed_form_fixed_point_residual.push_back(res);
  }

  for (double s : s_grid) {
    if (!(s >= 0.0 && s <= 1.0)) throw DomainError("pi_distribution: s must lie in [0, 1]");
    for (unsigned n = 1; n <= 5; ++n) {
      const double x = k.q * s;
      const double fhat_n =
          x < 1.0 ? static_cast<double>((static_cast<long double>(k.q) - r_function(kernel.law(), n, x)) / k.q)
                  : 1.0;
      const double rhs = y_gf(kernel, 1, n, s) / fhat_n * PiClosedForm(out.gamma, fhat_n);
      out.functional_residual = std::max(out.functional_residual, std::abs(PiClosedForm(out.gamma, s) - rhs));
    }
  }
  return out;
}

nlohmann::json MuCritical::ToJson() const {
  nlohmann::json brackets = nlohmann::json::array();
  for (const auto& b : mu_bracket) brackets.push_back(b.ToJson());
  return {{"s", s},
          {"mu_bracket", brackets},
          {"n_max", n_max},
          {"cesaro_target", cesaro_target},
          {"cesaro_estimate", cesaro_estimate},
          {"cesaro_terms", cesaro_terms},
          {"Q11_bracket", q11_bracket.ToJson()},
          {"edge_bracket", edge_bracket.ToJson()},
          {"edge_target", edge_target}};
}

namespace {

// The h-bar bracket for mu(s) in the critical case.
IntervalConstant MuBracket(const ModelConstants& k, const OffspringLaw& law, double s) {
  const double gap = law.Eval(s) - s;
  const double y = s * law.Eval(s, 1);
  IntervalConstant b;
  b.lo = 2.0 * y / ((k.alpha - 1.0) * gap);
  b.hi = 2.0 * s / ((k.alpha - 1.0) * gap);
  return b;
}

}  // namespace

std::vector<double> MeasuredMu(const QKernel& kernel, unsigned n, std::size_t terms) {
  const auto row = QTransitionRow(kernel, 1, n, std::max<std::size_t>(64, terms));
  const double n2 = static_cast<double>(n) * n;
  std::vector<double> out(terms);
  for (std::size_t j = 1; j <= terms; ++j) out[j - 1] = n2 * row[j];
  return out;
}

MuCritical mu_critical(const QKernel& kernel, std::span<const double> s_grid, unsigned n_max) {
  const ModelConstants& k = kernel.constants();
  RequireCritical(k, "mu_critical");
  const OffspringLaw& law = kernel.law();
  MuCritical out;
  out.n_max = n_max;
  const double n2 = static_cast<double>(n_max) * n_max;
  for (double s : s_grid) {
    if (!(s > 0.0 && s < 1.0)) throw DomainError("mu_critical: s must lie in (0, 1)");
    IntervalConstant b = MuBracket(k, law, s);
    b.point_estimate = n2 * y_gf(kernel, 1, n_max, s);
    out.s.push_back(s);
    out.mu_bracket.push_back(b);
  }
  out.cesaro_target = 2.0 / ((k.alpha - 1.0) * (k.alpha - 1.0));
  out.cesaro_terms = static_cast<unsigned>(std::floor(std::sqrt(static_cast<double>(n_max))));
  const auto mu = MeasuredMu(kernel, n_max, out.cesaro_terms);
  double partial = 0.0;
  for (double v : mu) partial += v;
  out.cesaro_estimate = partial / (static_cast<double>(out.cesaro_terms) * out.cesaro_terms);

  out.q11_bracket.lo = 2.0 * kernel.one_step(1, 1) / ((k.alpha - 1.0) * law.p(0));
  out.q11_bracket.hi = 2.0 / ((k.alpha - 1.0) * law.p(0));
  out.q11_bracket.point_estimate = n2 * q_transition(kernel, 1, 1, n_max);

  const double edge = 0.999;
  const IntervalConstant b = MuBracket(k, law, edge);
  out.edge_bracket.lo = b.lo * (1.0 - edge) * (1.0 - edge);
  out.edge_bracket.hi = b.hi * (1.0 - edge) * (1.0 - edge);
  out.edge_target = 4.0 / ((k.alpha - 1.0) * (k.alpha - 1.0));
  return out;
}

nlohmann::json Upsilon::ToJson() const {
  return {{"n_max", n_max},
          {"upsilon_from_1", from_i1},
          {"upsilon_from_2", from_i2},
          {"i_spread", i_spread},
          {"invariance_residual", invariance_residual}};
}

Upsilon upsilon_measure(const QKernel& kernel, unsigned n_max, std::size_t j_max) {
  if (kernel.law().p(1) == 0.0) throw DomainError("upsilon_measure: unsupported for p_1 = 0");
  if (j_max < 1) throw DomainError("upsilon_measure: j_max must be at least 1");
  const std::size_t cap = kernel.cap();
  const std::size_t order = std::max(cap, j_max);
  const auto r1 = QTransitionRow(kernel, 1, n_max, order);
  const auto r2 = QTransitionRow(kernel, 2, n_max, order);
  Upsilon out;
  out.n_max = n_max;
  std::vector<double> full(order);
  for (std::size_t j = 1; j <= order; ++j) full[j - 1] = r1[j] / r1[1];
  for (std::size_t j = 1; j <= j_max; ++j) {
    out.from_i1.push_back(full[j - 1]);
    out.from_i2.push_back(r2[j] / r2[1]);
    out.i_spread = std::max(out.i_spread, std::abs(out.from_i1.back() - out.from_i2.back()));
  }
  for (std::size_t j = 1; j <= std::min(j_max, cap); ++j) {
    double acc = 0.0;
    for (std::size_t i = 1; i <= cap; ++i) acc += full[i - 1] * kernel.one_step(i, j);
    out.invariance_residual = std::max(out.invariance_residual, std::abs(acc - full[j - 1]));
  }
  return out;
}

nlohmann::json RateCheck::ToJson() const {
  return {{"s", s},
          {"i", i},
          {"n", ns},
          {"scaled", scaled},
          {"bracket", bracket.ToJson()},
          {"reference", reference},
          {"reference_label", reference_label},
          {"r", r},
          {"c", c},
          {"fit_rms", fit_rms},
          {"loglog_slope", loglog_slope}};
}

RateCheck rate_check(const QKernel& kernel, double s, std::span<const unsigned> ns, unsigned i,
                     RateReference mode) {
  const ModelConstants& k = kernel.constants();
  RequireCritical(k, "rate_check");
  if (!(s > 0.0 && s < 1.0)) throw DomainError("rate_check: s must lie in (0, 1)");
  if (ns.size() < 3) throw DomainError("rate_check: need at least three horizons");
  RateCheck out;
  out.s = s;
  out.i = i;
  out.mode = mode;
  out.ns.assign(ns.begin(), ns.end());
  out.bracket = MuBracket(k, kernel.law(), s);
  const Eigen::Index m = static_cast<Eigen::Index>(ns.size());
  Eigen::VectorXd x(m), scaled(m);
  for (Eigen::Index t = 0; t < m; ++t) {
    const double n = ns[static_cast<std::size_t>(t)];
    scaled[t] = n * n * y_gf(kernel, i, ns[static_cast<std::size_t>(t)], s);
    x[t] = std::log(n) / n;
    out.scaled.push_back(scaled[t]);
  }
  out.bracket.point_estimate = out.scaled.back();
  if (mode == RateReference::kBracketMidpoint) {
    out.reference = out.bracket.midpoint();
    out.reference_label = "midpoint of the h-bar bracket; a fitting reference, not the limit constant";
  } else {
    Eigen::MatrixXd design(m, 3);
    for (Eigen::Index t = 0; t < m; ++t) {
      design(t, 0) = 1.0;
      design(t, 1) = x[t];
      design(t, 2) = 1.0 / ns[static_cast<std::size_t>(t)];
    }
    const Eigen::Vector3d coef = design.colPivHouseholderQr().solve(scaled);
    out.reference = coef[0];
    out.reference_label = "least-squares extrapolation of n^2 Y_n(s) in (1, ln n / n, 1 / n)";
  }
  Eigen::VectorXd r = scaled / out.reference - Eigen::VectorXd::Ones(m);
  out.r.assign(r.data(), r.data() + m);
  out.c = x.dot(r) / x.dot(x);
  out.fit_rms = std::sqrt((r - out.c * x).squaredNorm() / static_cast<double>(m));

  std::vector<double> lx, ly;
  for (Eigen::Index t = 0; t < m; ++t) {
    if (r[t] == 0.0) continue;
    lx.push_back(std::log(x[t]));
    ly.push_back(std::log(std::abs(r[t])));
  }
  if (lx.size() >= 2) {
    const Eigen::Map<const Eigen::VectorXd> ex(lx.data(), static_cast<Eigen::Index>(lx.size()));
    const Eigen::Map<const Eigen::VectorXd> ey(ly.data(), static_cast<Eigen::Index>(ly.size()));
    const double mx = ex.mean(), my = ey.mean();
    const Eigen::VectorXd cx = ex.array() - mx;
    out.loglog_slope = cx.dot(ey.array().matrix() - Eigen::VectorXd::Constant(ey.size(), my)) / cx.dot(cx);
  }
  return out;
}

}  // namespace branchlab
