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

#include "branchlab/cumulative_state.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

template <typename T>
T Horner(std::span<const double> p, T s) {
  T acc = 0;
  for (std::size_t k = p.size(); k-- > 0;) acc = acc * s + T(p[k]);
  return acc;
}

template <typename T>
T HornerDerivative(std::span<const double> p, T s) {
  T acc = 0;
  for (std::size_t k = p.size(); k-- > 1;) acc = acc * s + T(static_cast<double>(k) * p[k]);
  return acc;
}

double MeanW(const ModelConstants& k, unsigned n) {
  if (k.critical()) return (k.alpha - 1.0) * n + 1.0;
  return 1.0 + k.gamma() * (1.0 - std::pow(k.beta, static_cast<double>(n)));
}

MomentRow CentralDifferences(const JointGF& gf, unsigned n, long double ha, long double hb) {
  auto L = [&](int i, int j) { return gf.LogJ(n, std::exp(-i * ha), std::exp(-j * hb)); };
  const long double l00 = L(0, 0);
  const long double lpa = L(1, 0), lma = L(-1, 0), lpb = L(0, 1), lmb = L(0, -1);
  MomentRow r;
  r.n = n;
  r.mean_w = static_cast<double>(-(lpa - lma) / (2 * ha));
  r.mean_s = static_cast<double>(-(lpb - lmb) / (2 * hb));
  r.var_w = static_cast<double>((lpa - 2 * l00 + lma) / (ha * ha));
  r.var_s = static_cast<double>((lpb - 2 * l00 + lmb) / (hb * hb));
  r.cov_ws = static_cast<double>((L(1, 1) - L(1, -1) - L(-1, 1) + L(-1, -1)) / (4 * ha * hb));
  r.rho = r.cov_ws / std::sqrt(r.var_w * r.var_s);
  return r;
}

}  // namespace

JointGF::JointGF(const OffspringLaw& law)
    : law_(law), constants_(model_constants(law)), dual_(DualLaw(law, constants_.q)) {}

long double JointGF::H(unsigned n, long double s, long double x) const {
  long double h = s;
  for (unsigned k = 0; k < n; ++k) h = x * dual_.EvalLong(h);
  return h;
}

long double JointGF::LogJ(unsigned n, long double s, long double x) const {
  if (!(s > 0 && x > 0)) throw DomainError("LogJ: s and x must be positive");
  const long double log_beta = std::log(static_cast<long double>(constants_.beta));
  long double h = s;
  long double acc = std::log(s);
  for (unsigned k = 0; k < n; ++k) {
    acc += std::log(x * dual_.EvalLong(h, 1)) - log_beta;
    h = x * dual_.EvalLong(h);
  }
  return acc;
}

double JointGF::Evaluate(unsigned n, double s, double x) const {
  if (s > 0.0 && x > 0.0) return static_cast<double>(std::exp(LogJ(n, s, x)));
  long double h = s;
  long double acc = s;
  for (unsigned k = 0; k < n; ++k) {
    acc *= x * dual_.EvalLong(h, 1) / constants_.beta;
    h = x * dual_.EvalLong(h);
  }
  return static_cast<double>(acc);
}

double joint_gf(const JointGF& gf, unsigned n, double s, double x, double radius) {
  if (s == 1.0 && x == 1.0) return 1.0;
  if (!(std::abs(s) <= 1.0 && std::abs(x) <= 1.0)) {
    throw DomainError("joint_gf: (s, x) must lie in the closed unit square");
  }
  if (std::hypot(1.0 - s, 1.0 - x) < radius) {
    throw DomainError("joint_gf: (s, x) is inside the excluded disc around (1, 1)");
  }
  return gf.Evaluate(n, s, x);
}

std::vector<double> JointCoefficients(const JointGF& gf, unsigned n, std::size_t max_w,
                                      std::size_t max_s) {
  using C = std::complex<double>;
  const std::size_t nw = max_w + 1, ns = max_s + 1;
  const auto p = gf.dual().probs();
  const double beta = gf.constants().beta;
  const double two_pi = 2.0 * std::numbers::pi;
  std::vector<C> values(nw * ns);
  for (std::size_t a = 0; a < nw; ++a) {
    const C s = std::polar(1.0, two_pi * a / nw);
    for (std::size_t b = 0; b < ns; ++b) {
      const C x = std::polar(1.0, two_pi * b / ns);
      C h = s, acc = s;
      for (unsigned k = 0; k < n; ++k) {
        acc *= x * HornerDerivative<C>(p, h) / beta;
        h = x * Horner<C>(p, h);
      }
      values[a * ns + b] = acc;
    }
  }
  std::vector<double> out(nw * ns, 0.0);
  for (std::size_t w = 0; w < nw; ++w) {
    for (std::size_t v = 0; v < ns; ++v) {
      C acc = 0.0;
      for (std::size_t a = 0; a < nw; ++a) {
        for (std::size_t b = 0; b < ns; ++b) {
          const double angle = -two_pi * (static_cast<double>((a * w) % nw) / nw +
                                          static_cast<double>((b * v) % ns) / ns);
          acc += values[a * ns + b] * std::polar(1.0, angle);
        }
      }
      out[w * ns + v] = acc.real() / static_cast<double>(nw * ns);
    }
  }
  return out;
}

double expected_s(const ModelConstants& k, unsigned n) {
  const double nn = static_cast<double>(n);
  if (k.critical()) return 0.5 * (k.alpha - 1.0) * nn * (nn - 1.0) + nn;
  const double g = k.gamma();
  return (1.0 + g) * nn - g * (1.0 - std::pow(k.beta, nn)) / (1.0 - k.beta);
}

double h_total_progeny(const OffspringLaw& law, double x, double tol) {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("h_total_progeny: x must be positive");
  if (x == 1.0) return 1.0;
  const ModelConstants k = model_constants(law);
  const OffspringLaw dual = DualLaw(law, k.q);
  long double h = 0.0L;
  constexpr long kMaxIterations = 10000000;
  long it = 0;
  for (; it < kMaxIterations; ++it) {
    const long double next = x * dual.EvalLong(h);
    if (!std::isfinite(static_cast<double>(next)) || next > 1e6L) break;
    const long double step = std::abs(next - h);
    h = next;
    if (step < 1e-12L) break;
  }
  if (it == kMaxIterations || !(h < 1e6L)) {
    throw ConvergenceError("h_total_progeny: no fixed point of h = x F^(h) reached");
  }
  for (int polish = 0; polish < 3; ++polish) {
    const long double g = h - x * dual.EvalLong(h);
    const long double dg = 1.0L - x * dual.EvalLong(h, 1);
    if (dg <= 0) break;
    h -= g / dg;
  }
  if (std::abs(h - x * dual.EvalLong(h)) > tol) {
    throw ConvergenceError("h_total_progeny: fixed point residual above tolerance");
  }
  return static_cast<double>(h);
}

double h_iterate(const OffspringLaw& law, unsigned n, double x) {
  const JointGF gf(law);
  return static_cast<double>(gf.H(n, 1.0L, x));
}

nlohmann::json CumulativeMoments::ToJson() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row = {{"n", r.n},         {"E_W", r.mean_w},   {"E_S", r.mean_s},
                          {"Var_W", r.var_w}, {"Var_S", r.var_s},  {"cov_WS", r.cov_ws},
                          {"rho", r.rho}};
    if (critical) {
      row["Var_W_asymptote"] = r.var_w_target;
      row["Var_S_asymptote"] = r.var_s_target;
      row["cov_asymptote"] = r.cov_target;
    }
    rows_json.push_back(row);
  }
  nlohmann::json out = {{"critical", critical}, {"rho_limit", rho_limit}, {"rows", rows_json}};
  if (!critical) out["psi"] = psi;
  return out;
}

CumulativeMoments moment_asymptotics(const JointGF& gf, std::span<const unsigned> ns) {
  const ModelConstants& k = gf.constants();
  CumulativeMoments out;
  out.critical = k.critical();
  out.rho_limit = out.critical ? std::sqrt(6.0) / 3.0 : 0.0;
  if (!out.critical) out.psi = k.psi();
  for (unsigned n : ns) {
    if (n < 1) throw DomainError("moment_asymptotics: n must be at least 1");
    // Means from steps scaled by the means; second differences redone with
    // steps scaled by the standard deviations.
    MomentRow r = CentralDifferences(gf, n, 1e-4L / MeanW(k, n), 1e-4L / expected_s(k, n));
    if (r.var_w > 1e-6 * r.mean_w * r.mean_w && r.var_s > 1e-6 * r.mean_s * r.mean_s) {
      const MomentRow wide = CentralDifferences(gf, n, 1e-3L / std::sqrt(r.var_w), 1e-3L / std::sqrt(r.var_s));
      r.var_w = wide.var_w;
      r.var_s = wide.var_s;
      r.cov_ws = wide.cov_ws;
      r.rho = wide.rho;
    }
    if (out.critical) {
      const double a2 = (k.alpha - 1.0) * (k.alpha - 1.0);
      const double nn = n;
      r.var_w_target = a2 / 2.0 * nn * nn;
      r.var_s_target = a2 / 12.0 * nn * nn * nn * nn;
      r.cov_target = a2 / 6.0 * nn * nn * nn;
    }
    out.rows.push_back(r);
  }
  return out;
}

double limit_transform(double lambda, double theta) {
  if (!(lambda >= 0.0) || !(theta >= 0.0)) {
    throw DomainError("limit_transform: lambda and theta must be non-negative");
  }
  const double r = std::sqrt(theta);
  const double sh_over = theta < 1e-8 ? 1.0 + theta / 6.0 + theta * theta / 120.0 : std::sinh(r) / r;
  const double d = std::cosh(r) + 0.5 * lambda * sh_over;
  return 1.0 / (d * d);
}

double limit_cdf_w(double u) {
  if (!(u >= 0.0)) throw DomainError("limit_cdf_w: u must be non-negative");
  return 1.0 - std::exp(-2.0 * u) - 2.0 * u * std::exp(-2.0 * u);
}

double LlnClt::clt_scale(unsigned n) const { return std::sqrt(2.0 * psi * n); }

LlnClt lln_clt_constants(const ModelConstants& k) {
  if (k.critical()) {
    throw RegimeError(
        "lln_clt_constants: the law of large numbers and the normal limit for S_n need "
        "beta < 1; for beta = 1 use the joint limit transform instead");
  }
  return {1.0 + k.gamma(), k.psi()};
}

long double LogT(const OffspringLaw& law, unsigned n, long double x) {
  return JointGF(law).LogJ(n, 1.0L, x);
}

LaplaceCheck laplace_check(const OffspringLaw& law, unsigned n, double theta) {
  const ModelConstants k = model_constants(law);
  const LlnClt c = lln_clt_constants(k);
  if (n < 1) throw DomainError("laplace_check: n must be at least 1");
  LaplaceCheck out;
  out.n = n;
  out.theta = theta;
  out.value = static_cast<double>(std::exp(LogT(law, n, std::exp(-static_cast<long double>(theta) / n))));
  out.target = std::exp(-theta * c.limit);
  out.relative_error = std::abs(out.value - out.target) / out.target;
  out.mean_corrected = std::exp(-theta * expected_s(k, n) / n);
  return out;
}

nlohmann::json ExpansionOracles::ToJson() const {
  nlohmann::json rows_json = nlohmann::json::array();
  for (const auto& r : rows) {
    rows_json.push_back({{"theta", r.theta},
                         {"h_minus_one", r.h_minus_one},
                         {"h_expansion", r.h_expansion},
                         {"h_first_order", r.h_first_order},
                         {"h_residual", r.h_residual},
                         {"u", r.u},
                         {"u_expansion", r.u_expansion},
                         {"u_residual", r.u_residual},
                         {"R_over_u_n", r.r_ratio},
                         {"R_residual", r.r_residual},
                         {"log_T", r.log_t},
                         {"log_T_expansion", r.log_t_expansion},
                         {"log_T_residual", r.log_t_residual}});
  }
  return {{"n_fixed", n_fixed},
          {"h_first_order_target", h_first_order_target},
          {"h_halving_ratio", h_halving_ratio},
          {"u_halving_ratio", u_halving_ratio},
          {"theta_zero_residual", theta_zero_residual},
          {"rows", rows_json}};
}

ExpansionOracles expansion_oracles(const OffspringLaw& law, std::span<const double> thetas,
                                   unsigned n_fixed) {
  const ModelConstants k = model_constants(law);
  if (k.critical()) throw RegimeError("expansion_oracles: the expansions are stated for beta < 1");
  const OffspringLaw dual = DualLaw(law, k.q);
  const double beta = k.beta, g = k.gamma();
  auto row_at = [&](double theta) {
    ExpansionRow r;
    r.theta = theta;
    const double x = std::exp(theta);
    const double h = h_total_progeny(law, x);
    r.h_minus_one = h - 1.0;
    r.h_expansion = theta / (1.0 - beta) + beta * (2.0 + g) * theta * theta / ((1.0 - beta) * (1.0 - beta));
    r.h_first_order = theta > 0.0 ? r.h_minus_one / theta : 1.0 / (1.0 - beta);
    r.h_residual = std::abs(r.h_minus_one - r.h_expansion);
    r.u = x * dual.Eval(h, 1);
    r.u_expansion = beta * (1.0 + (1.0 + g) * theta) +
                    beta * g * (1.0 + beta * (1.0 + g)) / (1.0 - beta) * theta * theta;
    r.u_residual = std::abs(r.u - r.u_expansion);
    r.r_ratio = (h - h_iterate(law, n_fixed, x)) / std::pow(r.u, static_cast<double>(n_fixed));
    r.r_residual = std::abs(r.r_ratio - r.h_expansion);
    r.log_t = static_cast<double>(LogT(law, n_fixed, x));
    double geometric = 0.0;
    for (unsigned j = 0; j < n_fixed; ++j) geometric += std::pow(r.u, static_cast<double>(j));
    r.log_t_expansion = -(1.0 - r.u / beta) * n_fixed -
                        beta * g * (2.0 + g) / (1.0 - beta) * theta * theta * theta * geometric;
    r.log_t_residual = std::abs(r.log_t - r.log_t_expansion);
    return r;
  };
  ExpansionOracles out;
  out.n_fixed = n_fixed;
  out.h_first_order_target = 1.0 / (1.0 - beta);
  for (double t : thetas) out.rows.push_back(row_at(t));
  const ExpansionRow full = row_at(1e-3), half = row_at(5e-4);
  out.h_halving_ratio = full.h_residual / half.h_residual;
  out.u_halving_ratio = full.u_residual / half.u_residual;
  const ExpansionRow zero = row_at(0.0);
  out.theta_zero_residual = std::abs(zero.h_minus_one) + std::abs(zero.u - beta);
  return out;
}

}  // namespace branchlab
