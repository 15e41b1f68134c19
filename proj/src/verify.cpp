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


#include "branchlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include <fmt/format.h>

#include "branchlab/asymptotics.hpp"
#include "branchlab/cumulative_state.hpp"
#include "branchlab/error.hpp"
#include "branchlab/q_process.hpp"
#include "branchlab/report.hpp"
#include "branchlab/series.hpp"

namespace branchlab {

nlohmann::json Check::ToJson() const {
  return {{"name", name}, {"pass", pass}, {"measured", measured}, {"target", target}, {"detail", detail}};
}

bool SuiteResult::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

nlohmann::json SuiteResult::ToJson() const {
  nlohmann::json out = {{"suite", suite}, {"pass", passed()}, {"checks", nlohmann::json::array()}};
  for (const auto& c : checks) out["checks"].push_back(c.ToJson());
  return out;
}

namespace {

enum class Needs { kAny, kCritical, kNonCritical };

struct SuiteInfo {
  const char* name;
  Needs needs;
};

const SuiteInfo kSuites[] = {
    {"oracle", Needs::kAny},          {"basic-lemma", Needs::kNonCritical},
    {"critical-decay", Needs::kCritical}, {"local-limit", Needs::kAny},
    {"invariant", Needs::kNonCritical},   {"yaglom", Needs::kCritical},
    {"q-stationary", Needs::kNonCritical}, {"q-critical", Needs::kCritical},
    {"joint", Needs::kCritical},      {"lln", Needs::kNonCritical},
    {"clt", Needs::kNonCritical},
};

const SuiteInfo* FindSuite(const std::string& name) {
  for (const auto& s : kSuites) {
    if (name == s.name) return &s;
  }
  return nullptr;
}

bool Applies(Needs needs, bool critical) {
  return needs == Needs::kAny || (needs == Needs::kCritical) == critical;
}

std::string RegimeMessage(const std::string& suite, Needs needs) {
  if (needs == Needs::kCritical) {
    return fmt::format(
        "suite '{}' applies only to critical laws (mean 1, beta = 1); the given law is not critical", suite);
  }
  return fmt::format(
      "suite '{}' needs beta < 1 (a subcritical or supercritical law); the given law is critical", suite);
}

Check Make(std::string name, bool pass, double measured, double target, std::string detail) {
  return Check{std::move(name), pass, measured, target, std::move(detail)};
}

double RelativeGap(double x, double target) { return std::abs(x - target) / std::abs(target); }

}  // namespace

const std::vector<std::string>& SuiteNames() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> out;
    for (const auto& s : kSuites) out.emplace_back(s.name);
    return out;
  }();
  return names;
}

std::vector<std::string> ApplicableSuites(const OffspringLaw& law) {
  const bool critical = model_constants(law).critical();
  std::vector<std::string> out;
  for (const auto& s : kSuites) {
    if (Applies(s.needs, critical)) out.emplace_back(s.name);
  }
  return out;
}

Verifier::Verifier(OffspringLaw law, VerifyOptions options)
    : law_(std::move(law)), options_(std::move(options)) {}

SuiteResult Verifier::Run(const std::string& suite) {
  const SuiteInfo* info = FindSuite(suite);
  if (!info) throw DomainError(fmt::format("unknown suite '{}'", suite));
  if (!Applies(info->needs, model_constants(law_).critical())) {
    throw RegimeError(RegimeMessage(suite, info->needs));
  }
  if (suite == "oracle") return Oracle();
  if (suite == "basic-lemma") return BasicLemma();
  if (suite == "critical-decay") return CriticalDecay();
  if (suite == "local-limit") return LocalLimit();
  if (suite == "invariant") return Invariant();
  if (suite == "yaglom") return Yaglom();
  if (suite == "q-stationary") return QStationary();
  if (suite == "q-critical") return QCritical();
  if (suite == "joint") return Joint();
  if (suite == "lln") return Lln();
  return Clt();
}

// The linear-fractional family has closed-form iterates; compare them with
// repeated series composition. The law under test plays no part.
SuiteResult Verifier::Oracle() {
  SuiteResult out{"oracle", {}};
  const LinearFractionalParams family[] = {{0.3, 0.4}, {0.25, 0.5}, {0.45, 0.4}};
  for (const auto& lf : family) {
    const TruncatedSeries f = TruncatedSeries::FromLaw(lf.TruncatedLaw());
    TruncatedSeries fn = TruncatedSeries::Identity(512);
    double worst = 0.0;
    for (unsigned n = 1; n <= 30; ++n) {
      fn = compose(f, fn, options_.backend);
      for (double s : {0.0, 0.3, 0.7, 0.9}) {
        worst = std::max(worst, std::abs(fn.Evaluate(s) - lf_iterate(lf, n, s)));
      }
    }
    out.checks.push_back(Make(fmt::format("lf(b={},c={}) F_n vs closed form", lf.b, lf.c), worst < 1e-12, worst,
                              1e-12, "max |error| over n <= 30, s in {0, 0.3, 0.7, 0.9}"));
  }
  return out;
}

SuiteResult Verifier::BasicLemma() {
  SuiteResult out{"basic-lemma", {}};
  const auto k = model_constants(law_);
  const auto grid = BelowFixedPointGrid(k.q);
  const auto lemma = basic_lemma_constants(law_, grid);
  double worst_drift = 0.0;
  bool all_in = true;
  std::string outside;
  for (const auto& p : lemma.points) {
    const long double a300 = NormalizedR(law_, p.s, 300);
    const long double a400 = NormalizedR(law_, p.s, 400);
    worst_drift = std::max(worst_drift, static_cast<double>(std::fabs(a400 - a300) / a400));
    if (!p.a_in_bracket) {
      all_in = false;
      outside += fmt::format(" s={}", p.s);
    }
  }
  out.checks.push_back(Make("R_n(s)/beta^n stabilizes", worst_drift < 1e-8, worst_drift, 1e-8,
                            "max relative change between n = 300 and n = 400"));
  out.checks.push_back(Make("A(s) in [A2(s), A1(s)]", all_in, all_in ? 1.0 : 0.0, 1.0,
                            all_in ? fmt::format("{} grid points below q", grid.size())
                                   : "outside at" + outside));
  return out;
}

SuiteResult Verifier::CriticalDecay() {
  SuiteResult out{"critical-decay", {}};
  const unsigned ns[] = {400};
  const auto row = CriticalDecayTable(law_, 0.0, ns).front();
  out.checks.push_back(Make("R_n(0) (Bn + 1) at n = 400", row.ratio >= 0.95 && row.ratio <= 1.05, row.ratio, 1.0,
                            "must lie in [0.95, 1.05]"));
  return out;
}

SuiteResult Verifier::LocalLimit() {
  SuiteResult out{"local-limit", {}};
  if (model_constants(law_).critical()) {
    std::vector<unsigned> ns;
    for (unsigned n = 200; n <= 400; ++n) ns.push_back(n);
    const auto rep = local_limit(law_, ns);
    double lo = rep.rows.front().scaled, hi = lo;
    bool ok = true;
    for (const auto& row : rep.rows) {
      lo = std::min(lo, row.scaled);
      hi = std::max(hi, row.scaled);
      ok = ok && rep.bracket->Contains(row.scaled);
    }
    out.checks.push_back(Make("n^2 P_11(n) in bracket, n in [200, 400]", ok, rep.rows.back().scaled,
                              rep.bracket->midpoint(),
                              fmt::format("range [{:.6g}, {:.6g}], bracket [{:.6g}, {:.6g}]", lo, hi,
                                          rep.bracket->lo, rep.bracket->hi)));
  } else {
    std::vector<unsigned> ns;
    for (unsigned n = 40; n <= 400; n += 40) ns.push_back(n);
    const auto rep = local_limit(law_, ns);
    const double last = rep.rows.back().scaled;
    double drift = 0.0;
    for (const auto& row : rep.rows) drift = std::max(drift, std::abs(row.scaled - last) / last);
    out.checks.push_back(Make("beta^-n P_11(n) converges", drift < 1e-4, drift, 1e-4,
                              fmt::format("max relative drift over n in [40, 400]; value {:.12g}", last)));
  }
  return out;
}

SuiteResult Verifier::Invariant() {
  SuiteResult out{"invariant", {}};
  const auto k = model_constants(law_);
  const auto im = invariant_measure(law_, options_.order, 200);
  out.checks.push_back(Make("beta mu_j = sum_k mu_k P_kj, j <= 20", im.invariance_residual < 1e-6,
                            im.invariance_residual, 1e-6, "max residual"));
  const double p0 = law_.p(0);
  const double mp0 = im.mu.Evaluate(p0);
  double worst = 0.0;
  for (double s : BelowFixedPointGrid(k.q)) {
    worst = std::max(worst, std::abs(im.mu.Evaluate(law_.Eval(s)) - (k.beta * im.mu.Evaluate(s) + mp0)));
  }
  out.checks.push_back(Make("M(F(s)) = beta M(s) + M(p_0)", worst < 1e-8, worst, 1e-8,
                            "max residual over s in q {0, 0.2, 0.4, 0.6, 0.8}"));
  return out;
}

SuiteResult Verifier::Yaglom() {
  SuiteResult out{"yaglom", {}};
  const auto k = model_constants(law_);
  const unsigned n = 400;
  const double target = 1.0 / k.B;
  const double v = n * yaglom_gf(law_, 1, n, 0.5);
  const double gv = RelativeGap(v, target);
  out.checks.push_back(Make("n V_n(0.5) at n = 400", gv < 0.1, v, target,
                            fmt::format("relative gap {:.4f}, must be below 0.1", gv)));
  const double p = n * conditioned_transition(law_, 1, 1, n);
  const double gp = RelativeGap(p, target);
  out.checks.push_back(Make("n P~_11(n) at n = 400", gp < 0.1, p, target,
                            fmt::format("relative gap {:.4f}, must be below 0.1", gp)));
  return out;
}

SuiteResult Verifier::QStationary() {
  SuiteResult out{"q-stationary", {}};
  const QKernel kernel(law_, options_.order);
  const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 0.9};
  const auto pi = pi_distribution(kernel, grid, 60, options_.backend);
  const double gap = RelativeGap(pi.q11_kernel, pi.pi1_limit);
  out.checks.push_back(Make("Q_11(60) by kernel powers", gap < 0.01, pi.q11_kernel, pi.pi1_limit,
                            fmt::format("relative gap {:.4f}, must be below 0.01; kernel stationary pi_1 {:.10f}",
                                        gap, pi.stationary.empty() ? 0.0 : pi.stationary.front())));
  const double fp = pi.closed_form_fixed_point_residual.front();
  out.checks.push_back(Make("closed-form pi fixed point under Q(1)", fp < 1e-6, fp, 1e-6,
                            fmt::format("max_j |pi_j - (pi Q)_j|; the kernel's own stationary law has {:.3g}",
                                        pi.stationary_residual)));
  const double target = 1.0 + kernel.constants().gamma();
  const double dev = std::abs(pi.series_mean - target);
  out.checks.push_back(Make("pi'(1) = 1 + gamma", dev < 1e-9, pi.series_mean, target,
                            fmt::format("closed-form coefficients, |error| {:.3g}", dev)));
  return out;
}

SuiteResult Verifier::QCritical() {
  SuiteResult out{"q-critical", {}};
  const QKernel kernel(law_, options_.order);
  const std::vector<double> grid{0.25, 0.5, 0.75};
  const auto mu = mu_critical(kernel, grid, 400);
  double lo = 1e300, hi = -1e300;
  bool ok = true;
  for (unsigned n = 200; n <= 400; ++n) {
    const double v = static_cast<double>(n) * n * q_transition(kernel, 1, 1, n);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
    ok = ok && mu.q11_bracket.Contains(v);
  }
  out.checks.push_back(Make("n^2 Q_11(n) in bracket, n in [200, 400]", ok, hi, mu.q11_bracket.midpoint(),
                            fmt::format("range [{:.6g}, {:.6g}], bracket [{:.6g}, {:.6g}]", lo, hi,
                                        mu.q11_bracket.lo, mu.q11_bracket.hi)));
  const double rel = mu.cesaro_estimate / mu.cesaro_target - 1.0;
  out.checks.push_back(Make("Cesaro mu-sum / n^2", std::abs(rel) <= 0.15, mu.cesaro_estimate, mu.cesaro_target,
                            fmt::format("relative {:+.4f}, must lie in [-0.15, 0.15]; {} terms", rel,
                                        mu.cesaro_terms)));
  return out;
}

const EnsembleStats& Verifier::Ensemble(std::vector<unsigned> checkpoints) {
  auto it = ensembles_.find(checkpoints);
  if (it != ensembles_.end()) return it->second;
  SimulationConfig config(law_);
  config.kind = ProcessKind::kQProcess;
  config.horizon = *std::max_element(checkpoints.begin(), checkpoints.end());
  config.replicas = options_.replicas;
  config.seed = options_.seed;
  config.checkpoints = checkpoints;
  return ensembles_.emplace(checkpoints, RunEnsemble(config, options_.backend)).first->second;
}

SuiteResult Verifier::Joint() {
  SuiteResult out{"joint", {}};
  const unsigned n = options_.horizon.value_or(400);
  const auto& stats = Ensemble({n});
  const QKernel kernel(law_, options_.order);
  const double ew = expected_w(kernel, 1, n);
  const double es = expected_s(kernel.constants(), n);
  auto w = stats.States(n);
  auto s = stats.Totals(n);
  for (auto& x : w) x /= ew;
  for (auto& x : s) x /= es;

  const double ks = ks_distance(w, limit_cdf_w);
  out.checks.push_back(Make(fmt::format("KS(W_n / E W_n) at n = {}", n), ks < 0.02, ks, 0.02,
                            fmt::format("{} replicas", w.size())));

  const std::vector<double> thetas{0.5, 1.0, 2.0};
  for (const auto& v : empirical_transform(s, TransformKind::kLaplace, thetas)) {
    const double target = limit_transform(0.0, v.arg);
    const double z = (v.re.value - target) / v.re.se;
    out.checks.push_back(Make(fmt::format("Laplace of S_n / E S_n at theta = {}", v.arg), v.re.Within(target),
                              v.re.value, target, fmt::format("z = {:+.3f}, s.e. {:.3g}", z, v.re.se)));
  }
  const auto joint = empirical_joint_laplace(w, s, 1.0, 1.0);
  const double jt = limit_transform(1.0, 1.0);
  out.checks.push_back(Make("joint transform at (1, 1)", joint.Within(jt), joint.value, jt,
                            fmt::format("z = {:+.3f}, s.e. {:.3g}", (joint.value - jt) / joint.se, joint.se)));

  const JointGF gf(law_);
  const unsigned ns[] = {n};
  const double rho_limit = moment_asymptotics(gf, ns).rho_limit;
  const double rho = SampleCorrelation(w, s);
  const double gap = RelativeGap(rho, rho_limit);
  out.checks.push_back(Make("corr(W_n, S_n)", gap < 0.05, rho, rho_limit,
                            fmt::format("relative gap {:.4f}, must be below 0.05", gap)));
  return out;
}

SuiteResult Verifier::Lln() {
  SuiteResult out{"lln", {}};
  const unsigned n = options_.horizon.value_or(2000);
  const auto& stats = options_.horizon ? Ensemble({n}) : Ensemble({2000, 3000});
  auto s = stats.Totals(n);
  for (auto& x : s) x /= n;
  const auto sum = Summarize(s);
  const double target = lln_clt_constants(model_constants(law_)).limit;
  const double gap = RelativeGap(sum.mean.value, target);
  out.checks.push_back(Make(fmt::format("mean S_n / n at n = {}", n), gap < 0.01, sum.mean.value, target,
                            fmt::format("relative gap {:.5f}, must be below 0.01; s.e. {:.3g}; {} replicas", gap,
                                        sum.mean.se, sum.count)));
  return out;
}

SuiteResult Verifier::Clt() {
  SuiteResult out{"clt", {}};
  const unsigned n = options_.horizon.value_or(3000);
  const auto& stats = options_.horizon ? Ensemble({n}) : Ensemble({2000, 3000});
  const auto k = model_constants(law_);
  const auto lc = lln_clt_constants(k);
  const double es = expected_s(k, n);
  const double scale = lc.clt_scale(n);
  auto s = stats.Totals(n);
  const double var_per_n = Summarize(s).variance / n;
  for (auto& x : s) x = (x - es) / scale;
  const double ks = ks_distance(s, NormalCdf);
  out.checks.push_back(Make(fmt::format("KS((S_n - E S_n) / sqrt(2 psi n), Phi) at n = {}", n), ks < 0.02, ks, 0.02,
                            fmt::format("2 psi = {:.6g}; sample Var S_n / n = {:.6g}", 2.0 * lc.psi, var_per_n)));
  return out;
}

}  // namespace branchlab
