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

#include "branchlab/monte_carlo.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

constexpr std::uint64_t kDirectSumLimit = 32;

// Sums of iid draws from a finite law: one categorical draw per term for
// small counts, a multinomial by sequential binomials above that.
class SumSampler {
 public:
  SumSampler() = default;
  explicit SumSampler(std::vector<double> p) : p_(std::move(p)), tail_(p_.size() + 1, 0.0) {
    for (std::size_t k = p_.size(); k-- > 0;) tail_[k] = tail_[k + 1] + p_[k];
    draw_ = std::discrete_distribution<std::uint64_t>(p_.begin(), p_.end());
  }

  std::uint64_t One(std::mt19937_64& rng) { return draw_(rng); }

  std::uint64_t Sum(std::uint64_t count, std::mt19937_64& rng) {
    std::uint64_t total = 0;
    if (count <= kDirectSumLimit) {
      for (std::uint64_t m = 0; m < count; ++m) total += draw_(rng);
      return total;
    }
    std::uint64_t remaining = count;
    const std::size_t last = p_.size() - 1;
    for (std::size_t k = 0; k < last && remaining > 0; ++k) {
      if (p_[k] == 0.0) continue;
      const double pk = std::min(1.0, p_[k] / tail_[k]);
      std::binomial_distribution<std::uint64_t> binom(remaining, pk);
      const std::uint64_t got = binom(rng);
      total += k * got;
      remaining -= got;
    }
    return total + last * remaining;
  }

 private:
  std::vector<double> p_;
  std::vector<double> tail_;
  std::discrete_distribution<std::uint64_t> draw_;
};

struct Samplers {
  SumSampler offspring;  // Galton-Watson
  SumSampler dual;       // F^ for the Q-process
  SumSampler y;          // Y
};

Samplers MakeSamplers(const SimulationConfig& config) {
  Samplers s;
  const OffspringLaw& law = config.law;
  if (config.kind == ProcessKind::kGaltonWatson) {
    s.offspring = SumSampler({law.probs().begin(), law.probs().end()});
    return s;
  }
  const ModelConstants k = model_constants(law);
  const OffspringLaw dual = DualLaw(law, k.q);
  s.dual = SumSampler({dual.probs().begin(), dual.probs().end()});
  std::vector<double> y(law.max_offspring() + 1, 0.0);
  double qpow = 1.0;
  for (std::size_t j = 1; j < y.size(); ++j) {
    y[j] = static_cast<double>(j) * law.p(j) * qpow / k.beta;
    qpow *= k.q;
  }
  s.y = SumSampler(std::move(y));
  return s;
}

// One step of either chain; W' = Y^ + (W - 1 draws of F^) for the Q-process.
std::uint64_t Advance(ProcessKind kind, Samplers& s, std::uint64_t state, std::mt19937_64& rng) {
  if (kind == ProcessKind::kGaltonWatson) return state == 0 ? 0 : s.offspring.Sum(state, rng);
  return s.y.One(rng) + s.dual.Sum(state - 1, rng);
}

Trajectory Simulate(const SimulationConfig& config, ProcessKind kind, std::mt19937_64& rng) {
  config.Validate();
  if (config.kind != kind) throw DomainError("simulate: config.kind does not match the requested process");
  Samplers s = MakeSamplers(config);
  Trajectory t;
  t.states.push_back(config.initial);
  t.totals.push_back(0);
  if (config.initial == 0) t.extinction_time = 0;
  for (unsigned n = 0; n < config.horizon; ++n) {
    const std::uint64_t cur = t.states.back();
    const std::uint64_t next = Advance(kind, s, cur, rng);
    if (next > config.cap) {
      t.truncated = true;
      break;
    }
    t.states.push_back(next);
    t.totals.push_back(t.totals.back() + cur);
    if (next == 0 && !t.extinction_time) t.extinction_time = n + 1;
  }
  return t;
}

ReplicaRecord SimulateRecord(const SimulationConfig& config, const std::vector<unsigned>& checkpoints,
                             Samplers s, std::uint64_t replica) {
  std::mt19937_64 rng = ReplicaEngine(config.seed, replica);
  ReplicaRecord r;
  r.replica = replica;
  r.state.assign(checkpoints.size(), 0);
  r.total.assign(checkpoints.size(), 0);
  std::uint64_t state = config.initial, total = 0;
  if (state == 0) r.extinction_time = 0;
  std::size_t ci = 0;
  for (unsigned n = 0;; ++n) {
    while (ci < checkpoints.size() && checkpoints[ci] == n) {
      r.state[ci] = state;
      r.total[ci] = total;
      ++ci;
    }
    if (n == config.horizon || ci == checkpoints.size()) break;
    if (state == 0 && config.kind == ProcessKind::kGaltonWatson) {
      // Absorbed: the rest of the path is zeros with a frozen total.
      for (; ci < checkpoints.size(); ++ci) r.total[ci] = total;
      break;
    }
    const std::uint64_t next = Advance(config.kind, s, state, rng);
    if (next > config.cap) {
      r.truncated = true;
      break;
    }
    total += state;
    state = next;
    if (state == 0 && !r.extinction_time) r.extinction_time = n + 1;
  }
  return r;
}

double Mean(std::span<const double> xs) {
  long double acc = 0.0L;
  for (double x : xs) acc += x;
  return static_cast<double>(acc / static_cast<long double>(xs.size()));
}

// Jackknife standard error of the sample mean of f_i, from the leave-one-out
// means (S - f_i) / (m - 1).
double JackknifeSe(std::span<const double> f) {
  const std::size_t m = f.size();
  if (m < 2) return 0.0;
  long double sum = 0.0L;
  for (double v : f) sum += v;
  const long double mean = sum / static_cast<long double>(m);
  long double acc = 0.0L;
  for (double v : f) {
    const long double loo = (sum - v) / static_cast<long double>(m - 1);
    acc += (loo - mean) * (loo - mean);
  }
  return static_cast<double>(std::sqrt(acc * static_cast<long double>(m - 1) / static_cast<long double>(m)));
}

}  // namespace

const char* ProcessKindName(ProcessKind kind) {
  return kind == ProcessKind::kGaltonWatson ? "galton-watson" : "q-process";
}

void SimulationConfig::Validate() const {
  if (replicas < 1) throw DomainError("simulation: replica count must be at least 1");
  if (cap < 1) throw DomainError("simulation: state cap must be at least 1");
  if (initial > cap) throw DomainError("simulation: initial state exceeds the cap");
  if (kind == ProcessKind::kQProcess && initial < 1) {
    throw DomainError("simulation: the Q-process lives on {1, 2, ...}");
  }
  for (unsigned c : checkpoints) {
    if (c > horizon) throw DomainError("simulation: checkpoint beyond the horizon");
  }
}

std::vector<unsigned> SimulationConfig::EffectiveCheckpoints() const {
  std::vector<unsigned> out = checkpoints.empty() ? std::vector<unsigned>{horizon} : checkpoints;
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::optional<std::string> SimulationConfig::DriftWarning() const {
  const ModelConstants k = model_constants(law);
  double expected;
  if (kind == ProcessKind::kGaltonWatson) {
    expected = static_cast<double>(initial) * std::pow(k.A, static_cast<double>(horizon));
  } else if (k.critical()) {
    expected = static_cast<double>(initial) - 1.0 + (k.alpha - 1.0) * horizon + 1.0;
  } else {
    const double bn = std::pow(k.beta, static_cast<double>(horizon));
    expected = (static_cast<double>(initial) - 1.0) * bn + 1.0 + k.gamma() * (1.0 - bn);
  }
  if (expected > static_cast<double>(cap) / 4.0) {
    return "expected state " + std::to_string(expected) + " at n = " + std::to_string(horizon) +
           " exceeds cap / 4 (cap = " + std::to_string(cap) + "); expect truncated replicas";
  }
  return std::nullopt;
}

std::mt19937_64 ReplicaEngine(std::uint64_t seed, std::uint64_t replica) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(replica), static_cast<std::uint32_t>(replica >> 32)};
  return std::mt19937_64(seq);
}

Trajectory simulate_gw(const SimulationConfig& config, std::mt19937_64& rng) {
  return Simulate(config, ProcessKind::kGaltonWatson, rng);
}

Trajectory simulate_q(const SimulationConfig& config, std::mt19937_64& rng) {
  return Simulate(config, ProcessKind::kQProcess, rng);
}

bool Estimate::Within(double target, double k) const { return std::abs(value - target) <= k * se; }

EnsembleStats::EnsembleStats(std::vector<unsigned> checkpoints, std::vector<ReplicaRecord> records)
    : checkpoints_(std::move(checkpoints)), records_(std::move(records)) {
  std::sort(records_.begin(), records_.end(),
            [](const ReplicaRecord& a, const ReplicaRecord& b) { return a.replica < b.replica; });
}

std::size_t EnsembleStats::truncated() const {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const ReplicaRecord& r) { return r.truncated; }));
}

void EnsembleStats::Merge(const EnsembleStats& other) {
  if (records_.empty() && checkpoints_.empty()) checkpoints_ = other.checkpoints_;
  if (other.checkpoints_ != checkpoints_) throw DomainError("EnsembleStats::Merge: checkpoints differ");
  std::vector<ReplicaRecord> merged;
  merged.reserve(records_.size() + other.records_.size());
  auto by_replica = [](const ReplicaRecord& a, const ReplicaRecord& b) { return a.replica < b.replica; };
  std::merge(records_.begin(), records_.end(), other.records_.begin(), other.records_.end(),
             std::back_inserter(merged), by_replica);
  for (std::size_t i = 1; i < merged.size(); ++i) {
    if (merged[i].replica == merged[i - 1].replica) {
      throw DomainError("EnsembleStats::Merge: replica " + std::to_string(merged[i].replica) +
                        " appears in both partitions");
    }
  }
  records_ = std::move(merged);
}

std::size_t EnsembleStats::Index(unsigned n) const {
  const auto it = std::find(checkpoints_.begin(), checkpoints_.end(), n);
  if (it == checkpoints_.end()) throw DomainError("EnsembleStats: n = " + std::to_string(n) + " is not a checkpoint");
  return static_cast<std::size_t>(it - checkpoints_.begin());
}

std::vector<double> EnsembleStats::States(unsigned n) const {
  const std::size_t i = Index(n);
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    if (!r.truncated) out.push_back(static_cast<double>(r.state[i]));
  }
  return out;
}

std::vector<double> EnsembleStats::Totals(unsigned n) const {
  const std::size_t i = Index(n);
  std::vector<double> out;
  out.reserve(records_.size());
  for (const auto& r : records_) {
    if (!r.truncated) out.push_back(static_cast<double>(r.total[i]));
  }
  return out;
}

Estimate EnsembleStats::ExtinctBy(unsigned n) const {
  std::size_t m = 0, hits = 0;
  for (const auto& r : records_) {
    if (r.truncated) continue;
    ++m;
    if (r.extinction_time && *r.extinction_time <= n) ++hits;
  }
  if (m == 0) return {};
  const double p = static_cast<double>(hits) / static_cast<double>(m);
  return {p, std::sqrt(p * (1.0 - p) / static_cast<double>(m))};
}

nlohmann::json EnsembleStats::ToJson() const {
  nlohmann::json cps = nlohmann::json::array();
  for (unsigned n : checkpoints_) {
    const auto w = States(n);
    const auto s = Totals(n);
    const MomentSummary ws = Summarize(w), ss = Summarize(s);
    cps.push_back({{"n", n},
                   {"replicas", ws.count},
                   {"mean_state", ws.mean.value},
                   {"mean_state_se", ws.mean.se},
                   {"var_state", ws.variance},
                   {"mean_total", ss.mean.value},
                   {"mean_total_se", ss.mean.se},
                   {"var_total", ss.variance},
                   {"extinct_fraction", ExtinctBy(n).value}});
  }
  return {{"replicas", records_.size()}, {"truncated", truncated()}, {"checkpoints", cps}};
}

EnsembleStats RunReplicas(const SimulationConfig& config, std::uint64_t first, std::uint64_t count,
                          Backend backend) {
  config.Validate();
  const std::vector<unsigned> cps = config.EffectiveCheckpoints();
  const Samplers samplers = MakeSamplers(config);
  std::vector<ReplicaRecord> records(count);
  const long long nn = static_cast<long long>(count);
  if (backend == Backend::kOpenMP && OpenMPAvailable()) {
#ifdef BRANCHLAB_HAVE_OPENMP
#pragma omp parallel for schedule(dynamic, 64)
#endif
    for (long long i = 0; i < nn; ++i) {
      records[static_cast<std::size_t>(i)] = SimulateRecord(config, cps, samplers, first + static_cast<std::uint64_t>(i));
    }
  } else {
    for (long long i = 0; i < nn; ++i) {
      records[static_cast<std::size_t>(i)] = SimulateRecord(config, cps, samplers, first + static_cast<std::uint64_t>(i));
    }
  }
  return EnsembleStats(cps, std::move(records));
}

EnsembleStats RunEnsemble(const SimulationConfig& config, Backend backend) {
  return RunReplicas(config, 0, config.replicas, backend);
}

MomentSummary Summarize(std::span<const double> xs) {
  MomentSummary out;
  out.count = xs.size();
  if (xs.empty()) return out;
  const double mean = Mean(xs);
  long double acc = 0.0L;
  for (double x : xs) acc += (x - mean) * static_cast<long double>(x - mean);
  out.variance = xs.size() > 1 ? static_cast<double>(acc / static_cast<long double>(xs.size() - 1)) : 0.0;
  out.mean = {mean, std::sqrt(out.variance / static_cast<double>(xs.size()))};
  return out;
}

double SampleCovariance(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 2) throw DomainError("SampleCovariance: need paired samples, m >= 2");
  const double mx = Mean(xs), my = Mean(ys);
  long double acc = 0.0L;
  for (std::size_t i = 0; i < xs.size(); ++i) acc += static_cast<long double>(xs[i] - mx) * (ys[i] - my);
  return static_cast<double>(acc / static_cast<long double>(xs.size() - 1));
}

double SampleCorrelation(std::span<const double> xs, std::span<const double> ys) {
  const double c = SampleCovariance(xs, ys);
  return c / std::sqrt(Summarize(xs).variance * Summarize(ys).variance);
}

EmpiricalCdf::EmpiricalCdf(std::vector<double> samples) : sorted_(std::move(samples)) {
  if (sorted_.empty()) throw DomainError("EmpiricalCdf: no samples");
  std::sort(sorted_.begin(), sorted_.end());
}

double EmpiricalCdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf) {
  if (samples.size() < 1000) throw DomainError("ks_distance: need at least 1000 samples");
  std::vector<double> x(samples.begin(), samples.end());
  std::sort(x.begin(), x.end());
  const double m = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    const double f = cdf(x[i]);
    d = std::max({d, std::abs(static_cast<double>(j) / m - f), std::abs(f - static_cast<double>(i) / m)});
    i = j;
  }
  return d;
}

std::vector<TransformValue> empirical_transform(std::span<const double> samples, TransformKind kind,
                                                std::span<const double> args) {
  if (samples.empty()) throw DomainError("empirical_transform: no samples");
  std::vector<TransformValue> out;
  std::vector<double> re(samples.size()), im(samples.size());
  for (double t : args) {
    if (kind == TransformKind::kLaplace && !(t >= 0.0)) {
      throw DomainError("empirical_transform: Laplace arguments must be non-negative");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (kind == TransformKind::kLaplace) {
        re[i] = std::exp(-t * samples[i]);
        im[i] = 0.0;
      } else {
        re[i] = std::cos(t * samples[i]);
        im[i] = std::sin(t * samples[i]);
      }
    }
    TransformValue v;
    v.arg = t;
    v.re = {Mean(re), JackknifeSe(re)};
    v.im = {Mean(im), JackknifeSe(im)};
    out.push_back(v);
  }
  return out;
}

Estimate empirical_joint_laplace(std::span<const double> xs, std::span<const double> ys, double lambda,
                                 double theta) {
  if (xs.size() != ys.size() || xs.empty()) throw DomainError("empirical_joint_laplace: need paired samples");
  if (!(lambda >= 0.0 && theta >= 0.0)) {
    throw DomainError("empirical_joint_laplace: arguments must be non-negative");
  }
  std::vector<double> f(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) f[i] = std::exp(-lambda * xs[i] - theta * ys[i]);
  return {Mean(f), JackknifeSe(f)};
}

double NormalCdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace branchlab
