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

#ifndef BRANCHLAB_MONTE_CARLO_HPP_
#define BRANCHLAB_MONTE_CARLO_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "branchlab/kernels.hpp"
#include "branchlab/offspring_model.hpp"
#include "json.hpp"

namespace branchlab {

enum class ProcessKind { kGaltonWatson, kQProcess };

const char* ProcessKindName(ProcessKind kind);

struct SimulationConfig {
  explicit SimulationConfig(OffspringLaw l) : law(std::move(l)) {}

  OffspringLaw law;
  ProcessKind kind = ProcessKind::kGaltonWatson;
  unsigned horizon = 100;
  std::uint64_t initial = 1;
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  std::uint64_t cap = 1000000;
  // Times at which (state, S) is recorded; empty means {horizon}.
  std::vector<unsigned> checkpoints;

  void Validate() const;
  std::vector<unsigned> EffectiveCheckpoints() const;
  // Set when the expected state at the horizon exceeds cap / 4.
  std::optional<std::string> DriftWarning() const;
};

// Generator for one replica: mt19937_64 seeded through std::seed_seq with the
// 32-bit halves of (seed, replica). A pure function of its arguments.
std::mt19937_64 ReplicaEngine(std::uint64_t seed, std::uint64_t replica);

struct Trajectory {
  std::vector<std::uint64_t> states;  // Z_0..Z_n or W_0..W_n
  std::vector<std::uint64_t> totals;  // S_0..S_n, S_k = sum_(m<k) state_m
  std::optional<unsigned> extinction_time;
  bool truncated = false;  // the state passed the cap; the path stops there
};

Trajectory simulate_gw(const SimulationConfig& config, std::mt19937_64& rng);
Trajectory simulate_q(const SimulationConfig& config, std::mt19937_64& rng);

struct ReplicaRecord {
  std::uint64_t replica = 0;
  std::vector<std::uint64_t> state;  // one entry per checkpoint
  std::vector<std::uint64_t> total;
  std::optional<unsigned> extinction_time;
  bool truncated = false;

  bool operator==(const ReplicaRecord&) const = default;
};

struct Estimate {
  double value = 0.0;
  double se = 0.0;

  // |value - target| <= k se.
  bool Within(double target, double k = 3.0) const;
};

struct MomentSummary {
  std::size_t count = 0;
  Estimate mean;
  double variance = 0.0;
};

class EnsembleStats {
 public:
  EnsembleStats() = default;
  EnsembleStats(std::vector<unsigned> checkpoints, std::vector<ReplicaRecord> records);

  std::size_t size() const { return records_.size(); }
  const std::vector<unsigned>& checkpoints() const { return checkpoints_; }
  const std::vector<ReplicaRecord>& records() const { return records_; }
  std::size_t truncated() const;

  // Union with another partition of the same run; records stay sorted by
  // replica index, so any partition order gives the same result.
  void Merge(const EnsembleStats& other);

  // Samples at a checkpoint over replicas that were not truncated.
  std::vector<double> States(unsigned n) const;
  std::vector<double> Totals(unsigned n) const;
  // Fraction of replicas extinct by time n, with binomial standard error.
  Estimate ExtinctBy(unsigned n) const;

  nlohmann::json ToJson() const;

  bool operator==(const EnsembleStats&) const = default;

 private:
  std::size_t Index(unsigned n) const;

  std::vector<unsigned> checkpoints_;
  std::vector<ReplicaRecord> records_;
};

// Replicas [first, first + count) of the run described by config.
EnsembleStats RunReplicas(const SimulationConfig& config, std::uint64_t first, std::uint64_t count,
                          Backend backend = DefaultBackend());
EnsembleStats RunEnsemble(const SimulationConfig& config, Backend backend = DefaultBackend());

MomentSummary Summarize(std::span<const double> xs);
// Sample covariance of paired samples.
double SampleCovariance(std::span<const double> xs, std::span<const double> ys);
double SampleCorrelation(std::span<const double> xs, std::span<const double> ys);

// Empirical CDF of a sample; non-decreasing, right-continuous, in [0, 1].
class EmpiricalCdf {
 public:
  explicit EmpiricalCdf(std::vector<double> samples);
  double operator()(double x) const;
  const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

// sup_x |F_m(x) - F(x)| evaluated at the jump points; at least 1000 samples.
double ks_distance(std::span<const double> samples, const std::function<double(double)>& cdf);

enum class TransformKind { kLaplace, kCharacteristic };

struct TransformValue {
  double arg = 0.0;
  Estimate re;
  Estimate im;
};

// (1/m) sum exp(-t X_i) or exp(i t X_i), with jackknife standard errors.
std::vector<TransformValue> empirical_transform(std::span<const double> samples, TransformKind kind,
                                                std::span<const double> args);
// (1/m) sum exp(-lambda X_i - theta Y_i), jackknife standard error.
Estimate empirical_joint_laplace(std::span<const double> xs, std::span<const double> ys, double lambda,
                                 double theta);

// Standard normal CDF.
double NormalCdf(double x);

}  // namespace branchlab

#endif  // BRANCHLAB_MONTE_CARLO_HPP_
