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


#ifndef BRANCHLAB_VERIFY_HPP_
#define BRANCHLAB_VERIFY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "branchlab/kernels.hpp"
#include "branchlab/monte_carlo.hpp"
#include "branchlab/offspring_model.hpp"
#include "json.hpp"

namespace branchlab {

struct Check {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double target = 0.0;
  std::string detail;

  nlohmann::json ToJson() const;
};

struct SuiteResult {
  std::string suite;
  std::vector<Check> checks;

  bool passed() const;
  nlohmann::json ToJson() const;
};

struct VerifyOptions {
  std::uint64_t seed = 20260101;
  std::uint64_t replicas = 100000;
  // Overrides the horizon of the simulation suites.
  std::optional<unsigned> horizon;
  std::size_t order = 256;
  Backend backend = DefaultBackend();
};

// Suite names in run order.
const std::vector<std::string>& SuiteNames();
// Suites that apply to the regime of the law.
std::vector<std::string> ApplicableSuites(const OffspringLaw& law);

// Runs named suites against one law. Simulation ensembles are cached, so
// suites that share a run simulate it once.
class Verifier {
 public:
  Verifier(OffspringLaw law, VerifyOptions options);

  const OffspringLaw& law() const { return law_; }
  const VerifyOptions& options() const { return options_; }

  // Throws DomainError for an unknown name and RegimeError when the suite
  // does not apply to the law.
  SuiteResult Run(const std::string& suite);

 private:
  SuiteResult Oracle();
  SuiteResult BasicLemma();
  SuiteResult CriticalDecay();
  SuiteResult LocalLimit();
  SuiteResult Invariant();
  SuiteResult Yaglom();
  SuiteResult QStationary();
  SuiteResult QCritical();
  SuiteResult Joint();
  SuiteResult Lln();
  SuiteResult Clt();

  const EnsembleStats& Ensemble(std::vector<unsigned> checkpoints);

  OffspringLaw law_;
  VerifyOptions options_;
  std::map<std::vector<unsigned>, EnsembleStats> ensembles_;
};

}  // namespace branchlab

#endif  // BRANCHLAB_VERIFY_HPP_
