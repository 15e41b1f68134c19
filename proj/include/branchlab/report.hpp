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


#ifndef BRANCHLAB_REPORT_HPP_
#define BRANCHLAB_REPORT_HPP_

#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "branchlab/asymptotics.hpp"
#include "branchlab/offspring_model.hpp"
#include "json.hpp"

namespace branchlab {

// Shortest decimal form that round-trips; "nan", "inf", "-inf" otherwise.
std::string FormatNumber(double x);

// A field quoted per RFC 4180 when it holds a comma, quote, CR or LF.
std::string CsvField(std::string_view field);

// A table written as RFC 4180 CSV with CRLF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  // Throws DomainError when the width differs from the header.
  void AddRow(std::vector<std::string> row);
  void AddNumbers(std::span<const double> row);

  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& header() const { return header_; }
  void Write(std::ostream& out) const;
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::string HashHex(std::uint64_t h);

// What a report needs to be reproduced: tool version, model and its hash,
// seed and truncation order.
struct ReportMeta {
  std::string command;
  OffspringLaw law;
  std::optional<std::uint64_t> seed;
  std::size_t order = 0;

  nlohmann::json ToJson() const;
};

const char* ToolVersion();

// Constants and convergence tables of a law, as written by `analyze`.
struct AsymptoticReport {
  ModelConstants constants;
  std::optional<double> gamma, psi, delta1, delta2;
  std::optional<DecayClassification> decay;
  std::optional<BasicLemmaConstants> lemma;  // non-critical laws
  LocalLimitReport local;
  // n, exact, asymptote, ratio: R_n(0) against A(0) beta^n, or against
  // the critical decay 1 / (Bn + 1).
  CsvTable convergence{{"n", "exact", "asymptote", "ratio"}};
  CsvTable local_table{{"n", "p11", "scaled"}};

  nlohmann::json ToJson() const;
};

AsymptoticReport BuildAsymptoticReport(const OffspringLaw& law, std::span<const unsigned> ns,
                                       std::span<const double> s_grid, double tol = 1e-10);

// The grid q {0, 0.2, 0.4, 0.6, 0.8}: points below the fixed point, where
// the Basic Lemma bracket applies.
std::vector<double> BelowFixedPointGrid(double q);

}  // namespace branchlab

#endif  // BRANCHLAB_REPORT_HPP_
