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


#include "branchlab/report.hpp"

#include <cmath>
#include <sstream>
#include <utility>

#include <fmt/format.h>

#include "branchlab/error.hpp"
#include "branchlab/series.hpp"

namespace branchlab {

std::string FormatNumber(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return fmt::format("{}", x);
}

std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

void CsvTable::AddRow(std::vector<std::string> row) {
  if (row.size() != header_.size()) {
    throw DomainError(fmt::format("CSV row has {} fields, header has {}", row.size(), header_.size()));
  }
  rows_.push_back(std::move(row));
}

void CsvTable::AddNumbers(std::span<const double> row) {
  std::vector<std::string> fields;
  fields.reserve(row.size());
  for (double x : row) fields.push_back(FormatNumber(x));
  AddRow(std::move(fields));
}

void CsvTable::Write(std::ostream& out) const {
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out << ',';
      out << CsvField(fields[i]);
    }
    out << "\r\n";
  };
  line(header_);
  for (const auto& row : rows_) line(row);
}

std::string CsvTable::str() const {
  std::ostringstream out;
  Write(out);
  return out.str();
}

std::string HashHex(std::uint64_t h) { return fmt::format("{:016x}", h); }

const char* ToolVersion() { return BRANCHLAB_VERSION; }

nlohmann::json ReportMeta::ToJson() const {
  nlohmann::json out;
  out["tool"] = "branchlab";
  out["version"] = ToolVersion();
  out["command"] = command;
  out["model"] = law.ToJson();
  out["model_hash"] = HashHex(law.Hash());
  out["seed"] = seed ? nlohmann::json(*seed) : nlohmann::json(nullptr);
  out["order"] = order;
  return out;
}

std::vector<double> BelowFixedPointGrid(double q) {
  return {0.0, 0.2 * q, 0.4 * q, 0.6 * q, 0.8 * q};
}

namespace {

template <typename T>
nlohmann::json OrNull(const std::optional<T>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

nlohmann::json AsymptoticReport::ToJson() const {
  nlohmann::json out = constants.ToJson();
  out["gamma"] = OrNull(gamma);
  out["psi"] = OrNull(psi);
  out["delta1"] = OrNull(delta1);
  out["delta2"] = OrNull(delta2);
  if (decay) {
    out["R"] = decay->R;
    out["decay"] = decay->ToJson();
  }
  if (lemma) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : lemma->points) {
      pts.push_back({{"s", p.s},
                     {"A", p.a.value},
                     {"K", p.k_measured.value},
                     {"K_formula", p.k_formula},
                     {"A_lo", p.a2},
                     {"A_hi", p.a1},
                     {"A_in_bracket", p.a_in_bracket}});
    }
    out["basic_lemma"] = pts;
  }
  out["local_limit"] = local.ToJson();
  return out;
}

AsymptoticReport BuildAsymptoticReport(const OffspringLaw& law, std::span<const unsigned> ns,
                                       std::span<const double> s_grid, double tol) {
  AsymptoticReport rep;
  rep.constants = model_constants(law);
  const auto& k = rep.constants;
  if (k.critical()) {
    for (const auto& row : CriticalDecayTable(law, 0.0, ns)) {
      const double r[] = {static_cast<double>(row.n), row.exact, row.asymptote, row.ratio};
      rep.convergence.AddNumbers(r);
    }
  } else {
    rep.gamma = k.gamma();
    rep.psi = k.psi();
    rep.delta1 = Delta1(law, k);
    rep.delta2 = Delta2(law, k);
    rep.decay = decay_classification(law);
    rep.lemma = basic_lemma_constants(law, s_grid, 50000, tol);
    const double a0 = LimitA(law, 0.0, tol).value;
    for (unsigned n : ns) {
      const double exact = static_cast<double>(r_function(law, n, 0.0));
      const double asym = a0 * std::pow(k.beta, n);
      const double ratio = static_cast<double>(NormalizedR(law, 0.0, n)) / a0;
      const double r[] = {static_cast<double>(n), exact, asym, ratio};
      rep.convergence.AddNumbers(r);
    }
  }
  rep.local = local_limit(law, ns);
  for (const auto& row : rep.local.rows) {
    const double r[] = {static_cast<double>(row.n), row.p11, row.scaled};
    rep.local_table.AddNumbers(r);
  }
  return rep;
}

}  // namespace branchlab
