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

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "branchlab/error.hpp"
#include "branchlab/verify.hpp"
#include "doctest.h"

using branchlab::OffspringLaw;

namespace {

const OffspringLaw kSub({0.5, 0.25, 0.25});
const OffspringLaw kCrit({0.25, 0.5, 0.25});
const OffspringLaw kSuper({0.25, 0.25, 0.5});

}  // namespace

TEST_CASE("CSV quoting") {
  CHECK(branchlab::CsvField("plain") == "plain");
  CHECK(branchlab::CsvField("a,b") == "\"a,b\"");
  CHECK(branchlab::CsvField("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(branchlab::CsvField("two\nlines") == "\"two\nlines\"");
  CHECK(branchlab::CsvField("") == "");

  branchlab::CsvTable t({"n", "note"});
  t.AddRow({"1", "x,y"});
  const double row[] = {2.0, 0.1};
  t.AddNumbers(row);
  CHECK(t.str() == "n,note\r\n1,\"x,y\"\r\n2,0.1\r\n");
  CHECK_THROWS_AS(t.AddRow({"1"}), branchlab::DomainError);
}

TEST_CASE("numbers round-trip") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    CHECK(std::stod(branchlab::FormatNumber(x)) == x);
  }
  CHECK(branchlab::FormatNumber(NAN) == "nan");
  CHECK(branchlab::FormatNumber(-INFINITY) == "-inf");
}

TEST_CASE("report metadata") {
  const branchlab::ReportMeta meta{"verify", kSub, 42, 256};
  const auto j = meta.ToJson();
  CHECK(j["seed"] == 42);
  CHECK(j["order"] == 256);
  CHECK(j["version"] == std::string(branchlab::ToolVersion()));
  CHECK(j["model_hash"] == branchlab::HashHex(kSub.Hash()));
  CHECK(j["model_hash"].get<std::string>().size() == 16);
  CHECK(j["model_hash"] != branchlab::HashHex(kCrit.Hash()));
  CHECK(j.dump() == meta.ToJson().dump());
}

TEST_CASE("asymptotic report constants") {
  const unsigned ns[] = {10, 100};
  const auto crit = branchlab::BuildAsymptoticReport(kCrit, ns, branchlab::BelowFixedPointGrid(1.0));
  CHECK(crit.constants.q == 1.0);
  CHECK(crit.constants.beta == 1.0);
  CHECK(crit.constants.B == 0.25);
  CHECK_FALSE(crit.gamma);
  CHECK(crit.convergence.rows() == 2);
  CHECK(crit.ToJson()["delta1"].is_null());

  const auto grid = branchlab::BelowFixedPointGrid(0.5);
  REQUIRE(grid.size() == 5);
  for (std::size_t i = 0; i < grid.size(); ++i) CHECK(grid[i] == doctest::Approx(0.1 * i).epsilon(1e-15));
  const auto sup = branchlab::BuildAsymptoticReport(kSuper, ns, grid);
  CHECK(sup.constants.q == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(sup.constants.beta == doctest::Approx(0.75).epsilon(1e-14));
  CHECK(*sup.gamma == doctest::Approx(8.0 / 3.0));
  CHECK(*sup.psi == doctest::Approx(40.0));
  CHECK(sup.decay->R == doctest::Approx(-std::log(0.75)));
  REQUIRE(sup.lemma);
  CHECK(sup.lemma->points.size() == 5);
  CHECK(sup.ToJson()["local_limit"]["rows"].size() == 2);
}

TEST_CASE("suite selection follows the regime") {
  const auto crit = branchlab::ApplicableSuites(kCrit);
  const auto sub = branchlab::ApplicableSuites(kSub);
  CHECK(std::find(crit.begin(), crit.end(), "joint") != crit.end());
  CHECK(std::find(crit.begin(), crit.end(), "lln") == crit.end());
  CHECK(std::find(sub.begin(), sub.end(), "q-stationary") != sub.end());
  CHECK(crit.size() + sub.size() == branchlab::SuiteNames().size() + 2);  // oracle and local-limit in both

  branchlab::Verifier v(kCrit, branchlab::VerifyOptions{});
  CHECK_THROWS_AS(v.Run("q-stationary"), branchlab::RegimeError);
  CHECK_THROWS_AS(v.Run("nonesuch"), branchlab::DomainError);
  CHECK(v.Run("critical-decay").passed());
}

TEST_CASE("verify is pure in its inputs") {
  branchlab::VerifyOptions opt;
  opt.replicas = 2000;
  opt.horizon = 200;
  opt.seed = 9;
  branchlab::Verifier a(kSub, opt), b(kSub, opt);
  CHECK(a.Run("lln").ToJson().dump() == b.Run("lln").ToJson().dump());
  opt.backend = branchlab::Backend::kSerial;
  branchlab::Verifier c(kSub, opt);
  CHECK(a.Run("lln").ToJson().dump() == c.Run("lln").ToJson().dump());
}
