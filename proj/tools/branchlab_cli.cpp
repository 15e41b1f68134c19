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


// branchlab command-line front end.
//
//   branchlab analyze  -m MODEL [-n N,...] [-o DIR]
//   branchlab qprocess -m MODEL [--pi | --mu | --upsilon] [-n N,...] [-N CAP]
//   branchlab joint    -m MODEL [-n N,...]
//   branchlab simulate -m MODEL [--q] [-n N,...] [-r R] [--seed S] [-o DIR]
//   branchlab verify   -m MODEL [--suite NAME] [-r R] [--seed S] [-o DIR]
//
// Exit codes: 0 success, 1 check failure or numerical failure, 2 usage or
// input error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "branchlab/asymptotics.hpp"
#include "branchlab/cumulative_state.hpp"
#include "branchlab/error.hpp"
#include "branchlab/kernels.hpp"
#include "branchlab/monte_carlo.hpp"
#include "branchlab/offspring_model.hpp"
#include "branchlab/q_process.hpp"
#include "branchlab/report.hpp"
#include "branchlab/verify.hpp"
#include "json.hpp"

namespace bl = branchlab;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitUsage = 2;

struct ExperimentSpec {
  std::string model_path;
  std::vector<unsigned> horizons;
  std::size_t order = 256;
  std::uint64_t replicas = 0;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::optional<double> tol;
  // qprocess
  bool pi = false, mu = false, upsilon = false;
  // simulate
  bool q_process = false;
  // verify
  std::string suite = "all";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bl::OffspringLaw LoadModel(const ExperimentSpec& spec) {
  if (spec.model_path.empty()) throw UsageError("a model file is required (-m/--model)");
  return bl::OffspringLaw::FromFile(spec.model_path);
}

// Creates the output directory if needed; empty when no -o was given.
std::optional<std::filesystem::path> OutDir(const ExperimentSpec& spec) {
  if (spec.out_dir.empty()) return std::nullopt;
  std::filesystem::path dir(spec.out_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw UsageError("cannot create output directory '" + spec.out_dir + "'");
  }
  return dir;
}

void WriteText(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw UsageError("cannot write '" + path.string() + "'");
}

std::string Dump(const json& doc) { return doc.dump(2) + "\n"; }

std::vector<unsigned> HorizonsOr(const ExperimentSpec& spec, std::vector<unsigned> fallback) {
  return spec.horizons.empty() ? fallback : spec.horizons;
}

int CmdAnalyze(const ExperimentSpec& spec) {
  const auto law = LoadModel(spec);
  const auto ns = HorizonsOr(spec, {10, 50, 100, 200, 400});
  const auto k = bl::model_constants(law);
  const auto rep = bl::BuildAsymptoticReport(law, ns, bl::BelowFixedPointGrid(k.q), spec.tol.value_or(1e-10));
  json doc = {{"meta", bl::ReportMeta{"analyze", law, std::nullopt, 0}.ToJson()}, {"report", rep.ToJson()}};
  std::cout << Dump(doc);
  if (auto dir = OutDir(spec)) {
    WriteText(*dir / "analyze.json", Dump(doc));
    WriteText(*dir / "convergence.csv", rep.convergence.str());
    WriteText(*dir / "local_limit.csv", rep.local_table.str());
  }
  return kExitOk;
}

int CmdQProcess(const ExperimentSpec& spec) {
  const auto law = LoadModel(spec);
  const bl::QKernel kernel(law, spec.order);
  const auto ns = HorizonsOr(spec, {10});
  json doc = {{"meta", bl::ReportMeta{"qprocess", law, std::nullopt, spec.order}.ToJson()},
              {"constants", kernel.constants().ToJson()}};
  std::vector<std::pair<std::string, bl::CsvTable>> tables;

  if (spec.pi) {
    const std::vector<double> grid{0.0, 0.25, 0.5, 0.75, 0.9};
    const auto pi = bl::pi_distribution(kernel, grid, spec.horizons.empty() ? 60 : ns.front());
    doc["pi"] = pi.ToJson();
    bl::CsvTable t({"j", "closed_form", "stationary"});
    for (std::size_t j = 1; j <= pi.stationary.size(); ++j) {
      const double r[] = {static_cast<double>(j), pi.closed_form[j], pi.stationary[j - 1]};
      t.AddNumbers(r);
    }
    tables.emplace_back("pi.csv", std::move(t));
  }
  if (spec.mu) {
    const std::vector<double> grid{0.25, 0.5, 0.75, 0.9};
    const unsigned n_max = spec.horizons.empty() ? 400 : ns.back();
    const auto mu = bl::mu_critical(kernel, grid, n_max);
    doc["mu"] = mu.ToJson();
    bl::CsvTable t({"j", "mu_measured"});
    const auto measured = bl::MeasuredMu(kernel, n_max, 20);
    for (std::size_t j = 1; j <= measured.size(); ++j) {
      const double r[] = {static_cast<double>(j), measured[j - 1]};
      t.AddNumbers(r);
    }
    tables.emplace_back("mu.csv", std::move(t));
  }
  if (spec.upsilon) {
    const unsigned n_max = spec.horizons.empty() ? 200 : ns.back();
    const auto ups = bl::upsilon_measure(kernel, n_max, 20);
    doc["upsilon"] = ups.ToJson();
    bl::CsvTable t({"j", "from_i1", "from_i2"});
    for (std::size_t j = 1; j <= ups.from_i1.size(); ++j) {
      const double r[] = {static_cast<double>(j), ups.from_i1[j - 1], ups.from_i2[j - 1]};
      t.AddNumbers(r);
    }
    tables.emplace_back("upsilon.csv", std::move(t));
  }
  if (!spec.pi && !spec.mu && !spec.upsilon) {
    json rows = json::array();
    bl::CsvTable t({"n", "j", "Q_1j"});
    for (unsigned n : ns) {
      const std::size_t width = std::min<std::size_t>(spec.order, 32);
      const auto row = bl::QTransitionRow(kernel, 1, n, width);
      for (std::size_t j = 1; j < row.size(); ++j) {
        const double r[] = {static_cast<double>(n), static_cast<double>(j), row[j]};
        t.AddNumbers(r);
      }
      rows.push_back({{"n", n}, {"expected_w", bl::expected_w(kernel, 1, n)}, {"Q_11", row[1]}});
    }
    doc["transitions"] = rows;
    tables.emplace_back("q_row.csv", std::move(t));
  }
  std::cout << Dump(doc);
  if (auto dir = OutDir(spec)) {
    WriteText(*dir / "qprocess.json", Dump(doc));
    for (const auto& [name, table] : tables) WriteText(*dir / name, table.str());
  }
  return kExitOk;
}

int CmdJoint(const ExperimentSpec& spec) {
  const auto law = LoadModel(spec);
  const bl::JointGF gf(law);
  const auto ns = HorizonsOr(spec, {100, 200, 400});
  const auto moments = bl::moment_asymptotics(gf, ns);
  json doc = {{"meta", bl::ReportMeta{"joint", law, std::nullopt, 0}.ToJson()},
              {"constants", gf.constants().ToJson()},
              {"moments", moments.ToJson()}};
  if (!gf.constants().critical()) {
    const auto lc = bl::lln_clt_constants(gf.constants());
    doc["lln_limit"] = lc.limit;
    doc["clt_two_psi"] = 2.0 * lc.psi;
    json checks = json::array();
    for (unsigned n : ns) {
      const auto lap = bl::laplace_check(law, n, 1.0);
      checks.push_back({{"n", n},
                        {"value", lap.value},
                        {"target", lap.target},
                        {"relative_error", lap.relative_error},
                        {"mean_corrected", lap.mean_corrected}});
    }
    doc["laplace"] = checks;
    const std::vector<double> thetas{1e-2, 5e-3, 2.5e-3, 1.25e-3};
    doc["expansions"] = bl::expansion_oracles(law, thetas).ToJson();
    doc["total_progeny_h_half"] = bl::h_total_progeny(law, 0.5);
  } else {
    doc["limit_transform_1_1"] = bl::limit_transform(1.0, 1.0);
  }
  bl::CsvTable t({"n", "mean_w", "mean_s", "var_w", "var_s", "cov_ws", "rho"});
  for (const auto& r : moments.rows) {
    const double row[] = {static_cast<double>(r.n), r.mean_w, r.mean_s, r.var_w, r.var_s, r.cov_ws, r.rho};
    t.AddNumbers(row);
  }
  std::cout << Dump(doc);
  if (auto dir = OutDir(spec)) {
    WriteText(*dir / "joint.json", Dump(doc));
    WriteText(*dir / "moments.csv", t.str());
  }
  return kExitOk;
}

int CmdSimulate(const ExperimentSpec& spec) {
  const auto law = LoadModel(spec);
  bl::SimulationConfig config(law);
  config.kind = spec.q_process ? bl::ProcessKind::kQProcess : bl::ProcessKind::kGaltonWatson;
  config.checkpoints = HorizonsOr(spec, {100});
  config.horizon = *std::max_element(config.checkpoints.begin(), config.checkpoints.end());
  config.replicas = spec.replicas ? spec.replicas : 1000;
  config.seed = spec.seed;
  if (auto warn = config.DriftWarning()) std::cerr << "warning: " << *warn << "\n";
  const auto stats = bl::RunEnsemble(config);
  json doc = {{"meta", bl::ReportMeta{"simulate", law, spec.seed, 0}.ToJson()},
              {"process", bl::ProcessKindName(config.kind)},
              {"horizon", config.horizon},
              {"ensemble", stats.ToJson()}};
  std::cout << Dump(doc);
  if (auto dir = OutDir(spec)) {
    WriteText(*dir / "simulate.json", Dump(doc));
    bl::CsvTable t({"replica", "n", "state", "total", "truncated"});
    for (const auto& r : stats.records()) {
      for (std::size_t c = 0; c < stats.checkpoints().size(); ++c) {
        t.AddRow({std::to_string(r.replica), std::to_string(stats.checkpoints()[c]), std::to_string(r.state[c]),
                  std::to_string(r.total[c]), r.truncated ? "1" : "0"});
      }
    }
    WriteText(*dir / "records.csv", t.str());
  }
  return kExitOk;
}

int CmdVerify(const ExperimentSpec& spec) {
  std::vector<std::string> suites;
  const bool oracle_only = spec.suite == "oracle";
  // The oracle suite runs on the linear-fractional family and needs no model.
  const bl::OffspringLaw law =
      spec.model_path.empty() && oracle_only ? bl::OffspringLaw({0.25, 0.5, 0.25}) : LoadModel(spec);
  if (spec.suite == "all") {
    suites = bl::ApplicableSuites(law);
  } else {
    suites.push_back(spec.suite);
  }
  bl::VerifyOptions options;
  options.seed = spec.seed;
  if (spec.replicas) options.replicas = spec.replicas;
  if (!spec.horizons.empty()) options.horizon = spec.horizons.front();
  options.order = spec.order;
  bl::Verifier verifier(law, options);

  json doc = {{"meta", bl::ReportMeta{"verify", law, spec.seed, spec.order}.ToJson()},
              {"replicas", options.replicas},
              {"horizon", options.horizon ? json(*options.horizon) : json(nullptr)},
              {"suites", json::array()}};
  bl::CsvTable t({"suite", "check", "status", "measured", "target", "detail"});
  bool all = true;
  for (const auto& name : suites) {
    const auto res = verifier.Run(name);
    all = all && res.passed();
    doc["suites"].push_back(res.ToJson());
    for (const auto& c : res.checks) {
      std::cout << (c.pass ? "PASS" : "FAIL") << "  " << name << ": " << c.name << "  measured "
                << bl::FormatNumber(c.measured) << " target " << bl::FormatNumber(c.target) << "  (" << c.detail
                << ")\n";
      t.AddRow({name, c.name, c.pass ? "PASS" : "FAIL", bl::FormatNumber(c.measured), bl::FormatNumber(c.target),
                c.detail});
    }
  }
  doc["pass"] = all;
  std::cout << (all ? "PASS" : "FAIL") << "  overall\n";
  if (auto dir = OutDir(spec)) {
    WriteText(*dir / "verify.json", Dump(doc));
    WriteText(*dir / "verify.csv", t.str());
  }
  return all ? kExitOk : kExitCheckFailed;
}

void AddCommon(CLI::App* cmd, ExperimentSpec& spec) {
  cmd->add_option("-m,--model", spec.model_path, "Offspring law as JSON {\"p\": [p0, p1, ...]}");
  cmd->add_option("-n,--horizon", spec.horizons, "Horizon(s), comma separated")->delimiter(',');
  cmd->add_option("-N,--order", spec.order, "Truncation order or Q-process state cap")
      ->check(CLI::Range(std::size_t{2}, bl::kMaxOrder));
  cmd->add_option("-o,--out", spec.out_dir, "Directory for report files");
  cmd->add_option("--tol", spec.tol, "Convergence tolerance for limit estimates")->check(CLI::PositiveNumber);
}

void AddRandom(CLI::App* cmd, ExperimentSpec& spec) {
  cmd->add_option("-r,--replicas", spec.replicas, "Number of replicas")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", spec.seed, "Base seed");
}

}  // namespace

int main(int argc, char** argv) {
  bl::ConfigureThreadsFromEnv();
  CLI::App app{"branchlab: exact and simulated Galton-Watson branching processes"};
  app.set_version_flag("--version", bl::ToolVersion());
  app.require_subcommand(1);

  ExperimentSpec spec;
  spec.seed = 1;
  auto* analyze = app.add_subcommand("analyze", "Constants and convergence tables");
  AddCommon(analyze, spec);
  auto* qprocess = app.add_subcommand("qprocess", "Q-process transitions, pi, mu and upsilon tables");
  AddCommon(qprocess, spec);
  qprocess->add_flag("--pi", spec.pi, "Stationary law (beta < 1)");
  qprocess->add_flag("--mu", spec.mu, "Invariant measure of the critical Q-process");
  qprocess->add_flag("--upsilon", spec.upsilon, "Ratio-limit measure");
  auto* joint = app.add_subcommand("joint", "Moments and transforms of (W_n, S_n)");
  AddCommon(joint, spec);
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo ensemble");
  AddCommon(simulate, spec);
  AddRandom(simulate, spec);
  simulate->add_flag("--q", spec.q_process, "Simulate the Q-process instead of Z_n");
  auto* verify = app.add_subcommand("verify", "Pass/fail matrix over the verification suites");
  AddCommon(verify, spec);
  AddRandom(verify, spec);
  std::vector<std::string> suite_choices = bl::SuiteNames();
  suite_choices.insert(suite_choices.begin(), "all");
  verify->add_option("--suite", spec.suite, "Suite name")->check(CLI::IsMember(suite_choices));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (verify->parsed() && verify->count("--seed") == 0) spec.seed = bl::VerifyOptions{}.seed;

  try {
    if (analyze->parsed()) return CmdAnalyze(spec);
    if (qprocess->parsed()) return CmdQProcess(spec);
    if (joint->parsed()) return CmdJoint(spec);
    if (simulate->parsed()) return CmdSimulate(spec);
    return CmdVerify(spec);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bl::InvalidModel& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bl::RegimeError& e) {
    std::cerr << "regime error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bl::DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const bl::TruncationError& e) {
    std::cerr << "truncation error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "failed: " << e.what() << "\n";
    return kExitCheckFailed;
  }
}
