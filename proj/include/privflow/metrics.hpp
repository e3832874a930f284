// Copyright 2026 The privflow Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PRIVFLOW_METRICS_HPP_
#define PRIVFLOW_METRICS_HPP_

#include <span>
#include <string>
#include <vector>

#include "privflow/dp_mechanism.hpp"
#include "privflow/net_model.hpp"
#include "privflow/nlp.hpp"

namespace privflow {

// sqrt(mean((a-b)^2)); lengths must match and be nonzero.
double rmse(std::span<const double> a, std::span<const double> b);

// Original-versus-released branch parameters (in-service branches, p.u.),
// comparing the final post-processed case with the source case.
struct UtilityReport {
  std::string case_name;
  PrivacyParams params;
  std::vector<int> branch_ids;
  std::vector<double> r_orig, r_released;
  std::vector<double> x_orig, x_released;
  std::vector<double> bsh_orig, bsh_released;  // Matpower totals
  double rmse_r = 0.0;
  double rmse_x = 0.0;
  double rmse_bsh = 0.0;
};

UtilityReport utility_report(const NetworkCase& original,
                             const NetworkCase& released,
                             const PrivacyParams& params);

// CSV columns: branch_id,quantity,original,released with quantity one of
// r|x|b_sh. The SVG is a self-contained 800x800 document with one panel per
// quantity and a dashed y=x reference diagonal.
std::string scatter_csv(const UtilityReport& rep);
std::string scatter_svg(const UtilityReport& rep);

// Writes both artifacts (atomically, temp file + rename) given a path stem:
// <stem>.csv and <stem>.svg. Throws ModelError on I/O failure.
void scatter_export(const UtilityReport& rep, const std::string& path_stem);

// Write-to-temp-then-rename so no output file is ever left half-written.
void write_file_atomic(const std::string& path, const std::string& content);

enum class RunOutcomeKind { kOptimal, kInfeasible, kTimeout, kNumerical };

RunOutcomeKind outcome_kind(SolveStatus s);
std::string to_string(RunOutcomeKind k);

struct RunOutcome {
  std::string case_name;
  std::string arm;  // "cost" or "loss"
  RunOutcomeKind kind = RunOutcomeKind::kNumerical;
};

struct SolvabilityReport {
  struct Group {
    std::string case_name;
    std::string arm;
    int optimal = 0, infeasible = 0, timeout = 0, numerical = 0;
    int total() const { return optimal + infeasible + timeout + numerical; }
    double success_pct() const {
      return total() ? 100.0 * optimal / total() : 0.0;
    }
  };
  std::vector<Group> groups;
  int total_runs = 0;
  int total_optimal = 0;
  double success_pct() const {
    return total_runs ? 100.0 * total_optimal / total_runs : 0.0;
  }
};

SolvabilityReport aggregate_solvability(const std::vector<RunOutcome>& runs);

}  // namespace privflow

#endif  // PRIVFLOW_METRICS_HPP_
