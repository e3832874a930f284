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

#ifndef PRIVFLOW_RESTORATION_HPP_
#define PRIVFLOW_RESTORATION_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "privflow/dp_mechanism.hpp"
#include "privflow/net_model.hpp"
#include "privflow/opf_core.hpp"

namespace privflow {

// The noisy level means produced a bound box that cannot contain a value of
// the physically required sign; the run is infeasible before any solve.
class RestorationBuildError : public ModelError {
 public:
  explicit RestorationBuildError(const std::string& what) : ModelError(what) {}
};

struct RestorationConfig {
  // Adds a ||bsh_dot - bsh_tilde||^2 term to the objective. Off by default:
  // the shunt susceptance is steered by its bound box only.
  bool include_shunt_distance = false;
};

// Bound boxes from the per-level noisy means: g in [mu/lambda, lambda*mu],
// b in [lambda*mu, mu/lambda] (reversed, mu_b < 0), per-end b_sh likewise.
// Endpoints are sorted when a noisy mean has flipped sign; a box that
// excludes the required sign (g >= 0, b < 0) raises RestorationBuildError.
AdmittanceBoxes level_boxes(const NetworkSkeleton& sk, const LevelMeans& means,
                            double lambda);

// Fidelity-restoration program: decision variables are the OPF variables
// plus per-branch (g, b, per-end b_sh); objective is squared distance of
// (g, b) to the perturbed targets; constraints are the OPF set with the
// grid loss banded within a beta factor of l_star. Built from the skeleton
// only -- the original admittance values never enter.
struct RestorationProblem {
  std::unique_ptr<OpfNlp> nlp;
  double l_star = 0.0;
  PrivacyParams params;
  std::vector<std::string> warnings;
};

RestorationProblem build_restoration(const NetworkSkeleton& sk,
                                     const PerturbedAdmittances& targets,
                                     const LevelMeans& means, double l_star,
                                     const PrivacyParams& params,
                                     const RestorationConfig& config = {});

// Grid loss of the original case at its Model-1 optimum under the given
// objective arm. Throws ModelError when the baseline does not solve.
double baseline_grid_loss(const NetworkCase& net, OpfObjective arm,
                          const SolveOptions& opts = {});

struct Provenance {
  std::string case_name;
  std::uint64_t seed = 0;
  double alpha = 0.0, beta = 0.0, epsilon = 0.0, lambda = 0.0;
  std::string objective_arm;
  double l_star = 0.0;
  std::string l_star_source;  // "baseline" or "external"
  std::string status;
  int iterations = 0;
  double wall_time_s = 0.0;
  double fit_objective = 0.0;  // squared target distance at the solution
  std::vector<std::string> warnings;
};

struct ObfuscatedCase {
  NetworkCase network;    // released data: r, x, b_sh replaced
  OpfSolution solution;   // the restoration solution the release satisfies
  Provenance provenance;
};

enum class PipelineStage { kBaseline, kMechanism, kBuild, kSolve, kVerify };

std::string to_string(PipelineStage s);

struct PipelineResult {
  bool success = false;
  SolveStatus status = SolveStatus::kNumericalFailure;
  PipelineStage stage = PipelineStage::kBaseline;  // last stage entered
  std::string message;
  double l_star = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::optional<ObfuscatedCase> released;  // set iff success
};

struct PipelineOptions {
  PrivacyParams params;
  OpfObjective arm = OpfObjective::kDispatchCost;
  std::uint64_t seed = 0;
  std::optional<double> l_star_override;  // public-loss path
  SolveOptions solve;
  RestorationConfig restoration;
  NoiseSource* noise_override = nullptr;  // tests inject ZeroNoise here
};

// Algorithm front end: baseline loss, perturbation, level means, restoration
// build + solve, conversion back to a releasable case with provenance.
PipelineResult run_pipeline(const NetworkCase& net, const PipelineOptions& opt);

}  // namespace privflow

#endif  // PRIVFLOW_RESTORATION_HPP_
