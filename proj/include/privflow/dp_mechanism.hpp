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

#ifndef PRIVFLOW_DP_MECHANISM_HPP_
#define PRIVFLOW_DP_MECHANISM_HPP_

#include <map>
#include <span>
#include <vector>

#include "privflow/net_model.hpp"
#include "privflow/rng.hpp"

namespace privflow {

struct PrivacyParams {
  double epsilon = 1.0;  // privacy budget
  double alpha = 0.01;   // indistinguishability, p.u. susceptance
  double beta = 0.5;     // objective faithfulness factor
  double lambda = 30.0;  // bound scale factor

  void validate() const;  // throws ModelError unless all > 0 and lambda > 1
};

// Noise scale of one per-branch draw: 3*alpha/epsilon.
double branch_noise_scale(const PrivacyParams& p);
// Noise scale of one per-level mean draw: 3*alpha/(n_v*epsilon).
double level_noise_scale(const PrivacyParams& p, int n_v);

// Noisy branch parameters, aligned with the in-service branches of the
// source case in order. The shunt values are per-end (pi-model leg) values.
// Invariant: g_tilde[i]*b[i] == g[i]*b_tilde[i] for every branch -- the
// conductance-to-susceptance ratio of each line survives the perturbation.
struct PerturbedAdmittances {
  std::vector<int> branch_ids;
  std::vector<double> b_tilde;     // series susceptance + Laplace noise
  std::vector<double> g_tilde;     // conductance scaled by the original g/b
  std::vector<double> b_sh_tilde;  // per-end shunt susceptance + noise
};

// Per-voltage-level noisy means of the original (unperturbed) g, b and
// per-end b_sh values.
struct LevelMeans {
  struct Level {
    double kv = 0.0;
    int n_branches = 0;
    double mu_g = 0.0;
    double mu_b = 0.0;
    double mu_bsh = 0.0;
  };
  std::vector<Level> levels;

  const Level& at_kv(double kv) const;  // throws ModelError if absent
};

// How many Laplace draws were taken at which scale, for budget auditing.
struct DrawReport {
  std::map<double, int> draws_by_scale;
  void count(double scale, int n = 1) { draws_by_scale[scale] += n; }
};

struct MechanismResult {
  PerturbedAdmittances perturbed;
  LevelMeans means;
  DrawReport draws;
};

// Perturbs b and b_sh of every in-service branch with i.i.d. Laplace noise
// of scale 3*alpha/epsilon and rescales g to preserve each branch's g/b
// ratio. No clamping happens here; feasibility is restored downstream.
PerturbedAdmittances perturb_branch_parameters(const NetworkCase& net,
                                               const PrivacyParams& p,
                                               NoiseSource& rng,
                                               DrawReport* report = nullptr);

// Mean of `values` (aligned with the in-service branches of `net`) over each
// voltage level, plus Laplace noise of scale 3*alpha/(n_v*epsilon). The
// stream key is derived from `channel` and the level's kV value.
std::map<double, double> noisy_level_means(const NetworkCase& net,
                                           std::span<const double> values,
                                           NoiseChannel channel,
                                           const PrivacyParams& p,
                                           NoiseSource& rng,
                                           DrawReport* report = nullptr);

// Full mechanism front end: branch perturbation plus the three families of
// level means (g, b, per-end b_sh) computed from the original values.
MechanismResult apply_mechanism(const NetworkCase& net, const PrivacyParams& p,
                                NoiseSource& rng);

}  // namespace privflow

#endif  // PRIVFLOW_DP_MECHANISM_HPP_
