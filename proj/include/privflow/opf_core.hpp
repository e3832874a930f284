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

#ifndef PRIVFLOW_OPF_CORE_HPP_
#define PRIVFLOW_OPF_CORE_HPP_

#include <complex>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "privflow/dp_mechanism.hpp"
#include "privflow/net_model.hpp"
#include "privflow/nlp.hpp"

namespace privflow {

// Network description with the protected branch admittance values removed:
// topology, voltage/thermal/angle limits, generators, loads and bus shunts.
// The restoration stage is constructed from this type (plus noisy targets),
// so it cannot read the original line parameters even by accident.
struct NetworkSkeleton {
  struct SkBus {
    int id = 0;
    double base_kv = 0.0;
    double vmin = 0.0, vmax = 0.0;
    double shunt_g = 0.0, shunt_b = 0.0;
    bool is_slack = false;
  };
  struct SkBranch {
    int id = 0;
    int from_bus = 0, to_bus = 0;
    double tap = 1.0;
    double shift = 0.0;
    double rate_a = 0.0;  // 0 = unconstrained
    double ang_min = 0.0, ang_max = 0.0;
    double g_sh = 0.0;  // total branch shunt conductance (not protected)
  };

  std::string name;
  double base_mva = 100.0;
  std::vector<SkBus> buses;
  std::vector<SkBranch> branches;  // in-service only
  std::vector<Generator> generators;
  std::vector<Load> loads;
};

NetworkSkeleton strip_admittances(const NetworkCase& net);

enum class OpfObjective { kDispatchCost, kGridLoss };

// Pi-model branch power flow, Eq.-(10) form extended with the off-nominal
// tap and phase shift: returns (S_ij, S_ji) in p.u. for complex voltages
// given in polar form. `g_sh_end` is the per-end shunt conductance.
std::pair<std::complex<double>, std::complex<double>> branch_flow(
    const BranchAdmittance& adm, double tap, double shift, double vm_i,
    double va_i, double vm_j, double va_j, double g_sh_end = 0.0);

struct OpfSolution {
  std::vector<double> vm, va;  // per bus (skeleton order)
  std::vector<double> pg, qg;  // per generator
  std::vector<std::complex<double>> s_from, s_to;  // per branch, p.u.
  double objective = 0.0;
  SolveStatus status = SolveStatus::kNumericalFailure;
  SolveReport report;
};

// Constraint census of a built problem.
struct FormulationInfo {
  int num_vars = 0;
  int num_eq = 0;
  int num_ineq = 0;
  int slack_rows = 0;
  int balance_rows = 0;
  int angle_rows = 0;
  int thermal_rows = 0;
  int loss_band_rows = 0;
  bool admittance_variables = false;
  std::string objective;
};

// Box bounds for the admittance decision variables of the restoration
// problem, one entry per skeleton branch.
struct AdmittanceBoxes {
  std::vector<double> g_lo, g_hi;
  std::vector<double> b_lo, b_hi;
  std::vector<double> bsh_lo, bsh_hi;  // per-end shunt susceptance
  std::vector<std::string> warnings;
};

// Polar-voltage AC-OPF as an NlpProblem. Two modes share the assembly:
//  - baseline: branch admittances are fixed data, objective is dispatch
//    cost or grid loss;
//  - restoration: per-branch (g, b, b_sh) become decision variables with
//    level boxes, the objective is squared distance to the noisy targets,
//    and the grid loss is banded around a reference value.
class OpfNlp final : public NlpProblem {
 public:
  // Baseline. `adm` is indexed like skeleton.branches.
  OpfNlp(NetworkSkeleton sk, std::vector<BranchAdmittance> adm,
         OpfObjective objective);

  struct RestorationSpec {
    std::vector<double> g_target, b_target, bsh_target;  // per branch
    AdmittanceBoxes boxes;
    double l_star = 0.0;
    double beta = 0.5;
    bool absolute_loss_band = false;  // used when l_star is ~0
    bool include_shunt_distance = false;
  };
  OpfNlp(NetworkSkeleton sk, RestorationSpec spec);

  // NlpProblem interface
  int num_vars() const override;
  int num_eq() const override;
  int num_ineq() const override;
  void variable_bounds(Vector& lo, Vector& hi) const override;
  Vector initial_point() const override;
  double objective(const Vector& x) const override;
  void objective_gradient(const Vector& x, Vector& grad) const override;
  void eq_constraints(const Vector& x, Vector& c) const override;
  void ineq_constraints(const Vector& x, Vector& c) const override;
  void eq_jacobian(const Vector& x, Triplets& out) const override;
  void ineq_jacobian(const Vector& x, Triplets& out) const override;
  bool lagrangian_hessian(const Vector& x, double sigma, const Vector& lam_eq,
                          const Vector& lam_ineq, Triplets& out) const override;

  FormulationInfo formulation() const;
  const NetworkSkeleton& skeleton() const { return sk_; }

  OpfSolution extract_solution(const Vector& x) const;
  // Restoration mode: the admittance block of the solution vector.
  void extract_admittances(const Vector& x, std::vector<double>& g,
                           std::vector<double>& b,
                           std::vector<double>& bsh_end) const;

  // Variable-layout offsets (useful for tests and warm starts).
  int va_offset() const { return 0; }
  int vm_offset() const { return nb_; }
  int pg_offset() const { return 2 * nb_; }
  int qg_offset() const { return 2 * nb_ + ng_; }
  int adm_offset() const { return 2 * nb_ + 2 * ng_; }

 private:
  struct Side;  // branch terminal evaluation record
  void init_topology();
  void admittance_at(const Vector& x, int branch, double& g, double& b,
                     double& bsh_end) const;
  template <typename F>
  void for_each_side(const Vector& x, F&& fn) const;

  NetworkSkeleton sk_;
  std::vector<BranchAdmittance> adm_;  // baseline mode data
  std::optional<RestorationSpec> rest_;
  OpfObjective obj_ = OpfObjective::kDispatchCost;

  int nb_ = 0, ng_ = 0, nbr_ = 0;
  int slack_ = 0;
  std::vector<int> from_idx_, to_idx_;         // per branch
  std::vector<std::vector<int>> gens_at_bus_;  // bus index -> gen indices
  std::vector<double> pd_, qd_;                // per bus
  std::vector<int> limited_;                   // branches with rate_a > 0
  double total_pd_ = 0.0;
};

// Model-1 baseline problem for a full case. Throws ModelError if the case
// is invalid or disconnected.
std::unique_ptr<OpfNlp> build_opf(const NetworkCase& net,
                                  OpfObjective objective);

// Convenience: build + solve + extract.
OpfSolution solve_opf(const NetworkCase& net, OpfObjective objective,
                      const SolveOptions& opts = {});

// Total active generation minus total active demand, p.u.
double grid_loss(const NetworkCase& net, const OpfSolution& sol);
double grid_loss(const NetworkSkeleton& sk, const OpfSolution& sol);

// Post-hoc verification of Model-1 feasibility at a solution, evaluated
// with the complex-arithmetic branch_flow (an algebraic route independent
// of the trigonometric NLP assembly).
struct FeasibilityReport {
  double slack_angle = 0.0;
  double vm_bounds = 0.0;
  double angle_diff = 0.0;
  double gen_bounds = 0.0;
  double thermal = 0.0;      // max(0, |S| - rate)
  double balance = 0.0;      // max |complex mismatch|
  double max_violation = 0.0;
  bool pass = false;
};

FeasibilityReport check_feasibility(const NetworkCase& net,
                                    const OpfSolution& sol, double tol = 1e-6);

}  // namespace privflow

#endif  // PRIVFLOW_OPF_CORE_HPP_
