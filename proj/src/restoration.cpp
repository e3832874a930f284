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

#include "privflow/restoration.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <unordered_map>

#include "privflow/nlp_solver.hpp"

namespace privflow {

namespace {

double level_of(const NetworkSkeleton& sk, const NetworkSkeleton::SkBranch& br) {
  double kv_f = 0.0, kv_t = 0.0;
  for (const auto& b : sk.buses) {
    if (b.id == br.from_bus) kv_f = b.base_kv;
    if (b.id == br.to_bus) kv_t = b.base_kv;
  }
  return std::max(kv_f, kv_t);
}

}  // namespace

std::string to_string(PipelineStage s) {
  switch (s) {
    case PipelineStage::kBaseline: return "baseline";
    case PipelineStage::kMechanism: return "mechanism";
    case PipelineStage::kBuild: return "build";
    case PipelineStage::kSolve: return "solve";
    case PipelineStage::kVerify: return "verify";
  }
  return "unknown";
}

AdmittanceBoxes level_boxes(const NetworkSkeleton& sk, const LevelMeans& means,
                            double lambda) {
  if (!(lambda > 1.0)) throw ModelError("lambda must exceed 1");
  AdmittanceBoxes bx;
  const size_t nbr = sk.branches.size();
  bx.g_lo.resize(nbr);
  bx.g_hi.resize(nbr);
  bx.b_lo.resize(nbr);
  bx.b_hi.resize(nbr);
  bx.bsh_lo.resize(nbr);
  bx.bsh_hi.resize(nbr);

  for (size_t l = 0; l < nbr; ++l) {
    const auto& lvl = means.at_kv(level_of(sk, sk.branches[l]));
    auto sorted = [](double a, double b) {
      return a <= b ? std::pair{a, b} : std::pair{b, a};
    };
    auto [glo, ghi] = sorted(lvl.mu_g / lambda, lambda * lvl.mu_g);
    auto [blo, bhi] = sorted(lambda * lvl.mu_b, lvl.mu_b / lambda);
    auto [slo, shi] = sorted(lvl.mu_bsh / lambda, lambda * lvl.mu_bsh);
    if (lvl.mu_g < 0.0) {
      bx.warnings.push_back("level " + std::to_string(lvl.kv) +
                            " kV: noisy mean conductance is negative");
      if (ghi < 0.0)
        throw RestorationBuildError(
            "conductance box excludes nonnegative values at level " +
            std::to_string(lvl.kv) + " kV");
    }
    if (lvl.mu_b >= 0.0) {
      bx.warnings.push_back("level " + std::to_string(lvl.kv) +
                            " kV: noisy mean susceptance is nonnegative");
      if (blo >= 0.0)
        throw RestorationBuildError(
            "susceptance box excludes negative values at level " +
            std::to_string(lvl.kv) + " kV");
    }
    if (lvl.mu_bsh < 0.0)
      bx.warnings.push_back("level " + std::to_string(lvl.kv) +
                            " kV: noisy mean shunt susceptance is negative");
    bx.g_lo[l] = glo;
    bx.g_hi[l] = ghi;
    bx.b_lo[l] = blo;
    bx.b_hi[l] = bhi;
    bx.bsh_lo[l] = slo;
    bx.bsh_hi[l] = shi;
  }
  return bx;
}

RestorationProblem build_restoration(const NetworkSkeleton& sk,
                                     const PerturbedAdmittances& targets,
                                     const LevelMeans& means, double l_star,
                                     const PrivacyParams& params,
                                     const RestorationConfig& config) {
  params.validate();
  const size_t nbr = sk.branches.size();
  if (targets.branch_ids.size() != nbr)
    throw ModelError("perturbed admittances do not match the skeleton");
  for (size_t l = 0; l < nbr; ++l)
    if (targets.branch_ids[l] != sk.branches[l].id)
      throw ModelError("perturbed admittances are misaligned with skeleton");

  OpfNlp::RestorationSpec spec;
  spec.g_target = targets.g_tilde;
  spec.b_target = targets.b_tilde;
  spec.bsh_target = targets.b_sh_tilde;
  spec.boxes = level_boxes(sk, means, params.lambda);
  spec.beta = params.beta;
  spec.l_star = l_star;
  spec.absolute_loss_band = std::abs(l_star) <= 1e-8;
  spec.include_shunt_distance = config.include_shunt_distance;

  RestorationProblem rp;
  rp.l_star = l_star;
  rp.params = params;
  rp.warnings = spec.boxes.warnings;
  rp.nlp = std::make_unique<OpfNlp>(sk, std::move(spec));
  return rp;
}

double baseline_grid_loss(const NetworkCase& net, OpfObjective arm,
                          const SolveOptions& opts) {
  OpfSolution sol = solve_opf(net, arm, opts);
  if (sol.status != SolveStatus::kOptimal)
    throw ModelError("baseline OPF failed: " + to_string(sol.status));
  return grid_loss(net, sol);
}

PipelineResult run_pipeline(const NetworkCase& net, const PipelineOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };
  PipelineResult res;
  res.stage = PipelineStage::kBaseline;
  try {
    opt.params.validate();
    net.validate();

    double l_star;
    std::string l_star_source;
    if (opt.l_star_override) {
      l_star = *opt.l_star_override;
      l_star_source = "external";
    } else {
      l_star = baseline_grid_loss(net, opt.arm, opt.solve);
      l_star_source = "baseline";
    }
    res.l_star = l_star;

    res.stage = PipelineStage::kMechanism;
    CounterNoise seeded(opt.seed);
    NoiseSource& rng = opt.noise_override ? *opt.noise_override : seeded;
    MechanismResult mech = apply_mechanism(net, opt.params, rng);

    res.stage = PipelineStage::kBuild;
    NetworkSkeleton sk = strip_admittances(net);
    RestorationProblem rp;
    try {
      rp = build_restoration(sk, mech.perturbed, mech.means, l_star,
                             opt.params, opt.restoration);
    } catch (const RestorationBuildError& e) {
      res.status = SolveStatus::kInfeasible;
      res.message = e.what();
      res.wall_time_s = elapsed();
      return res;
    }

    res.stage = PipelineStage::kSolve;
    SolveOptions solve_opts = opt.solve;
    solve_opts.timeout_s = std::max(1.0, opt.solve.timeout_s - elapsed());
    SolveResult sr = solve_nlp(*rp.nlp, solve_opts);
    res.status = sr.report.status;
    res.iterations = sr.report.iterations;
    if (sr.report.status != SolveStatus::kOptimal) {
      res.message = sr.report.message.empty() ? to_string(sr.report.status)
                                              : sr.report.message;
      res.wall_time_s = elapsed();
      return res;
    }

    res.stage = PipelineStage::kVerify;
    std::vector<double> g, b, bsh_end;
    rp.nlp->extract_admittances(sr.x, g, b, bsh_end);

    NetworkCase released = net;
    std::unordered_map<int, size_t> by_id;
    for (size_t l = 0; l < sk.branches.size(); ++l)
      by_id[sk.branches[l].id] = l;
    for (Branch& br : released.branches) {
      if (!br.in_service) continue;
      const size_t l = by_id.at(br.id);
      auto [r, x] = to_series_impedance(g[l], b[l]);
      br.r = r;
      br.x = x;
      br.b_sh = 2.0 * bsh_end[l];
    }

    OpfSolution sol = rp.nlp->extract_solution(sr.x);
    sol.status = sr.report.status;
    sol.report = sr.report;

    FeasibilityReport feas = check_feasibility(released, sol, opt.solve.tol_feas);
    const double loss = grid_loss(released, sol);
    const double rel_dev = std::abs(loss - l_star) /
                           std::max(std::abs(l_star), 1e-12);
    if (!feas.pass) {
      res.status = SolveStatus::kNumericalFailure;
      res.message = "released case failed verification (max violation " +
                    std::to_string(feas.max_violation) + ")";
      res.wall_time_s = elapsed();
      return res;
    }
    if (std::abs(l_star) > 1e-8 && rel_dev > opt.params.beta) {
      res.status = SolveStatus::kNumericalFailure;
      res.message = "released grid loss violates the faithfulness band";
      res.wall_time_s = elapsed();
      return res;
    }

    ObfuscatedCase out;
    out.network = std::move(released);
    out.solution = std::move(sol);
    out.provenance.case_name = net.name;
    out.provenance.seed = opt.seed;
    out.provenance.alpha = opt.params.alpha;
    out.provenance.beta = opt.params.beta;
    out.provenance.epsilon = opt.params.epsilon;
    out.provenance.lambda = opt.params.lambda;
    out.provenance.objective_arm =
        opt.arm == OpfObjective::kDispatchCost ? "cost" : "loss";
    out.provenance.l_star = l_star;
    out.provenance.l_star_source = l_star_source;
    out.provenance.status = to_string(sr.report.status);
    out.provenance.iterations = sr.report.iterations;
    out.provenance.wall_time_s = elapsed();
    out.provenance.fit_objective = sr.report.objective;
    out.provenance.warnings = rp.warnings;

    res.success = true;
    res.released = std::move(out);
    res.wall_time_s = elapsed();
    return res;
  } catch (const ModelError& e) {
    res.status = SolveStatus::kNumericalFailure;
    res.message = e.what();
    res.wall_time_s = elapsed();
    return res;
  }
}

}  // namespace privflow
