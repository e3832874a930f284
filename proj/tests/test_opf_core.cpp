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

#include <complex>
#include <random>

#include "doctest.h"
#include "privflow/nlp_solver.hpp"
#include "privflow/opf_core.hpp"
#include "test_util.hpp"

using namespace privflow;

namespace {

// Reference objective values computed with the independent scipy-based
// AC-OPF oracle in tests/oracle/acopf_oracle.py (SLSQP on a Ybus
// formulation); they agree with the published MATPOWER optima.
constexpr double kCase5Objective = 17551.8909;
constexpr double kCase9Objective = 5296.6862;
constexpr double kCase14Objective = 8081.5247;

}  // namespace

TEST_CASE("branch flow vanishes for identical voltages and no shunt") {
  BranchAdmittance adm{1.2, -3.4, 0.0};
  auto [sf, st] = branch_flow(adm, 1.0, 0.0, 1.03, 0.2, 1.03, 0.2);
  CHECK(std::abs(sf) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(std::abs(st) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("lossless line transfers 10 sin(0.1)") {
  // r=0, x=0.1 -> g=0, b=-10; flat magnitudes, 0.1 rad apart
  auto [g, b] = to_series_admittance(0.0, 0.1);
  BranchAdmittance adm{g, b, 0.0};
  auto [sf, st] = branch_flow(adm, 1.0, 0.0, 1.0, 0.1, 1.0, 0.0);
  CHECK(sf.real() == doctest::Approx(10.0 * std::sin(0.1)).epsilon(1e-12));
  CHECK(sf.real() + st.real() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("line losses are nonnegative for g >= 0") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ug(0.0, 5.0), ub(-30.0, -0.1),
      ubsh(0.0, 0.5), uvm(0.9, 1.1), uva(-M_PI / 2, M_PI / 2);
  for (int i = 0; i < 10000; ++i) {
    BranchAdmittance adm{ug(rng), ub(rng), ubsh(rng)};
    auto [sf, st] = branch_flow(adm, 1.0, 0.0, uvm(rng), uva(rng) / 2,
                                uvm(rng), -uva(rng) / 2);
    CHECK(sf.real() + st.real() >= -1e-10);
  }
}

TEST_CASE("trig assembly matches the complex flow route to machine precision") {
  // the NLP's power balance (trigonometric assembly) against an
  // independent complex-arithmetic evaluation of the same equations
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  auto prob = build_opf(net, OpfObjective::kDispatchCost);
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> uvm(0.95, 1.05), uva(-0.3, 0.3),
      upg(0.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    Vector x = prob->initial_point();
    const auto& sk = prob->skeleton();
    for (size_t i = 0; i < sk.buses.size(); ++i) {
      x[prob->va_offset() + int(i)] = uva(rng);
      x[prob->vm_offset() + int(i)] = uvm(rng);
    }
    for (size_t g = 0; g < sk.generators.size(); ++g) {
      x[prob->pg_offset() + int(g)] = upg(rng);
      x[prob->qg_offset() + int(g)] = upg(rng) - 0.5;
    }
    OpfSolution sol = prob->extract_solution(x);
    Vector c;
    prob->eq_constraints(x, c);
    FeasibilityReport rep = check_feasibility(net, sol, 1e300);
    const int nb = int(sk.buses.size());
    double max_balance = 0.0;
    for (int n = 0; n < nb; ++n)
      max_balance = std::max(
          max_balance, std::abs(std::complex<double>(c[1 + n], c[1 + nb + n])));
    CHECK(rep.balance == doctest::Approx(max_balance).epsilon(1e-12));
  }
}

TEST_CASE("formulation census of a 2-bus case") {
  NetworkCase net = testutil::two_bus_case();
  auto prob = build_opf(net, OpfObjective::kDispatchCost);
  FormulationInfo info = prob->formulation();
  CHECK(info.num_vars == 6);  // 2 angles + 2 magnitudes + Pg + Qg
  CHECK(info.slack_rows == 1);
  CHECK(info.balance_rows == 4);
  CHECK(info.num_eq == 5);
  CHECK(info.objective == "dispatch-cost");
  CHECK_FALSE(info.admittance_variables);
}

TEST_CASE("formulation census of the 24-bus case") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  auto prob = build_opf(net, OpfObjective::kGridLoss);
  FormulationInfo info = prob->formulation();
  int limited = 0;
  for (const Branch& br : net.branches)
    if (br.in_service && br.rate_a > 0.0) ++limited;
  CHECK(info.thermal_rows == 2 * limited);
  CHECK(info.balance_rows == 2 * 24);
  CHECK(info.angle_rows == 2 * 38);
  CHECK(info.num_ineq == info.angle_rows + info.thermal_rows);
}

TEST_CASE("disconnected networks are rejected") {
  NetworkCase net = testutil::three_bus_case();
  net.buses.push_back({4, 230.0, 0.9, 1.1, 0.0, 0.0, false});
  CHECK_THROWS_AS(build_opf(net, OpfObjective::kDispatchCost), ModelError);
}

TEST_CASE("linear dispatch cost equals Pg times base") {
  NetworkCase net = testutil::two_bus_case();
  net.generators[0].c2 = 0.0;
  net.generators[0].c1 = 1.0;
  net.generators[0].c0 = 0.0;
  auto prob = build_opf(net, OpfObjective::kDispatchCost);
  Vector x = prob->initial_point();
  x[prob->pg_offset()] = 0.73;
  CHECK(prob->objective(x) == doctest::Approx(73.0));  // 0.73 p.u. * 100 MVA
}

TEST_CASE("derivatives match finite differences at random interior points") {
  NetworkCase net = testutil::three_bus_case();
  auto prob = build_opf(net, OpfObjective::kDispatchCost);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> uvm(0.95, 1.05), uva(-0.2, 0.2),
      up(0.1, 0.9), ul(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    Vector x = prob->initial_point();
    for (int i = 0; i < 3; ++i) {
      x[prob->va_offset() + i] = uva(rng);
      x[prob->vm_offset() + i] = uvm(rng);
    }
    for (int g = 0; g < 2; ++g) {
      x[prob->pg_offset() + g] = up(rng);
      x[prob->qg_offset() + g] = up(rng) - 0.5;
    }
    CHECK(testutil::check_gradient(*prob, x) < 1e-7);
    CHECK(testutil::check_jacobian(*prob, x, true) < 1e-5);
    CHECK(testutil::check_jacobian(*prob, x, false) < 1e-5);
    Vector le(prob->num_eq()), li(prob->num_ineq());
    for (int i = 0; i < le.size(); ++i) le[i] = ul(rng);
    for (int i = 0; i < li.size(); ++i) li[i] = std::abs(ul(rng));
    CHECK(testutil::check_hessian(*prob, x, le, li) < 1e-5);
  }
}

TEST_CASE("baseline OPF reproduces the independent reference objectives") {
  SolveOptions opts;
  opts.max_iter = 300;
  SUBCASE("case5") {
    OpfSolution sol = solve_opf(testutil::load_case("case5_pjm.m"),
                                OpfObjective::kDispatchCost, opts);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(std::abs(sol.objective - kCase5Objective) / kCase5Objective < 0.005);
  }
  SUBCASE("case9") {
    OpfSolution sol = solve_opf(testutil::load_case("case9_wscc.m"),
                                OpfObjective::kDispatchCost, opts);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(std::abs(sol.objective - kCase9Objective) / kCase9Objective < 0.005);
  }
  SUBCASE("case14") {
    OpfSolution sol = solve_opf(testutil::load_case("case14_ieee.m"),
                                OpfObjective::kDispatchCost, opts);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(std::abs(sol.objective - kCase14Objective) / kCase14Objective <
          0.005);
  }
}

TEST_CASE("grid loss: lossless ring has zero loss at optimum") {
  NetworkCase net = testutil::three_bus_case();
  for (Branch& br : net.branches) br.r = 0.0;
  OpfSolution sol = solve_opf(net, OpfObjective::kGridLoss);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(std::abs(grid_loss(net, sol)) < 1e-8);
}

TEST_CASE("grid loss equals the branch-flow loss sum") {
  NetworkCase net = testutil::two_bus_case();
  OpfSolution sol = solve_opf(net, OpfObjective::kDispatchCost);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  double branch_losses = 0.0;
  for (size_t l = 0; l < sol.s_from.size(); ++l)
    branch_losses += (sol.s_from[l] + sol.s_to[l]).real();
  CHECK(grid_loss(net, sol) == doctest::Approx(branch_losses).epsilon(1e-6));
}

TEST_CASE("doubling demand increases resistive losses") {
  NetworkCase net = testutil::three_bus_case();
  OpfSolution sol1 = solve_opf(net, OpfObjective::kGridLoss);
  REQUIRE(sol1.status == SolveStatus::kOptimal);
  for (Load& l : net.loads) {
    l.pd *= 2.0;
    l.qd *= 2.0;
  }
  OpfSolution sol2 = solve_opf(net, OpfObjective::kGridLoss);
  REQUIRE(sol2.status == SolveStatus::kOptimal);
  CHECK(grid_loss(net, sol2) > grid_loss(net, sol1));
}

TEST_CASE("loss-minimizing dispatch never loses more than cost-minimizing") {
  NetworkCase net = testutil::load_case("case5_pjm.m");
  OpfSolution cost = solve_opf(net, OpfObjective::kDispatchCost);
  OpfSolution loss = solve_opf(net, OpfObjective::kGridLoss);
  REQUIRE(cost.status == SolveStatus::kOptimal);
  REQUIRE(loss.status == SolveStatus::kOptimal);
  CHECK(grid_loss(net, loss) <= grid_loss(net, cost) + 1e-8);
}

TEST_CASE("check_feasibility accepts optimal solutions") {
  NetworkCase net = testutil::load_case("case5_pjm.m");
  OpfSolution sol = solve_opf(net, OpfObjective::kDispatchCost);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  FeasibilityReport rep = check_feasibility(net, sol, 1e-6);
  CAPTURE(rep.max_violation);
  CHECK(rep.pass);
}

TEST_CASE("check_feasibility reports a constructed voltage violation") {
  NetworkCase net = testutil::load_case("case5_pjm.m");
  OpfSolution sol = solve_opf(net, OpfObjective::kDispatchCost);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  sol.vm[2] = net.buses[2].vmax + 0.01;
  FeasibilityReport rep = check_feasibility(net, sol, 1e-6);
  CHECK_FALSE(rep.pass);
  CHECK(rep.vm_bounds == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("check_feasibility matches a brute-force evaluation") {
  // independent oracle: re-evaluate every constraint directly
  NetworkCase net = testutil::three_bus_case();
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> uvm(0.85, 1.2), uva(-0.5, 0.5),
      up(-0.5, 2.5);
  for (int trial = 0; trial < 50; ++trial) {
    OpfSolution sol;
    for (int i = 0; i < 3; ++i) {
      sol.va.push_back(i == 0 ? 0.0 : uva(rng));
      sol.vm.push_back(uvm(rng));
    }
    for (int g = 0; g < 2; ++g) {
      sol.pg.push_back(up(rng));
      sol.qg.push_back(up(rng) - 1.0);
    }
    FeasibilityReport rep = check_feasibility(net, sol, 1e-6);

    double vm_viol = 0.0, gen_viol = 0.0, ang_viol = 0.0;
    for (int i = 0; i < 3; ++i)
      vm_viol = std::max({vm_viol, net.buses[i].vmin - sol.vm[i],
                          sol.vm[i] - net.buses[i].vmax});
    for (int g = 0; g < 2; ++g) {
      const Generator& gen = net.generators[g];
      gen_viol = std::max({gen_viol, gen.pmin - sol.pg[g],
                           sol.pg[g] - gen.pmax, gen.qmin - sol.qg[g],
                           sol.qg[g] - gen.qmax});
    }
    std::vector<std::complex<double>> inj(3, {0.0, 0.0});
    inj[0] += std::complex<double>(sol.pg[0], sol.qg[0]);
    inj[2] += std::complex<double>(sol.pg[1], sol.qg[1]);
    inj[1] -= std::complex<double>(0.9, 0.25);
    inj[2] -= std::complex<double>(0.4, 0.1);
    double balance = 0.0;
    for (const Branch& br : net.branches) {
      const int i = net.bus_index(br.from_bus), j = net.bus_index(br.to_bus);
      auto [sf, st] = branch_flow(branch_admittance(br), 1.0, 0.0, sol.vm[i],
                                  sol.va[i], sol.vm[j], sol.va[j]);
      inj[i] -= sf;
      inj[j] -= st;
      const double d = sol.va[i] - sol.va[j];
      ang_viol = std::max({ang_viol, br.ang_min - d, d - br.ang_max});
    }
    for (int i = 0; i < 3; ++i) balance = std::max(balance, std::abs(inj[i]));

    CHECK(rep.vm_bounds == doctest::Approx(std::max(0.0, vm_viol)));
    CHECK(rep.gen_bounds == doctest::Approx(std::max(0.0, gen_viol)));
    CHECK(rep.angle_diff == doctest::Approx(std::max(0.0, ang_viol)));
    CHECK(rep.balance == doctest::Approx(balance).epsilon(1e-12));
  }
}

TEST_CASE("tap and shift recover Eq.-10 form at tap=1, shift=0") {
  // textual evaluation of the pi-model flow formula
  BranchAdmittance adm{0.8, -4.0, 0.05};
  const double vm_i = 1.02, va_i = 0.15, vm_j = 0.98, va_j = -0.05;
  auto [sf, st] = branch_flow(adm, 1.0, 0.0, vm_i, va_i, vm_j, va_j);
  using C = std::complex<double>;
  const C vi = std::polar(vm_i, va_i), vj = std::polar(vm_j, va_j);
  const C y(adm.g, adm.b), ysh(0.0, adm.b_sh);
  const C expected_f =
      std::conj(y + ysh) * std::norm(vi) - std::conj(y) * vi * std::conj(vj);
  const C expected_t =
      std::conj(y + ysh) * std::norm(vj) - std::conj(y) * vj * std::conj(vi);
  CHECK(sf.real() == doctest::Approx(expected_f.real()).epsilon(1e-15));
  CHECK(sf.imag() == doctest::Approx(expected_f.imag()).epsilon(1e-15));
  CHECK(st.real() == doctest::Approx(expected_t.real()).epsilon(1e-15));
  CHECK(st.imag() == doctest::Approx(expected_t.imag()).epsilon(1e-15));
}
