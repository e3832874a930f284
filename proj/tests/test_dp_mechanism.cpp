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

#include <cmath>
#include <map>
#include <vector>

#include "doctest.h"
#include "privflow/dp_mechanism.hpp"
#include "test_util.hpp"

using namespace privflow;

TEST_CASE("laplace inverse CDF maps the median to zero") {
  CHECK(laplace_from_uniform(1.0, 0.5) == 0.0);
  CHECK(laplace_from_uniform(2.0, 0.75) == doctest::Approx(2.0 * std::log(2.0)));
  CHECK(laplace_from_uniform(2.0, 0.25) == doctest::Approx(-2.0 * std::log(2.0)));
  CHECK_THROWS_AS(laplace_from_uniform(0.0, 0.3), ModelError);
  CHECK_THROWS_AS(laplace_from_uniform(-1.0, 0.3), ModelError);
}

TEST_CASE("paper parameter set gives per-branch scale 0.03") {
  PrivacyParams p;  // alpha=0.01, epsilon=1
  CHECK(branch_noise_scale(p) == doctest::Approx(0.03));
  CHECK(level_noise_scale(p, 10) == doctest::Approx(0.003));
}

TEST_CASE("privacy parameters are validated") {
  PrivacyParams p;
  p.epsilon = -1.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
  p = PrivacyParams{};
  p.lambda = 1.0;
  CHECK_THROWS_AS(p.validate(), ModelError);
}

TEST_CASE("Monte-Carlo moments of the Laplace sampler") {
  // 1e6 draws at scale 1: mean ~ 0, mean absolute deviation ~ scale
  CounterNoise rng(123);
  const int n = 1000000;
  double sum = 0.0, abs_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v =
        rng.laplace(1.0, branch_stream(NoiseChannel::kBranchSusceptance, i));
    sum += v;
    abs_sum += std::abs(v);
  }
  CHECK(std::abs(sum / n) < 0.005);
  CHECK(abs_sum / n == doctest::Approx(1.0).epsilon(0.005));
}

TEST_CASE("zero-noise stub reproduces the case exactly") {
  NetworkCase net = testutil::three_bus_case();
  ZeroNoise rng;
  PrivacyParams p;
  PerturbedAdmittances pert = perturb_branch_parameters(net, p, rng);
  size_t k = 0;
  for (const Branch& br : net.branches) {
    BranchAdmittance adm = branch_admittance(br);
    CHECK(pert.b_tilde[k] == adm.b);      // exact
    CHECK(pert.g_tilde[k] == adm.g);      // exact: zero-noise short circuit
    CHECK(pert.b_sh_tilde[k] == adm.b_sh);
    ++k;
  }
}

TEST_CASE("conductance follows the noisy susceptance at a fixed ratio") {
  NetworkCase net = testutil::two_bus_case(1.0 / 5.0, 2.0 / 5.0);  // g=1, b=-2
  BranchAdmittance adm = branch_admittance(net.branches[0]);
  REQUIRE(adm.g == doctest::Approx(1.0));
  REQUIRE(adm.b == doctest::Approx(-2.0));

  struct ForcedNoise final : NoiseSource {
    double laplace(double, const StreamKey& key) override {
      return key.channel == NoiseChannel::kBranchSusceptance ? -2.0 : 0.0;
    }
  } rng;
  PrivacyParams p;
  PerturbedAdmittances pert = perturb_branch_parameters(net, p, rng);
  CHECK(pert.b_tilde[0] == doctest::Approx(-4.0));
  CHECK(pert.g_tilde[0] == doctest::Approx(2.0));  // ratio g/b preserved
}

TEST_CASE("ratio preservation holds to the last ulp") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  PrivacyParams p;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    CounterNoise rng(seed);
    PerturbedAdmittances pert = perturb_branch_parameters(net, p, rng);
    size_t k = 0;
    for (const Branch& br : net.branches) {
      BranchAdmittance adm = branch_admittance(br);
      const double lhs = pert.g_tilde[k] * adm.b;
      const double rhs = adm.g * pert.b_tilde[k];
      CHECK(std::abs(lhs - rhs) <=
            2.0 * std::numeric_limits<double>::epsilon() *
                std::max(std::abs(lhs), std::abs(rhs)));
      ++k;
    }
  }
}

TEST_CASE("determinism: same seed gives identical perturbations") {
  NetworkCase net = testutil::load_case("case5_pjm.m");
  PrivacyParams p;
  CounterNoise a(99), b(99), c(100);
  PerturbedAdmittances pa = perturb_branch_parameters(net, p, a);
  PerturbedAdmittances pb = perturb_branch_parameters(net, p, b);
  PerturbedAdmittances pc = perturb_branch_parameters(net, p, c);
  CHECK(pa.b_tilde == pb.b_tilde);
  CHECK(pa.g_tilde == pb.g_tilde);
  CHECK(pa.b_sh_tilde == pb.b_sh_tilde);
  CHECK(pa.b_tilde != pc.b_tilde);
}

TEST_CASE("noise on different branches is uncorrelated across runs") {
  NetworkCase net = testutil::load_case("case5_pjm.m");
  PrivacyParams p;
  const int runs = 10000;
  const BranchAdmittance a0 = branch_admittance(net.branches[0]);
  const BranchAdmittance a1 = branch_admittance(net.branches[1]);
  std::vector<double> n0(runs), n1(runs);
  for (int r = 0; r < runs; ++r) {
    CounterNoise rng(r);
    PerturbedAdmittances pert = perturb_branch_parameters(net, p, rng);
    n0[r] = pert.b_tilde[0] - a0.b;
    n1[r] = pert.b_tilde[1] - a1.b;
  }
  double m0 = 0, m1 = 0;
  for (int r = 0; r < runs; ++r) {
    m0 += n0[r];
    m1 += n1[r];
  }
  m0 /= runs;
  m1 /= runs;
  double cov = 0, v0 = 0, v1 = 0;
  for (int r = 0; r < runs; ++r) {
    cov += (n0[r] - m0) * (n1[r] - m1);
    v0 += (n0[r] - m0) * (n0[r] - m0);
    v1 += (n1[r] - m1) * (n1[r] - m1);
  }
  CHECK(std::abs(cov / std::sqrt(v0 * v1)) < 0.05);
}

TEST_CASE("per-branch noise passes a KS test against Laplace(0, 3a/e)") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  PrivacyParams p;  // scale 0.03
  const double scale = branch_noise_scale(p);
  const int runs = 10000;
  const BranchAdmittance a0 = branch_admittance(net.branches[0]);
  std::vector<double> noise(runs);
  for (int r = 0; r < runs; ++r) {
    CounterNoise rng(r);
    PerturbedAdmittances pert = perturb_branch_parameters(net, p, rng);
    noise[r] = pert.b_tilde[0] - a0.b;
  }
  const double d = testutil::ks_statistic(
      noise, [&](double x) { return testutil::laplace_cdf(x, scale); });
  // critical value at significance 0.01 for n = 1e4
  CHECK(d < 1.628 / std::sqrt(double(runs)));
}

TEST_CASE("level means: single level, zero noise") {
  NetworkCase net = testutil::three_bus_case();
  ZeroNoise rng;
  PrivacyParams p;
  std::vector<double> values = {-1.0, -3.0, -2.0};
  auto means = noisy_level_means(net, values, NoiseChannel::kLevelMeanB, p, rng);
  REQUIRE(means.size() == 1);
  CHECK(means[230.0] == doctest::Approx(-2.0));

  std::vector<double> two = {-1.0, -3.0};
  CHECK_THROWS_AS(
      noisy_level_means(net, two, NoiseChannel::kLevelMeanB, p, rng),
      ModelError);
}

TEST_CASE("level means group by level and use original values") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  PrivacyParams p;
  CounterNoise rng(4242);
  MechanismResult mech = apply_mechanism(net, p, rng);

  // brute-force group-by oracle on the original values
  std::map<double, std::pair<double, int>> acc;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    BranchAdmittance adm = branch_admittance(br);
    auto& slot = acc[branch_level(net, br)];
    slot.first += adm.b;
    slot.second += 1;
  }
  for (const auto& lvl : mech.means.levels) {
    const auto& [sum, n_v] = acc.at(lvl.kv);
    CHECK(lvl.n_branches == n_v);
    // subtract the level draw (recomputed from the same substream) to
    // recover the plain mean of the *original* values
    CounterNoise replay(4242);
    const double draw = replay.laplace(
        level_noise_scale(p, n_v), level_stream(NoiseChannel::kLevelMeanB,
                                                lvl.kv));
    CHECK(lvl.mu_b - draw == doctest::Approx(sum / n_v).epsilon(1e-12));
  }
}

TEST_CASE("draw report counts every Laplace draw by scale") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  PrivacyParams p;
  CounterNoise rng(1);
  MechanismResult mech = apply_mechanism(net, p, rng);
  const double branch_scale = branch_noise_scale(p);
  // 38 branches, two draws each (b and b_sh)
  CHECK(mech.draws.draws_by_scale.at(branch_scale) == 76);
  // two levels, three mean families each
  CHECK(mech.draws.draws_by_scale.at(level_noise_scale(p, 12)) == 3);
  CHECK(mech.draws.draws_by_scale.at(level_noise_scale(p, 26)) == 3);
}

TEST_CASE("mechanism never emits shunt conductance noise") {
  // Eq.-(12) analogue: the mechanism leaves g_sh untouched (zero in data)
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  for (const Branch& br : net.branches) CHECK(br.g_sh == 0.0);
  PrivacyParams p;
  CounterNoise rng(5);
  MechanismResult mech = apply_mechanism(net, p, rng);
  CHECK(mech.perturbed.b_tilde.size() == 38);
}
