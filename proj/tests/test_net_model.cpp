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
#include <set>

#include "doctest.h"
#include "privflow/net_model.hpp"
#include "test_util.hpp"

using namespace privflow;

TEST_CASE("series admittance of a pure reactance") {
  auto [g, b] = to_series_admittance(0.0, 0.5);
  CHECK(g == 0.0);
  CHECK(b == doctest::Approx(-2.0).epsilon(1e-15));
}

TEST_CASE("series admittance of 3+4j") {
  auto [g, b] = to_series_admittance(3.0, 4.0);
  CHECK(g == doctest::Approx(0.12).epsilon(1e-15));
  CHECK(b == doctest::Approx(-0.16).epsilon(1e-15));
}

TEST_CASE("series admittance matches complex reciprocal") {
  // independent oracle: direct complex arithmetic
  const double r = 0.01938, x = 0.05917;
  const std::complex<double> y = 1.0 / std::complex<double>(r, x);
  auto [g, b] = to_series_admittance(r, x);
  CHECK(g == doctest::Approx(y.real()).epsilon(1e-14));
  CHECK(b == doctest::Approx(y.imag()).epsilon(1e-14));
}

TEST_CASE("zero impedance is degenerate") {
  CHECK_THROWS_AS(to_series_admittance(0.0, 0.0), DegenerateBranchError);
  CHECK_THROWS_AS(to_series_impedance(0.0, 0.0), DegenerateBranchError);
}

TEST_CASE("series impedance inverts the admittance map") {
  auto [r1, x1] = to_series_impedance(0.0, -2.0);
  CHECK(r1 == 0.0);
  CHECK(x1 == doctest::Approx(0.5).epsilon(1e-15));
  auto [r2, x2] = to_series_impedance(0.12, -0.16);
  CHECK(r2 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(x2 == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("impedance/admittance round trip within 1e-12 relative") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(1e-6, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double r = u(rng), x = u(rng);
    auto [g, b] = to_series_admittance(r, x);
    auto [r2, x2] = to_series_impedance(g, b);
    CHECK(std::abs(r2 - r) <= 1e-12 * std::max(1.0, std::abs(r)));
    CHECK(std::abs(x2 - x) <= 1e-12 * std::max(1.0, std::abs(x)));
    // physical sign: inductive line has g >= 0 and b < 0
    CHECK(g >= 0.0);
    CHECK(b < 0.0);
  }
}

TEST_CASE("voltage levels: single level covers all branches") {
  NetworkCase net = testutil::three_bus_case();
  auto levels = voltage_levels(net);
  REQUIRE(levels.size() == 1);
  CHECK(levels.begin()->first == 230.0);
  CHECK(levels.begin()->second.size() == 3);
}

TEST_CASE("transformer branch belongs to the higher endpoint level") {
  NetworkCase net = testutil::three_bus_case();
  // step bus 3 down; both branches touching it still reach a 230 kV bus
  net.buses[2].base_kv = 138.0;
  auto levels = voltage_levels(net);
  REQUIRE(levels.size() == 1);
  CHECK(levels.count(230.0) == 1);
  CHECK(levels[230.0].size() == 3);

  // 1: 138, 2: 230, 3: 138 -> only branch 1-3 lives at 138 kV
  net.buses[0].base_kv = 138.0;
  net.buses[1].base_kv = 230.0;
  auto levels2 = voltage_levels(net);
  REQUIRE(levels2.size() == 2);
  CHECK(levels2[230.0].size() == 2);
  CHECK(levels2[138.0].size() == 1);
}

TEST_CASE("voltage levels partition the 24-bus case") {
  NetworkCase net = testutil::load_case("case24_ieee_rts.m");
  auto levels = voltage_levels(net);
  REQUIRE(levels.size() == 2);
  size_t total = 0, in_service = 0;
  std::set<int> seen;
  for (const auto& [kv, ids] : levels) {
    total += ids.size();
    for (int id : ids) CHECK(seen.insert(id).second);  // disjoint
  }
  for (const Branch& br : net.branches)
    if (br.in_service) ++in_service;
  CHECK(total == in_service);
  CHECK(levels[138.0].size() == 12);
  CHECK(levels[230.0].size() == 26);
}

TEST_CASE("out-of-service branches are excluded from levels") {
  NetworkCase net = testutil::three_bus_case();
  net.branches[1].in_service = false;
  auto levels = voltage_levels(net);
  CHECK(levels[230.0].size() == 2);
}

TEST_CASE("validate flags bad buses and branches") {
  NetworkCase net = testutil::two_bus_case();
  net.buses[1].vmin = 1.2;  // vmin > vmax
  CHECK_THROWS_AS(net.validate(), ModelError);

  NetworkCase net2 = testutil::two_bus_case();
  net2.branches[0].to_bus = 99;
  CHECK_THROWS_AS(net2.validate(), ModelError);

  NetworkCase net3 = testutil::two_bus_case();
  net3.buses[0].is_slack = false;
  CHECK_THROWS_AS(net3.validate(), ModelError);

  NetworkCase net4 = testutil::two_bus_case();
  net4.branches[0].x = 0.0;
  CHECK_THROWS_AS(net4.validate(), ModelError);
}

TEST_CASE("branch admittance splits the shunt per end") {
  Branch br;
  br.r = 0.0;
  br.x = 0.5;
  br.b_sh = 0.08;
  BranchAdmittance adm = branch_admittance(br);
  CHECK(adm.b == doctest::Approx(-2.0));
  CHECK(adm.b_sh == doctest::Approx(0.04));
}
