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
#include <random>

#include "doctest.h"
#include "privflow/matpower_io.hpp"
#include "test_util.hpp"

using namespace privflow;

namespace {

const char* kMinimalCase = R"(function mpc = mini2
% two buses, one generator, one line
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
	1	3	0	0	0	0	1	1	0	138	1	1.1	0.9;
	2	1	100	30	0	0	1	1	0	138	1	1.1	0.9;
];
mpc.gen = [
	1	50	0	150	-150	1	100	1	200	0;
];
mpc.branch = [
	1	2	0.01	0.1	0.02	250	250	250	0	0	1	-30	30;
];
mpc.gencost = [
	2	0	0	2	25	0;
];
)";

bool matrices_equal(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i) {
    if (a[i].size() != b[i].size()) return false;
    for (size_t j = 0; j < a[i].size(); ++j)
      if (a[i][j] != b[i][j]) return false;
  }
  return true;
}

bool raw_equal(const RawCase& a, const RawCase& b) {
  return a.base_mva == b.base_mva && matrices_equal(a.bus, b.bus) &&
         matrices_equal(a.gen, b.gen) && matrices_equal(a.branch, b.branch) &&
         matrices_equal(a.gencost, b.gencost);
}

}  // namespace

TEST_CASE("parses a minimal two-bus case") {
  RawCase raw = parse_matpower(kMinimalCase);
  CHECK(raw.function_name == "mini2");
  CHECK(raw.base_mva == 100.0);
  CHECK(raw.bus.size() == 2);
  CHECK(raw.gen.size() == 1);
  CHECK(raw.branch.size() == 1);
  CHECK(raw.branch[0][col::kX] == 0.1);
}

TEST_CASE("24-bus case has the published dimensions") {
  RawCase raw = read_matpower_file(testutil::data_path("case24_ieee_rts.m"));
  CHECK(raw.base_mva == 100.0);
  CHECK(raw.bus.size() == 24);
  CHECK(raw.gen.size() == 33);
  CHECK(raw.branch.size() == 38);
  CHECK(raw.gencost.size() == 33);
}

TEST_CASE("missing matrices are reported by name") {
  std::string text = kMinimalCase;
  auto cut = [&](const std::string& field) {
    std::string t = text;
    size_t at = t.find("mpc." + field);
    size_t end = t.find("];", at);
    t.erase(at, end + 2 - at);
    return t;
  };
  CHECK_THROWS_WITH_AS(parse_matpower(cut("bus")), "missing mpc.bus",
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_matpower(cut("gen")), "missing mpc.gen",
                       ParseError);
  CHECK_THROWS_WITH_AS(parse_matpower(cut("branch")), "missing mpc.branch",
                       ParseError);
  std::string no_base = text;
  no_base.erase(no_base.find("mpc.baseMVA"), 20);
  CHECK_THROWS_AS(parse_matpower(no_base), ParseError);
}

TEST_CASE("non-numeric entries carry row and column") {
  std::string bad = kMinimalCase;
  bad.replace(bad.find("0.01"), 4, "oops");
  try {
    parse_matpower(bad);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    std::string msg = e.what();
    CHECK(msg.find("mpc.branch") != std::string::npos);
    CHECK(msg.find("row 1") != std::string::npos);
    CHECK(msg.find("column 3") != std::string::npos);
    CHECK(e.line() > 0);
  }
}

TEST_CASE("write/parse round trip is exact for every corpus case") {
  for (const char* name :
       {"case5_pjm.m", "case9_wscc.m", "case14_ieee.m", "case24_ieee_rts.m",
        "case30_ieee.m", "synth_case73.m", "synth_case200.m"}) {
    RawCase first = read_matpower_file(testutil::data_path(name));
    RawCase second = parse_matpower(write_matpower(first));
    CAPTURE(name);
    CHECK(raw_equal(first, second));
    // idempotence: a second round trip writes identical text
    CHECK(write_matpower(first) == write_matpower(second));
  }
}

TEST_CASE("round trip survives extreme magnitudes") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> expo(-12.0, 12.0);
  std::uniform_real_distribution<double> mant(-1.0, 1.0);
  RawCase raw = parse_matpower(kMinimalCase);
  for (int trial = 0; trial < 200; ++trial) {
    for (auto& row : raw.branch)
      for (auto& v : row) v = mant(rng) * std::pow(10.0, expo(rng));
    RawCase back = parse_matpower(write_matpower(raw));
    CHECK(matrices_equal(raw.branch, back.branch));
  }
}

TEST_CASE("per-unit conversion of loads") {
  NetworkCase net = raw_to_case(parse_matpower(kMinimalCase));
  REQUIRE(net.loads.size() == 1);
  CHECK(net.loads[0].pd == doctest::Approx(1.0));
  CHECK(net.loads[0].qd == doctest::Approx(0.3));
  CHECK(net.generators[0].pmax == doctest::Approx(2.0));
  CHECK(net.generators[0].c1 == doctest::Approx(25.0));
  CHECK(net.branches[0].rate_a == doctest::Approx(2.5));
  CHECK(net.branches[0].ang_max == doctest::Approx(30.0 * M_PI / 180.0));
}

TEST_CASE("angle bounds are clamped and 0,0 means unconstrained") {
  std::string text = kMinimalCase;
  text.replace(text.find("-30\t30"), 6, "0\t0");
  NetworkCase net = raw_to_case(parse_matpower(text));
  CHECK(net.branches[0].ang_min == doctest::Approx(-M_PI / 2));
  CHECK(net.branches[0].ang_max == doctest::Approx(M_PI / 2));

  NetworkCase net24 = testutil::load_case("case24_ieee_rts.m");
  for (const Branch& br : net24.branches) {
    CHECK(br.ang_min == doctest::Approx(-M_PI / 2));  // file says +-360
    CHECK(br.ang_max == doctest::Approx(M_PI / 2));
  }
}

TEST_CASE("piecewise-linear cost model is rejected") {
  std::string text = kMinimalCase;
  text.replace(text.find("2\t0\t0\t2\t25\t0"), 13, "1\t0\t0\t2\t10\t250");
  CHECK_THROWS_AS(raw_to_case(parse_matpower(text)), ModelError);
}

TEST_CASE("dangling bus references are listed") {
  std::string text = kMinimalCase;
  text.replace(text.find("1\t2\t0.01"), 8, "1\t7\t0.01");
  try {
    raw_to_case(parse_matpower(text));
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(std::string(e.what()).find("branch row 1") != std::string::npos);
  }
}

TEST_CASE("out-of-service rows are dropped but ids preserved") {
  NetworkCase net = testutil::load_case("synth_case73.m");
  RawCase raw = read_matpower_file(testutil::data_path("synth_case73.m"));
  size_t off = 0;
  for (const auto& row : raw.branch)
    if (!(row[col::kBrStatus] > 0)) ++off;
  CHECK(off == 1);
  CHECK(net.branches.size() == raw.branch.size() - off);
  // ids refer to original rows: each in-service branch id points at a row
  // with status 1 and matching endpoints
  for (const Branch& br : net.branches) {
    const auto& row = raw.branch[size_t(br.id) - 1];
    CHECK(row[col::kBrStatus] > 0);
    CHECK(int(row[col::kFrom]) == br.from_bus);
    CHECK(int(row[col::kTo]) == br.to_bus);
  }
}

TEST_CASE("case_to_raw touches only the obfuscated columns") {
  RawCase raw = read_matpower_file(testutil::data_path("case5_pjm.m"));
  NetworkCase net = raw_to_case(raw);
  // identity round trip first
  RawCase same = case_to_raw(net, raw);
  CHECK(raw_equal(same, raw));

  for (Branch& br : net.branches) {
    br.r *= 1.25;
    br.x *= 0.75;
    br.b_sh += 0.001;
  }
  RawCase out = case_to_raw(net, raw);
  REQUIRE(out.branch.size() == raw.branch.size());
  for (size_t i = 0; i < raw.branch.size(); ++i)
    for (size_t j = 0; j < raw.branch[i].size(); ++j) {
      if (j == size_t(col::kR) || j == size_t(col::kX) || j == size_t(col::kB))
        continue;
      CHECK(out.branch[i][j] == raw.branch[i][j]);
    }
  CHECK(matrices_equal(out.bus, raw.bus));
  CHECK(matrices_equal(out.gen, raw.gen));
  CHECK(matrices_equal(out.gencost, raw.gencost));
  CHECK(out.branch[0][col::kR] == doctest::Approx(raw.branch[0][col::kR] * 1.25));
}
