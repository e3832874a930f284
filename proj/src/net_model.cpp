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

#include "privflow/net_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

namespace privflow {

namespace {

std::unordered_map<int, int> build_bus_map(const std::vector<Bus>& buses) {
  std::unordered_map<int, int> map;
  map.reserve(buses.size());
  for (size_t i = 0; i < buses.size(); ++i) map.emplace(buses[i].id, int(i));
  return map;
}

}  // namespace

int NetworkCase::bus_index(int bus_id) const {
  for (size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return int(i);
  throw ModelError("unknown bus id " + std::to_string(bus_id));
}

void NetworkCase::validate() const {
  std::ostringstream problems;
  auto map = build_bus_map(buses);
  int slack_count = 0;
  for (const Bus& b : buses) {
    if (!(b.vmin > 0.0) || b.vmin > b.vmax)
      problems << "bus " << b.id << ": voltage bounds must satisfy 0 < vmin <= vmax\n";
    if (!(b.base_kv > 0.0))
      problems << "bus " << b.id << ": base_kv must be positive\n";
    if (b.is_slack) ++slack_count;
  }
  if (slack_count != 1)
    problems << "case must have exactly one slack bus, found "
             << slack_count << "\n";
  for (const Branch& br : branches) {
    if (!map.count(br.from_bus) || !map.count(br.to_bus))
      problems << "branch " << br.id << ": endpoint bus does not exist\n";
    if (br.in_service && br.x == 0.0 && br.r == 0.0)
      problems << "branch " << br.id << ": zero series impedance\n";
    if (br.in_service && br.x == 0.0)
      problems << "branch " << br.id << ": zero reactance\n";
    if (br.r < 0.0)
      problems << "branch " << br.id << ": negative resistance\n";
    if (!(br.tap > 0.0))
      problems << "branch " << br.id << ": tap must be positive\n";
    if (br.ang_min > 0.0 || br.ang_max < 0.0)
      problems << "branch " << br.id << ": angle bounds must straddle zero\n";
  }
  for (const Generator& g : generators) {
    if (!map.count(g.bus))
      problems << "generator " << g.id << ": bus does not exist\n";
    if (g.pmin > g.pmax || g.qmin > g.qmax)
      problems << "generator " << g.id << ": inverted power bounds\n";
  }
  for (const Load& l : loads)
    if (!map.count(l.bus))
      problems << "load at bus " << l.bus << ": bus does not exist\n";
  std::string msg = problems.str();
  if (!msg.empty()) throw ModelError("invalid case '" + name + "':\n" + msg);
}

std::pair<double, double> to_series_admittance(double r, double x) {
  const double d = r * r + x * x;
  if (d == 0.0)
    throw DegenerateBranchError("zero series impedance has no admittance");
  return {r / d, -x / d};
}

std::pair<double, double> to_series_impedance(double g, double b) {
  const double d = g * g + b * b;
  if (d == 0.0)
    throw DegenerateBranchError("zero series admittance has no impedance");
  return {g / d, -b / d};
}

BranchAdmittance branch_admittance(const Branch& br) {
  auto [g, b] = to_series_admittance(br.r, br.x);
  return BranchAdmittance{g, b, br.b_sh / 2.0};
}

double branch_level(const NetworkCase& net, const Branch& br) {
  return std::max(net.bus(br.from_bus).base_kv, net.bus(br.to_bus).base_kv);
}

std::map<double, std::vector<int>> voltage_levels(const NetworkCase& net) {
  std::map<double, std::vector<int>> levels;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    levels[branch_level(net, br)].push_back(br.id);
  }
  return levels;
}

}  // namespace privflow
