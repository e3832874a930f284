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

#ifndef PRIVFLOW_NET_MODEL_HPP_
#define PRIVFLOW_NET_MODEL_HPP_

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace privflow {

class ModelError : public std::runtime_error {
 public:
  explicit ModelError(const std::string& what) : std::runtime_error(what) {}
};

// A branch whose series impedance (or admittance) is the zero element and
// therefore has no reciprocal.
class DegenerateBranchError : public ModelError {
 public:
  explicit DegenerateBranchError(const std::string& what) : ModelError(what) {}
};

struct Bus {
  int id = 0;            // external (file) bus number
  double base_kv = 0.0;  // nominal voltage level, kV
  double vmin = 0.0;     // |V| lower bound, p.u.
  double vmax = 0.0;     // |V| upper bound, p.u.
  double shunt_g = 0.0;  // bus shunt conductance, p.u.
  double shunt_b = 0.0;  // bus shunt susceptance, p.u.
  bool is_slack = false;
};

struct Branch {
  int id = 0;           // original row index in the source file, 1-based
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;       // series resistance, p.u.
  double x = 0.0;       // series reactance, p.u.
  double b_sh = 0.0;    // total line-charging susceptance, p.u. (b_sh/2 per end)
  double g_sh = 0.0;    // total shunt conductance, p.u. (normally 0)
  double tap = 1.0;     // off-nominal turns ratio, 1.0 if none
  double shift = 0.0;   // phase shift, radians
  double rate_a = 0.0;  // apparent-power limit, p.u.; 0 = unconstrained
  double ang_min = 0.0; // angle-difference bounds, radians
  double ang_max = 0.0;
  bool in_service = true;
};

// Rectangular parts of the series admittance Y = g + jb = 1/(r + jx), plus
// the per-end shunt susceptance of the pi model (half the Matpower total).
struct BranchAdmittance {
  double g = 0.0;
  double b = 0.0;
  double b_sh = 0.0;  // per-end value: Y_sh = j*b_sh at each terminal
};

struct Generator {
  int id = 0;  // original row index, 1-based
  int bus = 0;
  double pmin = 0.0, pmax = 0.0;  // p.u.
  double qmin = 0.0, qmax = 0.0;  // p.u.
  double c2 = 0.0, c1 = 0.0, c0 = 0.0;  // $/MW^2, $/MW, $
  bool in_service = true;
};

struct Load {
  int bus = 0;
  double pd = 0.0;  // p.u.; may be negative
  double qd = 0.0;
};

struct NetworkCase {
  std::string name;
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;

  int bus_index(int bus_id) const;  // throws ModelError on unknown id
  const Bus& bus(int bus_id) const { return buses[bus_index(bus_id)]; }

  // Checks referential integrity, bound ordering, slack uniqueness and the
  // nonzero-impedance requirement. Throws ModelError listing all offenders.
  void validate() const;
};

// g = r/(r^2+x^2), b = -x/(r^2+x^2). Throws DegenerateBranchError on (0,0).
std::pair<double, double> to_series_admittance(double r, double x);

// Inverse of to_series_admittance. Throws DegenerateBranchError on (0,0).
std::pair<double, double> to_series_impedance(double g, double b);

// Series + per-end shunt admittance of a branch.
BranchAdmittance branch_admittance(const Branch& br);

// Voltage level of a branch: the greater of its two endpoint base_kv values
// (a transformer belongs to its higher-voltage side).
double branch_level(const NetworkCase& net, const Branch& br);

// Partition of the in-service branch ids by voltage level.
std::map<double, std::vector<int>> voltage_levels(const NetworkCase& net);

}  // namespace privflow

#endif  // PRIVFLOW_NET_MODEL_HPP_
