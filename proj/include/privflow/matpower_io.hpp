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

#ifndef PRIVFLOW_MATPOWER_IO_HPP_
#define PRIVFLOW_MATPOWER_IO_HPP_

#include <stdexcept>
#include <string>
#include <vector>

#include "privflow/net_model.hpp"

namespace privflow {

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0, int col = 0)
      : std::runtime_error(format(what, line, col)), line_(line), col_(col) {}
  int line() const { return line_; }
  int col() const { return col_; }

 private:
  static std::string format(const std::string& what, int line, int col);
  int line_, col_;
};

using Matrix = std::vector<std::vector<double>>;

// Verbatim numeric content of a Matpower case function: the four standard
// matrices with whatever trailing columns the file carries.
struct RawCase {
  std::string function_name;
  std::string version = "2";
  double base_mva = 0.0;
  Matrix bus;
  Matrix gen;
  Matrix branch;
  Matrix gencost;
};

// Matpower column indices used by this toolkit (0-based).
namespace col {
// bus
inline constexpr int kBusId = 0, kBusType = 1, kPd = 2, kQd = 3, kGs = 4,
                     kBs = 5, kVa = 8, kBaseKv = 9, kVmax = 11, kVmin = 12;
// gen
inline constexpr int kGenBus = 0, kQmax = 3, kQmin = 4, kGenStatus = 7,
                     kPmax = 8, kPmin = 9;
// branch
inline constexpr int kFrom = 0, kTo = 1, kR = 2, kX = 3, kB = 4, kRateA = 5,
                     kTap = 8, kShift = 9, kBrStatus = 10, kAngMin = 11,
                     kAngMax = 12;
// gencost
inline constexpr int kModel = 0, kNCost = 3, kCostCoeff = 4;
}  // namespace col

// Parses the body of a Matpower `.m` case function. Numeric values keep
// full double precision. Throws ParseError (with line/column where
// applicable) on missing required fields or non-numeric matrix entries.
RawCase parse_matpower(const std::string& text);

// Reads and parses a case file from disk.
RawCase read_matpower_file(const std::string& path);

// Serializes a RawCase back to `.m` text. Numbers are printed with the
// shortest representation that parses back to the identical double, so
// parse(write(raw)) reproduces raw exactly.
std::string write_matpower(const RawCase& raw);

// Converts the raw matrices to the in-memory per-unit model. Out-of-service
// branches and generators and isolated (type 4) buses are dropped; original
// row indices are kept as ids for write-back. Throws ModelError on dangling
// references or invariant violations, listing the offending rows.
NetworkCase raw_to_case(const RawCase& raw);

// Writes the branch series impedance and total shunt susceptance of `net`
// back into a copy of `tmpl`. Only columns BR_R, BR_X, BR_B of in-service
// branch rows change; everything else is preserved.
RawCase case_to_raw(const NetworkCase& net, const RawCase& tmpl);

}  // namespace privflow

#endif  // PRIVFLOW_MATPOWER_IO_HPP_
