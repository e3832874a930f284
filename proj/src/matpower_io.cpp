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

#include "privflow/matpower_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace privflow {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;

// Scanner over the `.m` subset used by Matpower case files: a function
// header, comments, scalar assignments and bracketed numeric matrices.
// Deliberately not a MATLAB parser.
class Scanner {
 public:
  explicit Scanner(const std::string& text) : text_(text) {}

  bool eof() const { return pos_ >= text_.size(); }
  int line() const { return line_; }
  int col() const { return int(pos_ - line_start_) + 1; }

  // Skips blanks, commas and comments. With keep_newline set, a newline is
  // left in place so matrix parsing can treat it as a row separator.
  void skip_space_and_comments(bool keep_newline = false) {
    while (!eof()) {
      char c = text_[pos_];
      if (c == '%') {
        while (!eof() && text_[pos_] != '\n') ++pos_;
      } else if (c == '\n') {
        if (keep_newline) break;
        advance_line();
      } else if (c == ' ' || c == '\t' || c == '\r' || c == ',') {
        ++pos_;
      } else if (c == '.' && pos_ + 2 < text_.size() &&
                 text_.compare(pos_, 3, "...") == 0) {
        // line continuation
        pos_ += 3;
        while (!eof() && text_[pos_] != '\n') ++pos_;
        if (!eof()) advance_line();
      } else {
        break;
      }
    }
  }

  char peek() const { return eof() ? '\0' : text_[pos_]; }
  void get() {
    if (text_[pos_] == '\n') advance_line(); else ++pos_;
  }

  std::string identifier() {
    size_t start = pos_;
    while (!eof() && (std::isalnum((unsigned char)text_[pos_]) ||
                      text_[pos_] == '_' || text_[pos_] == '.'))
      ++pos_;
    return text_.substr(start, pos_ - start);
  }

  // Reads a number; returns false without consuming input if the next token
  // is not numeric.
  bool number(double& out) {
    const char* begin = text_.data() + pos_;
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin) return false;
    // strtod accepts leading whitespace; we never call it with any.
    out = v;
    pos_ += size_t(end - begin);
    return true;
  }

  std::string quoted_string() {
    // assumes peek() == '\''
    get();
    size_t start = pos_;
    while (!eof() && text_[pos_] != '\'') get();
    std::string s = text_.substr(start, pos_ - start);
    if (!eof()) get();
    return s;
  }

 private:
  void advance_line() {
    ++pos_;
    ++line_;
    line_start_ = pos_;
  }

  const std::string& text_;
  size_t pos_ = 0;
  size_t line_start_ = 0;
  int line_ = 1;
};

Matrix parse_matrix(Scanner& sc, const std::string& field) {
  if (sc.peek() != '[')
    throw ParseError("expected '[' after " + field, sc.line(), sc.col());
  sc.get();
  Matrix rows;
  std::vector<double> row;
  while (true) {
    sc.skip_space_and_comments(/*keep_newline=*/true);
    if (sc.eof())
      throw ParseError("unterminated matrix " + field, sc.line(), sc.col());
    char c = sc.peek();
    if (c == ']') {
      sc.get();
      break;
    }
    if (c == ';' || c == '\n') {
      sc.get();
      if (!row.empty()) rows.push_back(std::move(row));
      row.clear();
      continue;
    }
    double v;
    if (!sc.number(v))
      throw ParseError("non-numeric entry in " + field + " at row " +
                           std::to_string(rows.size() + 1) + ", column " +
                           std::to_string(row.size() + 1),
                       sc.line(), sc.col());
    row.push_back(v);
  }
  if (!row.empty()) rows.push_back(std::move(row));
  return rows;
}

void require_columns(const Matrix& m, size_t min_cols, const std::string& field) {
  for (size_t i = 0; i < m.size(); ++i)
    if (m[i].size() < min_cols)
      throw ParseError(field + " row " + std::to_string(i + 1) + " has " +
                       std::to_string(m[i].size()) + " columns, expected >= " +
                       std::to_string(min_cols));
}

std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_matrix(std::ostream& os, const std::string& name, const Matrix& m) {
  os << name << " = [\n";
  for (const auto& row : m) {
    os << '\t';
    for (size_t j = 0; j < row.size(); ++j) {
      if (j) os << '\t';
      os << format_double(row[j]);
    }
    os << ";\n";
  }
  os << "];\n\n";
}

double clamp_angle_bound(double deg, bool lower) {
  double rad = deg * kDeg;
  if (lower) return std::max(rad, -kPi / 2.0);
  return std::min(rad, kPi / 2.0);
}

}  // namespace

std::string ParseError::format(const std::string& what, int line, int col) {
  if (line <= 0) return what;
  return what + " (line " + std::to_string(line) + ", column " +
         std::to_string(col) + ")";
}

RawCase parse_matpower(const std::string& text) {
  Scanner sc(text);
  RawCase raw;
  std::string prefix;

  sc.skip_space_and_comments();
  {
    std::string kw = sc.identifier();
    if (kw != "function")
      throw ParseError("missing 'function' header", sc.line(), sc.col());
    sc.skip_space_and_comments();
    prefix = sc.identifier();
    sc.skip_space_and_comments();
    if (sc.peek() == '=') {
      sc.get();
      sc.skip_space_and_comments();
      raw.function_name = sc.identifier();
    } else {
      // "function case_name" form without output variable
      raw.function_name = prefix;
      prefix = "mpc";
    }
  }

  bool saw_base = false, saw_bus = false, saw_gen = false, saw_branch = false,
       saw_gencost = false;
  while (true) {
    sc.skip_space_and_comments();
    if (sc.eof()) break;
    int line = sc.line(), colno = sc.col();
    std::string ident = sc.identifier();
    if (ident.empty()) {
      sc.get();  // stray character; skip
      continue;
    }
    sc.skip_space_and_comments();
    if (sc.peek() != '=') continue;
    sc.get();
    sc.skip_space_and_comments();

    std::string field =
        ident.rfind(prefix + ".", 0) == 0 ? ident.substr(prefix.size() + 1) : "";
    if (field == "baseMVA") {
      if (!sc.number(raw.base_mva))
        throw ParseError("non-numeric baseMVA", sc.line(), sc.col());
      saw_base = true;
    } else if (field == "version") {
      if (sc.peek() == '\'') raw.version = sc.quoted_string();
    } else if (field == "bus") {
      raw.bus = parse_matrix(sc, "mpc.bus");
      saw_bus = true;
    } else if (field == "gen") {
      raw.gen = parse_matrix(sc, "mpc.gen");
      saw_gen = true;
    } else if (field == "branch") {
      raw.branch = parse_matrix(sc, "mpc.branch");
      saw_branch = true;
    } else if (field == "gencost") {
      raw.gencost = parse_matrix(sc, "mpc.gencost");
      saw_gencost = true;
    } else {
      // Unknown assignment: skip its value (string, matrix or scalar).
      (void)line;
      (void)colno;
      if (sc.peek() == '\'') {
        sc.quoted_string();
      } else if (sc.peek() == '[') {
        int depth = 0;
        do {
          if (sc.peek() == '[') ++depth;
          if (sc.peek() == ']') --depth;
          sc.get();
        } while (!sc.eof() && depth > 0);
      } else {
        while (!sc.eof() && sc.peek() != ';' && sc.peek() != '\n') sc.get();
      }
    }
  }

  if (!saw_base) throw ParseError("missing mpc.baseMVA");
  if (!saw_bus) throw ParseError("missing mpc.bus");
  if (!saw_gen) throw ParseError("missing mpc.gen");
  if (!saw_branch) throw ParseError("missing mpc.branch");
  if (!saw_gencost) throw ParseError("missing mpc.gencost");

  require_columns(raw.bus, 13, "mpc.bus");
  require_columns(raw.gen, 10, "mpc.gen");
  require_columns(raw.branch, 13, "mpc.branch");
  require_columns(raw.gencost, 4, "mpc.gencost");
  return raw;
}

RawCase read_matpower_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matpower(ss.str());
}

std::string write_matpower(const RawCase& raw) {
  std::ostringstream os;
  std::string name = raw.function_name.empty() ? "mpc" : raw.function_name;
  os << "function mpc = " << name << "\n";
  os << "%% MATPOWER Case Format : Version " << raw.version << "\n";
  os << "mpc.version = '" << raw.version << "';\n\n";
  os << "mpc.baseMVA = " << format_double(raw.base_mva) << ";\n\n";
  write_matrix(os, "mpc.bus", raw.bus);
  write_matrix(os, "mpc.gen", raw.gen);
  write_matrix(os, "mpc.branch", raw.branch);
  write_matrix(os, "mpc.gencost", raw.gencost);
  return os.str();
}

NetworkCase raw_to_case(const RawCase& raw) {
  if (!(raw.base_mva > 0.0)) throw ModelError("baseMVA must be positive");
  const double base = raw.base_mva;
  NetworkCase net;
  net.name = raw.function_name;
  net.base_mva = base;

  std::unordered_set<int> known_buses;
  for (size_t i = 0; i < raw.bus.size(); ++i) {
    const auto& row = raw.bus[i];
    int type = int(row[col::kBusType]);
    if (type == 4) continue;  // isolated
    Bus b;
    b.id = int(row[col::kBusId]);
    b.base_kv = row[col::kBaseKv];
    b.vmax = row[col::kVmax];
    b.vmin = row[col::kVmin];
    b.shunt_g = row[col::kGs] / base;
    b.shunt_b = row[col::kBs] / base;
    b.is_slack = type == 3;
    net.buses.push_back(b);
    known_buses.insert(b.id);
    if (row[col::kPd] != 0.0 || row[col::kQd] != 0.0)
      net.loads.push_back({b.id, row[col::kPd] / base, row[col::kQd] / base});
  }

  std::ostringstream problems;
  if (raw.gencost.size() != raw.gen.size() &&
      raw.gencost.size() != 2 * raw.gen.size())
    problems << "gencost has " << raw.gencost.size() << " rows for "
             << raw.gen.size() << " generators\n";

  for (size_t i = 0; i < raw.gen.size(); ++i) {
    const auto& row = raw.gen[i];
    if (!(row[col::kGenStatus] > 0.0)) continue;
    Generator g;
    g.id = int(i) + 1;
    g.bus = int(row[col::kGenBus]);
    g.pmax = row[col::kPmax] / base;
    g.pmin = row[col::kPmin] / base;
    g.qmax = row[col::kQmax] / base;
    g.qmin = row[col::kQmin] / base;
    if (i < raw.gencost.size()) {
      const auto& cost = raw.gencost[i];
      int model = int(cost[col::kModel]);
      if (model != 2) {
        problems << "gencost row " << i + 1
                 << ": only polynomial cost (MODEL=2) is supported\n";
      } else {
        int n = int(cost[col::kNCost]);
        if (n < 1 || n > 3 || cost.size() < size_t(col::kCostCoeff + n)) {
          problems << "gencost row " << i + 1
                   << ": NCOST must be 1..3 with matching coefficients\n";
        } else if (n == 3) {
          g.c2 = cost[col::kCostCoeff];
          g.c1 = cost[col::kCostCoeff + 1];
          g.c0 = cost[col::kCostCoeff + 2];
        } else if (n == 2) {
          g.c1 = cost[col::kCostCoeff];
          g.c0 = cost[col::kCostCoeff + 1];
        } else {
          g.c0 = cost[col::kCostCoeff];
        }
      }
    }
    if (!known_buses.count(g.bus))
      problems << "gen row " << i + 1 << ": references missing bus " << g.bus
               << "\n";
    net.generators.push_back(g);
  }

  for (size_t i = 0; i < raw.branch.size(); ++i) {
    const auto& row = raw.branch[i];
    if (!(row[col::kBrStatus] > 0.0)) continue;
    Branch br;
    br.id = int(i) + 1;
    br.from_bus = int(row[col::kFrom]);
    br.to_bus = int(row[col::kTo]);
    br.r = row[col::kR];
    br.x = row[col::kX];
    br.b_sh = row[col::kB];
    br.tap = row[col::kTap] == 0.0 ? 1.0 : row[col::kTap];
    br.shift = row[col::kShift] * kDeg;
    br.rate_a = row[col::kRateA] / base;
    double amin = row[col::kAngMin], amax = row[col::kAngMax];
    if (amin == 0.0 && amax == 0.0) {  // Matpower: unconstrained
      br.ang_min = -kPi / 2.0;
      br.ang_max = kPi / 2.0;
    } else {
      br.ang_min = clamp_angle_bound(amin, true);
      br.ang_max = clamp_angle_bound(amax, false);
    }
    if (!known_buses.count(br.from_bus) || !known_buses.count(br.to_bus))
      problems << "branch row " << i + 1 << ": dangling bus reference\n";
    net.branches.push_back(br);
  }

  std::string msg = problems.str();
  if (!msg.empty())
    throw ModelError("invalid case '" + net.name + "':\n" + msg);
  net.validate();
  return net;
}

RawCase case_to_raw(const NetworkCase& net, const RawCase& tmpl) {
  RawCase out = tmpl;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    size_t row = size_t(br.id) - 1;
    if (row >= out.branch.size())
      throw ModelError("branch id " + std::to_string(br.id) +
                       " not present in template");
    out.branch[row][col::kR] = br.r;
    out.branch[row][col::kX] = br.x;
    out.branch[row][col::kB] = br.b_sh;
  }
  return out;
}

}  // namespace privflow
