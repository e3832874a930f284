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

#include "privflow/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace privflow {

namespace {

std::string fmt(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

struct Panel {
  const char* label;
  const std::vector<double>* orig;
  const std::vector<double>* rel;
};

}  // namespace

double rmse(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw ModelError("rmse: length mismatch");
  if (a.empty()) throw ModelError("rmse: empty input");
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return std::sqrt(acc / double(a.size()));
}

UtilityReport utility_report(const NetworkCase& original,
                             const NetworkCase& released,
                             const PrivacyParams& params) {
  UtilityReport rep;
  rep.case_name = original.name;
  rep.params = params;
  std::map<int, const Branch*> rel_by_id;
  for (const Branch& br : released.branches)
    if (br.in_service) rel_by_id[br.id] = &br;
  for (const Branch& br : original.branches) {
    if (!br.in_service) continue;
    auto it = rel_by_id.find(br.id);
    if (it == rel_by_id.end())
      throw ModelError("released case lacks branch " + std::to_string(br.id));
    rep.branch_ids.push_back(br.id);
    rep.r_orig.push_back(br.r);
    rep.r_released.push_back(it->second->r);
    rep.x_orig.push_back(br.x);
    rep.x_released.push_back(it->second->x);
    rep.bsh_orig.push_back(br.b_sh);
    rep.bsh_released.push_back(it->second->b_sh);
  }
  if (!rep.branch_ids.empty()) {
    rep.rmse_r = rmse(rep.r_orig, rep.r_released);
    rep.rmse_x = rmse(rep.x_orig, rep.x_released);
    rep.rmse_bsh = rmse(rep.bsh_orig, rep.bsh_released);
  }
  return rep;
}

std::string scatter_csv(const UtilityReport& rep) {
  std::ostringstream os;
  os << "branch_id,quantity,original,released\n";
  const Panel panels[] = {{"r", &rep.r_orig, &rep.r_released},
                          {"x", &rep.x_orig, &rep.x_released},
                          {"b_sh", &rep.bsh_orig, &rep.bsh_released}};
  for (const Panel& p : panels)
    for (size_t i = 0; i < rep.branch_ids.size(); ++i)
      os << rep.branch_ids[i] << ',' << p.label << ',' << fmt((*p.orig)[i])
         << ',' << fmt((*p.rel)[i]) << '\n';
  return os.str();
}

std::string scatter_svg(const UtilityReport& rep) {
  constexpr double kSize = 800.0;
  constexpr double kPanelH = kSize / 3.0;
  constexpr double kMargin = 48.0;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" "
        "height=\"800\" viewBox=\"0 0 800 800\">\n";
  os << "<rect width=\"800\" height=\"800\" fill=\"white\"/>\n";
  const Panel panels[] = {{"r", &rep.r_orig, &rep.r_released},
                          {"x", &rep.x_orig, &rep.x_released},
                          {"b_sh", &rep.bsh_orig, &rep.bsh_released}};
  for (int pi = 0; pi < 3; ++pi) {
    const Panel& p = panels[pi];
    const double top = pi * kPanelH;
    double lo = 0.0, hi = 1.0;
    if (!p.orig->empty()) {
      lo = std::min(*std::min_element(p.orig->begin(), p.orig->end()),
                    *std::min_element(p.rel->begin(), p.rel->end()));
      hi = std::max(*std::max_element(p.orig->begin(), p.orig->end()),
                    *std::max_element(p.rel->begin(), p.rel->end()));
      if (hi - lo < 1e-12) {
        hi += 1.0;
        lo -= 1.0;
      }
      const double pad = 0.05 * (hi - lo);
      lo -= pad;
      hi += pad;
    }
    auto sx = [&](double v) {
      return kMargin + (v - lo) / (hi - lo) * (kSize - 2 * kMargin);
    };
    auto sy = [&](double v) {
      return top + kPanelH - kMargin / 2 -
             (v - lo) / (hi - lo) * (kPanelH - kMargin);
    };
    os << "<g>\n";
    os << "<text x=\"" << kMargin << "\" y=\"" << top + 16
       << "\" font-family=\"sans-serif\" font-size=\"13\">" << p.label
       << " (p.u.): original vs released, " << rep.case_name << "</text>\n";
    os << "<line x1=\"" << sx(lo) << "\" y1=\"" << sy(lo) << "\" x2=\""
       << sx(hi) << "\" y2=\"" << sy(hi)
       << "\" stroke=\"#888\" stroke-dasharray=\"6,4\"/>\n";
    for (size_t i = 0; i < p.orig->size(); ++i)
      os << "<circle cx=\"" << sx((*p.orig)[i]) << "\" cy=\""
         << sy((*p.rel)[i]) << "\" r=\"3\" fill=\"#1f77b4\" "
         << "fill-opacity=\"0.7\"/>\n";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  namespace fs = std::filesystem;
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ModelError("cannot write " + tmp);
    out << content;
    if (!out.good()) throw ModelError("short write to " + tmp);
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw ModelError("cannot rename " + tmp + " to " + path);
}

void scatter_export(const UtilityReport& rep, const std::string& path_stem) {
  write_file_atomic(path_stem + ".csv", scatter_csv(rep));
  write_file_atomic(path_stem + ".svg", scatter_svg(rep));
}

RunOutcomeKind outcome_kind(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return RunOutcomeKind::kOptimal;
    case SolveStatus::kInfeasible: return RunOutcomeKind::kInfeasible;
    case SolveStatus::kTimeout: return RunOutcomeKind::kTimeout;
    case SolveStatus::kIterationLimit:
    case SolveStatus::kNumericalFailure: return RunOutcomeKind::kNumerical;
  }
  return RunOutcomeKind::kNumerical;
}

std::string to_string(RunOutcomeKind k) {
  switch (k) {
    case RunOutcomeKind::kOptimal: return "optimal";
    case RunOutcomeKind::kInfeasible: return "infeasible";
    case RunOutcomeKind::kTimeout: return "timeout";
    case RunOutcomeKind::kNumerical: return "numerical";
  }
  return "numerical";
}

SolvabilityReport aggregate_solvability(const std::vector<RunOutcome>& runs) {
  SolvabilityReport rep;
  std::map<std::pair<std::string, std::string>, SolvabilityReport::Group> acc;
  for (const RunOutcome& r : runs) {
    auto& g = acc[{r.case_name, r.arm}];
    g.case_name = r.case_name;
    g.arm = r.arm;
    switch (r.kind) {
      case RunOutcomeKind::kOptimal: ++g.optimal; ++rep.total_optimal; break;
      case RunOutcomeKind::kInfeasible: ++g.infeasible; break;
      case RunOutcomeKind::kTimeout: ++g.timeout; break;
      case RunOutcomeKind::kNumerical: ++g.numerical; break;
    }
    ++rep.total_runs;
  }
  for (auto& [key, g] : acc) rep.groups.push_back(g);
  return rep;
}

}  // namespace privflow
