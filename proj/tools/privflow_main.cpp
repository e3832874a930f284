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

// Command-line front end: obfuscate a case, solve a baseline OPF, or run a
// batch experiment over a directory of cases. Exit codes: 0 success/optimal,
// 1 usage or parse error, 2 infeasible (or other non-timeout solve failure),
// 3 timeout.

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "privflow/matpower_io.hpp"
#include "privflow/metrics.hpp"
#include "privflow/nlp_solver.hpp"
#include "privflow/restoration.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace privflow;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeout = 3;

int exit_code_for(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return kExitOk;
    case SolveStatus::kTimeout: return kExitTimeout;
    default: return kExitInfeasible;
  }
}

struct CommonArgs {
  double alpha = 0.01;
  double beta = 0.5;
  double epsilon = 1.0;
  double lambda = 30.0;
  double timeout_s = 600.0;
  int max_iter = 500;
  std::string out_dir;
  std::string objective = "cost";

  PrivacyParams params() const { return {epsilon, alpha, beta, lambda}; }
  OpfObjective arm() const {
    return objective == "loss" ? OpfObjective::kGridLoss
                               : OpfObjective::kDispatchCost;
  }
  SolveOptions solve_opts() const {
    SolveOptions o;
    o.timeout_s = timeout_s;
    o.max_iter = max_iter;
    return o;
  }
  fs::path resolved_out_dir() const {
    if (!out_dir.empty()) return out_dir;
    if (const char* env = std::getenv("PRIVFLOW_OUT_DIR")) return env;
    return ".";
  }
};

void add_common(CLI::App* cmd, CommonArgs& a) {
  cmd->add_option("--alpha", a.alpha, "Indistinguishability value");
  cmd->add_option("--beta", a.beta, "Objective faithfulness factor");
  cmd->add_option("--epsilon", a.epsilon, "Privacy budget");
  cmd->add_option("--lambda", a.lambda, "Bound scale factor");
  cmd->add_option("--timeout-s", a.timeout_s, "Per-solve timeout, seconds");
  cmd->add_option("--max-iter", a.max_iter, "Solver iteration limit");
  cmd->add_option("--out-dir", a.out_dir,
                  "Output directory (default $PRIVFLOW_OUT_DIR or .)");
  cmd->add_option("--objective", a.objective, "Baseline objective arm")
      ->check(CLI::IsMember({"cost", "loss"}));
}

json provenance_json(const Provenance& p) {
  json j;
  j["case"] = p.case_name;
  j["seed"] = p.seed;
  j["alpha"] = p.alpha;
  j["beta"] = p.beta;
  j["epsilon"] = p.epsilon;
  j["lambda"] = p.lambda;
  j["objective_arm"] = p.objective_arm;
  j["L_star"] = p.l_star;
  j["L_star_source"] = p.l_star_source;
  j["status"] = p.status;
  j["iterations"] = p.iterations;
  j["wall_time_s"] = p.wall_time_s;
  j["fit_objective"] = p.fit_objective;
  j["warnings"] = p.warnings;
  return j;
}

int cmd_obfuscate(const std::string& input, const CommonArgs& args,
                  std::uint64_t seed, std::optional<double> l_star) {
  RawCase raw = read_matpower_file(input);
  NetworkCase net = raw_to_case(raw);

  PipelineOptions opt;
  opt.params = args.params();
  opt.arm = args.arm();
  opt.seed = seed;
  opt.l_star_override = l_star;
  opt.solve = args.solve_opts();
  PipelineResult res = run_pipeline(net, opt);

  if (!res.success) {
    std::cerr << "obfuscation failed at stage " << to_string(res.stage)
              << ": " << res.message << "\n";
    return exit_code_for(res.status);
  }

  const fs::path dir = args.resolved_out_dir();
  fs::create_directories(dir);
  const std::string stem = net.name.empty() ? "case" : net.name;

  RawCase out_raw = case_to_raw(res.released->network, raw);
  out_raw.function_name = stem + "_private";
  write_file_atomic((dir / (stem + "_private.m")).string(),
                    write_matpower(out_raw));
  write_file_atomic((dir / (stem + "_private.provenance.json")).string(),
                    provenance_json(res.released->provenance).dump(1) + "\n");
  UtilityReport rep =
      utility_report(net, res.released->network, opt.params);
  scatter_export(rep, (dir / (stem + "_utility")).string());

  std::cout << provenance_json(res.released->provenance).dump(1) << "\n";
  return kExitOk;
}

int cmd_solve(const std::string& input, const CommonArgs& args) {
  NetworkCase net = raw_to_case(read_matpower_file(input));
  OpfSolution sol = solve_opf(net, args.arm(), args.solve_opts());
  json j;
  j["case"] = net.name;
  j["objective_arm"] = args.objective;
  j["status"] = to_string(sol.status);
  j["objective"] = sol.objective;
  j["grid_loss_pu"] = grid_loss(net, sol);
  j["iterations"] = sol.report.iterations;
  j["primal_infeasibility"] = sol.report.primal_infeasibility;
  j["wall_time_s"] = sol.report.wall_time_s;
  std::cout << j.dump(1) << "\n";
  return exit_code_for(sol.status);
}

struct BatchJob {
  std::string path;
  std::string arm;
  std::uint64_t seed = 0;
};

struct BatchRecord {
  BatchJob job;
  std::string case_name;
  SolveStatus status = SolveStatus::kNumericalFailure;
  bool success = false;
  std::string stage;
  double l_star = 0.0;
  double loss = 0.0;
  double rmse_r = 0.0, rmse_x = 0.0, rmse_bsh = 0.0;
  int iterations = 0;
  double wall_time_s = 0.0;
};

int cmd_batch(const std::vector<std::string>& inputs, const CommonArgs& args,
              std::uint64_t seed_lo, std::uint64_t seed_hi,
              const std::string& arms_csv, int workers, bool save_cases) {
  std::vector<std::string> arms;
  for (size_t pos = 0; pos < arms_csv.size();) {
    size_t comma = arms_csv.find(',', pos);
    if (comma == std::string::npos) comma = arms_csv.size();
    std::string a = arms_csv.substr(pos, comma - pos);
    if (a != "cost" && a != "loss") {
      std::cerr << "unknown arm: " << a << "\n";
      return kExitUsage;
    }
    arms.push_back(a);
    pos = comma + 1;
  }

  std::vector<std::string> files;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::directory_iterator(in))
        if (e.path().extension() == ".m") files.push_back(e.path().string());
      std::sort(files.begin(), files.end());
    } else {
      files.push_back(in);
    }
  }
  if (files.empty()) {
    std::cerr << "no case files found\n";
    return kExitUsage;
  }

  std::vector<BatchJob> jobs;
  for (const auto& f : files)
    for (const auto& a : arms)
      for (std::uint64_t s = seed_lo; s <= seed_hi; ++s)
        jobs.push_back({f, a, s});

  std::vector<BatchRecord> records(jobs.size());
  std::atomic<size_t> next{0};
  const int nw = std::max(1, workers);
  auto worker = [&] {
    for (size_t i = next.fetch_add(1); i < jobs.size();
         i = next.fetch_add(1)) {
      BatchRecord& rec = records[i];
      rec.job = jobs[i];
      try {
        RawCase raw = read_matpower_file(jobs[i].path);
        NetworkCase net = raw_to_case(raw);
        rec.case_name = net.name;
        PipelineOptions opt;
        opt.params = args.params();
        opt.arm = jobs[i].arm == "loss" ? OpfObjective::kGridLoss
                                        : OpfObjective::kDispatchCost;
        opt.seed = jobs[i].seed;
        opt.solve = args.solve_opts();
        PipelineResult res = run_pipeline(net, opt);
        rec.status = res.status;
        rec.success = res.success;
        rec.stage = to_string(res.stage);
        rec.l_star = res.l_star;
        rec.iterations = res.iterations;
        rec.wall_time_s = res.wall_time_s;
        if (res.success) {
          rec.loss = grid_loss(res.released->network, res.released->solution);
          UtilityReport rep = utility_report(net, res.released->network,
                                             opt.params);
          rec.rmse_r = rep.rmse_r;
          rec.rmse_x = rep.rmse_x;
          rec.rmse_bsh = rep.rmse_bsh;
          if (save_cases) {
            const fs::path dir = args.resolved_out_dir();
            RawCase out_raw = case_to_raw(res.released->network, raw);
            out_raw.function_name =
                net.name + "_private_" + jobs[i].arm + "_s" +
                std::to_string(jobs[i].seed);
            write_file_atomic(
                (dir / (out_raw.function_name + ".m")).string(),
                write_matpower(out_raw));
          }
        }
      } catch (const std::exception& e) {
        rec.status = SolveStatus::kNumericalFailure;
        rec.stage = "parse";
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  std::vector<RunOutcome> outcomes;
  for (const auto& rec : records)
    outcomes.push_back({rec.case_name, rec.job.arm, outcome_kind(rec.status)});
  SolvabilityReport rep = aggregate_solvability(outcomes);

  const fs::path dir = args.resolved_out_dir();
  fs::create_directories(dir);

  json j;
  j["params"] = {{"alpha", args.alpha},
                 {"beta", args.beta},
                 {"epsilon", args.epsilon},
                 {"lambda", args.lambda}};
  j["seeds"] = {{"from", seed_lo}, {"to", seed_hi}};
  j["total_runs"] = rep.total_runs;
  j["total_optimal"] = rep.total_optimal;
  j["success_pct"] = rep.success_pct();
  j["groups"] = json::array();
  for (const auto& g : rep.groups)
    j["groups"].push_back({{"case", g.case_name},
                           {"arm", g.arm},
                           {"optimal", g.optimal},
                           {"infeasible", g.infeasible},
                           {"timeout", g.timeout},
                           {"numerical", g.numerical},
                           {"success_pct", g.success_pct()}});
  j["runs"] = json::array();
  for (const auto& rec : records) {
    json r;
    r["case"] = rec.case_name;
    r["arm"] = rec.job.arm;
    r["seed"] = rec.job.seed;
    r["status"] = to_string(rec.status);
    r["stage"] = rec.stage;
    r["L_star"] = rec.l_star;
    r["grid_loss_pu"] = rec.loss;
    r["rmse_r"] = rec.rmse_r;
    r["rmse_x"] = rec.rmse_x;
    r["rmse_bsh"] = rec.rmse_bsh;
    r["iterations"] = rec.iterations;
    r["wall_time_s"] = rec.wall_time_s;
    j["runs"].push_back(r);
  }
  write_file_atomic((dir / "solvability_report.json").string(),
                    j.dump(1) + "\n");

  std::string csv =
      "case,arm,seed,status,stage,L_star,grid_loss_pu,rmse_r,rmse_x,rmse_bsh,"
      "iterations,wall_time_s\n";
  for (const auto& rec : records) {
    csv += rec.case_name + "," + rec.job.arm + "," +
           std::to_string(rec.job.seed) + "," + to_string(rec.status) + "," +
           rec.stage + "," + std::to_string(rec.l_star) + "," +
           std::to_string(rec.loss) + "," + std::to_string(rec.rmse_r) + "," +
           std::to_string(rec.rmse_x) + "," + std::to_string(rec.rmse_bsh) +
           "," + std::to_string(rec.iterations) + "," +
           std::to_string(rec.wall_time_s) + "\n";
  }
  write_file_atomic((dir / "runs.csv").string(), csv);

  std::cout << "batch complete: " << rep.total_optimal << "/"
            << rep.total_runs << " optimal (" << rep.success_pct() << "%)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privflow: differentially-private power network data release"};
  app.require_subcommand(1);

  CommonArgs args;
  std::string input;
  std::uint64_t seed = 0;
  double l_star_val = 0.0;
  bool has_l_star = false;

  CLI::App* obf = app.add_subcommand(
      "obfuscate", "Release a privacy-preserving copy of one case");
  obf->add_option("case", input, "Matpower .m case file")->required();
  obf->add_option("--seed", seed, "Noise seed");
  obf->add_option("--l-star", l_star_val,
                  "Public grid loss (p.u.); skips the baseline solve")
      ->each([&](const std::string&) { has_l_star = true; });
  add_common(obf, args);

  CLI::App* slv = app.add_subcommand("solve", "Solve the baseline AC-OPF");
  slv->add_option("case", input, "Matpower .m case file")->required();
  add_common(slv, args);

  CLI::App* bat = app.add_subcommand("batch", "Seeded experiment batch");
  std::vector<std::string> batch_inputs;
  std::string seeds = "0..9";
  std::string arms = "cost,loss";
  int workers = int(std::thread::hardware_concurrency());
  bool save_cases = false;
  bat->add_option("cases", batch_inputs, "Case files or directories")
      ->required();
  bat->add_option("--seeds", seeds, "Seed range A..B (inclusive)");
  bat->add_option("--arms", arms, "Objective arms, comma separated");
  bat->add_option("--workers", workers, "Worker threads");
  bat->add_flag("--save-cases", save_cases, "Write every released .m file");
  add_common(bat, args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) ? kExitUsage : kExitOk;
  }

  try {
    if (*obf)
      return cmd_obfuscate(input, args, seed,
                           has_l_star ? std::optional<double>(l_star_val)
                                      : std::nullopt);
    if (*slv) return cmd_solve(input, args);
    if (*bat) {
      auto dots = seeds.find("..");
      std::uint64_t lo = 0, hi = 0;
      if (dots == std::string::npos) {
        lo = hi = std::stoull(seeds);
      } else {
        lo = std::stoull(seeds.substr(0, dots));
        hi = std::stoull(seeds.substr(dots + 2));
      }
      if (hi < lo) {
        std::cerr << "empty seed range\n";
        return kExitUsage;
      }
      return cmd_batch(batch_inputs, args, lo, hi, arms, workers, save_cases);
    }
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ModelError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
