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

#include "privflow/dp_mechanism.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace privflow {

namespace {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

StreamKey branch_stream(NoiseChannel channel, int branch_id) {
  return StreamKey{channel, std::uint64_t(branch_id)};
}

StreamKey level_stream(NoiseChannel channel, double level_kv) {
  return StreamKey{channel, std::bit_cast<std::uint64_t>(level_kv)};
}

double CounterNoise::uniform(const StreamKey& key) const {
  std::uint64_t h = mix64(seed_ ^ mix64(std::uint64_t(key.channel)));
  h = mix64(h ^ mix64(key.index));
  // 53 high bits, centered: strictly inside (0,1)
  return (double(h >> 11) + 0.5) * 0x1.0p-53;
}

double CounterNoise::laplace(double scale, const StreamKey& key) {
  return laplace_from_uniform(scale, uniform(key));
}

double ZeroNoise::laplace(double scale, const StreamKey& key) {
  (void)scale;
  (void)key;
  return 0.0;
}

double laplace_from_uniform(double scale, double u) {
  if (!(scale > 0.0)) throw ModelError("Laplace scale must be positive");
  const double d = u - 0.5;
  if (d == 0.0) return 0.0;
  const double s = d > 0.0 ? 1.0 : -1.0;
  return -scale * s * std::log1p(-2.0 * std::fabs(d));
}

double sample_laplace(double scale, NoiseSource& rng, const StreamKey& key) {
  if (!(scale > 0.0)) throw ModelError("Laplace scale must be positive");
  return rng.laplace(scale, key);
}

void PrivacyParams::validate() const {
  if (!(epsilon > 0.0)) throw ModelError("epsilon must be positive");
  if (!(alpha > 0.0)) throw ModelError("alpha must be positive");
  if (!(beta > 0.0)) throw ModelError("beta must be positive");
  if (!(lambda > 1.0)) throw ModelError("lambda must exceed 1");
}

double branch_noise_scale(const PrivacyParams& p) {
  return 3.0 * p.alpha / p.epsilon;
}

double level_noise_scale(const PrivacyParams& p, int n_v) {
  if (n_v < 1) throw ModelError("voltage level with no branches");
  return 3.0 * p.alpha / (double(n_v) * p.epsilon);
}

const LevelMeans::Level& LevelMeans::at_kv(double kv) const {
  for (const Level& l : levels)
    if (l.kv == kv) return l;
  throw ModelError("no level mean recorded for " + std::to_string(kv) + " kV");
}

PerturbedAdmittances perturb_branch_parameters(const NetworkCase& net,
                                               const PrivacyParams& p,
                                               NoiseSource& rng,
                                               DrawReport* report) {
  p.validate();
  const double scale = branch_noise_scale(p);
  PerturbedAdmittances out;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const BranchAdmittance adm = branch_admittance(br);
    const double b_tilde =
        adm.b + rng.laplace(scale, branch_stream(
                                       NoiseChannel::kBranchSusceptance, br.id));
    const double bsh_tilde =
        adm.b_sh +
        rng.laplace(scale, branch_stream(NoiseChannel::kBranchShuntSusceptance,
                                         br.id));
    // g follows b so that g_tilde/b_tilde == g/b. The association
    // (g*b_tilde)/b keeps g_tilde*b and g*b_tilde equal to the last ulp,
    // and the zero-noise path is an exact identity.
    const double g_tilde =
        (b_tilde == adm.b) ? adm.g : (adm.g * b_tilde) / adm.b;
    out.branch_ids.push_back(br.id);
    out.b_tilde.push_back(b_tilde);
    out.g_tilde.push_back(g_tilde);
    out.b_sh_tilde.push_back(bsh_tilde);
  }
  if (report) report->count(scale, int(out.branch_ids.size()) * 2);
  return out;
}

std::map<double, double> noisy_level_means(const NetworkCase& net,
                                           std::span<const double> values,
                                           NoiseChannel channel,
                                           const PrivacyParams& p,
                                           NoiseSource& rng,
                                           DrawReport* report) {
  p.validate();
  std::map<double, std::pair<double, int>> acc;  // kv -> (sum, count)
  size_t k = 0;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    if (k >= values.size())
      throw ModelError("values vector shorter than in-service branch count");
    auto& slot = acc[branch_level(net, br)];
    slot.first += values[k];
    slot.second += 1;
    ++k;
  }
  if (k != values.size())
    throw ModelError("values vector longer than in-service branch count");

  std::map<double, double> out;
  for (const auto& [kv, sum_count] : acc) {
    const auto& [sum, n_v] = sum_count;
    const double scale = level_noise_scale(p, n_v);
    out[kv] = sum / double(n_v) + rng.laplace(scale, level_stream(channel, kv));
    if (report) report->count(scale);
  }
  return out;
}

MechanismResult apply_mechanism(const NetworkCase& net, const PrivacyParams& p,
                                NoiseSource& rng) {
  MechanismResult res;
  res.perturbed = perturb_branch_parameters(net, p, rng, &res.draws);

  std::vector<double> g, b, bsh;
  std::map<double, int> counts;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const BranchAdmittance adm = branch_admittance(br);
    g.push_back(adm.g);
    b.push_back(adm.b);
    bsh.push_back(adm.b_sh);
    counts[branch_level(net, br)] += 1;
  }
  auto mu_g = noisy_level_means(net, g, NoiseChannel::kLevelMeanG, p, rng,
                                &res.draws);
  auto mu_b = noisy_level_means(net, b, NoiseChannel::kLevelMeanB, p, rng,
                                &res.draws);
  auto mu_bsh = noisy_level_means(net, bsh, NoiseChannel::kLevelMeanBsh, p,
                                  rng, &res.draws);
  for (const auto& [kv, mu] : mu_g) {
    LevelMeans::Level lvl;
    lvl.kv = kv;
    lvl.n_branches = counts[kv];
    lvl.mu_g = mu;
    lvl.mu_b = mu_b[kv];
    lvl.mu_bsh = mu_bsh[kv];
    res.means.levels.push_back(lvl);
  }
  return res;
}

}  // namespace privflow
