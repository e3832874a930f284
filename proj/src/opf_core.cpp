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

#include "privflow/opf_core.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <unordered_map>

#include "privflow/nlp_solver.hpp"

namespace privflow {

namespace {

// Local variable order of one branch terminal:
// [va_a, va_b, vm_a, vm_b, G, B, Bsh_end]
constexpr int kLoc = 7;

struct SideEval {
  double p = 0.0, q = 0.0;
  double dp[kLoc] = {0};
  double dq[kLoc] = {0};
  double hp[kLoc][kLoc] = {{0}};  // symmetric, fully populated
  double hq[kLoc][kLoc] = {{0}};
};

// Evaluates the power leaving terminal `a` of a branch with tap ratio tau
// and phase shift sigma (sign already folded into `sigma_signed`):
//   P = (G + gsh_e) k vm_a^2 - (vm_a vm_b / tau) (G cosD + B sinD)
//   Q = -(B + Bsh_e) k vm_a^2 - (vm_a vm_b / tau) (G sinD - B cosD)
// with D = va_a - va_b - sigma_signed, k = 1/tau^2 on the from side and 1
// on the to side.
void eval_side(double va_a, double va_b, double vm_a, double vm_b, double G,
               double B, double Bsh_e, double gsh_e, double tau,
               double sigma_signed, double k, int level, SideEval& e) {
  const double m = 1.0 / tau;
  const double D = va_a - va_b - sigma_signed;
  const double c = std::cos(D), s = std::sin(D);
  const double T1 = G * c + B * s;
  const double T2 = G * s - B * c;
  const double M = vm_a * vm_b * m;
  const double A = k * vm_a * vm_a;

  e.p = (G + gsh_e) * A - M * T1;
  e.q = -(B + Bsh_e) * A - M * T2;
  if (level < 1) return;

  const double Ma = vm_b * m;  // dM/dvm_a
  const double Mb = vm_a * m;  // dM/dvm_b

  e.dp[0] = M * T2;
  e.dp[1] = -M * T2;
  e.dp[2] = 2.0 * (G + gsh_e) * k * vm_a - Ma * T1;
  e.dp[3] = -Mb * T1;
  e.dp[4] = A - M * c;
  e.dp[5] = -M * s;
  e.dp[6] = 0.0;

  e.dq[0] = -M * T1;
  e.dq[1] = M * T1;
  e.dq[2] = -2.0 * (B + Bsh_e) * k * vm_a - Ma * T2;
  e.dq[3] = -Mb * T2;
  e.dq[4] = -M * s;
  e.dq[5] = -A + M * c;
  e.dq[6] = -A;
  if (level < 2) return;

  auto setp = [&](int i, int j, double v) { e.hp[i][j] = e.hp[j][i] = v; };
  auto setq = [&](int i, int j, double v) { e.hq[i][j] = e.hq[j][i] = v; };

  setp(0, 0, M * T1);
  setp(1, 0, -M * T1);
  setp(1, 1, M * T1);
  setp(2, 0, Ma * T2);
  setp(2, 1, -Ma * T2);
  setp(2, 2, 2.0 * (G + gsh_e) * k);
  setp(3, 0, Mb * T2);
  setp(3, 1, -Mb * T2);
  setp(3, 2, -m * T1);
  setp(4, 0, M * s);
  setp(4, 1, -M * s);
  setp(4, 2, 2.0 * k * vm_a - Ma * c);
  setp(4, 3, -Mb * c);
  setp(5, 0, -M * c);
  setp(5, 1, M * c);
  setp(5, 2, -Ma * s);
  setp(5, 3, -Mb * s);

  setq(0, 0, M * T2);
  setq(1, 0, -M * T2);
  setq(1, 1, M * T2);
  setq(2, 0, -Ma * T1);
  setq(2, 1, Ma * T1);
  setq(2, 2, -2.0 * (B + Bsh_e) * k);
  setq(3, 0, -Mb * T1);
  setq(3, 1, Mb * T1);
  setq(3, 2, -m * T2);
  setq(4, 0, -M * c);
  setq(4, 1, M * c);
  setq(4, 2, -Ma * s);
  setq(4, 3, -Mb * s);
  setq(5, 0, -M * s);
  setq(5, 1, M * s);
  setq(5, 2, -2.0 * k * vm_a + Ma * c);
  setq(5, 3, Mb * c);
  setq(6, 2, -2.0 * k * vm_a);
}

}  // namespace

NetworkSkeleton strip_admittances(const NetworkCase& net) {
  NetworkSkeleton sk;
  sk.name = net.name;
  sk.base_mva = net.base_mva;
  for (const Bus& b : net.buses)
    sk.buses.push_back({b.id, b.base_kv, b.vmin, b.vmax, b.shunt_g, b.shunt_b,
                        b.is_slack});
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    sk.branches.push_back({br.id, br.from_bus, br.to_bus, br.tap, br.shift,
                           br.rate_a, br.ang_min, br.ang_max, br.g_sh});
  }
  for (const Generator& g : net.generators)
    if (g.in_service) sk.generators.push_back(g);
  sk.loads = net.loads;
  return sk;
}

std::pair<std::complex<double>, std::complex<double>> branch_flow(
    const BranchAdmittance& adm, double tap, double shift, double vm_i,
    double va_i, double vm_j, double va_j, double g_sh_end) {
  using C = std::complex<double>;
  const C y(adm.g, adm.b);
  const C ysh(g_sh_end, adm.b_sh);
  const C t = std::polar(tap, shift);
  const C vi = std::polar(vm_i, va_i);
  const C vj = std::polar(vm_j, va_j);
  const C yff = (y + ysh) / (tap * tap);
  const C yft = -y / std::conj(t);
  const C ytf = -y / t;
  const C ytt = y + ysh;
  const C s_ij = std::conj(yff) * std::norm(vi) + std::conj(yft) * vi * std::conj(vj);
  const C s_ji = std::conj(ytt) * std::norm(vj) + std::conj(ytf) * vj * std::conj(vi);
  return {s_ij, s_ji};
}

// ---------------------------------------------------------------------------
// OpfNlp
// ---------------------------------------------------------------------------

OpfNlp::OpfNlp(NetworkSkeleton sk, std::vector<BranchAdmittance> adm,
               OpfObjective objective)
    : sk_(std::move(sk)), adm_(std::move(adm)), obj_(objective) {
  if (adm_.size() != sk_.branches.size())
    throw ModelError("admittance vector does not match branch count");
  init_topology();
}

OpfNlp::OpfNlp(NetworkSkeleton sk, RestorationSpec spec)
    : sk_(std::move(sk)), rest_(std::move(spec)) {
  const size_t nbr = sk_.branches.size();
  if (rest_->g_target.size() != nbr || rest_->b_target.size() != nbr ||
      rest_->bsh_target.size() != nbr)
    throw ModelError("restoration targets do not match branch count");
  if (rest_->boxes.g_lo.size() != nbr)
    throw ModelError("restoration boxes do not match branch count");
  init_topology();
}

void OpfNlp::init_topology() {
  nb_ = int(sk_.buses.size());
  ng_ = int(sk_.generators.size());
  nbr_ = int(sk_.branches.size());
  if (nb_ == 0) throw ModelError("empty network");

  std::unordered_map<int, int> bus_idx;
  for (int i = 0; i < nb_; ++i) bus_idx[sk_.buses[i].id] = i;

  slack_ = -1;
  for (int i = 0; i < nb_; ++i)
    if (sk_.buses[i].is_slack) slack_ = i;
  if (slack_ < 0) throw ModelError("no slack bus");

  from_idx_.resize(nbr_);
  to_idx_.resize(nbr_);
  std::vector<std::vector<int>> adjacency(nb_);
  for (int l = 0; l < nbr_; ++l) {
    from_idx_[l] = bus_idx.at(sk_.branches[l].from_bus);
    to_idx_[l] = bus_idx.at(sk_.branches[l].to_bus);
    adjacency[from_idx_[l]].push_back(to_idx_[l]);
    adjacency[to_idx_[l]].push_back(from_idx_[l]);
    if (sk_.branches[l].rate_a > 0.0) limited_.push_back(l);
  }

  std::vector<bool> seen(nb_, false);
  std::queue<int> bfs;
  bfs.push(slack_);
  seen[slack_] = true;
  int reached = 1;
  while (!bfs.empty()) {
    int u = bfs.front();
    bfs.pop();
    for (int w : adjacency[u])
      if (!seen[w]) {
        seen[w] = true;
        ++reached;
        bfs.push(w);
      }
  }
  if (reached != nb_)
    throw ModelError("network is disconnected: " +
                     std::to_string(nb_ - reached) +
                     " buses unreachable from the slack");

  gens_at_bus_.assign(nb_, {});
  for (int g = 0; g < ng_; ++g)
    gens_at_bus_[bus_idx.at(sk_.generators[g].bus)].push_back(g);

  pd_.assign(nb_, 0.0);
  qd_.assign(nb_, 0.0);
  total_pd_ = 0.0;
  for (const Load& l : sk_.loads) {
    pd_[bus_idx.at(l.bus)] += l.pd;
    qd_[bus_idx.at(l.bus)] += l.qd;
    total_pd_ += l.pd;
  }
}

int OpfNlp::num_vars() const {
  return 2 * nb_ + 2 * ng_ + (rest_ ? 3 * nbr_ : 0);
}
int OpfNlp::num_eq() const { return 1 + 2 * nb_; }
int OpfNlp::num_ineq() const {
  return 2 * nbr_ + 2 * int(limited_.size()) + (rest_ ? 2 : 0);
}

void OpfNlp::variable_bounds(Vector& lo, Vector& hi) const {
  const int n = num_vars();
  lo = Vector::Constant(n, -kInf);
  hi = Vector::Constant(n, kInf);
  for (int i = 0; i < nb_; ++i) {
    lo[vm_offset() + i] = sk_.buses[i].vmin;
    hi[vm_offset() + i] = sk_.buses[i].vmax;
  }
  for (int g = 0; g < ng_; ++g) {
    lo[pg_offset() + g] = sk_.generators[g].pmin;
    hi[pg_offset() + g] = sk_.generators[g].pmax;
    lo[qg_offset() + g] = sk_.generators[g].qmin;
    hi[qg_offset() + g] = sk_.generators[g].qmax;
  }
  if (rest_) {
    const auto& bx = rest_->boxes;
    for (int l = 0; l < nbr_; ++l) {
      lo[adm_offset() + l] = bx.g_lo[l];
      hi[adm_offset() + l] = bx.g_hi[l];
      lo[adm_offset() + nbr_ + l] = bx.b_lo[l];
      hi[adm_offset() + nbr_ + l] = bx.b_hi[l];
      lo[adm_offset() + 2 * nbr_ + l] = bx.bsh_lo[l];
      hi[adm_offset() + 2 * nbr_ + l] = bx.bsh_hi[l];
    }
  }
}

Vector OpfNlp::initial_point() const {
  Vector x = Vector::Zero(num_vars());
  for (int i = 0; i < nb_; ++i)
    x[vm_offset() + i] =
        std::clamp(1.0, sk_.buses[i].vmin, sk_.buses[i].vmax);
  for (int g = 0; g < ng_; ++g) {
    const Generator& gen = sk_.generators[g];
    x[pg_offset() + g] = 0.5 * (gen.pmin + gen.pmax);
    x[qg_offset() + g] = 0.5 * (gen.qmin + gen.qmax);
  }
  if (rest_) {
    for (int l = 0; l < nbr_; ++l) {
      x[adm_offset() + l] = rest_->g_target[l];
      x[adm_offset() + nbr_ + l] = rest_->b_target[l];
      x[adm_offset() + 2 * nbr_ + l] = rest_->bsh_target[l];
    }
  }
  return x;
}

void OpfNlp::admittance_at(const Vector& x, int l, double& g, double& b,
                           double& bsh_end) const {
  if (rest_) {
    g = x[adm_offset() + l];
    b = x[adm_offset() + nbr_ + l];
    bsh_end = x[adm_offset() + 2 * nbr_ + l];
  } else {
    g = adm_[l].g;
    b = adm_[l].b;
    bsh_end = adm_[l].b_sh;
  }
}

// Calls fn(l, side, a_bus, b_bus, eval, loc_cols[7]) for every branch
// terminal; loc_cols holds global column indices (-1 for parameters).
template <typename F>
void OpfNlp::for_each_side(const Vector& x, F&& fn) const {
  for (int l = 0; l < nbr_; ++l) {
    const auto& br = sk_.branches[l];
    const int i = from_idx_[l], j = to_idx_[l];
    double g, b, bsh_end;
    admittance_at(x, l, g, b, bsh_end);
    const double gsh_end = br.g_sh / 2.0;
    int gc = -1, bc = -1, sc = -1;
    if (rest_) {
      gc = adm_offset() + l;
      bc = adm_offset() + nbr_ + l;
      sc = adm_offset() + 2 * nbr_ + l;
    }
    // from side
    {
      int cols[kLoc] = {va_offset() + i, va_offset() + j, vm_offset() + i,
                        vm_offset() + j, gc, bc, sc};
      fn(l, /*from=*/true, i, x[va_offset() + i], x[va_offset() + j],
         x[vm_offset() + i], x[vm_offset() + j], g, b, bsh_end, gsh_end,
         br.tap, br.shift, 1.0 / (br.tap * br.tap), cols);
    }
    // to side
    {
      int cols[kLoc] = {va_offset() + j, va_offset() + i, vm_offset() + j,
                        vm_offset() + i, gc, bc, sc};
      fn(l, /*from=*/false, j, x[va_offset() + j], x[va_offset() + i],
         x[vm_offset() + j], x[vm_offset() + i], g, b, bsh_end, gsh_end,
         br.tap, -br.shift, 1.0, cols);
    }
  }
}

double OpfNlp::objective(const Vector& x) const {
  if (rest_) {
    double v = 0.0;
    for (int l = 0; l < nbr_; ++l) {
      const double dg = x[adm_offset() + l] - rest_->g_target[l];
      const double db = x[adm_offset() + nbr_ + l] - rest_->b_target[l];
      v += dg * dg + db * db;
      if (rest_->include_shunt_distance) {
        const double ds = x[adm_offset() + 2 * nbr_ + l] - rest_->bsh_target[l];
        v += ds * ds;
      }
    }
    return v;
  }
  if (obj_ == OpfObjective::kGridLoss) {
    double pg = 0.0;
    for (int g = 0; g < ng_; ++g) pg += x[pg_offset() + g];
    return pg - total_pd_;
  }
  double v = 0.0;
  const double base = sk_.base_mva;
  for (int g = 0; g < ng_; ++g) {
    const Generator& gen = sk_.generators[g];
    const double p = x[pg_offset() + g] * base;
    v += gen.c2 * p * p + gen.c1 * p + gen.c0;
  }
  return v;
}

void OpfNlp::objective_gradient(const Vector& x, Vector& grad) const {
  grad = Vector::Zero(num_vars());
  if (rest_) {
    for (int l = 0; l < nbr_; ++l) {
      grad[adm_offset() + l] =
          2.0 * (x[adm_offset() + l] - rest_->g_target[l]);
      grad[adm_offset() + nbr_ + l] =
          2.0 * (x[adm_offset() + nbr_ + l] - rest_->b_target[l]);
      if (rest_->include_shunt_distance)
        grad[adm_offset() + 2 * nbr_ + l] =
            2.0 * (x[adm_offset() + 2 * nbr_ + l] - rest_->bsh_target[l]);
    }
    return;
  }
  if (obj_ == OpfObjective::kGridLoss) {
    for (int g = 0; g < ng_; ++g) grad[pg_offset() + g] = 1.0;
    return;
  }
  const double base = sk_.base_mva;
  for (int g = 0; g < ng_; ++g) {
    const Generator& gen = sk_.generators[g];
    grad[pg_offset() + g] =
        (2.0 * gen.c2 * x[pg_offset() + g] * base + gen.c1) * base;
  }
}

void OpfNlp::eq_constraints(const Vector& x, Vector& c) const {
  c = Vector::Zero(num_eq());
  c[0] = x[va_offset() + slack_];
  for (int n = 0; n < nb_; ++n) {
    const double vm = x[vm_offset() + n];
    double p = pd_[n] + sk_.buses[n].shunt_g * vm * vm;
    double q = qd_[n] - sk_.buses[n].shunt_b * vm * vm;
    for (int g : gens_at_bus_[n]) {
      p -= x[pg_offset() + g];
      q -= x[qg_offset() + g];
    }
    c[1 + n] = p;
    c[1 + nb_ + n] = q;
  }
  SideEval e;
  for_each_side(x, [&](int, bool, int a, double va_a, double va_b,
                       double vm_a, double vm_b, double g, double b,
                       double bsh, double gsh, double tau, double sig,
                       double k, const int*) {
    eval_side(va_a, va_b, vm_a, vm_b, g, b, bsh, gsh, tau, sig, k, 0, e);
    c[1 + a] += e.p;
    c[1 + nb_ + a] += e.q;
  });
}

void OpfNlp::ineq_constraints(const Vector& x, Vector& c) const {
  c = Vector::Zero(num_ineq());
  for (int l = 0; l < nbr_; ++l) {
    const double d = x[va_offset() + from_idx_[l]] - x[va_offset() + to_idx_[l]];
    c[2 * l] = d - sk_.branches[l].ang_max;
    c[2 * l + 1] = sk_.branches[l].ang_min - d;
  }
  const int th0 = 2 * nbr_;
  std::unordered_map<int, int> th_row;
  for (size_t k = 0; k < limited_.size(); ++k) th_row[limited_[k]] = int(k);
  SideEval e;
  for_each_side(x, [&](int l, bool from, int, double va_a, double va_b,
                       double vm_a, double vm_b, double g, double b,
                       double bsh, double gsh, double tau, double sig,
                       double k, const int*) {
    auto it = th_row.find(l);
    if (it == th_row.end()) return;
    eval_side(va_a, va_b, vm_a, vm_b, g, b, bsh, gsh, tau, sig, k, 0, e);
    const double rate = sk_.branches[l].rate_a;
    c[th0 + 2 * it->second + (from ? 0 : 1)] =
        e.p * e.p + e.q * e.q - rate * rate;
  });
  if (rest_) {
    double loss = -total_pd_;
    for (int g = 0; g < ng_; ++g) loss += x[pg_offset() + g];
    const double margin = 2e-6 * std::max(1.0, std::abs(rest_->l_star));
    double half_width =
        rest_->absolute_loss_band
            ? rest_->beta * std::max(rest_->l_star, 1e-3)
            : rest_->beta * rest_->l_star;
    const int r = 2 * nbr_ + 2 * int(limited_.size());
    c[r] = loss - (rest_->l_star + half_width - margin);
    c[r + 1] = (rest_->l_star - half_width + margin) - loss;
  }
}

void OpfNlp::eq_jacobian(const Vector& x, Triplets& out) const {
  out.clear();
  out.emplace_back(0, va_offset() + slack_, 1.0);
  for (int n = 0; n < nb_; ++n) {
    const double vm = x[vm_offset() + n];
    if (sk_.buses[n].shunt_g != 0.0)
      out.emplace_back(1 + n, vm_offset() + n,
                       2.0 * sk_.buses[n].shunt_g * vm);
    if (sk_.buses[n].shunt_b != 0.0)
      out.emplace_back(1 + nb_ + n, vm_offset() + n,
                       -2.0 * sk_.buses[n].shunt_b * vm);
    for (int g : gens_at_bus_[n]) {
      out.emplace_back(1 + n, pg_offset() + g, -1.0);
      out.emplace_back(1 + nb_ + n, qg_offset() + g, -1.0);
    }
  }
  SideEval e;
  for_each_side(x, [&](int, bool, int a, double va_a, double va_b,
                       double vm_a, double vm_b, double g, double b,
                       double bsh, double gsh, double tau, double sig,
                       double k, const int* cols) {
    eval_side(va_a, va_b, vm_a, vm_b, g, b, bsh, gsh, tau, sig, k, 1, e);
    for (int t = 0; t < kLoc; ++t) {
      if (cols[t] < 0) continue;
      if (e.dp[t] != 0.0) out.emplace_back(1 + a, cols[t], e.dp[t]);
      if (e.dq[t] != 0.0) out.emplace_back(1 + nb_ + a, cols[t], e.dq[t]);
    }
  });
}

void OpfNlp::ineq_jacobian(const Vector& x, Triplets& out) const {
  out.clear();
  for (int l = 0; l < nbr_; ++l) {
    out.emplace_back(2 * l, va_offset() + from_idx_[l], 1.0);
    out.emplace_back(2 * l, va_offset() + to_idx_[l], -1.0);
    out.emplace_back(2 * l + 1, va_offset() + from_idx_[l], -1.0);
    out.emplace_back(2 * l + 1, va_offset() + to_idx_[l], 1.0);
  }
  const int th0 = 2 * nbr_;
  std::unordered_map<int, int> th_row;
  for (size_t k = 0; k < limited_.size(); ++k) th_row[limited_[k]] = int(k);
  SideEval e;
  for_each_side(x, [&](int l, bool from, int, double va_a, double va_b,
                       double vm_a, double vm_b, double g, double b,
                       double bsh, double gsh, double tau, double sig,
                       double k, const int* cols) {
    auto it = th_row.find(l);
    if (it == th_row.end()) return;
    eval_side(va_a, va_b, vm_a, vm_b, g, b, bsh, gsh, tau, sig, k, 1, e);
    const int row = th0 + 2 * it->second + (from ? 0 : 1);
    for (int t = 0; t < kLoc; ++t) {
      if (cols[t] < 0) continue;
      const double v = 2.0 * (e.p * e.dp[t] + e.q * e.dq[t]);
      if (v != 0.0) out.emplace_back(row, cols[t], v);
    }
  });
  if (rest_) {
    const int r = 2 * nbr_ + 2 * int(limited_.size());
    for (int g = 0; g < ng_; ++g) {
      out.emplace_back(r, pg_offset() + g, 1.0);
      out.emplace_back(r + 1, pg_offset() + g, -1.0);
    }
  }
}

bool OpfNlp::lagrangian_hessian(const Vector& x, double sigma,
                                const Vector& lam_eq, const Vector& lam_ineq,
                                Triplets& out) const {
  out.clear();
  // objective block
  if (rest_) {
    for (int l = 0; l < nbr_; ++l) {
      out.emplace_back(adm_offset() + l, adm_offset() + l, 2.0 * sigma);
      out.emplace_back(adm_offset() + nbr_ + l, adm_offset() + nbr_ + l,
                       2.0 * sigma);
      if (rest_->include_shunt_distance)
        out.emplace_back(adm_offset() + 2 * nbr_ + l,
                         adm_offset() + 2 * nbr_ + l, 2.0 * sigma);
    }
  } else if (obj_ == OpfObjective::kDispatchCost) {
    const double base = sk_.base_mva;
    for (int g = 0; g < ng_; ++g)
      if (sk_.generators[g].c2 != 0.0)
        out.emplace_back(pg_offset() + g, pg_offset() + g,
                         sigma * 2.0 * sk_.generators[g].c2 * base * base);
  }
  // bus shunt curvature in the balance rows
  for (int n = 0; n < nb_; ++n) {
    const double w = lam_eq[1 + n] * 2.0 * sk_.buses[n].shunt_g -
                     lam_eq[1 + nb_ + n] * 2.0 * sk_.buses[n].shunt_b;
    if (w != 0.0) out.emplace_back(vm_offset() + n, vm_offset() + n, w);
  }

  const int th0 = 2 * nbr_;
  std::unordered_map<int, int> th_row;
  for (size_t k = 0; k < limited_.size(); ++k) th_row[limited_[k]] = int(k);

  SideEval e;
  for_each_side(x, [&](int l, bool from, int a, double va_a, double va_b,
                       double vm_a, double vm_b, double g, double b,
                       double bsh, double gsh, double tau, double sig,
                       double k, const int* cols) {
    const double lp = lam_eq[1 + a];
    const double lq = lam_eq[1 + nb_ + a];
    auto it = th_row.find(l);
    const double lt = it == th_row.end()
                          ? 0.0
                          : lam_ineq[th0 + 2 * it->second + (from ? 0 : 1)];
    if (lp == 0.0 && lq == 0.0 && lt == 0.0) return;
    eval_side(va_a, va_b, vm_a, vm_b, g, b, bsh, gsh, tau, sig, k, 2, e);
    const double cp = lp + 2.0 * lt * e.p;
    const double cq = lq + 2.0 * lt * e.q;
    for (int r = 0; r < kLoc; ++r) {
      if (cols[r] < 0) continue;
      for (int c2 = 0; c2 <= r; ++c2) {
        if (cols[c2] < 0) continue;
        double v = cp * e.hp[r][c2] + cq * e.hq[r][c2];
        if (lt != 0.0)
          v += 2.0 * lt * (e.dp[r] * e.dp[c2] + e.dq[r] * e.dq[c2]);
        if (v == 0.0) continue;
        int rr = cols[r], cc = cols[c2];
        if (rr < cc) std::swap(rr, cc);
        out.emplace_back(rr, cc, v);
      }
    }
  });
  return true;
}

FormulationInfo OpfNlp::formulation() const {
  FormulationInfo info;
  info.num_vars = num_vars();
  info.num_eq = num_eq();
  info.num_ineq = num_ineq();
  info.slack_rows = 1;
  info.balance_rows = 2 * nb_;
  info.angle_rows = 2 * nbr_;
  info.thermal_rows = 2 * int(limited_.size());
  info.loss_band_rows = rest_ ? 2 : 0;
  info.admittance_variables = rest_.has_value();
  info.objective = rest_ ? "admittance-distance"
                         : (obj_ == OpfObjective::kDispatchCost
                                ? "dispatch-cost"
                                : "grid-loss");
  return info;
}

OpfSolution OpfNlp::extract_solution(const Vector& x) const {
  OpfSolution sol;
  sol.vm.resize(nb_);
  sol.va.resize(nb_);
  sol.pg.resize(ng_);
  sol.qg.resize(ng_);
  for (int i = 0; i < nb_; ++i) {
    sol.va[i] = x[va_offset() + i];
    sol.vm[i] = x[vm_offset() + i];
  }
  for (int g = 0; g < ng_; ++g) {
    sol.pg[g] = x[pg_offset() + g];
    sol.qg[g] = x[qg_offset() + g];
  }
  sol.s_from.resize(nbr_);
  sol.s_to.resize(nbr_);
  for (int l = 0; l < nbr_; ++l) {
    double g, b, bsh;
    admittance_at(x, l, g, b, bsh);
    const int i = from_idx_[l], j = to_idx_[l];
    auto [sf, st] = branch_flow({g, b, bsh}, sk_.branches[l].tap,
                                sk_.branches[l].shift, sol.vm[i], sol.va[i],
                                sol.vm[j], sol.va[j],
                                sk_.branches[l].g_sh / 2.0);
    sol.s_from[l] = sf;
    sol.s_to[l] = st;
  }
  sol.objective = objective(x);
  return sol;
}

void OpfNlp::extract_admittances(const Vector& x, std::vector<double>& g,
                                 std::vector<double>& b,
                                 std::vector<double>& bsh_end) const {
  if (!rest_) throw ModelError("not a restoration problem");
  g.resize(nbr_);
  b.resize(nbr_);
  bsh_end.resize(nbr_);
  for (int l = 0; l < nbr_; ++l) {
    g[l] = x[adm_offset() + l];
    b[l] = x[adm_offset() + nbr_ + l];
    bsh_end[l] = x[adm_offset() + 2 * nbr_ + l];
  }
}

std::unique_ptr<OpfNlp> build_opf(const NetworkCase& net,
                                  OpfObjective objective) {
  net.validate();
  NetworkSkeleton sk = strip_admittances(net);
  std::vector<BranchAdmittance> adm;
  for (const Branch& br : net.branches)
    if (br.in_service) adm.push_back(branch_admittance(br));
  return std::make_unique<OpfNlp>(std::move(sk), std::move(adm), objective);
}

OpfSolution solve_opf(const NetworkCase& net, OpfObjective objective,
                      const SolveOptions& opts) {
  auto prob = build_opf(net, objective);
  SolveResult res = solve_nlp(*prob, opts);
  OpfSolution sol = prob->extract_solution(res.x);
  sol.status = res.report.status;
  sol.report = res.report;
  return sol;
}

double grid_loss(const NetworkSkeleton& sk, const OpfSolution& sol) {
  double total = 0.0;
  for (double pg : sol.pg) total += pg;
  for (const Load& l : sk.loads) total -= l.pd;
  return total;
}

double grid_loss(const NetworkCase& net, const OpfSolution& sol) {
  double total = 0.0;
  for (double pg : sol.pg) total += pg;
  for (const Load& l : net.loads) total -= l.pd;
  return total;
}

FeasibilityReport check_feasibility(const NetworkCase& net,
                                    const OpfSolution& sol, double tol) {
  FeasibilityReport rep;
  NetworkSkeleton sk = strip_admittances(net);
  const int nb = int(sk.buses.size());
  std::unordered_map<int, int> bus_idx;
  for (int i = 0; i < nb; ++i) bus_idx[sk.buses[i].id] = i;
  if (int(sol.vm.size()) != nb || int(sol.pg.size()) != int(sk.generators.size()))
    throw ModelError("solution dimensions do not match the case");

  std::vector<std::complex<double>> mismatch(nb, {0.0, 0.0});
  for (int i = 0; i < nb; ++i) {
    const auto& bus = sk.buses[i];
    if (bus.is_slack) rep.slack_angle = std::abs(sol.va[i]);
    rep.vm_bounds = std::max({rep.vm_bounds, bus.vmin - sol.vm[i],
                              sol.vm[i] - bus.vmax});
    const double vm2 = sol.vm[i] * sol.vm[i];
    mismatch[i] -= std::complex<double>(bus.shunt_g * vm2, -bus.shunt_b * vm2);
  }
  for (const Load& l : sk.loads)
    mismatch[bus_idx.at(l.bus)] -= std::complex<double>(l.pd, l.qd);
  for (size_t g = 0; g < sk.generators.size(); ++g) {
    const Generator& gen = sk.generators[g];
    mismatch[bus_idx.at(gen.bus)] += std::complex<double>(sol.pg[g], sol.qg[g]);
    rep.gen_bounds = std::max({rep.gen_bounds, gen.pmin - sol.pg[g],
                               sol.pg[g] - gen.pmax, gen.qmin - sol.qg[g],
                               sol.qg[g] - gen.qmax});
  }
  size_t l = 0;
  for (const Branch& br : net.branches) {
    if (!br.in_service) continue;
    const int i = bus_idx.at(br.from_bus), j = bus_idx.at(br.to_bus);
    auto [sf, st] = branch_flow(branch_admittance(br), br.tap, br.shift,
                                sol.vm[i], sol.va[i], sol.vm[j], sol.va[j],
                                br.g_sh / 2.0);
    mismatch[i] -= sf;
    mismatch[j] -= st;
    const double d = sol.va[i] - sol.va[j];
    rep.angle_diff = std::max({rep.angle_diff, br.ang_min - d, d - br.ang_max});
    if (br.rate_a > 0.0)
      rep.thermal = std::max({rep.thermal, std::abs(sf) - br.rate_a,
                              std::abs(st) - br.rate_a});
    ++l;
  }
  (void)l;
  for (int i = 0; i < nb; ++i)
    rep.balance = std::max(rep.balance, std::abs(mismatch[i]));

  rep.vm_bounds = std::max(rep.vm_bounds, 0.0);
  rep.gen_bounds = std::max(rep.gen_bounds, 0.0);
  rep.angle_diff = std::max(rep.angle_diff, 0.0);
  rep.thermal = std::max(rep.thermal, 0.0);
  rep.max_violation =
      std::max({rep.slack_angle, rep.vm_bounds, rep.angle_diff, rep.gen_bounds,
                rep.thermal, rep.balance});
  rep.pass = rep.max_violation <= tol;
  return rep;
}

}  // namespace privflow
