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

#include "privflow/nlp_solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "privflow/net_model.hpp"

namespace privflow {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Clock = std::chrono::steady_clock;

constexpr double kKappaEps = 10.0;     // barrier tolerance factor
constexpr double kKappaMu = 0.2;       // linear mu reduction
constexpr double kThetaMu = 1.5;       // superlinear mu reduction
constexpr double kTauMin = 0.99;       // fraction-to-boundary floor
constexpr double kArmijoEta = 1e-4;
constexpr double kKappaSigma = 1e10;   // dual safeguard corridor
constexpr double kSMax = 100.0;        // KKT error scaling threshold
constexpr double kRestorationTarget = 1e-4;
constexpr int kRestorationIters = 100;

struct EvalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double wall_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Reduced + scaled view of an NlpProblem: variables fixed by equal bounds are
// substituted out, and the objective gradient / constraint rows are scaled
// down when their initial gradients exceed kSMax.
// ---------------------------------------------------------------------------
class WorkProblem {
 public:
  WorkProblem(const NlpProblem& p, const SolveOptions& opts) : p_(p) {
    n_full_ = p.num_vars();
    m_eq_ = p.num_eq();
    m_ineq_ = p.num_ineq();
    p.variable_bounds(lo_full_, hi_full_);
    if (lo_full_.size() != n_full_ || hi_full_.size() != n_full_)
      throw ModelError("variable_bounds size mismatch");
    x_fixed_ = Vector::Zero(n_full_);
    col_map_.assign(n_full_, -1);
    for (int i = 0; i < n_full_; ++i) {
      double lo = lo_full_[i], hi = hi_full_[i];
      if (lo > hi)
        throw ModelError("empty variable box at index " + std::to_string(i));
      if (std::isfinite(lo) && std::isfinite(hi) &&
          hi - lo <= 1e-14 * std::max(1.0, std::abs(lo))) {
        x_fixed_[i] = 0.5 * (lo + hi);
      } else {
        col_map_[i] = int(free_idx_.size());
        free_idx_.push_back(i);
      }
    }
    n_ = int(free_idx_.size());
    lo_ = Vector(n_);
    hi_ = Vector(n_);
    for (int k = 0; k < n_; ++k) {
      lo_[k] = lo_full_[free_idx_[k]];
      hi_[k] = hi_full_[free_idx_[k]];
    }
    s_f_ = 1.0;
    s_eq_ = Vector::Ones(m_eq_);
    s_ineq_ = Vector::Ones(m_ineq_);
    fd_hessian_ = false;
    (void)opts;
  }

  int n() const { return n_; }
  int m_eq() const { return m_eq_; }
  int m_ineq() const { return m_ineq_; }
  const Vector& lo() const { return lo_; }
  const Vector& hi() const { return hi_; }
  double obj_scale() const { return s_f_; }

  Vector reduce(const Vector& x_full) const {
    Vector x(n_);
    for (int k = 0; k < n_; ++k) x[k] = x_full[free_idx_[k]];
    return x;
  }

  Vector expand(const Vector& x) const {
    Vector full = x_fixed_;
    for (int k = 0; k < n_; ++k) full[free_idx_[k]] = x[k];
    return full;
  }

  Vector initial_point() const { return reduce(p_.initial_point()); }

  // Gradient-based scaling factors computed once at the start point.
  void compute_scaling(const Vector& x) {
    Vector g;
    Vector xf = expand(x);
    p_.objective_gradient(xf, g);
    double gmax = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
    s_f_ = kSMax / std::max(kSMax, gmax);
    Triplets t;
    if (m_eq_) {
      Vector rmax = Vector::Zero(m_eq_);
      p_.eq_jacobian(xf, t);
      for (const auto& e : t)
        rmax[e.row()] = std::max(rmax[e.row()], std::abs(e.value()));
      for (int i = 0; i < m_eq_; ++i)
        s_eq_[i] = kSMax / std::max(kSMax, rmax[i]);
    }
    if (m_ineq_) {
      Vector rmax = Vector::Zero(m_ineq_);
      t.clear();
      p_.ineq_jacobian(xf, t);
      for (const auto& e : t)
        rmax[e.row()] = std::max(rmax[e.row()], std::abs(e.value()));
      for (int i = 0; i < m_ineq_; ++i)
        s_ineq_[i] = kSMax / std::max(kSMax, rmax[i]);
    }
  }

  double f(const Vector& x) const {
    double v = p_.objective(expand(x));
    if (!std::isfinite(v)) throw EvalError("objective is not finite");
    return s_f_ * v;
  }

  double f_unscaled(const Vector& x) const { return p_.objective(expand(x)); }

  Vector grad_f(const Vector& x) const {
    Vector g;
    p_.objective_gradient(expand(x), g);
    if (!g.allFinite()) throw EvalError("objective gradient is not finite");
    Vector gr(n_);
    for (int k = 0; k < n_; ++k) gr[k] = s_f_ * g[free_idx_[k]];
    return gr;
  }

  Vector c_eq(const Vector& x) const {
    Vector c;
    p_.eq_constraints(expand(x), c);
    if (int(c.size()) != m_eq_) throw ModelError("eq constraint size mismatch");
    if (!c.allFinite()) throw EvalError("equality residual is not finite");
    return s_eq_.cwiseProduct(c);
  }

  Vector c_ineq(const Vector& x) const {
    Vector c;
    p_.ineq_constraints(expand(x), c);
    if (int(c.size()) != m_ineq_)
      throw ModelError("ineq constraint size mismatch");
    if (!c.allFinite()) throw EvalError("inequality residual is not finite");
    return s_ineq_.cwiseProduct(c);
  }

  SpMat jac_eq(const Vector& x) const {
    return build_jac(x, /*eq=*/true);
  }
  SpMat jac_ineq(const Vector& x) const {
    return build_jac(x, /*eq=*/false);
  }

  // Unscaled max violation (feasibility is always judged unscaled).
  double violation_unscaled(const Vector& x) const {
    double v = 0.0;
    if (m_eq_) {
      Vector c;
      p_.eq_constraints(expand(x), c);
      v = c.cwiseAbs().maxCoeff();
    }
    if (m_ineq_) {
      Vector c;
      p_.ineq_constraints(expand(x), c);
      for (int i = 0; i < m_ineq_; ++i) v = std::max(v, c[i]);
    }
    return v;
  }

  // Scaled Hessian of the Lagrangian (full symmetric matrix). `y`, `z` are
  // multipliers of the scaled constraints.
  SpMat hessian(const Vector& x, const Vector& y, const Vector& z) {
    Triplets t;
    Vector lam_e = s_eq_.cwiseProduct(y);
    Vector lam_i = s_ineq_.cwiseProduct(z);
    bool have = !fd_hessian_ &&
                p_.lagrangian_hessian(expand(x), s_f_, lam_e, lam_i, t);
    if (!have) {
      fd_hessian_ = true;
      return fd_hess(x, y, z);
    }
    SpMat h(n_, n_);
    Triplets full;
    full.reserve(t.size() * 2);
    for (const auto& e : t) {
      int r = col_map_[e.row()], c = col_map_[e.col()];
      if (r < 0 || c < 0) continue;
      if (!std::isfinite(e.value())) throw EvalError("Hessian is not finite");
      full.emplace_back(r, c, e.value());
      if (r != c) full.emplace_back(c, r, e.value());
    }
    h.setFromTriplets(full.begin(), full.end());
    return h;
  }

 private:
  SpMat build_jac(const Vector& x, bool eq) const {
    Triplets t;
    Vector xf = expand(x);
    if (eq)
      p_.eq_jacobian(xf, t);
    else
      p_.ineq_jacobian(xf, t);
    Triplets red;
    red.reserve(t.size());
    const Vector& s = eq ? s_eq_ : s_ineq_;
    for (const auto& e : t) {
      int c = col_map_[e.col()];
      if (c < 0) continue;
      if (!std::isfinite(e.value())) throw EvalError("Jacobian is not finite");
      red.emplace_back(e.row(), c, s[e.row()] * e.value());
    }
    SpMat j(eq ? m_eq_ : m_ineq_, n_);
    j.setFromTriplets(red.begin(), red.end());
    return j;
  }

  // Central-difference Hessian of the scaled Lagrangian gradient; used only
  // when the problem supplies no second derivatives.
  SpMat fd_hess(const Vector& x, const Vector& y, const Vector& z) const {
    auto grad_lag = [&](const Vector& xx) {
      Vector g = grad_f(xx);
      if (m_eq_) g += jac_eq(xx).transpose() * y;
      if (m_ineq_) g += jac_ineq(xx).transpose() * z;
      return g;
    };
    Triplets t;
    Vector xp = x;
    for (int j = 0; j < n_; ++j) {
      double h = 1e-6 * std::max(1.0, std::abs(x[j]));
      xp[j] = x[j] + h;
      Vector gp = grad_lag(xp);
      xp[j] = x[j] - h;
      Vector gm = grad_lag(xp);
      xp[j] = x[j];
      Vector col = (gp - gm) / (2.0 * h);
      for (int i = 0; i < n_; ++i)
        if (col[i] != 0.0) t.emplace_back(i, j, col[i]);
    }
    SpMat h(n_, n_);
    h.setFromTriplets(t.begin(), t.end());
    SpMat sym = SpMat(0.5 * (h + SpMat(h.transpose())));
    return sym;
  }

  const NlpProblem& p_;
  int n_full_ = 0, n_ = 0, m_eq_ = 0, m_ineq_ = 0;
  Vector lo_full_, hi_full_, lo_, hi_, x_fixed_;
  std::vector<int> free_idx_;
  std::vector<int> col_map_;
  double s_f_ = 1.0;
  Vector s_eq_, s_ineq_;
  mutable bool fd_hessian_ = false;
};

// ---------------------------------------------------------------------------
// Interior-point iteration state and helpers
// ---------------------------------------------------------------------------
struct IpmState {
  Vector x, s;        // primal
  Vector y, z;        // constraint multipliers (eq, ineq)
  Vector zl, zu, v;   // bound and slack duals
};

struct Direction {
  Vector dx, ds, dy, dz, dzl, dzu, dv;
};

class Ipm {
 public:
  Ipm(WorkProblem& w, const SolveOptions& opts, Clock::time_point t0)
      : w_(w), opts_(opts), t0_(t0), n_(w.n()), me_(w.m_eq()), mi_(w.m_ineq()) {
    has_lo_.resize(n_);
    has_hi_.resize(n_);
    for (int i = 0; i < n_; ++i) {
      has_lo_[i] = std::isfinite(w_.lo()[i]);
      has_hi_[i] = std::isfinite(w_.hi()[i]);
    }
  }

  SolveStatus run(IpmState& st, SolveReport& rep);

 private:
  double mu_ = 0.1;
  double tau_ = kTauMin;
  double rho_ = 1.0;       // l1 penalty parameter
  double delta_last_ = 0.0;
  int iter_ = 0;
  int restorations_ = 0;

  WorkProblem& w_;
  const SolveOptions& opts_;
  Clock::time_point t0_;
  int n_, me_, mi_;
  std::vector<bool> has_lo_, has_hi_;

  double barrier_value(const IpmState& st) const {
    double phi = w_.f(st.x);
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) phi -= mu_ * std::log(st.x[i] - w_.lo()[i]);
      if (has_hi_[i]) phi -= mu_ * std::log(w_.hi()[i] - st.x[i]);
    }
    for (int j = 0; j < mi_; ++j) phi -= mu_ * std::log(st.s[j]);
    return phi;
  }

  Vector barrier_grad_x(const IpmState& st) const {
    Vector g = w_.grad_f(st.x);
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) g[i] -= mu_ / (st.x[i] - w_.lo()[i]);
      if (has_hi_[i]) g[i] += mu_ / (w_.hi()[i] - st.x[i]);
    }
    return g;
  }

  double constraint_l1(const IpmState& st) const {
    double t = 0.0;
    if (me_) t += w_.c_eq(st.x).cwiseAbs().sum();
    if (mi_) t += (w_.c_ineq(st.x) + st.s).cwiseAbs().sum();
    return t;
  }

  double merit(const IpmState& st) const {
    return barrier_value(st) + rho_ * constraint_l1(st);
  }

  // Optimality error of the barrier KKT system for a given mu.
  double kkt_error(const IpmState& st, double mu, double* dual_inf = nullptr,
                   double* comp_err = nullptr) const {
    Vector gx = w_.grad_f(st.x);
    if (me_) gx += w_.jac_eq(st.x).transpose() * st.y;
    if (mi_) gx += w_.jac_ineq(st.x).transpose() * st.z;
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i]) gx[i] -= st.zl[i];
      if (has_hi_[i]) gx[i] += st.zu[i];
    }
    double mult_sum = 0.0;
    int mult_n = 0;
    auto acc = [&](const Vector& m) {
      mult_sum += m.cwiseAbs().sum();
      mult_n += int(m.size());
    };
    acc(st.y);
    acc(st.z);
    acc(st.zl);
    acc(st.zu);
    acc(st.v);
    double sd = std::max(kSMax, mult_n ? mult_sum / mult_n : 0.0) / kSMax;
    double sc = sd;

    double err_d = gx.size() ? gx.cwiseAbs().maxCoeff() / sd : 0.0;
    if (mi_) err_d = std::max(err_d, (st.z - st.v).cwiseAbs().maxCoeff() / sd);
    double err_p = 0.0;
    if (me_) err_p = std::max(err_p, w_.c_eq(st.x).cwiseAbs().maxCoeff());
    if (mi_)
      err_p = std::max(err_p,
                       (w_.c_ineq(st.x) + st.s).cwiseAbs().maxCoeff());
    double err_c = 0.0;
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i])
        err_c = std::max(err_c,
                         std::abs((st.x[i] - w_.lo()[i]) * st.zl[i] - mu));
      if (has_hi_[i])
        err_c = std::max(err_c,
                         std::abs((w_.hi()[i] - st.x[i]) * st.zu[i] - mu));
    }
    for (int j = 0; j < mi_; ++j)
      err_c = std::max(err_c, std::abs(st.s[j] * st.v[j] - mu));
    err_c /= sc;
    if (dual_inf) *dual_inf = err_d;
    if (comp_err) *comp_err = err_c;
    return std::max({err_d, err_p, err_c});
  }

  bool compute_direction(const IpmState& st, Direction& d, double delta_floor);
  // 0 = accepted; 1 = needs more regularization; 2 = hard failure
  int line_search(IpmState& st, const Direction& d, SolveReport& rep);
  bool restoration(IpmState& st);
  void reset_duals(IpmState& st);
};

void Ipm::reset_duals(IpmState& st) {
  st.y = Vector::Zero(me_);
  st.z = Vector::Zero(mi_);
  st.zl = Vector::Zero(n_);
  st.zu = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    if (has_lo_[i]) st.zl[i] = mu_ / (st.x[i] - w_.lo()[i]);
    if (has_hi_[i]) st.zu[i] = mu_ / (w_.hi()[i] - st.x[i]);
  }
  st.v = Vector(mi_);
  for (int j = 0; j < mi_; ++j) st.v[j] = mu_ / st.s[j];
}

bool Ipm::compute_direction(const IpmState& st, Direction& d,
                            double delta_floor) {
  const Vector& lo = w_.lo();
  const Vector& hi = w_.hi();

  SpMat je, ji;
  if (me_) je = w_.jac_eq(st.x);
  if (mi_) ji = w_.jac_ineq(st.x);
  SpMat h = w_.hessian(st.x, st.y, st.z);

  Vector sig_x = Vector::Zero(n_);
  for (int i = 0; i < n_; ++i) {
    if (has_lo_[i]) sig_x[i] += st.zl[i] / (st.x[i] - lo[i]);
    if (has_hi_[i]) sig_x[i] += st.zu[i] / (hi[i] - st.x[i]);
  }
  Vector sig_s(mi_);
  for (int j = 0; j < mi_; ++j) sig_s[j] = st.v[j] / st.s[j];

  Vector r1 = barrier_grad_x(st);
  if (me_) r1 += je.transpose() * st.y;
  if (mi_) r1 += ji.transpose() * st.z;
  Vector r2 = me_ ? Vector(w_.c_eq(st.x)) : Vector(0);
  Vector r3(mi_);
  if (mi_) {
    Vector ci = w_.c_ineq(st.x);
    for (int j = 0; j < mi_; ++j)
      r3[j] = ci[j] + st.s[j] - (st.z[j] - mu_ / st.s[j]) / sig_s[j];
  }

  const int dim = n_ + me_ + mi_;
  Vector rhs(dim);
  rhs.segment(0, n_) = -r1;
  if (me_) rhs.segment(n_, me_) = -r2;
  if (mi_) rhs.segment(n_ + me_, mi_) = -r3;

  double delta_w = delta_floor;
  double delta_c = 0.0;
  bool first_try = true;
  for (int attempt = 0; attempt < 40; ++attempt) {
    if (wall_seconds(t0_) > opts_.timeout_s) return false;
    Triplets kt;
    kt.reserve(h.nonZeros() + 2 * (me_ ? je.nonZeros() : 0) +
               2 * (mi_ ? ji.nonZeros() : 0) + dim);
    for (int k = 0; k < h.outerSize(); ++k)
      for (SpMat::InnerIterator it(h, k); it; ++it)
        kt.emplace_back(int(it.row()), int(it.col()), it.value());
    for (int i = 0; i < n_; ++i)
      kt.emplace_back(i, i, sig_x[i] + delta_w);
    if (me_)
      for (int k = 0; k < je.outerSize(); ++k)
        for (SpMat::InnerIterator it(je, k); it; ++it) {
          kt.emplace_back(n_ + int(it.row()), int(it.col()), it.value());
          kt.emplace_back(int(it.col()), n_ + int(it.row()), it.value());
        }
    for (int i = 0; i < me_; ++i)
      kt.emplace_back(n_ + i, n_ + i, -std::max(delta_c, 1e-12));
    if (mi_)
      for (int k = 0; k < ji.outerSize(); ++k)
        for (SpMat::InnerIterator it(ji, k); it; ++it) {
          kt.emplace_back(n_ + me_ + int(it.row()), int(it.col()), it.value());
          kt.emplace_back(int(it.col()), n_ + me_ + int(it.row()), it.value());
        }
    for (int j = 0; j < mi_; ++j)
      kt.emplace_back(n_ + me_ + j, n_ + me_ + j, -1.0 / sig_s[j]);

    SpMat kkt(dim, dim);
    kkt.setFromTriplets(kt.begin(), kt.end());
    kkt.makeCompressed();
    Eigen::SparseLU<SpMat> lu;
    lu.compute(kkt);
    bool ok = lu.info() == Eigen::Success;
    Vector sol;
    if (ok) {
      sol = lu.solve(rhs);
      ok = sol.allFinite();
    }
    if (ok) {
      Vector dx = sol.segment(0, n_);
      {
        d.dx = dx;
        d.dy = me_ ? Vector(sol.segment(n_, me_)) : Vector(0);
        d.dz = mi_ ? Vector(sol.segment(n_ + me_, mi_)) : Vector(0);
        d.ds = Vector(mi_);
        d.dv = Vector(mi_);
        if (mi_) {
          for (int j = 0; j < mi_; ++j)
            d.ds[j] = (mu_ / st.s[j] - st.z[j] - d.dz[j]) / sig_s[j];
          for (int j = 0; j < mi_; ++j)
            d.dv[j] = mu_ / st.s[j] - st.v[j] - sig_s[j] * d.ds[j];
        }
        d.dzl = Vector::Zero(n_);
        d.dzu = Vector::Zero(n_);
        for (int i = 0; i < n_; ++i) {
          if (has_lo_[i])
            d.dzl[i] = mu_ / (st.x[i] - lo[i]) - st.zl[i] -
                       st.zl[i] / (st.x[i] - lo[i]) * d.dx[i];
          if (has_hi_[i])
            d.dzu[i] = mu_ / (hi[i] - st.x[i]) - st.zu[i] +
                       st.zu[i] / (hi[i] - st.x[i]) * d.dx[i];
        }
        delta_last_ = delta_w;
        return true;
      }
    }
    // factorization failed or produced garbage: regularize and retry
    if (first_try && delta_c == 0.0) delta_c = 1e-8 * std::pow(mu_, 0.25);
    first_try = false;
    if (delta_w == 0.0)
      delta_w = delta_last_ > 0.0 ? std::max(1e-20, delta_last_ / 3.0) : 1e-4;
    else
      delta_w *= 8.0;
    if (delta_w > 1e12) return false;
  }
  return false;
}

int Ipm::line_search(IpmState& st, const Direction& d, SolveReport& rep) {
  const Vector& lo = w_.lo();
  const Vector& hi = w_.hi();

  // fraction-to-boundary limits
  double a_pr = 1.0, a_du = 1.0;
  for (int i = 0; i < n_; ++i) {
    if (has_lo_[i] && d.dx[i] < 0.0)
      a_pr = std::min(a_pr, -tau_ * (st.x[i] - lo[i]) / d.dx[i]);
    if (has_hi_[i] && d.dx[i] > 0.0)
      a_pr = std::min(a_pr, tau_ * (hi[i] - st.x[i]) / d.dx[i]);
    if (has_lo_[i] && d.dzl[i] < 0.0)
      a_du = std::min(a_du, -tau_ * st.zl[i] / d.dzl[i]);
    if (has_hi_[i] && d.dzu[i] < 0.0)
      a_du = std::min(a_du, -tau_ * st.zu[i] / d.dzu[i]);
  }
  for (int j = 0; j < mi_; ++j) {
    if (d.ds[j] < 0.0) a_pr = std::min(a_pr, -tau_ * st.s[j] / d.ds[j]);
    if (d.dv[j] < 0.0) a_du = std::min(a_du, -tau_ * st.v[j] / d.dv[j]);
  }

  // l1 penalty update so the direction is a descent direction for the merit
  double viol1 = constraint_l1(st);
  Vector bg = barrier_grad_x(st);
  double dir_deriv = bg.dot(d.dx);
  for (int j = 0; j < mi_; ++j)
    dir_deriv += (-mu_ / st.s[j]) * d.ds[j];
  if (viol1 > 1e-12) {
    double need = dir_deriv / (0.5 * viol1);
    if (need > rho_) rho_ = std::min(1e12, need + 1.0);
  }
  double D = dir_deriv - rho_ * viol1;
  // an ascent direction means the (unregularized) Newton system pointed at
  // a saddle; ask the caller for a convexified system
  if (D > 0.0 && viol1 <= 1e-12) return 1;
  if (D > -1e-16) D = -1e-16;

  double phi0 = merit(st);
  if (opts_.verbose) {
    for (double a : {1.0, 0.5, 0.25, 0.125}) {
      IpmState probe = st;
      probe.x = st.x + a * a_pr * d.dx;
      probe.s = st.s + a * a_pr * d.ds;
      try {
        std::fprintf(stderr, "   probe a=%5.3f phi=%+.12e barrier=%+.12e viol1=%.3e\n",
                     a * a_pr, merit(probe), barrier_value(probe), constraint_l1(probe));
      } catch (...) { std::fprintf(stderr, "   probe a=%5.3f EVAL FAIL\n", a); }
    }
  }
  double alpha = a_pr;
  IpmState trial = st;
  for (int back = 0; back < 60; ++back) {
    trial.x = st.x + alpha * d.dx;
    trial.s = st.s + alpha * d.ds;
    bool ok = true;
    double phi_t = 0.0;
    try {
      phi_t = merit(trial);
      ok = std::isfinite(phi_t);
    } catch (const EvalError&) {
      ok = false;
    }
    if (ok && phi_t <= phi0 + kArmijoEta * alpha * D) {
      if (opts_.verbose)
        std::fprintf(stderr, "   alpha=%8.2e (max %8.2e du %8.2e) D=%8.2e\n",
                     alpha, a_pr, a_du, D);
      if (opts_.collect_history)
        rep.history.push_back({mu_, rho_, phi0, phi_t});
      st.x = trial.x;
      st.s = trial.s;
      // constraint multipliers move with the dual step length; tying them
      // to a clipped primal step starves the dual residual
      st.y += a_du * d.dy;
      st.z += a_du * d.dz;
      st.zl += a_du * d.dzl;
      st.zu += a_du * d.dzu;
      st.v += a_du * d.dv;
      // dual safeguard corridor around mu/(primal slack)
      for (int i = 0; i < n_; ++i) {
        if (has_lo_[i]) {
          double ref = mu_ / (st.x[i] - lo[i]);
          st.zl[i] = std::clamp(st.zl[i], ref / kKappaSigma, ref * kKappaSigma);
        }
        if (has_hi_[i]) {
          double ref = mu_ / (hi[i] - st.x[i]);
          st.zu[i] = std::clamp(st.zu[i], ref / kKappaSigma, ref * kKappaSigma);
        }
      }
      for (int j = 0; j < mi_; ++j) {
        double ref = mu_ / st.s[j];
        st.v[j] = std::clamp(st.v[j], ref / kKappaSigma, ref * kKappaSigma);
      }
      return 0;
    }
    alpha *= 0.5;
    if (alpha < 1e-12) break;
  }
  return 2;
}

// Gauss-Newton feasibility restoration on 0.5*||(c_E, c_I + s)||^2 over the
// bound box. Returns true once the unscaled violation drops below the
// restoration target.
bool Ipm::restoration(IpmState& st) {
  ++restorations_;
  const Vector& lo = w_.lo();
  const Vector& hi = w_.hi();
  auto clamp_x = [&](Vector& x) {
    for (int i = 0; i < n_; ++i) {
      if (has_lo_[i])
        x[i] = std::max(x[i], lo[i] + 1e-10 * std::max(1.0, std::abs(lo[i])));
      if (has_hi_[i])
        x[i] = std::min(x[i], hi[i] - 1e-10 * std::max(1.0, std::abs(hi[i])));
    }
  };
  auto theta = [&](const IpmState& q) {
    double t = 0.0;
    if (me_) t += w_.c_eq(q.x).squaredNorm();
    if (mi_) t += (w_.c_ineq(q.x) + q.s).squaredNorm();
    return 0.5 * t;
  };

  for (int it = 0; it < kRestorationIters; ++it) {
    if (wall_seconds(t0_) > opts_.timeout_s) return false;
    if (w_.violation_unscaled(st.x) < kRestorationTarget &&
        (mi_ == 0 ||
         (w_.c_ineq(st.x) + st.s).cwiseAbs().maxCoeff() < kRestorationTarget))
      return true;
    SpMat je, ji;
    Vector ce, ci;
    if (me_) {
      je = w_.jac_eq(st.x);
      ce = w_.c_eq(st.x);
    }
    if (mi_) {
      ji = w_.jac_ineq(st.x);
      ci = w_.c_ineq(st.x) + st.s;
    }
    // normal equations on (dx, ds)
    SpMat jtj(n_ + mi_, n_ + mi_);
    Triplets t;
    SpMat jx(me_ + mi_, n_);
    {
      Triplets tj;
      if (me_)
        for (int k = 0; k < je.outerSize(); ++k)
          for (SpMat::InnerIterator it2(je, k); it2; ++it2)
            tj.emplace_back(int(it2.row()), int(it2.col()), it2.value());
      if (mi_)
        for (int k = 0; k < ji.outerSize(); ++k)
          for (SpMat::InnerIterator it2(ji, k); it2; ++it2)
            tj.emplace_back(me_ + int(it2.row()), int(it2.col()), it2.value());
      jx.setFromTriplets(tj.begin(), tj.end());
    }
    Vector resid(me_ + mi_);
    if (me_) resid.segment(0, me_) = ce;
    if (mi_) resid.segment(me_, mi_) = ci;

    SpMat a = SpMat(jx.transpose() * jx);
    double gamma = 1e-8 * std::max(1.0, resid.norm());
    for (int k = 0; k < a.outerSize(); ++k)
      for (SpMat::InnerIterator it2(a, k); it2; ++it2)
        t.emplace_back(int(it2.row()), int(it2.col()), it2.value());
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, gamma);
    // slack columns: d(theta)/ds = ci, hessian block = I
    for (int j = 0; j < mi_; ++j)
      t.emplace_back(n_ + j, n_ + j, 1.0 + gamma);
    if (mi_)
      for (int k = 0; k < ji.outerSize(); ++k)
        for (SpMat::InnerIterator it2(ji, k); it2; ++it2) {
          t.emplace_back(int(it2.col()), n_ + int(it2.row()), it2.value());
          t.emplace_back(n_ + int(it2.row()), int(it2.col()), it2.value());
        }
    jtj.setFromTriplets(t.begin(), t.end());

    Vector g(n_ + mi_);
    g.segment(0, n_) = jx.transpose() * resid;
    for (int j = 0; j < mi_; ++j) g[n_ + j] = ci[j];

    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(jtj);
    if (ldlt.info() != Eigen::Success) return false;
    Vector dstep = ldlt.solve(-g);
    if (!dstep.allFinite()) return false;

    double th0 = theta(st);
    double descent = g.dot(dstep);  // negative for a descent direction
    double alpha = 1.0;
    bool accepted = false;
    for (int back = 0; back < 40; ++back) {
      IpmState trial = st;
      trial.x = st.x + alpha * dstep.segment(0, n_);
      clamp_x(trial.x);
      trial.s = st.s + alpha * dstep.segment(n_, mi_);
      for (int j = 0; j < mi_; ++j) trial.s[j] = std::max(trial.s[j], 1e-10);
      double th = 0.0;
      bool ok = true;
      try {
        th = theta(trial);
      } catch (const EvalError&) {
        ok = false;
      }
      if (ok && (th <= th0 + 1e-4 * alpha * descent ||
                 th < th0 * (1.0 - 1e-8))) {
        st.x = trial.x;
        st.s = trial.s;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) return w_.violation_unscaled(st.x) < kRestorationTarget;
  }
  return w_.violation_unscaled(st.x) < kRestorationTarget;
}

SolveStatus Ipm::run(IpmState& st, SolveReport& rep) {
  mu_ = opts_.mu_init;
  tau_ = std::max(kTauMin, 1.0 - mu_);

  for (iter_ = 0; iter_ < opts_.max_iter; ++iter_) {
    rep.iterations = iter_;
    if (wall_seconds(t0_) > opts_.timeout_s) return SolveStatus::kTimeout;

    double err0, dual_inf;
    try {
      err0 = kkt_error(st, 0.0, &dual_inf);
      rep.dual_infeasibility = dual_inf;
      rep.primal_infeasibility = w_.violation_unscaled(st.x);
      if (err0 <= opts_.tol_opt &&
          rep.primal_infeasibility <= opts_.tol_feas)
        return SolveStatus::kOptimal;

      // barrier subproblem converged -> shrink mu
      while (mu_ > opts_.tol_opt / 20.0 &&
             kkt_error(st, mu_) <= kKappaEps * mu_) {
        mu_ = std::max(opts_.tol_opt / 20.0,
                       std::min(kKappaMu * mu_, std::pow(mu_, kThetaMu)));
        tau_ = std::max(kTauMin, 1.0 - mu_);
        rho_ = std::max(1.0, rho_ * 0.5);  // let the penalty relax with mu
      }

      if (opts_.verbose)
        std::fprintf(stderr,
                     "it %3d mu=%8.2e E0=%8.2e dual=%8.2e feas=%8.2e rho=%g\n",
                     iter_, mu_, err0, dual_inf, rep.primal_infeasibility,
                     rho_);

      // direction + line search, convexifying on demand
      double boost = 0.0;
      bool accepted = false;
      for (int round = 0; round < 12 && !accepted; ++round) {
        Direction d;
        if (!compute_direction(st, d, boost)) {
          if (wall_seconds(t0_) > opts_.timeout_s)
            return SolveStatus::kTimeout;
          break;  // cannot factorize at any regularization
        }
        const int ls = line_search(st, d, rep);
        if (ls == 0) {
          accepted = true;
        } else {
          boost = boost == 0.0 ? 1e-8 : boost * 1e3;
          if (boost > 1e10) break;
        }
      }
      if (!accepted) {
        if (wall_seconds(t0_) > opts_.timeout_s) return SolveStatus::kTimeout;
        if (restorations_ < 3) {
          if (!restoration(st)) return SolveStatus::kInfeasible;
          for (int j = 0; j < mi_; ++j) st.s[j] = std::max(st.s[j], 1e-8);
          reset_duals(st);
          continue;
        }
        return SolveStatus::kNumericalFailure;
      }
    } catch (const EvalError& e) {
      rep.message = e.what();
      return SolveStatus::kNumericalFailure;
    }
  }
  return SolveStatus::kIterationLimit;
}

// ---------------------------------------------------------------------------
// Augmented-Lagrangian fallback (projected spectral gradient inner loop)
// ---------------------------------------------------------------------------
struct AlResult {
  Vector x, y, z;
  bool converged = false;
};

AlResult augmented_lagrangian(WorkProblem& w, Vector x,
                              const SolveOptions& opts, Clock::time_point t0) {
  const int n = w.n(), me = w.m_eq(), mi = w.m_ineq();
  Vector y = Vector::Zero(me), z = Vector::Zero(mi);
  double rho = 10.0;
  auto project = [&](Vector& q) {
    for (int i = 0; i < n; ++i) q[i] = std::clamp(q[i], w.lo()[i], w.hi()[i]);
  };
  project(x);

  auto lag = [&](const Vector& q, Vector* grad) {
    double val = w.f(q);
    Vector g = w.grad_f(q);
    if (me) {
      Vector ce = w.c_eq(q);
      Vector yr = y + rho * ce;
      val += y.dot(ce) + 0.5 * rho * ce.squaredNorm();
      g += w.jac_eq(q).transpose() * yr;
    }
    if (mi) {
      Vector ci = w.c_ineq(q);
      Vector zr = (z + rho * ci).cwiseMax(0.0);
      val += (zr.squaredNorm() - z.squaredNorm()) / (2.0 * rho);
      g += w.jac_ineq(q).transpose() * zr;
    }
    if (grad) *grad = g;
    return val;
  };

  AlResult res;
  for (int outer = 0; outer < 30; ++outer) {
    if (wall_seconds(t0) > opts.timeout_s) break;
    // projected Barzilai-Borwein descent
    Vector g;
    double fx = lag(x, &g);
    double step = 1.0 / std::max(1.0, g.norm());
    Vector x_prev = x, g_prev = g;
    for (int inner = 0; inner < 400; ++inner) {
      Vector cand = x - step * g;
      project(cand);
      Vector pg = x - cand;
      if (pg.cwiseAbs().maxCoeff() < 1e-9 * std::max(1.0, x.norm())) break;
      double f_cand;
      try {
        f_cand = lag(cand, nullptr);
      } catch (const EvalError&) {
        step *= 0.25;
        continue;
      }
      if (f_cand <= fx - 1e-6 * pg.squaredNorm() / std::max(step, 1e-12)) {
        x_prev = x;
        g_prev = g;
        x = cand;
        fx = lag(x, &g);
        Vector dx = x - x_prev, dg = g - g_prev;
        double denom = dx.dot(dg);
        step = denom > 1e-16 ? std::clamp(dx.squaredNorm() / denom, 1e-8, 1e8)
                             : std::min(step * 2.0, 1e8);
      } else {
        step *= 0.25;
        if (step < 1e-14) break;
      }
      if (wall_seconds(t0) > opts.timeout_s) break;
    }
    double viol = w.violation_unscaled(x);
    if (me) y += rho * w.c_eq(x);
    if (mi) z = (z + rho * w.c_ineq(x)).cwiseMax(0.0);
    if (viol <= opts.tol_feas) {
      Vector gl;
      lag(x, &gl);
      Vector cand = x - gl;
      project(cand);
      double pgnorm = (x - cand).cwiseAbs().maxCoeff();
      if (pgnorm <= 1e2 * opts.tol_opt) {
        res.converged = true;
        break;
      }
    } else {
      rho = std::min(rho * 10.0, 1e10);
    }
  }
  res.x = x;
  res.y = y;
  res.z = z;
  return res;
}

}  // namespace

Vector restore_feasible_start(const Vector& x0, const Vector& lo,
                              const Vector& hi) {
  const int n = int(x0.size());
  Vector x = x0;
  for (int i = 0; i < n; ++i) {
    if (lo[i] > hi[i])
      throw ModelError("infeasible bounds: lower exceeds upper at index " +
                       std::to_string(i));
    bool bl = std::isfinite(lo[i]), bu = std::isfinite(hi[i]);
    if (bl && bu) {
      if (hi[i] - lo[i] <= 1e-14 * std::max(1.0, std::abs(lo[i]))) {
        x[i] = 0.5 * (lo[i] + hi[i]);
        continue;
      }
      double pad = std::min(1e-4 * std::max({1.0, std::abs(lo[i]),
                                             std::abs(hi[i])}),
                            0.25 * (hi[i] - lo[i]));
      if (x[i] <= lo[i] || x[i] >= hi[i]) x[i] = 0.5 * (lo[i] + hi[i]);
      x[i] = std::clamp(x[i], lo[i] + pad, hi[i] - pad);
    } else if (bl) {
      double pad = 1e-4 * std::max(1.0, std::abs(lo[i]));
      x[i] = std::max(x[i], lo[i] + pad);
    } else if (bu) {
      double pad = 1e-4 * std::max(1.0, std::abs(hi[i]));
      x[i] = std::min(x[i], hi[i] - pad);
    }
  }
  return x;
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kIterationLimit: return "iteration-limit";
    case SolveStatus::kTimeout: return "timeout";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

SolveResult InteriorPointSolver::solve(const NlpProblem& p,
                                       const SolveOptions& opts) const {
  auto t0 = Clock::now();
  SolveResult res;
  res.report.status = SolveStatus::kNumericalFailure;
  try {
    WorkProblem w(p, opts);
    IpmState st;
    st.x = restore_feasible_start(w.initial_point(), w.lo(), w.hi());
    w.compute_scaling(st.x);
    st.s = Vector(w.m_ineq());
    if (w.m_ineq()) {
      Vector ci = w.c_ineq(st.x);
      for (int j = 0; j < w.m_ineq(); ++j)
        st.s[j] = std::max(1e-4, -ci[j]);
    }
    Ipm ipm(w, opts, t0);
    IpmState init = st;
    {
      // duals at their barrier-consistent start
      st.y = Vector::Zero(w.m_eq());
      st.z = Vector::Zero(w.m_ineq());
      st.zl = Vector::Zero(w.n());
      st.zu = Vector::Zero(w.n());
      st.v = Vector::Zero(w.m_ineq());
      for (int i = 0; i < w.n(); ++i) {
        if (std::isfinite(w.lo()[i]))
          st.zl[i] = opts.mu_init / (st.x[i] - w.lo()[i]);
        if (std::isfinite(w.hi()[i]))
          st.zu[i] = opts.mu_init / (w.hi()[i] - st.x[i]);
      }
      for (int j = 0; j < w.m_ineq(); ++j)
        st.v[j] = opts.mu_init / st.s[j];
    }
    SolveStatus status = ipm.run(st, res.report);

    if (status == SolveStatus::kNumericalFailure &&
        opts.fallback_augmented_lagrangian &&
        wall_seconds(t0) < opts.timeout_s) {
      AlResult al = augmented_lagrangian(w, init.x, opts, t0);
      if (al.converged) {
        st.x = al.x;
        st.y = al.y;
        st.z = al.z;
        status = SolveStatus::kOptimal;
        res.report.message = "augmented-Lagrangian fallback";
      }
    }

    res.report.status = status;
    res.report.primal_infeasibility = w.violation_unscaled(st.x);
    res.report.objective = w.f_unscaled(st.x);
    res.x = w.expand(st.x);
    res.lam_eq = st.y;
    res.lam_ineq = st.z;
  } catch (const ModelError&) {
    throw;
  } catch (const std::exception& e) {
    res.report.message = e.what();
    res.report.status = SolveStatus::kNumericalFailure;
  }
  res.report.wall_time_s = wall_seconds(t0);
  return res;
}

SolveResult solve_nlp(const NlpProblem& p, const SolveOptions& opts) {
  InteriorPointSolver solver;
  return solver.solve(p, opts);
}

}  // namespace privflow
