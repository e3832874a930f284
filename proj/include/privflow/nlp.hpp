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

#ifndef PRIVFLOW_NLP_HPP_
#define PRIVFLOW_NLP_HPP_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <limits>
#include <string>
#include <vector>

namespace privflow {

using Vector = Eigen::VectorXd;
using Triplets = std::vector<Eigen::Triplet<double>>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Smooth constrained program
//   min f(x)  s.t.  c_E(x) = 0,  c_I(x) <= 0,  lo <= x <= hi.
// Jacobians are reported as triplet lists; the sparsity pattern may vary
// between calls (values are re-collected every evaluation).
class NlpProblem {
 public:
  virtual ~NlpProblem() = default;

  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;

  virtual void variable_bounds(Vector& lo, Vector& hi) const = 0;
  virtual Vector initial_point() const = 0;

  virtual double objective(const Vector& x) const = 0;
  virtual void objective_gradient(const Vector& x, Vector& grad) const = 0;

  virtual void eq_constraints(const Vector& x, Vector& c) const = 0;
  virtual void ineq_constraints(const Vector& x, Vector& c) const = 0;
  virtual void eq_jacobian(const Vector& x, Triplets& out) const = 0;
  virtual void ineq_jacobian(const Vector& x, Triplets& out) const = 0;

  // Lower triangle of sigma*hess(f) + sum_i lam_eq[i]*hess(c_E_i)
  // + sum_j lam_ineq[j]*hess(c_I_j). Return false to request the solver's
  // finite-difference fallback.
  virtual bool lagrangian_hessian(const Vector& x, double sigma,
                                  const Vector& lam_eq, const Vector& lam_ineq,
                                  Triplets& out) const {
    (void)x; (void)sigma; (void)lam_eq; (void)lam_ineq; (void)out;
    return false;
  }
};

// Callback-backed problem for tests and small models.
class FunctionalNlp final : public NlpProblem {
 public:
  int n = 0;
  Vector lo, hi, x0;
  std::function<double(const Vector&)> f;
  std::function<Vector(const Vector&)> grad;
  std::function<Vector(const Vector&)> ceq;    // optional
  std::function<Vector(const Vector&)> cineq;  // optional
  std::function<void(const Vector&, Triplets&)> jac_eq;
  std::function<void(const Vector&, Triplets&)> jac_ineq;
  std::function<bool(const Vector&, double, const Vector&, const Vector&,
                     Triplets&)> hess;
  int m_eq = 0, m_ineq = 0;

  int num_vars() const override { return n; }
  int num_eq() const override { return m_eq; }
  int num_ineq() const override { return m_ineq; }
  void variable_bounds(Vector& l, Vector& h) const override {
    l = lo.size() ? lo : Vector::Constant(n, -kInf);
    h = hi.size() ? hi : Vector::Constant(n, kInf);
  }
  Vector initial_point() const override {
    return x0.size() ? x0 : Vector::Zero(n);
  }
  double objective(const Vector& x) const override { return f(x); }
  void objective_gradient(const Vector& x, Vector& g) const override {
    g = grad(x);
  }
  void eq_constraints(const Vector& x, Vector& c) const override {
    c = ceq ? ceq(x) : Vector(0);
  }
  void ineq_constraints(const Vector& x, Vector& c) const override {
    c = cineq ? cineq(x) : Vector(0);
  }
  void eq_jacobian(const Vector& x, Triplets& t) const override {
    if (jac_eq) jac_eq(x, t);
  }
  void ineq_jacobian(const Vector& x, Triplets& t) const override {
    if (jac_ineq) jac_ineq(x, t);
  }
  bool lagrangian_hessian(const Vector& x, double sigma, const Vector& le,
                          const Vector& li, Triplets& t) const override {
    return hess ? hess(x, sigma, le, li, t) : false;
  }
};

enum class SolveStatus {
  kOptimal,
  kInfeasible,
  kIterationLimit,
  kTimeout,
  kNumericalFailure,
};

std::string to_string(SolveStatus s);

struct SolveOptions {
  double tol_feas = 1e-6;
  double tol_opt = 1e-6;
  int max_iter = 500;
  double timeout_s = 600.0;
  double mu_init = 0.1;
  bool fallback_augmented_lagrangian = true;
  bool collect_history = false;
  bool verbose = false;
};

struct IterationRecord {
  double mu = 0.0;
  double penalty = 0.0;
  double merit_before = 0.0;
  double merit_after = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kNumericalFailure;
  int iterations = 0;
  double primal_infeasibility = 0.0;  // unscaled max constraint violation
  double dual_infeasibility = 0.0;    // scaled stationarity residual
  double objective = 0.0;
  double wall_time_s = 0.0;
  std::string message;
  std::vector<IterationRecord> history;  // filled when collect_history is set
};

struct SolveResult {
  Vector x;
  Vector lam_eq;
  Vector lam_ineq;
  SolveReport report;
};

// Solver contract; implemented by the built-in interior-point method and
// open for external engines used in cross-validation tests.
class NlpSolver {
 public:
  virtual ~NlpSolver() = default;
  virtual SolveResult solve(const NlpProblem& p,
                            const SolveOptions& opts) const = 0;
};

// Strictly interior starting point: midpoint of two-sided bounds, inputs
// projected inward by a small margin, fixed variables kept at their value.
// Throws ModelError when some lo > hi.
Vector restore_feasible_start(const Vector& x0, const Vector& lo,
                              const Vector& hi);

}  // namespace privflow

#endif  // PRIVFLOW_NLP_HPP_
