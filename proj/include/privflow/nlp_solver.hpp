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

#ifndef PRIVFLOW_NLP_SOLVER_HPP_
#define PRIVFLOW_NLP_SOLVER_HPP_

#include "privflow/nlp.hpp"

namespace privflow {

// Primal-dual interior-point method in the Fiacco-McCormick monotone
// barrier framework: slacks for inequalities, log barriers on bounds, a
// regularized symmetric KKT system solved by sparse LU, an l1-penalty merit
// line search with fraction-to-boundary safeguards, a Gauss-Newton
// feasibility restoration phase, and an augmented-Lagrangian fallback for
// problems the barrier iteration cannot finish.
class InteriorPointSolver final : public NlpSolver {
 public:
  SolveResult solve(const NlpProblem& p, const SolveOptions& opts) const override;
};

SolveResult solve_nlp(const NlpProblem& p, const SolveOptions& opts = {});

}  // namespace privflow

#endif  // PRIVFLOW_NLP_SOLVER_HPP_
