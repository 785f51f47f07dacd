#pragma once

#include <functional>
#include <optional>

#include "adiabat/operators.hpp"

namespace adiabat {

// Which operator the Newton correction is solved with.
enum class Linearization {
  base,     // dF(0) at every step (chord iteration)
  current,  // dF at the current iterate
};

enum class LinearSolve {
  series,  // geometric series on D D*
  direct,  // factor dF D* directly
};

struct NewtonOptions {
  int max_iters = 50;
  double residual_tol = 1e-10;
  bool record_contraction = true;
  Linearization linearization = Linearization::base;
  LinearSolve linear_solve = LinearSolve::series;
};

struct Solution {
  double eps = 0.0;
  GridPath eta;    // gamma - gamma_0
  GridPath gamma;  // gamma_0 + eta
  std::vector<double> residuals;   // |F(Delta_k)| in L2_eps, k = 0, 1, ...
  std::vector<double> step_norms;  // W12_eps norm of each correction
  double slice_certificate = 0.0;  // |<w_eps, eta>|
  double slice_relative = 0.0;     // same divided by |w_eps| |eta|
  int iterations = 0;
};

// Newton on the slice range(D*), starting from seed (default zero).
// Throws SolverError on divergence or when max_iters is exhausted.
Solution newton_solve(const LinearizedSystem& sys, const NewtonOptions& opts = {},
                      const GridPath* seed = nullptr);
Solution newton_solve(const ProblemTriple& tr, double eps, const Grid& grid, const NewtonOptions& opts = {});

struct ShiftResult {
  double tau = 0.0;
  GridPath gamma_tau;
  double rho = 0.0;  // residual of the shift equation at tau
};

// Root of rho(tau) = <w, gamma(. + tau) - gamma_0> on [-1, 1]/(1 - |b|^2).
ShiftResult time_shift_project(const LinearizedSystem& sys, const GridPath& gamma, const GridPath& w);
ShiftResult time_shift_project(const LinearizedSystem& sys, const GridPath& gamma);

struct StepOptions {
  double max_step = 0.0;  // 0: min(output dt, eps/10)
  double newton_tol = 1e-13;
  std::function<bool(const Point&)> stop;  // end the run once this holds
};

// Implicit midpoint in (w, z) coordinates, sampled on grid starting at grid.t(0).
// A stop event truncates the output to an odd number of samples.
GridPath integrate(const ProblemTriple& tr, double eps, const Point& start, const Grid& grid,
                   const StepOptions& opts = {});

struct Alignment {
  double tau = 0.0;
  double distance = 0.0;
};

// Minimizes |gamma1(. + tau) - gamma2| over |tau| <= half_width (default 2/(1-|b|^2)).
Alignment align_and_compare(const WeightContext& ctx, const GridPath& gamma1, const GridPath& gamma2,
                            double half_width = 0.0);

// Unstable eigenvector of the flow at (0, -1) tangent to the heteroclinic.
Vec unstable_direction(const ProblemTriple& tr, double eps);

}  // namespace adiabat
