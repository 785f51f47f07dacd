#pragma once

#include <Eigen/SparseLU>
#include <memory>
#include <vector>

#include "adiabat/norms.hpp"
#include "adiabat/spectra.hpp"

namespace adiabat {

// Q(z) from the displayed block formula [[A/eps, 2zb/eps], [b^T A, 2z]].
Mat Q_matrix(const ProblemTriple& tr, double eps, double z);
// Q(z) from the factorization (g0)^{-1} diag(eps A, 2z).
Mat Q_factored(const ProblemTriple& tr, double eps, double z);

// Discrete linearization at the limit solution.
//
// Perturbations eta live on the m nodes; D eta and F(eta) live on the m - 1
// cells. D is the trapezoidal box difference
//   (D eta)_{i+1/2} = (eta_{i+1} - eta_i)/dt + (Q_i eta_i + Q_{i+1} eta_{i+1})/2,
// and D* maps cells back to nodes with zero ghost values beyond the ends,
//   (D* u)_i = -(u_{i+1/2} - u_{i-1/2})/dt + Q_i (u_{i-1/2} + u_{i+1/2})/2.
// With uniform weights the pair is exactly adjoint in g0.
struct LinearizedSystem {
  ProblemTriple triple;
  WeightContext ctx;
  Grid grid;
  GridPath base;           // gamma_0 on nodes
  GridPath base_velocity;  // d/dt gamma_0 on nodes
  std::vector<Mat> Q;      // Q at each node
  SpMat D;                 // cells x nodes
  SpMat D_star;            // nodes x cells
  SpMat E;                 // cells x nodes; empty pattern when h = 0
  SpMat W_nodes;
  SpMat W_cells;
  std::shared_ptr<const Eigen::SparseLU<SpMat>> normal;  // D D*

  double eps() const { return ctx.eps; }
  int n() const { return ctx.n(); }
  int node_dofs() const { return grid.m * n(); }
  int cell_dofs() const { return (grid.m - 1) * n(); }
  GridPath nodes() const { return GridPath(grid, n(), Placement::nodes); }
  GridPath cells() const { return GridPath(grid, n(), Placement::cells); }
};

LinearizedSystem assemble(const ProblemTriple& tr, double eps, const Grid& grid);

GridPath from_flat(const Grid& g, int n, Placement p, const Vec& v);

GridPath apply_D(const LinearizedSystem& sys, const GridPath& eta);
GridPath apply_D_star(const LinearizedSystem& sys, const GridPath& u);
// Pointwise E eta = -dR(gamma_0) eta at the nodes.
GridPath apply_E(const LinearizedSystem& sys, const GridPath& eta);

GridPath F_eps(const LinearizedSystem& sys, const GridPath& eta);
SpMat dF_eps(const LinearizedSystem& sys, const GridPath& eta);

// D restricted to eta vanishing at both end nodes (cells x interior nodes).
SpMat D_dirichlet(const LinearizedSystem& sys);

GridPath solve_normal(const LinearizedSystem& sys, const GridPath& rhs);

struct SliceSolveReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double contraction = 0.0;  // largest observed residual ratio
};

struct SliceOptions {
  double rel_tol = 1e-13;
  int max_iters = 200;
};

struct SliceResult {
  GridPath eta;      // D* upsilon, on nodes
  GridPath upsilon;  // accumulated, on cells
  SliceSolveReport report;
};

// Solves A_op D* u = rhs by the geometric series built on D D*.
// Throws SolverError when the residual stops contracting.
SliceResult slice_solve(const LinearizedSystem& sys, const SpMat& A_op, const GridPath& rhs,
                        const SliceOptions& opts = {});
// Same system, factored directly.
SliceResult slice_solve_direct(const LinearizedSystem& sys, const SpMat& A_op, const GridPath& rhs);

// w = w0 - D*(D D*)^{-1} D w0 with w0 = d/dt gamma_0.
GridPath kernel_vector(const LinearizedSystem& sys);

}  // namespace adiabat
