#include "adiabat/operators.hpp"

#include <cmath>

namespace adiabat {

using Trip = Eigen::Triplet<double>;

Mat Q_matrix(const ProblemTriple& tr, double eps, double z) {
  const int k = tr.n() - 1;
  Mat Q(k + 1, k + 1);
  Q.topLeftCorner(k, k) = tr.A() / eps;
  Q.topRightCorner(k, 1) = 2 * z * tr.b() / eps;
  Q.bottomLeftCorner(1, k) = (tr.A() * tr.b()).transpose();
  Q(k, k) = 2 * z;
  return Q;
}

Mat Q_factored(const ProblemTriple& tr, double eps, double z) {
  const int k = tr.n() - 1;
  const WeightContext ctx(eps, tr.b());
  Mat B = Mat::Zero(k + 1, k + 1);
  B.topLeftCorner(k, k) = eps * tr.A();
  B(k, k) = 2 * z;
  return ctx.g0.llt().solve(B);
}

namespace {

void add_block(std::vector<Trip>& t, int r0, int c0, const Mat& B) {
  for (Eigen::Index r = 0; r < B.rows(); ++r)
    for (Eigen::Index c = 0; c < B.cols(); ++c)
      if (B(r, c) != 0.0) t.emplace_back(r0 + static_cast<int>(r), c0 + static_cast<int>(c), B(r, c));
}

// Trapezoidal box operator with node blocks J_i: cells x nodes.
SpMat box_operator(const Grid& g, int n, const std::vector<Mat>& J) {
  const int m = g.m;
  const double dt = g.dt();
  const Mat I = Mat::Identity(n, n);
  std::vector<Trip> t;
  t.reserve(static_cast<std::size_t>(2 * (m - 1) * n * n));
  for (int i = 0; i + 1 < m; ++i) {
    add_block(t, i * n, i * n, -I / dt + 0.5 * J[static_cast<std::size_t>(i)]);
    add_block(t, i * n, (i + 1) * n, I / dt + 0.5 * J[static_cast<std::size_t>(i + 1)]);
  }
  SpMat S((m - 1) * n, m * n);
  S.setFromTriplets(t.begin(), t.end());
  return S;
}

std::vector<Mat> remainder_blocks(const LinearizedSystem& sys, const GridPath* eta) {
  std::vector<Mat> out(static_cast<std::size_t>(sys.grid.m));
  for (int i = 0; i < sys.grid.m; ++i) {
    Vec y = sys.base.col(i);
    if (eta) y += eta->col(i);
    out[static_cast<std::size_t>(i)] = -remainder_jacobian(sys.triple, sys.eps(), y);
  }
  return out;
}

Vec as_vec(const GridPath& p) { return p.flat(); }

}  // namespace

GridPath from_flat(const Grid& g, int n, Placement p, const Vec& v) {
  GridPath out(g, n, p);
  out.set_flat(v);
  return out;
}

LinearizedSystem assemble(const ProblemTriple& tr, double eps, const Grid& grid) {
  if (!(eps > 0)) throw InvalidInput("assemble: eps must be positive");
  if (grid.m < 3) throw InvalidInput("assemble: grid too coarse");
  LinearizedSystem sys{tr, WeightContext(eps, tr.b()), grid, {}, {}, {}, {}, {}, {}, {}, {}, nullptr};
  const int n = tr.n();
  const int m = grid.m;
  sys.base = sample_limit_solution(tr, grid);
  sys.base_velocity = sample_limit_velocity(tr, grid);
  sys.Q.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) sys.Q[static_cast<std::size_t>(i)] = Q_matrix(tr, eps, sys.base.zeta(i));

  sys.D = box_operator(grid, n, sys.Q);

  const double dt = grid.dt();
  const Mat I = Mat::Identity(n, n);
  std::vector<Trip> t;
  for (int i = 0; i < m; ++i) {
    const Mat& Qi = sys.Q[static_cast<std::size_t>(i)];
    if (i >= 1) add_block(t, i * n, (i - 1) * n, I / dt + 0.5 * Qi);
    if (i + 1 < m) add_block(t, i * n, i * n, -I / dt + 0.5 * Qi);
  }
  sys.D_star.resize(m * n, (m - 1) * n);
  sys.D_star.setFromTriplets(t.begin(), t.end());

  if (tr.h_is_zero()) {
    sys.E.resize((m - 1) * n, m * n);
  } else {
    const std::vector<Mat> Rj = remainder_blocks(sys, nullptr);
    SpMat withE = box_operator(grid, n, Rj);
    // strip the difference part: box_operator(J) - box_operator(0)
    std::vector<Mat> zero(static_cast<std::size_t>(m), Mat::Zero(n, n));
    sys.E = SpMat(withE - box_operator(grid, n, zero));
    sys.E.prune(0.0);
  }

  const GridPath nodes = sys.nodes();
  const GridPath cells = sys.cells();
  sys.W_nodes = block_weight(quadrature_weights(nodes), sys.ctx.g0);
  sys.W_cells = block_weight(quadrature_weights(cells), sys.ctx.g0);

  auto lu = std::make_shared<Eigen::SparseLU<SpMat>>();
  SpMat DDs = sys.D * sys.D_star;
  DDs.makeCompressed();
  lu->analyzePattern(DDs);
  lu->factorize(DDs);
  if (lu->info() != Eigen::Success)
    throw SolverError("assemble: D D* factorization failed (grid too coarse or eps too small for dt)");
  sys.normal = lu;
  return sys;
}

GridPath apply_D(const LinearizedSystem& sys, const GridPath& eta) {
  if (!eta.grid.same_as(sys.grid) || eta.where != Placement::nodes) throw InvalidInput("apply_D: node path on system grid expected");
  return from_flat(sys.grid, sys.n(), Placement::cells, sys.D * as_vec(eta));
}

GridPath apply_D_star(const LinearizedSystem& sys, const GridPath& u) {
  if (!u.grid.same_as(sys.grid) || u.where != Placement::cells) throw InvalidInput("apply_D_star: cell path on system grid expected");
  return from_flat(sys.grid, sys.n(), Placement::nodes, sys.D_star * as_vec(u));
}

GridPath apply_E(const LinearizedSystem& sys, const GridPath& eta) {
  if (!eta.grid.same_as(sys.grid) || eta.where != Placement::nodes) throw InvalidInput("apply_E: node path on system grid expected");
  GridPath out = sys.nodes();
  if (sys.triple.h_is_zero()) return out;
  for (int i = 0; i < sys.grid.m; ++i)
    out.col(i) = -remainder_jacobian(sys.triple, sys.eps(), sys.base.col(i)) * eta.col(i);
  return out;
}

GridPath F_eps(const LinearizedSystem& sys, const GridPath& eta) {
  if (!eta.grid.same_as(sys.grid) || eta.where != Placement::nodes) throw InvalidInput("F_eps: node path on system grid expected");
  const int n = sys.n();
  const int k = n - 1;
  const int m = sys.grid.m;
  const double eps = sys.eps();
  Mat node(n, m);
  Vec be(n);
  be.head(k) = sys.triple.b() / eps;
  be(k) = 1.0;
  for (int i = 0; i < m; ++i) {
    const double ze = eta.zeta(i);
    Vec v = sys.Q[static_cast<std::size_t>(i)] * eta.col(i) + be * (ze * ze);
    v.head(k) += sys.base_velocity.col(i).head(k);
    if (!sys.triple.h_is_zero()) v -= remainder(sys.triple, eps, Vec(sys.base.col(i) + eta.col(i)));
    node.col(i) = v;
  }
  GridPath out = sys.cells();
  const double dt = sys.grid.dt();
  for (int i = 0; i + 1 < m; ++i)
    out.col(i) = (eta.col(i + 1) - eta.col(i)) / dt + 0.5 * (node.col(i) + node.col(i + 1));
  return out;
}

SpMat dF_eps(const LinearizedSystem& sys, const GridPath& eta) {
  const int n = sys.n();
  const int k = n - 1;
  const int m = sys.grid.m;
  const double eps = sys.eps();
  std::vector<Mat> J(static_cast<std::size_t>(m));
  Vec be(n);
  be.head(k) = sys.triple.b() / eps;
  be(k) = 1.0;
  std::vector<Mat> Rj;
  if (!sys.triple.h_is_zero()) Rj = remainder_blocks(sys, &eta);
  for (int i = 0; i < m; ++i) {
    Mat Ji = sys.Q[static_cast<std::size_t>(i)];
    Ji.col(k) += 2 * eta.zeta(i) * be;
    if (!Rj.empty()) Ji += Rj[static_cast<std::size_t>(i)];
    J[static_cast<std::size_t>(i)] = Ji;
  }
  return box_operator(sys.grid, n, J);
}

SpMat D_dirichlet(const LinearizedSystem& sys) {
  const int n = sys.n();
  return sys.D.middleCols(n, (sys.grid.m - 2) * n);
}

GridPath solve_normal(const LinearizedSystem& sys, const GridPath& rhs) {
  if (!rhs.grid.same_as(sys.grid) || rhs.where != Placement::cells) throw InvalidInput("solve_normal: cell path on system grid expected");
  Vec v = sys.normal->solve(as_vec(rhs));
  return from_flat(sys.grid, sys.n(), Placement::cells, v);
}

SliceResult slice_solve(const LinearizedSystem& sys, const SpMat& A_op, const GridPath& rhs, const SliceOptions& opts) {
  if (!rhs.grid.same_as(sys.grid) || rhs.where != Placement::cells) throw InvalidInput("slice_solve: cell path on system grid expected");
  SliceResult res{sys.nodes(), sys.cells(), {}};
  const Vec mu = as_vec(rhs);
  const double mu_norm = l2_norm(sys.ctx, rhs);
  if (mu_norm == 0.0) {
    res.report.converged = true;
    return res;
  }
  Vec acc = Vec::Zero(mu.size());
  Vec best = acc;
  Vec r = mu;
  double prev = mu_norm;
  auto& rep = res.report;
  for (int it = 1; it <= opts.max_iters; ++it) {
    acc += sys.normal->solve(r);
    r = mu - A_op * (sys.D_star * acc);
    const double rn = l2_norm(sys.ctx, from_flat(sys.grid, sys.n(), Placement::cells, r));
    // a first step that does not contract means the series diverges
    if (it == 1 && rn >= prev) throw SolverError("slice_solve: series does not contract (ratio " + std::to_string(rn / prev) + ")");
    // later stalls, or sub-halving steps deep below the data, are the
    // round-off floor of the D D* solve: keep the previous iterate
    const bool floor = it > 1 && (rn >= prev || (rn > 0.5 * prev && rn <= 1e-8 * mu_norm));
    if (floor) {
      rep.converged = true;
      acc = best;
      break;
    }
    rep.residual_history.push_back(rn);
    rep.iterations = it;
    rep.contraction = std::max(rep.contraction, rn / prev);
    best = acc;
    prev = rn;
    if (rn <= opts.rel_tol * mu_norm) {
      rep.converged = true;
      break;
    }
  }
  if (!res.report.converged) throw SolverError("slice_solve: no convergence within max_iters");
  res.upsilon.set_flat(acc);
  res.eta.set_flat(sys.D_star * acc);
  return res;
}

SliceResult slice_solve_direct(const LinearizedSystem& sys, const SpMat& A_op, const GridPath& rhs) {
  SpMat M = A_op * sys.D_star;
  M.makeCompressed();
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(M);
  lu.factorize(M);
  if (lu.info() != Eigen::Success) throw SolverError("slice_solve_direct: factorization failed");
  SliceResult res{sys.nodes(), sys.cells(), {}};
  const Vec u = lu.solve(as_vec(rhs));
  res.upsilon.set_flat(u);
  res.eta.set_flat(sys.D_star * u);
  const Vec r = as_vec(rhs) - M * u;
  res.report.iterations = 1;
  res.report.residual_history.push_back(l2_norm(sys.ctx, from_flat(sys.grid, sys.n(), Placement::cells, r)));
  res.report.converged = true;
  return res;
}

GridPath kernel_vector(const LinearizedSystem& sys) {
  const GridPath& w0 = sys.base_velocity;
  const GridPath u = solve_normal(sys, apply_D(sys, w0));
  GridPath w = w0;
  w.values -= apply_D_star(sys, u).values;
  return w;
}

}  // namespace adiabat
