#include "adiabat/solver.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <limits>

namespace adiabat {

Solution newton_solve(const LinearizedSystem& sys, const NewtonOptions& opts, const GridPath* seed) {
  if (!(opts.residual_tol > 0)) throw InvalidInput("newton_solve: tolerance must be positive");
  Solution sol;
  sol.eps = sys.eps();
  GridPath delta = seed ? *seed : sys.nodes();
  if (!delta.grid.same_as(sys.grid) || delta.where != Placement::nodes) throw InvalidInput("newton_solve: seed must be a node path on the system grid");

  SpMat base_op;
  if (opts.linearization == Linearization::base) base_op = SpMat(sys.D + sys.E);

  for (int k = 0;; ++k) {
    const GridPath F = F_eps(sys, delta);
    const double r = l2_norm(sys.ctx, F);
    sol.residuals.push_back(r);
    if (!std::isfinite(r) || r > 1e8) throw SolverError("newton_solve: diverged (residual " + std::to_string(r) + ")");
    if (r <= opts.residual_tol) break;
    if (k >= opts.max_iters)
      throw SolverError("newton_solve: no convergence after " + std::to_string(k) + " iterations, last residual " + std::to_string(r));
    GridPath rhs = F;
    rhs.values *= -1.0;
    const SpMat op = opts.linearization == Linearization::base ? base_op : dF_eps(sys, delta);
    const SliceResult step = opts.linear_solve == LinearSolve::series ? slice_solve(sys, op, rhs) : slice_solve_direct(sys, op, rhs);
    if (opts.record_contraction) sol.step_norms.push_back(w12_norm(sys.ctx, step.eta));
    delta.values += step.eta.values;
    sol.iterations = k + 1;
  }

  sol.eta = delta;
  sol.gamma = sys.base;
  sol.gamma.values += delta.values;
  const GridPath w = kernel_vector(sys);
  sol.slice_certificate = std::abs(l2_inner(sys.ctx, w, delta));
  const double denom = l2_norm(sys.ctx, w) * l2_norm(sys.ctx, delta);
  sol.slice_relative = denom > 0 ? sol.slice_certificate / denom : 0.0;
  return sol;
}

Solution newton_solve(const ProblemTriple& tr, double eps, const Grid& grid, const NewtonOptions& opts) {
  if (!(eps > 0 && eps < 1)) throw InvalidInput("newton_solve: eps must lie in (0, 1)");
  return newton_solve(assemble(tr, eps, grid), opts);
}

ShiftResult time_shift_project(const LinearizedSystem& sys, const GridPath& gamma, const GridPath& w) {
  auto rho = [&](double tau) {
    GridPath d = shifted(gamma, tau);
    d.values -= sys.base.values;
    return l2_inner(sys.ctx, w, d);
  };
  const double B = 1.0 / sys.triple.rate();
  double lo = -B, hi = B;
  double flo = rho(lo), fhi = rho(hi);
  if (flo == 0.0) hi = lo;
  else if (fhi == 0.0) lo = hi;
  else if ((flo > 0) == (fhi > 0)) throw InvalidInput("time_shift_project: outside shift basin (no sign change)");

  if (lo != hi) {
    // bisection down to a narrow bracket, then one secant polish
    auto tol = [](double a, double b) { return std::abs(b - a) <= 1e-13; };
    const auto br = boost::math::tools::bisect(rho, lo, hi, tol);
    lo = br.first;
    hi = br.second;
  }
  double tau = 0.5 * (lo + hi);
  const double f_lo = rho(lo), f_hi = rho(hi);
  if (f_hi != f_lo) {
    const double sec = lo - f_lo * (hi - lo) / (f_hi - f_lo);
    if (sec >= std::min(lo, hi) && sec <= std::max(lo, hi)) tau = sec;
  }
  ShiftResult out;
  out.tau = tau;
  out.gamma_tau = shifted(gamma, tau);
  out.rho = rho(tau);
  return out;
}

ShiftResult time_shift_project(const LinearizedSystem& sys, const GridPath& gamma) {
  return time_shift_project(sys, gamma, kernel_vector(sys));
}

namespace {

struct WField {
  const ProblemTriple& tr;
  double eps;

  Point to_point(const Vec& y) const {
    const Eigen::Index k = y.size() - 1;
    return from_w(tr, WPoint{y.head(k), y(k)});
  }

  // (w, z) velocity and its Jacobian
  void eval(const Vec& y, Vec& f, Mat& J) const {
    const Eigen::Index k = y.size() - 1;
    const Point p = to_point(y);
    const Vec xz = pack(p);
    const double z = p.z;
    const Vec v = rhs(tr, eps, xz);
    const Mat Jx = rhs_jacobian(tr, eps, xz);
    f.resize(k + 1);
    f.head(k) = tr.A() * v.head(k) + 2 * z * v(k) * tr.b();
    f(k) = v(k);
    Mat G(k + 1, k + 1);
    G.topRows(k) = tr.A() * Jx.topRows(k) + 2 * z * tr.b() * Jx.row(k);
    G.topRightCorner(k, 1) += 2 * v(k) * tr.b();
    G.row(k) = Jx.row(k);
    Mat Pinv = Mat::Zero(k + 1, k + 1);
    Pinv.topLeftCorner(k, k) = tr.A_inv();
    Pinv.topRightCorner(k, 1) = -2 * z * tr.A_inv() * tr.b();
    Pinv(k, k) = 1.0;
    J = G * Pinv;
  }
};

// One implicit midpoint step; false if Newton fails to converge.
bool midpoint_step(const WField& F, const Vec& y0, double h, double tol, Vec& y1) {
  const Eigen::Index n = y0.size();
  y1 = y0;
  Vec f;
  Mat J;
  for (int it = 0; it < 25; ++it) {
    const Vec mid = 0.5 * (y0 + y1);
    F.eval(mid, f, J);
    const Vec G = y1 - y0 - h * f;
    const Mat JG = Mat::Identity(n, n) - 0.5 * h * J;
    const Vec d = JG.partialPivLu().solve(G);
    y1 -= d;
    if (!y1.allFinite()) return false;
    if (d.norm() <= tol * (1.0 + y1.norm())) return true;
  }
  return false;
}

}  // namespace

GridPath integrate(const ProblemTriple& tr, double eps, const Point& start, const Grid& grid, const StepOptions& opts) {
  if (!(eps > 0)) throw InvalidInput("integrate: eps must be positive");
  const WField F{tr, eps};
  const double dt = grid.dt();
  double hmax = opts.max_step > 0 ? opts.max_step : std::min(dt, eps / 10);
  const int sub = std::max(1, static_cast<int>(std::ceil(dt / hmax - 1e-9)));
  const double h = dt / sub;

  GridPath out(grid, tr.n());
  const WPoint w0 = to_w(tr, start);
  Vec y(tr.n());
  y.head(tr.n() - 1) = w0.w;
  y(tr.n() - 1) = w0.z;
  out.col(0) = pack(start);
  int stop_at = -1;
  for (int i = 1; i < grid.m; ++i) {
    for (int s = 0; s < sub; ++s) {
      // adaptive halving when the per-step Newton solve fails
      double remaining = h;
      double step = h;
      while (remaining > 0) {
        step = std::min(step, remaining);
        Vec y1;
        if (midpoint_step(F, y, step, opts.newton_tol, y1)) {
          y = y1;
          remaining -= step;
        } else {
          step *= 0.5;
          if (step < 1e-12 * std::max(1.0, h)) throw SolverError("integrate: step-size underflow (stiffness not resolved)");
        }
      }
    }
    out.col(i) = pack(F.to_point(y));
    if (stop_at >= 0 && i >= stop_at) break;
    if (stop_at < 0 && opts.stop && opts.stop(F.to_point(y))) {
      // keep an odd sample count so the output is again a valid grid
      stop_at = (i % 2 == 0) ? i : i + 1;
      if (stop_at == i) break;
    }
  }
  if (stop_at < 0 || stop_at >= grid.m) return out;
  const int m2 = stop_at + 1;
  const double T2 = 0.5 * (m2 - 1) * dt;
  Grid g2(T2, m2, grid.t(0) + T2);
  GridPath cut(g2, tr.n());
  cut.values = out.values.leftCols(m2);
  return cut;
}

Alignment align_and_compare(const WeightContext& ctx, const GridPath& g1, const GridPath& g2, double half_width) {
  if (!g1.grid.same_as(g2.grid)) throw InvalidInput("align_and_compare: paths on different grids");
  const double B = half_width > 0 ? half_width : 2.0 / (1.0 - ctx.b.squaredNorm());
  auto dist = [&](double tau) {
    GridPath d = shifted(g1, tau);
    d.values -= g2.values;
    return l2_norm(ctx, d);
  };
  const int N = 200;
  double best = 0.0, fbest = std::numeric_limits<double>::infinity();
  for (int j = 0; j <= N; ++j) {
    const double tau = -B + 2 * B * j / N;
    const double f = dist(tau);
    if (f < fbest) {
      fbest = f;
      best = tau;
    }
  }
  const double step = 2 * B / N;
  const auto r = boost::math::tools::brent_find_minima(dist, best - step, best + step, 52);
  Alignment a;
  if (r.second < fbest) {
    a.tau = r.first;
    a.distance = r.second;
  } else {
    a.tau = best;
    a.distance = fbest;
  }
  return a;
}

Vec unstable_direction(const ProblemTriple& tr, double eps) {
  Vec p = Vec::Zero(tr.n());
  p(tr.n() - 1) = -1.0;
  const Mat J = rhs_jacobian(tr, eps, p);
  Eigen::EigenSolver<Mat> es(J);
  int pick = -1;
  double lam = std::numeric_limits<double>::infinity();
  for (int j = 0; j < tr.n(); ++j) {
    const auto ev = es.eigenvalues()(j);
    if (std::abs(ev.imag()) < 1e-12 && ev.real() > 0 && ev.real() < lam) {
      lam = ev.real();
      pick = j;
    }
  }
  if (pick < 0) throw SolverError("unstable_direction: no real unstable eigenvalue at (0, -1)");
  Vec v = es.eigenvectors().col(pick).real();
  v /= v.norm();
  if (v(tr.n() - 1) < 0) v = -v;
  return v;
}

}  // namespace adiabat
