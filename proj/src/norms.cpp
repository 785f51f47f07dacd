#include "adiabat/norms.hpp"

#include <Eigen/Eigenvalues>
#include <boost/math/interpolators/cardinal_cubic_b_spline.hpp>
#include <algorithm>
#include <cmath>

namespace adiabat {

Grid::Grid(double T_, int m_, double center_) : T(T_), m(m_), center(center_) {
  if (!(T > 0)) throw InvalidInput("grid: T must be positive");
  if (m < 3 || m % 2 == 0) throw InvalidInput("grid: need odd m >= 3");
}

bool Grid::same_as(const Grid& o) const {
  return m == o.m && std::abs(T - o.T) <= 1e-12 * T && std::abs(center - o.center) <= 1e-12 * (1 + T);
}

Grid grid_with_spacing(double T, double dt) {
  int m = static_cast<int>(std::ceil(2 * T / dt - 1e-9)) + 1;
  if (m % 2 == 0) ++m;
  return Grid(T, std::max(m, 3));
}

Grid default_grid(const ProblemTriple& tr, double eps) {
  const double c = tr.rate();
  double rho = 0.0;
  for (double z : {-1.0, 1.0}) {
    const int k = tr.n() - 1;
    Mat Q(k + 1, k + 1);
    Q.topLeftCorner(k, k) = tr.A() / eps;
    Q.topRightCorner(k, 1) = 2 * z * tr.b() / eps;
    Q.bottomLeftCorner(1, k) = (tr.A() * tr.b()).transpose();
    Q(k, k) = 2 * z;
    rho = std::max(rho, Q.eigenvalues().cwiseAbs().maxCoeff());
  }
  const double dt = std::min({0.02 / c, eps / 5, 1.0 / rho});
  return grid_with_spacing(20.0 / c, dt);
}

GridPath::GridPath(Grid g, int n, Placement p) : grid(g), where(p) {
  values = Mat::Zero(n, p == Placement::nodes ? g.m : g.m - 1);
}

void GridPath::set_flat(const Vec& v) {
  if (v.size() != values.size()) throw InvalidInput("set_flat: size mismatch");
  flat() = v;
}

GridPath sample(const Grid& g, int n, const std::function<Vec(double)>& f, Placement p) {
  GridPath out(g, n, p);
  for (int i = 0; i < out.count(); ++i) out.col(i) = f(out.time(i));
  return out;
}

GridPath sample_limit_solution(const ProblemTriple& tr, const Grid& g) {
  return sample(g, tr.n(), [&](double t) { return pack(limit_solution(tr, t)); });
}

GridPath sample_limit_velocity(const ProblemTriple& tr, const Grid& g) {
  return sample(g, tr.n(), [&](double t) { return limit_velocity(tr, t); });
}

GridPath derivative(const GridPath& p) {
  if (p.where != Placement::nodes) throw InvalidInput("derivative: node samples expected");
  GridPath d(p.grid, p.n(), Placement::nodes);
  const int m = p.count();
  const double h = p.grid.dt();
  const Mat& v = p.values;
  for (int i = 1; i + 1 < m; ++i) d.col(i) = (v.col(i + 1) - v.col(i - 1)) / (2 * h);
  d.col(0) = (-3 * v.col(0) + 4 * v.col(1) - v.col(2)) / (2 * h);
  d.col(m - 1) = (3 * v.col(m - 1) - 4 * v.col(m - 2) + v.col(m - 3)) / (2 * h);
  return d;
}

GridPath derivative4(const GridPath& p) {
  if (p.where != Placement::nodes) throw InvalidInput("derivative4: node samples expected");
  const int m = p.count();
  if (m < 5) return derivative(p);
  GridPath d(p.grid, p.n(), Placement::nodes);
  const double h = p.grid.dt();
  const Mat& v = p.values;
  for (int i = 2; i + 2 < m; ++i)
    d.col(i) = (-v.col(i + 2) + 8 * v.col(i + 1) - 8 * v.col(i - 1) + v.col(i - 2)) / (12 * h);
  // one-sided fourth order stencils at the two outermost nodes on each side
  d.col(0) = (-25 * v.col(0) + 48 * v.col(1) - 36 * v.col(2) + 16 * v.col(3) - 3 * v.col(4)) / (12 * h);
  d.col(1) = (-3 * v.col(0) - 10 * v.col(1) + 18 * v.col(2) - 6 * v.col(3) + v.col(4)) / (12 * h);
  d.col(m - 1) = (25 * v.col(m - 1) - 48 * v.col(m - 2) + 36 * v.col(m - 3) - 16 * v.col(m - 4) + 3 * v.col(m - 5)) / (12 * h);
  d.col(m - 2) = (3 * v.col(m - 1) + 10 * v.col(m - 2) - 18 * v.col(m - 3) + 6 * v.col(m - 4) - v.col(m - 5)) / (12 * h);
  return d;
}

WeightContext::WeightContext(double eps_, Vec b_) : eps(eps_), b(std::move(b_)) {
  if (!(eps > 0)) throw InvalidInput("weight context: eps must be positive");
  const double nb = b.squaredNorm();
  if (!(nb < 1)) throw InvalidInput("weight context: |b| must be < 1");
  const Eigen::Index k = b.size();
  M = Vec::Constant(k + 1, eps);
  M(k) = 1.0;
  const double c = 1.0 - nb;
  g0 = Mat::Zero(k + 1, k + 1);
  g0.topLeftCorner(k, k) = eps * eps * (Mat::Identity(k, k) + b * b.transpose() / c);
  g0.topRightCorner(k, 1) = -eps * b / c;
  g0.bottomLeftCorner(1, k) = -eps * b.transpose() / c;
  g0(k, k) = 1.0 / c;
}

WeightContext make_context(const ProblemTriple& tr, double eps) { return WeightContext(eps, tr.b()); }

double g0_inner(const WeightContext& ctx, const Vec& a, const Vec& c) {
  const Eigen::Index k = ctx.b.size();
  const double nb = ctx.b.squaredNorm();
  const double e = ctx.eps;
  const double sa = a(k) - e * ctx.b.dot(a.head(k));
  const double sc = c(k) - e * ctx.b.dot(c.head(k));
  return e * e * a.head(k).dot(c.head(k)) + sa * sc / (1 - nb);
}

double pointwise_norm(const WeightContext& ctx, const Vec& eta) {
  return std::sqrt(std::max(0.0, g0_inner(ctx, eta, eta)));
}

Vec quadrature_weights(const GridPath& p) {
  Vec w = Vec::Constant(p.count(), p.grid.dt());
  if (p.where == Placement::nodes) {
    w(0) *= 0.5;
    w(p.count() - 1) *= 0.5;
  }
  return w;
}

namespace {

void require_match(const GridPath& a, const GridPath& b) {
  if (!a.grid.same_as(b.grid) || a.where != b.where || a.n() != b.n())
    throw InvalidInput("grid paths live on different grids");
}

}  // namespace

double l2_inner(const WeightContext& ctx, const GridPath& a, const GridPath& b) {
  require_match(a, b);
  const Vec w = quadrature_weights(a);
  const Mat Gb = ctx.g0 * b.values;
  return (a.values.cwiseProduct(Gb).colwise().sum().transpose().array() * w.array()).sum();
}

double l2_norm(const WeightContext& ctx, const GridPath& p) {
  return std::sqrt(std::max(0.0, l2_inner(ctx, p, p)));
}

double w12_norm(const WeightContext& ctx, const GridPath& p, const GridPath& dp) {
  require_match(p, dp);
  const double a = l2_norm(ctx, p);
  const double b = l2_norm(ctx, dp);
  return std::sqrt(a * a + b * b);
}

double w12_norm(const WeightContext& ctx, const GridPath& p) { return w12_norm(ctx, p, derivative(p)); }

double linf_norm(const WeightContext& ctx, const GridPath& p) {
  const int k = p.n() - 1;
  if (p.count() == 0) return 0.0;
  const double xi = p.values.topRows(k).cwiseAbs().maxCoeff();
  const double ze = p.values.row(k).cwiseAbs().maxCoeff();
  return ctx.eps * xi + ze;
}

double sobolev_ratio(const WeightContext& ctx, const GridPath& p, const GridPath& dp) {
  const double w = w12_norm(ctx, p, dp);
  if (!(w > 0)) throw InvalidInput("sobolev_ratio: zero path");
  return std::sqrt(ctx.eps) * linf_norm(ctx, p) / w;
}

GridPath shifted(const GridPath& p, double tau) {
  using boost::math::interpolators::cardinal_cubic_b_spline;
  GridPath out = p;
  const int cnt = p.count();
  const double h = p.grid.dt();
  const double t0 = p.time(0);
  const double t1 = p.time(cnt - 1);
  std::vector<double> row(static_cast<std::size_t>(cnt));
  for (int r = 0; r < p.n(); ++r) {
    for (int i = 0; i < cnt; ++i) row[static_cast<std::size_t>(i)] = p.values(r, i);
    // clamped ends: paths here are flat near the truncation points
    cardinal_cubic_b_spline<double> s(row.data(), row.size(), t0, h, 0.0, 0.0);
    for (int i = 0; i < cnt; ++i) {
      const double t = p.time(i) + tau;
      if (t <= t0) out.values(r, i) = row.front();
      else if (t >= t1) out.values(r, i) = row.back();
      else out.values(r, i) = s(t);
    }
  }
  return out;
}

GridPath zoom(const GridPath& lp, double eps) {
  if (!(eps > 0)) throw InvalidInput("zoom: eps must be positive");
  const Grid g(lp.grid.T * eps, lp.grid.m, lp.grid.center * eps);
  GridPath out(g, lp.n(), lp.where);
  const int k = lp.n() - 1;
  out.values.topRows(k) = lp.values.topRows(k) / (eps * eps);
  out.values.row(k) = lp.values.row(k) / eps;
  return out;
}

GridPath unzoom(const GridPath& p, double eps) {
  if (!(eps > 0)) throw InvalidInput("unzoom: eps must be positive");
  const Grid g(p.grid.T / eps, p.grid.m, p.grid.center / eps);
  GridPath out(g, p.n(), p.where);
  const int k = p.n() - 1;
  out.values.topRows(k) = p.values.topRows(k) * (eps * eps);
  out.values.row(k) = p.values.row(k) * eps;
  return out;
}

}  // namespace adiabat
