#include "adiabat/model.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace adiabat {

Vec pack(const Point& p) {
  Vec y(p.x.size() + 1);
  y.head(p.x.size()) = p.x;
  y(p.x.size()) = p.z;
  return y;
}

Point unpack(const Vec& v) {
  const Eigen::Index k = v.size() - 1;
  return Point{v.head(k), v(k)};
}

Mat MetricPerturbation::derivative(double eps, const Vec& x, double z, const Vec& dx,
                                   double dz) const {
  const double s = 1e-6;
  return (value(eps, x + s * dx, z + s * dz) - value(eps, x - s * dx, z - s * dz)) / (2 * s);
}

namespace {

bool symmetric(const Mat& M, double tol = 1e-12) {
  return M.rows() == M.cols() && (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * (1.0 + M.cwiseAbs().maxCoeff());
}

void require_symmetric(const Mat& M, int n, const char* what) {
  if (M.rows() != n || M.cols() != n) throw InvalidInput(std::string(what) + ": wrong size");
  if (!symmetric(M)) throw InvalidInput(std::string(what) + ": not symmetric");
}

}  // namespace

AffineH::AffineH(Mat S0, std::vector<Mat> Sx, Mat Sz)
    : S0_(std::move(S0)), Sx_(std::move(Sx)), Sz_(std::move(Sz)) {
  const int n = static_cast<int>(S0_.rows());
  require_symmetric(S0_, n, "affine h S0");
  require_symmetric(Sz_, n, "affine h Sz");
  if (static_cast<int>(Sx_.size()) != n - 1) throw InvalidInput("affine h: need n-1 Sx terms");
  for (const auto& S : Sx_) require_symmetric(S, n, "affine h Sx");
}

Mat AffineH::value(double eps, const Vec& x, double z) const {
  Mat H = eps * S0_ + z * Sz_;
  for (std::size_t i = 0; i < Sx_.size(); ++i) H += x(static_cast<Eigen::Index>(i)) * Sx_[i];
  return H;
}

Mat AffineH::derivative(double, const Vec&, double, const Vec& dx, double dz) const {
  Mat H = dz * Sz_;
  for (std::size_t i = 0; i < Sx_.size(); ++i) H += dx(static_cast<Eigen::Index>(i)) * Sx_[i];
  return H;
}

SaturatedH::SaturatedH(Mat S0, Mat S1, double a) : S0_(std::move(S0)), S1_(std::move(S1)), a_(a) {
  const int n = static_cast<int>(S0_.rows());
  require_symmetric(S0_, n, "saturated h S0");
  require_symmetric(S1_, n, "saturated h S1");
}

Mat SaturatedH::value(double eps, const Vec& x, double z) const {
  return eps * (S0_ + std::tanh(a_ * (x.squaredNorm() + z * z)) * S1_);
}

Mat SaturatedH::derivative(double eps, const Vec& x, double z, const Vec& dx, double dz) const {
  const double th = std::tanh(a_ * (x.squaredNorm() + z * z));
  return eps * (1 - th * th) * a_ * 2 * (x.dot(dx) + z * dz) * S1_;
}

ProblemTriple ProblemTriple::make(Mat A, Vec b, HPtr h, double c_scale) {
  const Eigen::Index k = A.rows();
  if (k < 1 || A.cols() != k) throw InvalidInput("A must be square with n-1 >= 1");
  if (b.size() != k) throw InvalidInput("b must have n-1 entries");
  if (!symmetric(A)) throw InvalidInput("A must be symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(A);
  const double smin = es.eigenvalues().cwiseAbs().minCoeff();
  if (!(smin > 1e-12 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff())))
    throw InvalidInput("A must be invertible");
  if (!(b.squaredNorm() < 1.0)) throw InvalidInput("|b| must be < 1");
  if (!(c_scale > 0)) throw InvalidInput("c_scale must be positive");
  const int n = static_cast<int>(k) + 1;
  if (!h) h = std::make_shared<ZeroH>(n);
  if (h->dim() != n) throw InvalidInput("h has the wrong dimension");
  const Mat h0 = h->value(0.0, Vec::Zero(k), 0.0);
  if (h0.cwiseAbs().maxCoeff() > 1e-12) throw InvalidInput("h(0,0,0) must vanish");
  const Mat probe = h->value(0.3, Vec::Constant(k, 0.7), -0.4);
  if (!symmetric(probe)) throw InvalidInput("h must be symmetric");

  ProblemTriple t;
  t.A_ = std::move(A);
  t.A_inv_ = es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
  t.b_ = std::move(b);
  t.h_ = std::move(h);
  t.c_scale_ = c_scale;
  return t;
}

ProblemTriple build_triple(const Mat& P, const Vec& q, double c, const Vec& D_diag) {
  const Eigen::Index k = P.rows();
  if (P.cols() != k || q.size() != k || D_diag.size() != k) throw InvalidInput("build_triple: size mismatch");
  if (!(c > 0)) throw InvalidInput("build_triple: c must be positive");
  if (!symmetric(P)) throw InvalidInput("build_triple: P must be symmetric");
  for (Eigen::Index i = 0; i < k; ++i)
    if (std::abs(std::abs(D_diag(i)) - 1.0) > 0) throw InvalidInput("build_triple: D must be diag(+-1)");
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  if (!(es.eigenvalues().minCoeff() > 0)) throw InvalidInput("build_triple: P must be positive definite");
  const Mat S = es.operatorSqrt();
  const Mat Sinv = es.operatorInverseSqrt();
  Mat A = S * D_diag.asDiagonal() * S / c;
  A = 0.5 * (A + A.transpose());
  Vec b = std::sqrt(c) * Sinv * q;
  if (!(b.squaredNorm() < 1.0)) throw InvalidInput("build_triple: |b| >= 1, metric data inadmissible");
  return ProblemTriple::make(std::move(A), std::move(b), nullptr, c);
}

namespace {

// H evaluated at the rescaled argument (eps, eps^2 x, eps z)
Mat h_scaled(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  return tr.h().value(eps, eps * eps * y.head(k), eps * y(k));
}

Vec grad_core(const ProblemTriple& tr, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  Vec g(k + 1);
  g.head(k) = tr.A() * y.head(k);
  g(k) = y(k) * y(k) - 1.0;
  return g;
}

}  // namespace

Vec remainder(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  if (tr.h_is_zero()) return Vec::Zero(k + 1);
  Vec r = -h_scaled(tr, eps, y) * grad_core(tr, y);
  r.head(k) /= eps;
  return r;
}

Vec remainder(const ProblemTriple& tr, double eps, const Point& p) { return remainder(tr, eps, pack(p)); }

Mat remainder_jacobian(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  const int n = static_cast<int>(k) + 1;
  Mat J = Mat::Zero(n, n);
  if (tr.h_is_zero()) return J;
  const Mat H = h_scaled(tr, eps, y);
  const Vec g = grad_core(tr, y);
  const Vec xs = eps * eps * y.head(k);
  const double zs = eps * y(k);
  for (int j = 0; j < n; ++j) {
    Vec dx = Vec::Zero(k);
    double dz = 0.0;
    Vec dg = Vec::Zero(n);
    if (j < k) {
      dx(j) = eps * eps;
      dg.head(k) = tr.A().col(j);
    } else {
      dz = eps;
      dg(k) = 2.0 * y(k);
    }
    Vec col = -tr.h().derivative(eps, xs, zs, dx, dz) * g - H * dg;
    col.head(k) /= eps;
    J.col(j) = col;
  }
  return J;
}

Vec rhs(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  const Vec x = y.head(k);
  const double z = y(k);
  Vec v(k + 1);
  const Vec Ax = tr.A() * x;
  v.head(k) = (-Ax + tr.b() * (1 - z * z)) / eps;
  v(k) = -Ax.dot(tr.b()) + (1 - z * z);
  return v + remainder(tr, eps, y);
}

Vec rhs(const ProblemTriple& tr, double eps, const Point& p) { return rhs(tr, eps, pack(p)); }

Mat rhs_jacobian(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  const double z = y(k);
  Mat J(k + 1, k + 1);
  J.topLeftCorner(k, k) = -tr.A() / eps;
  J.topRightCorner(k, 1) = -2 * z * tr.b() / eps;
  J.bottomLeftCorner(1, k) = -(tr.A() * tr.b()).transpose();
  J(k, k) = -2 * z;
  return J + remainder_jacobian(tr, eps, y);
}

double potential(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  const Vec x = y.head(k);
  const double z = y(k);
  return 0.5 * eps * x.dot(tr.A() * x) + z * z * z / 3.0 - z;
}

double potential(const ProblemTriple& tr, double eps, const Point& p) { return potential(tr, eps, pack(p)); }

Vec potential_gradient(const ProblemTriple& tr, double eps, const Vec& y) {
  Vec g = grad_core(tr, y);
  g.head(y.size() - 1) *= eps;
  return g;
}

Mat metric_inverse(const ProblemTriple& tr, double eps, const Vec& y) {
  const Eigen::Index k = y.size() - 1;
  const int n = static_cast<int>(k) + 1;
  Mat G = Mat::Zero(n, n);
  G.topLeftCorner(k, k) = Mat::Identity(k, k) / (eps * eps);
  G.topRightCorner(k, 1) = tr.b() / eps;
  G.bottomLeftCorner(1, k) = tr.b().transpose() / eps;
  G(k, k) = 1.0;
  if (!tr.h_is_zero()) {
    Vec s = Vec::Constant(n, 1.0 / eps);
    s(k) = 1.0;
    G += s.asDiagonal() * h_scaled(tr, eps, y) * s.asDiagonal();
  }
  G = 0.5 * (G + G.transpose());
  Eigen::LLT<Mat> llt(G);
  if (llt.info() != Eigen::Success) throw SolverError("metric_inverse: not positive definite (h too large for this eps)");
  return G;
}

Mat metric_inverse(const ProblemTriple& tr, double eps, const Point& p) { return metric_inverse(tr, eps, pack(p)); }

Mat metric(const ProblemTriple& tr, double eps, const Vec& y) {
  const Mat Gi = metric_inverse(tr, eps, y);
  return Gi.llt().solve(Mat::Identity(Gi.rows(), Gi.cols()));
}

Point limit_solution(const ProblemTriple& tr, double t) {
  const double c = tr.rate();
  const double s = 1.0 / std::cosh(c * t);
  return Point{tr.A_inv() * tr.b() * (s * s), std::tanh(c * t)};
}

Vec limit_velocity(const ProblemTriple& tr, double t) {
  const double c = tr.rate();
  const double s = 1.0 / std::cosh(c * t);
  const double s2 = s * s;
  const double z = std::tanh(c * t);
  const Eigen::Index k = tr.b().size();
  Vec v(k + 1);
  v.head(k) = tr.A_inv() * tr.b() * (-2 * c * s2 * z);
  v(k) = c * s2;
  return v;
}

Vec limit_acceleration(const ProblemTriple& tr, double t) {
  const double c = tr.rate();
  const double s = 1.0 / std::cosh(c * t);
  const double s2 = s * s;
  const double z = std::tanh(c * t);
  const Eigen::Index k = tr.b().size();
  Vec v(k + 1);
  v.head(k) = tr.A_inv() * tr.b() * (c * c * s2 * (4 * z * z - 2 * s2));
  v(k) = -2 * c * c * s2 * z;
  return v;
}

WPoint to_w(const ProblemTriple& tr, const Point& p) {
  return WPoint{tr.A() * p.x + tr.b() * (p.z * p.z - 1), p.z};
}

Point from_w(const ProblemTriple& tr, const WPoint& wp) {
  return Point{tr.A_inv() * (wp.w + tr.b() * (1 - wp.z * wp.z)), wp.z};
}

Mat A_eps(const ProblemTriple& tr, double eps, double z) {
  return tr.A() + 2 * eps * z * tr.b() * tr.b().transpose();
}

}  // namespace adiabat
