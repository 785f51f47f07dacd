#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace adiabat {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad data handed to an operation (violated precondition).
class InvalidInput : public Error {
public:
  using Error::Error;
};

// Numerical breakdown: divergence, singular factorization, step underflow.
class SolverError : public Error {
public:
  using Error::Error;
};

struct Point {
  Vec x;
  double z = 0.0;
};

struct WPoint {
  Vec w;
  double z = 0.0;
};

Vec pack(const Point& p);
Point unpack(const Vec& v);

// The metric perturbation h: (eps, x, z) -> symmetric n x n matrix.
// Implementations must be stateless so they can be shared across threads.
class MetricPerturbation {
public:
  virtual ~MetricPerturbation() = default;
  virtual int dim() const = 0;
  virtual Mat value(double eps, const Vec& x, double z) const = 0;
  // Directional derivative in the (x, z) slot. Default is a central difference.
  virtual Mat derivative(double eps, const Vec& x, double z, const Vec& dx, double dz) const;
  virtual bool is_zero() const { return false; }
  virtual std::string kind() const = 0;
};

using HPtr = std::shared_ptr<const MetricPerturbation>;

class ZeroH final : public MetricPerturbation {
public:
  explicit ZeroH(int n) : n_(n) {}
  int dim() const override { return n_; }
  Mat value(double, const Vec&, double) const override { return Mat::Zero(n_, n_); }
  Mat derivative(double, const Vec&, double, const Vec&, double) const override {
    return Mat::Zero(n_, n_);
  }
  bool is_zero() const override { return true; }
  std::string kind() const override { return "zero"; }

private:
  int n_;
};

// h = eps*S0 + sum_i x_i Sx[i] + z Sz
class AffineH final : public MetricPerturbation {
public:
  AffineH(Mat S0, std::vector<Mat> Sx, Mat Sz);
  int dim() const override { return static_cast<int>(S0_.rows()); }
  Mat value(double eps, const Vec& x, double z) const override;
  Mat derivative(double eps, const Vec& x, double z, const Vec& dx, double dz) const override;
  std::string kind() const override { return "affine"; }
  const Mat& S0() const { return S0_; }
  const std::vector<Mat>& Sx() const { return Sx_; }
  const Mat& Sz() const { return Sz_; }

private:
  Mat S0_;
  std::vector<Mat> Sx_;
  Mat Sz_;
};

// h = eps * (S0 + tanh(a (|x|^2 + z^2)) S1), bounded in (x, z)
class SaturatedH final : public MetricPerturbation {
public:
  SaturatedH(Mat S0, Mat S1, double a);
  int dim() const override { return static_cast<int>(S0_.rows()); }
  Mat value(double eps, const Vec& x, double z) const override;
  Mat derivative(double eps, const Vec& x, double z, const Vec& dx, double dz) const override;
  std::string kind() const override { return "saturated"; }
  const Mat& S0() const { return S0_; }
  const Mat& S1() const { return S1_; }
  double a() const { return a_; }

private:
  Mat S0_, S1_;
  double a_;
};

// Caller-supplied h; derivative falls back to finite differences.
class FunctionH final : public MetricPerturbation {
public:
  using Fn = std::function<Mat(double, const Vec&, double)>;
  FunctionH(int n, Fn fn) : n_(n), fn_(std::move(fn)) {}
  int dim() const override { return n_; }
  Mat value(double eps, const Vec& x, double z) const override { return fn_(eps, x, z); }
  std::string kind() const override { return "custom"; }

private:
  int n_;
  Fn fn_;
};

class ProblemTriple {
public:
  // Validates A symmetric invertible, |b| < 1, h symmetric with h(0,0,0) = 0.
  static ProblemTriple make(Mat A, Vec b, HPtr h = nullptr, double c_scale = 1.0);

  int n() const { return static_cast<int>(b_.size()) + 1; }
  const Mat& A() const { return A_; }
  const Mat& A_inv() const { return A_inv_; }
  const Vec& b() const { return b_; }
  double b_norm2() const { return b_.squaredNorm(); }
  // 1 - |b|^2, the slow rate of the limit solution
  double rate() const { return 1.0 - b_.squaredNorm(); }
  const MetricPerturbation& h() const { return *h_; }
  const HPtr& h_ptr() const { return h_; }
  bool h_is_zero() const { return h_->is_zero(); }
  double c_scale() const { return c_scale_; }
  ProblemTriple with_h(HPtr h) const { return make(A_, b_, std::move(h), c_scale_); }

private:
  ProblemTriple() = default;
  Mat A_, A_inv_;
  Vec b_;
  HPtr h_;
  double c_scale_ = 1.0;
};

// Normal form: A = (1/c) P^{1/2} D P^{1/2}, b = sqrt(c) P^{-1/2} q, h = 0.
ProblemTriple build_triple(const Mat& P, const Vec& q, double c, const Vec& D_diag);

Vec rhs(const ProblemTriple& tr, double eps, const Point& p);
Vec rhs(const ProblemTriple& tr, double eps, const Vec& y);
// Jacobian of rhs with respect to (x, z).
Mat rhs_jacobian(const ProblemTriple& tr, double eps, const Vec& y);

Vec remainder(const ProblemTriple& tr, double eps, const Point& p);
Vec remainder(const ProblemTriple& tr, double eps, const Vec& y);
// d R at y applied to every coordinate direction (n x n).
Mat remainder_jacobian(const ProblemTriple& tr, double eps, const Vec& y);

double potential(const ProblemTriple& tr, double eps, const Point& p);
double potential(const ProblemTriple& tr, double eps, const Vec& y);
Vec potential_gradient(const ProblemTriple& tr, double eps, const Vec& y);

// Throws SolverError when the result is not positive definite.
Mat metric_inverse(const ProblemTriple& tr, double eps, const Point& p);
Mat metric_inverse(const ProblemTriple& tr, double eps, const Vec& y);
Mat metric(const ProblemTriple& tr, double eps, const Vec& y);

Point limit_solution(const ProblemTriple& tr, double t);
Vec limit_velocity(const ProblemTriple& tr, double t);
Vec limit_acceleration(const ProblemTriple& tr, double t);

WPoint to_w(const ProblemTriple& tr, const Point& p);
Point from_w(const ProblemTriple& tr, const WPoint& wp);

Mat A_eps(const ProblemTriple& tr, double eps, double z);

}  // namespace adiabat
