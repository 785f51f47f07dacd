#include "adiabat/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <random>

namespace adiabat {

SpMat identity(int n) {
  SpMat I(n, n);
  I.setIdentity();
  return I;
}

SpMat block_weight(const Vec& w, const Mat& G) {
  const Eigen::Index n = G.rows();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(w.size() * n * n));
  for (Eigen::Index i = 0; i < w.size(); ++i)
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c)
        if (G(r, c) != 0.0) trip.emplace_back(i * n + r, i * n + c, w(i) * G(r, c));
  SpMat W(w.size() * n, w.size() * n);
  W.setFromTriplets(trip.begin(), trip.end());
  return W;
}

namespace {

// B-orthonormalize columns in place (modified Gram-Schmidt, two passes).
void b_orthonormalize(Mat& Y, const SpMat& B) {
  for (int pass = 0; pass < 2; ++pass) {
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      for (Eigen::Index i = 0; i < j; ++i) {
        const double c = Y.col(i).dot(B * Y.col(j));
        Y.col(j) -= c * Y.col(i);
      }
      const double nrm = std::sqrt(std::max(0.0, Y.col(j).dot(B * Y.col(j))));
      if (nrm > 0) Y.col(j) /= nrm;
    }
  }
}

}  // namespace

SingularEstimate smallest_singular_values(const SpMat& op, const SpMat& R, const SpMat& Wd,
                                          const SpMat& Wc, int k, int max_iter, double tol) {
  const SpMat OR = op * R;
  const SpMat K = SpMat(OR.transpose() * Wc * OR);
  const SpMat B = SpMat(R.transpose() * Wd * R);
  const Eigen::Index N = K.rows();
  const int p = static_cast<int>(std::min<Eigen::Index>(N, k + 4));
  if (k < 1 || k > p) throw InvalidInput("smallest_singular_values: bad k");

  double kd = 0, bd = 0;
  for (Eigen::Index i = 0; i < N; ++i) {
    kd += K.coeff(i, i);
    bd += B.coeff(i, i);
  }
  const double shift = 1e-8 * kd / bd;
  Eigen::SimplicialLDLT<SpMat> ldlt;
  ldlt.compute(SpMat(K + shift * B));
  if (ldlt.info() != Eigen::Success) throw SolverError("smallest_singular_values: factorization failed");

  std::mt19937_64 rng(12345);
  std::normal_distribution<double> nd;
  Mat X(N, p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = nd(rng);
  b_orthonormalize(X, B);

  auto sigma = [&](const Vec& x) {
    const Vec a = OR * x;
    const Vec r = R * x;
    return std::sqrt(std::max(0.0, a.dot(Wc * a)) / std::max(1e-300, r.dot(Wd * r)));
  };

  SingularEstimate out;
  std::vector<double> prev(static_cast<std::size_t>(k), -1.0);
  for (int it = 1; it <= max_iter; ++it) {
    Mat Y = ldlt.solve(Mat(B * X));
    b_orthonormalize(Y, B);
    const Mat Kp = Y.transpose() * (K * Y);
    const Mat Bp = Y.transpose() * (B * Y);
    Eigen::GeneralizedSelfAdjointEigenSolver<Mat> ges(0.5 * (Kp + Kp.transpose()), 0.5 * (Bp + Bp.transpose()));
    X = Y * ges.eigenvectors();
    std::vector<double> cur(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) cur[static_cast<std::size_t>(j)] = sigma(X.col(j));
    const double scale = std::sqrt(std::max(0.0, ges.eigenvalues()(p - 1)));
    bool done = true;
    for (int j = 0; j < k; ++j) {
      const double d = std::abs(cur[static_cast<std::size_t>(j)] - prev[static_cast<std::size_t>(j)]);
      if (d > tol * cur[static_cast<std::size_t>(j)] + 1e-12 * scale) done = false;
    }
    prev = cur;
    out.iterations = it;
    if (done && it > 2) {
      out.converged = true;
      break;
    }
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) order[static_cast<std::size_t>(j)] = j;
  std::sort(order.begin(), order.end(), [&](int a, int b) { return prev[static_cast<std::size_t>(a)] < prev[static_cast<std::size_t>(b)]; });
  out.vectors.resize(N, k);
  for (int j = 0; j < k; ++j) {
    out.values.push_back(prev[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])]);
    out.vectors.col(j) = X.col(order[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace adiabat
