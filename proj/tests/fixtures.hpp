#pragma once

#include <cmath>
#include <random>

#include "adiabat/model.hpp"

namespace fixtures {

using adiabat::Mat;
using adiabat::Vec;

inline Mat scalar(double a) { return Mat::Constant(1, 1, a); }
inline Vec vec1(double a) { return Vec::Constant(1, a); }

// A = [2], b = [beta], h = 0
inline adiabat::ProblemTriple scalar_triple(double beta) {
  return adiabat::ProblemTriple::make(scalar(2.0), vec1(beta));
}

inline Mat random_symmetric(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N;
  Mat S(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) S(i, j) = N(rng);
  return scale * 0.5 * (S + S.transpose());
}

inline Mat random_spd(int n, std::mt19937_64& rng) {
  Mat S = random_symmetric(n, rng);
  return S * S + Mat::Identity(n, n);
}

inline Vec random_vec(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> N;
  Vec v(n);
  for (int i = 0; i < n; ++i) v(i) = scale * N(rng);
  return v;
}

// Small affine h: eps S0 + sum x_i Sx_i + z Sz with entries of size `scale`.
inline adiabat::HPtr random_affine_h(int n, std::mt19937_64& rng, double scale) {
  std::vector<Mat> Sx;
  for (int i = 0; i + 1 < n; ++i) Sx.push_back(random_symmetric(n, rng, scale));
  return std::make_shared<adiabat::AffineH>(random_symmetric(n, rng, scale), Sx, random_symmetric(n, rng, scale));
}

// Indefinite triple with n = 3 used for the index-pair geometry.
inline adiabat::ProblemTriple conley_triple() {
  Mat A = Mat::Zero(2, 2);
  A(0, 0) = 40.0;
  A(1, 1) = -0.8;
  Vec b(2);
  b << 0.5 * std::cos(0.02), 0.5 * std::sin(0.02);
  return adiabat::ProblemTriple::make(A, b);
}

}  // namespace fixtures
