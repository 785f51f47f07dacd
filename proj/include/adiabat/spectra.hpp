#pragma once

#include <Eigen/Sparse>
#include <vector>

#include "adiabat/model.hpp"

namespace adiabat {

using SpMat = Eigen::SparseMatrix<double>;

struct SingularEstimate {
  std::vector<double> values;  // ascending
  Mat vectors;                 // coefficient vectors x (one column per value)
  int iterations = 0;
  bool converged = false;
};

// Smallest k values of |op R x|_{Wc} / |R x|_{Wd} over x, by shift-invert
// subspace iteration on the normal form (opR)^T Wc (opR) x = s^2 R^T Wd R x.
// Values are recomputed from op directly so tiny ones are not squared away.
SingularEstimate smallest_singular_values(const SpMat& op, const SpMat& R, const SpMat& Wd,
                                          const SpMat& Wc, int k, int max_iter = 400,
                                          double tol = 1e-10);

SpMat identity(int n);
SpMat block_weight(const Vec& w, const Mat& G);

}  // namespace adiabat
