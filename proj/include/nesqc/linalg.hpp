// Copyright 2026 The nesqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "nesqc/errors.hpp"

namespace nesqc {

using Vector = Eigen::VectorXd;
using DenseMatrix = Eigen::MatrixXd;

inline bool all_finite(const DenseMatrix &m) { return m.allFinite(); }

/// exp(G) for symmetric G via eigendecomposition.
inline DenseMatrix matrix_exponential_symmetric(const DenseMatrix &g) {
  if (g.rows() != g.cols() || g.rows() == 0) {
    throw InvalidMatrixError("matrix exponential needs a non-empty square matrix");
  }
  if (!g.allFinite()) {
    throw InvalidMatrixError("matrix exponential of a non-finite matrix");
  }
  const double asym = (g - g.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, g.cwiseAbs().maxCoeff())) {
    throw InvalidMatrixError("matrix exponential input is not symmetric");
  }
  const DenseMatrix sym = 0.5 * (g + g.transpose());
  Eigen::SelfAdjointEigenSolver<DenseMatrix> eig(sym);
  if (eig.info() != Eigen::Success) {
    throw InvalidMatrixError("symmetric eigendecomposition failed");
  }
  const Eigen::VectorXd exp_vals = eig.eigenvalues().array().exp().matrix();
  return eig.eigenvectors() * exp_vals.asDiagonal() *
         eig.eigenvectors().transpose();
}

struct ScaleAndShape {
  double sigma;
  DenseMatrix shape; // |det| == 1
};

/// Splits a covariance factor A into sigma = |det A|^(1/d) and B = A / sigma.
inline ScaleAndShape scale_from_factor(const DenseMatrix &a) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidMatrixError("covariance factor must be square");
  }
  if (!a.allFinite()) {
    throw InvalidMatrixError("covariance factor has non-finite entries");
  }
  const Eigen::FullPivLU<DenseMatrix> lu(a);
  const auto u = lu.matrixLU().diagonal().cwiseAbs();
  if ((u.array() == 0.0).any()) {
    throw DegenerateCovarianceError("covariance factor is singular");
  }
  // Work in log space so large d does not overflow the determinant.
  const double log_abs_det = u.array().log().sum();
  const double d = static_cast<double>(a.rows());
  const double sigma = std::exp(log_abs_det / d);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw DegenerateCovarianceError("covariance factor has degenerate scale");
  }
  return {sigma, a / sigma};
}

} // namespace nesqc
