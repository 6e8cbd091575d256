// SPDX-License-Identifier: Apache-2.0
//
// beamnet: joint unicast/broadcast beamforming for cellular networks
// Copyright (C) 2026 The beamnet authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "beamnet/types.hpp"

namespace beamnet::conic {

enum class ConeKind { zero, nonnegative, second_order, psd };

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// The block requires A x + b to lie in the cone. Second-order blocks read
// the rows as (t; u) with ||u|| <= t. PSD blocks hold the stacked lower
// triangle (column-major) with off-diagonals scaled by sqrt(2).
struct ConeBlock {
  ConeKind kind = ConeKind::nonnegative;
  int dim = 0;
  int psd_side = 0;
  SparseRows A;
  Vector b;
};

struct ConicProgram {
  int num_vars = 0;
  Vector objective;
  std::vector<ConeBlock> blocks;

  void validate() const;
};

enum class SolveStatus { optimal, infeasible, unbounded, numerical_limit };

std::string to_string(SolveStatus s);

struct Residuals {
  double primal_res = 0.0;
  double dual_res = 0.0;
  double gap = 0.0;
};

struct SolveResult {
  SolveStatus status = SolveStatus::numerical_limit;
  Vector primal;
  double objective_value = 0.0;
  double dual_objective = 0.0;
  std::vector<Vector> dual;  // one per block
  Residuals residuals;
  int iterations = 0;
  std::string message;

  bool optimal() const { return status == SolveStatus::optimal; }
};

struct SolverOptions {
  double tol = 1e-8;
  int max_iters = 100;
};

// Homogeneous self-dual interior-point solve. Never throws on numerical
// trouble; that is reported as numerical_limit.
SolveResult solve(const ConicProgram& program, const SolverOptions& options = {});

// Plain-text standard-form dump and its parser.
std::string to_text(const ConicProgram& program);
ConicProgram from_text(const std::string& text);

// ---- embeddings -----------------------------------------------------------

inline int svec_length(int side) { return side * (side + 1) / 2; }
int svec_side(int length);  // throws if length is not triangular

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> svec(const Eigen::MatrixBase<Derived>& X) {
  using Scalar = typename Derived::Scalar;
  const int n = static_cast<int>(X.rows());
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(svec_length(n));
  const Scalar r2 = std::sqrt(Scalar(2));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) v(k++) = i == j ? X(i, j) : r2 * X(i, j);
  return v;
}

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> smat(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const int n = svec_side(static_cast<int>(v.size()));
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> X(n, n);
  const Scalar r2 = std::sqrt(Scalar(2));
  int k = 0;
  for (int j = 0; j < n; ++j)
    for (int i = j; i < n; ++i) {
      Scalar x = i == j ? v(k) : v(k) / r2;
      X(i, j) = x;
      X(j, i) = x;
      ++k;
    }
  return X;
}

// [[Re H, -Im H], [Im H, Re H]] for a Hermitian H (checked to 1e-10).
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar::value_type, Eigen::Dynamic, Eigen::Dynamic> hermitian_to_real(
    const Eigen::MatrixBase<Derived>& H) {
  using Real = typename Derived::Scalar::value_type;
  const int s = static_cast<int>(H.rows());
  if (H.cols() != s) throw std::invalid_argument("hermitian_to_real: matrix must be square");
  if ((H - H.adjoint()).cwiseAbs().maxCoeff() > Real(1e-10) * (Real(1) + H.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("hermitian_to_real: matrix is not Hermitian");
  Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic> R(2 * s, 2 * s);
  R.topLeftCorner(s, s) = H.real();
  R.topRightCorner(s, s) = -H.imag();
  R.bottomLeftCorner(s, s) = H.imag();
  R.bottomRightCorner(s, s) = H.real();
  return R;
}

// ---- builder --------------------------------------------------------------

// Sparse affine expression sum_j coef_j x_j + constant.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double constant = 0.0;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT: implicit constant
  static LinExpr var(int j, double coef = 1.0);

  LinExpr& add(int j, double coef);
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double s);
  double evaluate(const Vector& x) const;
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double s, LinExpr a);

// Complex affine vector kept as separate real and imaginary rows.
struct ComplexExpr {
  std::vector<LinExpr> re, im;
  int size() const { return static_cast<int>(re.size()); }
};

// Complex variable vector: real parts at [offset, offset+dim), imaginary
// parts at [offset+dim, offset+2 dim).
struct ComplexVar {
  int offset = -1;
  int dim = 0;
  bool valid() const { return offset >= 0; }
  int re(int i) const { return offset + i; }
  int im(int i) const { return offset + dim + i; }
  CVector value(const Vector& x) const;
};

// B w for a complex matrix B.
ComplexExpr apply(const CMatrix& B, const ComplexVar& w);
// a^H w as a complex scalar (re, im).
std::pair<LinExpr, LinExpr> inner(const CVector& a, const ComplexVar& w);

// Hermitian variable with side^2 real parameters: the diagonal first, then
// (re, im) of each strict upper entry in row-major order.
struct HermitianVar {
  int offset = -1;
  int side = 0;
  bool valid() const { return offset >= 0; }
  int count() const { return side * side; }
  CMatrix value(const Vector& x) const;
  // Basis matrix of parameter p (0 <= p < count()).
  CMatrix basis(int p) const;
};

// Complex Hermitian affine matrix C + sum_k x_k F_k.
struct HermitianAffine {
  CMatrix constant;
  std::vector<std::pair<int, CMatrix>> terms;

  explicit HermitianAffine(int side = 0) : constant(CMatrix::Zero(side, side)) {}
  int side() const { return static_cast<int>(constant.rows()); }
  CMatrix evaluate(const Vector& x) const;
};

class ProgramBuilder {
 public:
  int add_variables(int count);
  ComplexVar add_complex(int dim);
  HermitianVar add_hermitian(int side);
  int num_vars() const { return num_vars_; }

  void set_objective(const LinExpr& objective);
  void add_zero(const LinExpr& e);
  void add_nonnegative(const LinExpr& e);
  // rows[0] >= ||rows[1..]||
  void add_second_order(const std::vector<LinExpr>& rows);
  void add_psd(int side, const std::vector<LinExpr>& svec_rows);
  // Complex LMI through the real embedding; terms are symmetrized first.
  void add_hermitian_psd(const HermitianAffine& lmi);
  void add_hermitian_psd(const HermitianVar& w);
  // ||rows||^2 <= epi as ||(2 rows, epi - 1)|| <= epi + 1.
  void add_sum_squares_bound(const std::vector<LinExpr>& rows, const LinExpr& epi);
  // New variable t with ||rows||^2 <= t; returns t's index.
  int quadratic_objective_to_soc(const std::vector<LinExpr>& rows);

  ConicProgram build() const;

 private:
  struct PendingBlock {
    ConeKind kind;
    int psd_side;
    std::vector<LinExpr> rows;
  };
  int num_vars_ = 0;
  LinExpr objective_;
  std::vector<PendingBlock> blocks_;
};

}  // namespace beamnet::conic
