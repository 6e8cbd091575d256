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

#include <algorithm>
#include <map>

#include "beamnet/conic.hpp"

namespace beamnet::conic {

LinExpr LinExpr::var(int j, double coef) {
  LinExpr e;
  e.terms.emplace_back(j, coef);
  return e;
}

LinExpr& LinExpr::add(int j, double coef) {
  if (coef != 0.0) terms.emplace_back(j, coef);
  return *this;
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  constant += o.constant;
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  for (const auto& [j, c] : o.terms) terms.emplace_back(j, -c);
  constant -= o.constant;
  return *this;
}

LinExpr& LinExpr::operator*=(double s) {
  for (auto& t : terms) t.second *= s;
  constant *= s;
  return *this;
}

double LinExpr::evaluate(const Vector& x) const {
  double v = constant;
  for (const auto& [j, c] : terms) v += c * x(j);
  return v;
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double s, LinExpr a) { return a *= s; }

CVector ComplexVar::value(const Vector& x) const {
  CVector w(dim);
  for (int i = 0; i < dim; ++i) w(i) = Complex(x(re(i)), x(im(i)));
  return w;
}

ComplexExpr apply(const CMatrix& B, const ComplexVar& w) {
  ComplexExpr out;
  out.re.resize(B.rows());
  out.im.resize(B.rows());
  for (int r = 0; r < B.rows(); ++r) {
    for (int i = 0; i < w.dim; ++i) {
      const Complex b = B(r, i);
      // (br + j bi)(xr + j xi)
      out.re[r].add(w.re(i), b.real()).add(w.im(i), -b.imag());
      out.im[r].add(w.re(i), b.imag()).add(w.im(i), b.real());
    }
  }
  return out;
}

std::pair<LinExpr, LinExpr> inner(const CVector& a, const ComplexVar& w) {
  LinExpr re, im;
  for (int i = 0; i < w.dim; ++i) {
    // conj(a)(xr + j xi)
    re.add(w.re(i), a(i).real()).add(w.im(i), a(i).imag());
    im.add(w.re(i), -a(i).imag()).add(w.im(i), a(i).real());
  }
  return {re, im};
}

CMatrix HermitianVar::value(const Vector& x) const {
  CMatrix W = CMatrix::Zero(side, side);
  for (int i = 0; i < side; ++i) W(i, i) = x(offset + i);
  int p = offset + side;
  for (int i = 0; i < side; ++i)
    for (int j = i + 1; j < side; ++j) {
      Complex z(x(p), x(p + 1));
      W(i, j) = z;
      W(j, i) = std::conj(z);
      p += 2;
    }
  return W;
}

CMatrix HermitianVar::basis(int p) const {
  CMatrix E = CMatrix::Zero(side, side);
  if (p < side) {
    E(p, p) = 1.0;
    return E;
  }
  int q = p - side;
  int pair = q / 2;
  bool imag = q % 2 == 1;
  for (int i = 0; i < side; ++i)
    for (int j = i + 1; j < side; ++j) {
      if (pair-- == 0) {
        if (imag) {
          E(i, j) = Complex(0, 1);
          E(j, i) = Complex(0, -1);
        } else {
          E(i, j) = 1.0;
          E(j, i) = 1.0;
        }
        return E;
      }
    }
  throw std::out_of_range("Hermitian parameter index out of range");
}

CMatrix HermitianAffine::evaluate(const Vector& x) const {
  CMatrix M = constant;
  for (const auto& [j, F] : terms) M += x(j) * F;
  return M;
}

int ProgramBuilder::add_variables(int count) {
  int first = num_vars_;
  num_vars_ += count;
  return first;
}

ComplexVar ProgramBuilder::add_complex(int dim) { return {add_variables(2 * dim), dim}; }

HermitianVar ProgramBuilder::add_hermitian(int side) { return {add_variables(side * side), side}; }

void ProgramBuilder::set_objective(const LinExpr& objective) { objective_ = objective; }

void ProgramBuilder::add_zero(const LinExpr& e) { blocks_.push_back({ConeKind::zero, 0, {e}}); }

void ProgramBuilder::add_nonnegative(const LinExpr& e) { blocks_.push_back({ConeKind::nonnegative, 0, {e}}); }

void ProgramBuilder::add_second_order(const std::vector<LinExpr>& rows) {
  if (rows.empty()) throw std::invalid_argument("empty second-order cone");
  blocks_.push_back({ConeKind::second_order, 0, rows});
}

void ProgramBuilder::add_psd(int side, const std::vector<LinExpr>& svec_rows) {
  if (static_cast<int>(svec_rows.size()) != svec_length(side)) throw std::invalid_argument("PSD rows do not match side");
  blocks_.push_back({ConeKind::psd, side, svec_rows});
}

void ProgramBuilder::add_hermitian_psd(const HermitianAffine& lmi) {
  const int s = lmi.side();
  auto embed = [](const CMatrix& F) {
    CMatrix sym = (F + F.adjoint()) / 2.0;
    return svec(hermitian_to_real(sym));
  };
  Vector c = embed(lmi.constant);
  std::vector<LinExpr> rows(svec_length(2 * s));
  for (int r = 0; r < c.size(); ++r) rows[r].constant = c(r);
  for (const auto& [j, F] : lmi.terms) {
    Vector f = embed(F);
    for (int r = 0; r < f.size(); ++r)
      if (f(r) != 0.0) rows[r].add(j, f(r));
  }
  add_psd(2 * s, rows);
}

void ProgramBuilder::add_hermitian_psd(const HermitianVar& w) {
  HermitianAffine a(w.side);
  for (int p = 0; p < w.count(); ++p) a.terms.emplace_back(w.offset + p, w.basis(p));
  add_hermitian_psd(a);
}

void ProgramBuilder::add_sum_squares_bound(const std::vector<LinExpr>& rows, const LinExpr& epi) {
  std::vector<LinExpr> cone;
  cone.push_back(epi + LinExpr(1.0));
  for (const LinExpr& r : rows) cone.push_back(2.0 * r);
  cone.push_back(epi - LinExpr(1.0));
  add_second_order(cone);
}

int ProgramBuilder::quadratic_objective_to_soc(const std::vector<LinExpr>& rows) {
  int t = add_variables(1);
  add_sum_squares_bound(rows, LinExpr::var(t));
  return t;
}

ConicProgram ProgramBuilder::build() const {
  ConicProgram p;
  p.num_vars = num_vars_;
  p.objective = Vector::Zero(num_vars_);
  for (const auto& [j, c] : objective_.terms) p.objective(j) += c;
  for (const PendingBlock& pb : blocks_) {
    ConeBlock b;
    b.kind = pb.kind;
    b.psd_side = pb.psd_side;
    b.dim = static_cast<int>(pb.rows.size());
    b.b.resize(b.dim);
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < b.dim; ++r) {
      b.b(r) = pb.rows[r].constant;
      // merge duplicate columns so the stored pattern is canonical
      std::map<int, double> merged;
      for (const auto& [j, c] : pb.rows[r].terms) merged[j] += c;
      for (const auto& [j, c] : merged)
        if (c != 0.0) trip.emplace_back(r, j, c);
    }
    b.A.resize(b.dim, num_vars_);
    b.A.setFromTriplets(trip.begin(), trip.end());
    p.blocks.push_back(std::move(b));
  }
  return p;
}

}  // namespace beamnet::conic
