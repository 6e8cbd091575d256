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

#include <cstdio>
#include <sstream>

#include "beamnet/conic.hpp"

namespace beamnet::conic {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
    case SolveStatus::numerical_limit: return "numerical_limit";
  }
  return "unknown";
}

int svec_side(int length) {
  int side = static_cast<int>(std::lround((std::sqrt(8.0 * length + 1.0) - 1.0) / 2.0));
  if (side * (side + 1) / 2 != length) throw std::invalid_argument("svec length is not triangular");
  return side;
}

void ConicProgram::validate() const {
  if (num_vars < 0) throw std::invalid_argument("negative variable count");
  if (objective.size() != num_vars) throw std::invalid_argument("objective length differs from num_vars");
  for (size_t k = 0; k < blocks.size(); ++k) {
    const ConeBlock& b = blocks[k];
    std::string where = "block " + std::to_string(k);
    if (b.A.rows() != b.dim || b.b.size() != b.dim) throw std::invalid_argument(where + ": rows differ from dim");
    if (b.A.cols() != num_vars) throw std::invalid_argument(where + ": columns differ from num_vars");
    if (b.kind == ConeKind::second_order && b.dim < 1) throw std::invalid_argument(where + ": empty SOC");
    if (b.kind == ConeKind::psd && svec_length(b.psd_side) != b.dim)
      throw std::invalid_argument(where + ": PSD side does not match length");
  }
}

namespace {

const char* kind_name(ConeKind k) {
  switch (k) {
    case ConeKind::zero: return "zero";
    case ConeKind::nonnegative: return "nonnegative";
    case ConeKind::second_order: return "soc";
    case ConeKind::psd: return "psd";
  }
  return "?";
}

ConeKind kind_from_name(const std::string& s) {
  if (s == "zero") return ConeKind::zero;
  if (s == "nonnegative") return ConeKind::nonnegative;
  if (s == "soc") return ConeKind::second_order;
  if (s == "psd") return ConeKind::psd;
  throw std::invalid_argument("unknown cone kind '" + s + "'");
}

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void expect(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word) throw std::invalid_argument("conic text: expected '" + word + "', got '" + got + "'");
}

}  // namespace

std::string to_text(const ConicProgram& p) {
  std::ostringstream out;
  out << "beamnet-conic 1\n";
  out << "vars " << p.num_vars << "\n";
  int nnz = 0;
  for (int j = 0; j < p.objective.size(); ++j) nnz += p.objective(j) != 0.0;
  out << "objective " << nnz << "\n";
  for (int j = 0; j < p.objective.size(); ++j)
    if (p.objective(j) != 0.0) out << j << " " << num(p.objective(j)) << "\n";
  out << "blocks " << p.blocks.size() << "\n";
  for (const ConeBlock& b : p.blocks) {
    out << "block " << kind_name(b.kind) << " " << b.dim << " " << b.psd_side << "\n";
    int bn = 0;
    for (int i = 0; i < b.b.size(); ++i) bn += b.b(i) != 0.0;
    out << "b " << bn << "\n";
    for (int i = 0; i < b.b.size(); ++i)
      if (b.b(i) != 0.0) out << i << " " << num(b.b(i)) << "\n";
    out << "A " << b.A.nonZeros() << "\n";
    for (int i = 0; i < b.A.outerSize(); ++i)
      for (SparseRows::InnerIterator it(b.A, i); it; ++it)
        out << it.row() << " " << it.col() << " " << num(it.value()) << "\n";
  }
  out << "end\n";
  return out.str();
}

ConicProgram from_text(const std::string& text) {
  std::istringstream in(text);
  expect(in, "beamnet-conic");
  int version = 0;
  in >> version;
  if (version != 1) throw std::invalid_argument("conic text: unsupported version");
  ConicProgram p;
  expect(in, "vars");
  in >> p.num_vars;
  p.objective = Vector::Zero(p.num_vars);
  int nnz = 0;
  expect(in, "objective");
  in >> nnz;
  for (int k = 0; k < nnz; ++k) {
    int j;
    std::string v;
    in >> j >> v;
    p.objective(j) = std::stod(v);
  }
  size_t nblocks = 0;
  expect(in, "blocks");
  in >> nblocks;
  for (size_t k = 0; k < nblocks; ++k) {
    ConeBlock b;
    std::string kind;
    expect(in, "block");
    in >> kind >> b.dim >> b.psd_side;
    b.kind = kind_from_name(kind);
    b.b = Vector::Zero(b.dim);
    expect(in, "b");
    in >> nnz;
    for (int t = 0; t < nnz; ++t) {
      int i;
      std::string v;
      in >> i >> v;
      b.b(i) = std::stod(v);
    }
    expect(in, "A");
    in >> nnz;
    std::vector<Eigen::Triplet<double>> trip;
    for (int t = 0; t < nnz; ++t) {
      int i, j;
      std::string v;
      in >> i >> j >> v;
      trip.emplace_back(i, j, std::stod(v));
    }
    b.A.resize(b.dim, p.num_vars);
    b.A.setFromTriplets(trip.begin(), trip.end());
    p.blocks.push_back(std::move(b));
  }
  expect(in, "end");
  if (!in) throw std::invalid_argument("conic text: truncated input");
  p.validate();
  return p;
}

}  // namespace beamnet::conic
