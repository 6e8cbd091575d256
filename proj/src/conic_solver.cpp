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

// Dense primal-dual interior-point method on the homogeneous self-dual
// embedding with Nesterov-Todd scaling and Mehrotra correction. Internal
// standard form:
//
//   minimize c'x  subject to  G x + s = h,  A x = b,  s in K
//
// where K is a product of nonnegative orthants, second-order cones and PSD
// cones (svec storage). A user block "A_u x + b_u in K_u" maps to
// G = -A_u, h = b_u; zero blocks become equality rows.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <cstdio>
#include <cstdlib>

#include "beamnet/conic.hpp"

namespace beamnet::conic {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Accepted when the iteration stalls before reaching the requested tolerance.
constexpr double kReducedTol = 1e-6;

enum class Cone { nonneg, soc, psd };

struct ConeSeg {
  Cone kind;
  int offset;  // into the cone vector
  int dim;     // rows
  int side;    // psd only
};

// Rows of G restricted to the columns they touch.
struct GBlock {
  int seg;  // index into segments
  int row0;
  int rows;
  std::vector<int> cols;
  Matrix M;
};

struct Standard {
  int n = 0, p = 0, m = 0;
  Vector c, b, h;
  Matrix A;  // p x n
  std::vector<ConeSeg> segs;
  std::vector<GBlock> gblocks;
  int degree = 0;
  // user block k -> (is_equality, offset)
  std::vector<std::pair<bool, int>> origin;
};

Standard standardize(const ConicProgram& prog) {
  Standard st;
  st.n = prog.num_vars;
  st.c = prog.objective;
  // Order: nonnegative, SOC, PSD; equality rows kept apart.
  std::vector<int> order;
  for (int pass = 0; pass < 3; ++pass)
    for (size_t k = 0; k < prog.blocks.size(); ++k) {
      ConeKind kind = prog.blocks[k].kind;
      if ((pass == 0 && kind == ConeKind::nonnegative) || (pass == 1 && kind == ConeKind::second_order) ||
          (pass == 2 && kind == ConeKind::psd))
        order.push_back(static_cast<int>(k));
    }
  st.origin.assign(prog.blocks.size(), {false, 0});
  for (size_t k = 0; k < prog.blocks.size(); ++k)
    if (prog.blocks[k].kind == ConeKind::zero) {
      st.origin[k] = {true, st.p};
      st.p += prog.blocks[k].dim;
    }
  st.A = Matrix::Zero(st.p, st.n);
  st.b = Vector::Zero(st.p);
  for (size_t k = 0; k < prog.blocks.size(); ++k) {
    const ConeBlock& blk = prog.blocks[k];
    if (blk.kind != ConeKind::zero) continue;
    int r0 = st.origin[k].second;
    st.A.middleRows(r0, blk.dim) = Matrix(blk.A);
    st.b.segment(r0, blk.dim) = -blk.b;
  }
  for (int k : order) st.m += prog.blocks[k].dim;
  st.h = Vector::Zero(st.m);
  int off = 0;
  for (int k : order) {
    const ConeBlock& blk = prog.blocks[k];
    st.origin[k] = {false, off};
    st.h.segment(off, blk.dim) = blk.b;
    auto add_gblock = [&](int seg, int row0, int rows) {
      GBlock g;
      g.seg = seg;
      g.row0 = row0;
      g.rows = rows;
      std::vector<int> cols;
      for (int r = row0 - off; r < row0 - off + rows; ++r)
        for (SparseRows::InnerIterator it(blk.A, r); it; ++it) cols.push_back(static_cast<int>(it.col()));
      std::sort(cols.begin(), cols.end());
      cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
      g.cols = cols;
      g.M = Matrix::Zero(rows, static_cast<int>(cols.size()));
      for (int r = 0; r < rows; ++r)
        for (SparseRows::InnerIterator it(blk.A, row0 - off + r); it; ++it) {
          int j = static_cast<int>(std::lower_bound(cols.begin(), cols.end(), static_cast<int>(it.col())) - cols.begin());
          g.M(r, j) = -it.value();
        }
      st.gblocks.push_back(std::move(g));
    };
    if (blk.kind == ConeKind::nonnegative) {
      for (int r = 0; r < blk.dim; ++r) {
        st.segs.push_back({Cone::nonneg, off + r, 1, 0});
        add_gblock(static_cast<int>(st.segs.size()) - 1, off + r, 1);
      }
      st.degree += blk.dim;
    } else if (blk.kind == ConeKind::second_order) {
      st.segs.push_back({Cone::soc, off, blk.dim, 0});
      add_gblock(static_cast<int>(st.segs.size()) - 1, off, blk.dim);
      st.degree += 1;
    } else {
      st.segs.push_back({Cone::psd, off, blk.dim, blk.psd_side});
      add_gblock(static_cast<int>(st.segs.size()) - 1, off, blk.dim);
      st.degree += blk.psd_side;
    }
    off += blk.dim;
  }
  return st;
}

// ---- cone algebra ---------------------------------------------------------

Vector identity(const Standard& st) {
  Vector e = Vector::Zero(st.m);
  for (const ConeSeg& c : st.segs) {
    if (c.kind == Cone::psd) {
      e.segment(c.offset, c.dim) = svec(Matrix::Identity(c.side, c.side));
    } else {
      e(c.offset) = 1.0;
    }
  }
  return e;
}

// Smallest "eigenvalue" of x in each cone, minimized over cones.
double min_eig(const Standard& st, const Vector& x) {
  double v = kInf;
  for (const ConeSeg& c : st.segs) {
    auto xs = x.segment(c.offset, c.dim);
    switch (c.kind) {
      case Cone::nonneg: v = std::min(v, xs(0)); break;
      case Cone::soc: v = std::min(v, xs(0) - xs.tail(c.dim - 1).norm()); break;
      case Cone::psd: {
        Eigen::SelfAdjointEigenSolver<Matrix> es(smat(Vector(xs)), Eigen::EigenvaluesOnly);
        v = std::min(v, es.eigenvalues()(0));
        break;
      }
    }
  }
  return v;
}

Vector jordan(const Standard& st, const Vector& u, const Vector& v) {
  Vector out(st.m);
  for (const ConeSeg& c : st.segs) {
    auto us = u.segment(c.offset, c.dim);
    auto vs = v.segment(c.offset, c.dim);
    switch (c.kind) {
      case Cone::nonneg: out(c.offset) = us(0) * vs(0); break;
      case Cone::soc:
        out(c.offset) = us.dot(vs);
        out.segment(c.offset + 1, c.dim - 1) = us(0) * vs.tail(c.dim - 1) + vs(0) * us.tail(c.dim - 1);
        break;
      case Cone::psd: {
        Matrix U = smat(Vector(us)), V = smat(Vector(vs));
        Matrix P = 0.5 * (U * V + V * U);
        out.segment(c.offset, c.dim) = svec(P);
        break;
      }
    }
  }
  return out;
}

struct Scaling {
  Vector nl;  // per row; zero outside nonneg rows
  std::vector<Matrix> W, Winv;  // per segment (soc: W; psd: r)
  std::vector<Vector> psd_l;    // eigenvalues of the scaled point (psd)
  Vector lambda;
};

Scaling identity_scaling(const Standard& st) {
  Scaling sc;
  sc.nl = Vector::Ones(st.m);
  sc.W.resize(st.segs.size());
  sc.Winv.resize(st.segs.size());
  sc.psd_l.resize(st.segs.size());
  for (size_t k = 0; k < st.segs.size(); ++k) {
    const ConeSeg& c = st.segs[k];
    if (c.kind == Cone::soc) {
      sc.W[k] = Matrix::Identity(c.dim, c.dim);
      sc.Winv[k] = sc.W[k];
    } else if (c.kind == Cone::psd) {
      sc.W[k] = Matrix::Identity(c.side, c.side);
      sc.Winv[k] = sc.W[k];
      sc.psd_l[k] = Vector::Ones(c.side);
    }
  }
  sc.lambda = identity(st);
  return sc;
}

bool nt_scaling(const Standard& st, const Vector& s, const Vector& z, Scaling& sc) {
  sc.nl = Vector::Ones(st.m);
  sc.W.assign(st.segs.size(), Matrix());
  sc.Winv.assign(st.segs.size(), Matrix());
  sc.psd_l.assign(st.segs.size(), Vector());
  sc.lambda = Vector::Zero(st.m);
  for (size_t k = 0; k < st.segs.size(); ++k) {
    const ConeSeg& c = st.segs[k];
    auto ss = s.segment(c.offset, c.dim);
    auto zs = z.segment(c.offset, c.dim);
    if (c.kind == Cone::nonneg) {
      if (!(ss(0) > 0 && zs(0) > 0)) return false;
      sc.nl(c.offset) = std::sqrt(ss(0) / zs(0));
      sc.lambda(c.offset) = std::sqrt(ss(0) * zs(0));
    } else if (c.kind == Cone::soc) {
      const int q = c.dim;
      double sres = (ss(0) - ss.tail(q - 1).norm()) * (ss(0) + ss.tail(q - 1).norm());
      double zres = (zs(0) - zs.tail(q - 1).norm()) * (zs(0) + zs.tail(q - 1).norm());
      if (!(sres > 0 && zres > 0 && ss(0) > 0 && zs(0) > 0)) return false;
      Vector sb = ss / std::sqrt(sres), zb = zs / std::sqrt(zres);
      double gamma = std::sqrt((1.0 + sb.dot(zb)) / 2.0);
      Vector wb(q);
      wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
      wb.tail(q - 1) = (sb.tail(q - 1) - zb.tail(q - 1)) / (2.0 * gamma);
      double beta = std::pow(sres / zres, 0.25);
      Matrix Wb(q, q), Wib(q, q);
      Vector w1 = wb.tail(q - 1);
      Wb(0, 0) = wb(0);
      Wb.block(0, 1, 1, q - 1) = w1.transpose();
      Wb.block(1, 0, q - 1, 1) = w1;
      Wb.block(1, 1, q - 1, q - 1) = Matrix::Identity(q - 1, q - 1) + w1 * w1.transpose() / (1.0 + wb(0));
      Wib = Wb;
      Wib.block(0, 1, 1, q - 1) *= -1.0;
      Wib.block(1, 0, q - 1, 1) *= -1.0;
      sc.W[k] = beta * Wb;
      sc.Winv[k] = Wib / beta;
      sc.lambda.segment(c.offset, q) = sc.W[k] * zs;
    } else {
      Matrix S = smat(Vector(ss)), Z = smat(Vector(zs));
      Eigen::LLT<Matrix> l1(S), l2(Z);
      if (l1.info() != Eigen::Success || l2.info() != Eigen::Success) return false;
      Matrix L1 = l1.matrixL(), L2 = l2.matrixL();
      Eigen::JacobiSVD<Matrix> svd(L2.transpose() * L1, Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vector l = svd.singularValues();
      if (!(l.minCoeff() > 0)) return false;
      Vector isq = l.cwiseSqrt().cwiseInverse();
      // r = L1 V l^{-1/2}, r^{-1} = l^{-1/2} U' L2'
      sc.W[k] = L1 * svd.matrixV() * isq.asDiagonal();
      sc.Winv[k] = isq.asDiagonal() * svd.matrixU().transpose() * L2.transpose();
      sc.psd_l[k] = l;
      sc.lambda.segment(c.offset, c.dim) = svec(Matrix(l.asDiagonal()));
    }
  }
  return true;
}

enum class Op { W, WT, Winv, WinvT };

// Applies the scaling to rows [c.offset, c.offset+dim) of each column of X.
void apply_seg(const Scaling& sc, const ConeSeg& c, int k, Op op, Eigen::Ref<Matrix> X) {
  if (c.kind == Cone::nonneg) {
    double w = sc.nl(c.offset);
    X *= (op == Op::W || op == Op::WT) ? w : 1.0 / w;
  } else if (c.kind == Cone::soc) {
    const Matrix& M = (op == Op::W || op == Op::WT) ? sc.W[k] : sc.Winv[k];
    X = M * X;
  } else {
    const Matrix& r = sc.W[k];
    const Matrix& ri = sc.Winv[k];
    for (int j = 0; j < X.cols(); ++j) {
      Matrix Y = smat(Vector(X.col(j)));
      Matrix R;
      switch (op) {
        case Op::W: R = r.transpose() * Y * r; break;
        case Op::WT: R = r * Y * r.transpose(); break;
        case Op::Winv: R = ri.transpose() * Y * ri; break;
        case Op::WinvT: R = ri * Y * ri.transpose(); break;
      }
      X.col(j) = svec(R);
    }
  }
}

Vector apply(const Standard& st, const Scaling& sc, Op op, const Vector& v) {
  Vector out = v;
  for (size_t k = 0; k < st.segs.size(); ++k) {
    const ConeSeg& c = st.segs[k];
    Matrix seg = out.segment(c.offset, c.dim);
    apply_seg(sc, c, static_cast<int>(k), op, seg);
    out.segment(c.offset, c.dim) = seg;
  }
  return out;
}

// Solves lambda o x = v in the scaled space.
Vector inv_jordan(const Standard& st, const Scaling& sc, const Vector& v) {
  Vector out(st.m);
  const Vector& l = sc.lambda;
  for (size_t k = 0; k < st.segs.size(); ++k) {
    const ConeSeg& c = st.segs[k];
    auto ls = l.segment(c.offset, c.dim);
    auto vs = v.segment(c.offset, c.dim);
    switch (c.kind) {
      case Cone::nonneg: out(c.offset) = vs(0) / ls(0); break;
      case Cone::soc: {
        const int q = c.dim;
        double det = ls(0) * ls(0) - ls.tail(q - 1).squaredNorm();
        double x0 = (ls(0) * vs(0) - ls.tail(q - 1).dot(vs.tail(q - 1))) / det;
        out(c.offset) = x0;
        out.segment(c.offset + 1, q - 1) = (vs.tail(q - 1) - x0 * ls.tail(q - 1)) / ls(0);
        break;
      }
      case Cone::psd: {
        Matrix V = smat(Vector(vs));
        const Vector& d = sc.psd_l[k];
        for (int i = 0; i < c.side; ++i)
          for (int j = 0; j < c.side; ++j) V(i, j) *= 2.0 / (d(i) + d(j));
        out.segment(c.offset, c.dim) = svec(V);
        break;
      }
    }
  }
  return out;
}

// Largest alpha with x + alpha d in the cone (x interior); inf if unbounded.
double max_step(const Standard& st, const Vector& x, const Vector& d) {
  double alpha = kInf;
  for (const ConeSeg& c : st.segs) {
    auto xs = x.segment(c.offset, c.dim);
    auto ds = d.segment(c.offset, c.dim);
    double lmin = 0.0;
    switch (c.kind) {
      case Cone::nonneg: lmin = ds(0) / xs(0); break;
      case Cone::soc: {
        const int q = c.dim;
        double nx = std::sqrt(std::max((xs(0) - xs.tail(q - 1).norm()) * (xs(0) + xs.tail(q - 1).norm()), 1e-300));
        Vector xb = xs / nx;
        // hyperbolic rotation taking xb to e
        double t0 = xb(0) * ds(0) - xb.tail(q - 1).dot(ds.tail(q - 1));
        double coef = (xb.tail(q - 1).dot(ds.tail(q - 1))) / (1.0 + xb(0)) - ds(0);
        Vector t1 = ds.tail(q - 1) + coef * xb.tail(q - 1);
        lmin = (t0 - t1.norm()) / nx;
        break;
      }
      case Cone::psd: {
        Eigen::LLT<Matrix> llt(smat(Vector(xs)));
        if (llt.info() != Eigen::Success) return 0.0;
        Matrix L = llt.matrixL();
        Matrix D = smat(Vector(ds));
        Matrix T = L.triangularView<Eigen::Lower>().solve(D);
        Matrix M = L.triangularView<Eigen::Lower>().solve(T.transpose());
        Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()), Eigen::EigenvaluesOnly);
        lmin = es.eigenvalues()(0);
        break;
      }
    }
    if (lmin < 0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

// ---- KKT ------------------------------------------------------------------

Vector G_times(const Standard& st, const Vector& x) {
  Vector out = Vector::Zero(st.m);
  for (const GBlock& g : st.gblocks) {
    Vector xs(g.cols.size());
    for (size_t j = 0; j < g.cols.size(); ++j) xs(j) = x(g.cols[j]);
    out.segment(g.row0, g.rows) += g.M * xs;
  }
  return out;
}

Vector GT_times(const Standard& st, const Vector& z) {
  Vector out = Vector::Zero(st.n);
  for (const GBlock& g : st.gblocks) {
    Vector v = g.M.transpose() * z.segment(g.row0, g.rows);
    for (size_t j = 0; j < g.cols.size(); ++j) out(g.cols[j]) += v(j);
  }
  return out;
}

class Kkt {
 public:
  Kkt(const Standard& st, const Scaling& sc) : st_(st), sc_(sc) {}

  bool factor() {
    const int n = st_.n, p = st_.p;
    Matrix H = Matrix::Zero(n, n);
    for (const GBlock& g : st_.gblocks) {
      Matrix X = g.M;
      apply_seg(sc_, st_.segs[g.seg], g.seg, Op::WinvT, X);
      Matrix Hs = X.transpose() * X;
      for (size_t a = 0; a < g.cols.size(); ++a)
        for (size_t b = 0; b < g.cols.size(); ++b) H(g.cols[a], g.cols[b]) += Hs(a, b);
    }
    double scale = n > 0 ? std::max(1.0, H.diagonal().cwiseAbs().maxCoeff()) : 1.0;
    delta_ = 1e-13 * scale;
    if (p == 0) {
      llt_.compute(H + delta_ * Matrix::Identity(n, n));
      use_llt_ = llt_.info() == Eigen::Success;
      if (use_llt_) return true;
    }
    Matrix K = Matrix::Zero(n + p, n + p);
    K.topLeftCorner(n, n) = H + delta_ * Matrix::Identity(n, n);
    K.topRightCorner(n, p) = st_.A.transpose();
    K.bottomLeftCorner(p, n) = st_.A;
    K.bottomRightCorner(p, p) = -delta_ * Matrix::Identity(p, p);
    lu_.compute(K);
    use_llt_ = false;
    return true;
  }

  // Solves A'uy + G'uz = bx, A ux = by, G ux - W'W uz = bz.
  void solve(const Vector& bx, const Vector& by, const Vector& bz, Vector& ux, Vector& uy, Vector& uz) const {
    reduced(bx, by, bz, ux, uy, uz);
    for (int it = 0; it < 8; ++it) {
      Vector rx = bx - st_.A.transpose() * uy - GT_times(st_, uz);
      Vector ry = by - st_.A * ux;
      Vector rz = bz - G_times(st_, ux) + apply(st_, sc_, Op::WT, apply(st_, sc_, Op::W, uz));
      double res = std::max({rx.lpNorm<Eigen::Infinity>(), ry.size() ? ry.lpNorm<Eigen::Infinity>() : 0.0,
                             rz.size() ? rz.lpNorm<Eigen::Infinity>() : 0.0});
      double ref = std::max({1.0, bx.size() ? bx.lpNorm<Eigen::Infinity>() : 0.0,
                             by.size() ? by.lpNorm<Eigen::Infinity>() : 0.0,
                             bz.size() ? bz.lpNorm<Eigen::Infinity>() : 0.0});
      if (!(res > 1e-15 * ref)) break;
      Vector dx, dy, dz;
      reduced(rx, ry, rz, dx, dy, dz);
      ux += dx;
      uy += dy;
      uz += dz;
    }
  }

 private:
  Vector wtw_inv(const Vector& v) const { return apply(st_, sc_, Op::Winv, apply(st_, sc_, Op::WinvT, v)); }

  void reduced(const Vector& bx, const Vector& by, const Vector& bz, Vector& ux, Vector& uy, Vector& uz) const {
    const int n = st_.n, p = st_.p;
    Vector t = wtw_inv(bz);
    Vector rhs = bx + GT_times(st_, t);
    if (use_llt_) {
      ux = llt_.solve(rhs);
      uy = Vector::Zero(0);
    } else {
      Vector full(n + p);
      full << rhs, by;
      Vector sol = lu_.solve(full);
      ux = sol.head(n);
      uy = sol.tail(p);
    }
    uz = wtw_inv(G_times(st_, ux)) - t;
  }

  const Standard& st_;
  const Scaling& sc_;
  double delta_ = 0.0;
  bool use_llt_ = false;
  Eigen::LLT<Matrix> llt_;
  Eigen::PartialPivLU<Matrix> lu_;
};

bool finite(const Vector& v) { return v.allFinite(); }

SolveResult finish(const ConicProgram& prog, const Standard& st, SolveStatus status, const Vector& x, const Vector& y,
                   const Vector& z, double scale, int iters, const Residuals& res, std::string msg) {
  SolveResult r;
  r.status = status;
  r.iterations = iters;
  r.residuals = res;
  r.message = std::move(msg);
  r.primal = x / scale;
  Vector yy = y / scale, zz = z / scale;
  r.objective_value = prog.objective.dot(r.primal);
  r.dual_objective = -(st.b.dot(yy) + st.h.dot(zz));
  for (size_t k = 0; k < prog.blocks.size(); ++k) {
    const auto& [eq, off] = st.origin[k];
    int dim = prog.blocks[k].dim;
    r.dual.push_back(eq ? Vector(-yy.segment(off, dim)) : Vector(zz.segment(off, dim)));
  }
  return r;
}

}  // namespace

SolveResult solve(const ConicProgram& prog, const SolverOptions& opt) {
  try {
    prog.validate();
  } catch (const std::exception& e) {
    SolveResult r;
    r.status = SolveStatus::numerical_limit;
    r.message = e.what();
    return r;
  }
  const Standard st = standardize(prog);
  const int n = st.n, m = st.m;
  const double tol = opt.tol;
  const double resx0 = std::max(1.0, st.c.norm());
  const double resy0 = std::max(1.0, st.b.norm());
  const double resz0 = std::max(1.0, st.h.norm());
  const Vector e = identity(st);

  Vector x, y, z, s;
  {
    Scaling sc = identity_scaling(st);
    Kkt kkt(st, sc);
    kkt.factor();
    Vector ux, uy, uz;
    kkt.solve(Vector::Zero(n), st.b, st.h, ux, uy, uz);
    x = ux;
    s = -uz;
    kkt.solve(-st.c, Vector::Zero(st.p), Vector::Zero(m), ux, uy, uz);
    y = uy;
    z = uz;
    if (!finite(x) || !finite(s) || !finite(y) || !finite(z)) {
      return finish(prog, st, SolveStatus::numerical_limit, Vector::Zero(n), Vector::Zero(st.p), Vector::Zero(m), 1.0,
                    0, {}, "initialization failed");
    }
    if (m > 0) {
      double ts = -min_eig(st, s), nrms = s.norm();
      if (ts >= -1e-8 * std::max(nrms, 1.0)) s += (1.0 + ts) * e;
      double tz = -min_eig(st, z), nrmz = z.norm();
      if (tz >= -1e-8 * std::max(nrmz, 1.0)) z += (1.0 + tz) * e;
    }
  }
  double tau = 1.0, kappa = 1.0;
  Residuals res;
  const double deg = st.degree + 1.0;

  struct Best {
    bool valid = false;
    double merit = kInf;
    Vector x, y, z;
    double tau = 1.0;
    int iter = 0;
    Residuals res;
  } best;
  int last_iter = 0;

  for (int iter = 0; iter <= opt.max_iters; ++iter) {
    last_iter = iter;
    // residuals of the embedding
    Vector rx = st.A.transpose() * y + GT_times(st, z) + st.c * tau;
    Vector ry = st.b * tau - st.A * x;
    Vector rz = st.h * tau - G_times(st, x) - s;
    double cx = st.c.dot(x), by = st.b.dot(y), hz = st.h.dot(z);
    double rt = -cx - by - hz - kappa;
    double gap = s.dot(z);
    double pcost = cx / tau, dcost = -(by + hz) / tau;
    double pres = std::max(ry.size() ? ry.norm() / resy0 : 0.0, rz.size() ? rz.norm() / resz0 : 0.0) / tau;
    double dres = rx.norm() / resx0 / tau;
    res = {pres, dres, gap / (tau * tau)};

    auto meets = [&](double t) {
      return pres <= t && dres <= t && gap / (tau * tau) <= t * (1.0 + std::abs(pcost)) &&
             std::abs(pcost - dcost) <= t * (1.0 + std::abs(pcost));
    };
    if (meets(tol)) return finish(prog, st, SolveStatus::optimal, x, y, z, tau, iter, res, "");
    // Keep the best point in case the final iterations lose precision.
    double merit = std::max({pres, dres, gap / (tau * tau) / (1.0 + std::abs(pcost))});
    if (meets(std::max(tol, kReducedTol)) && merit < best.merit)
      best = {true, merit, x, y, z, tau, iter, res};
    if (by + hz < 0) {
      double pinf = (st.A.transpose() * y + GT_times(st, z)).norm() / resx0 / (-(by + hz));
      if (pinf <= tol) {
        double sc = -(by + hz);
        Residuals r2{pinf, 0, 0};
        return finish(prog, st, SolveStatus::infeasible, Vector::Zero(n), y, z, sc, iter, r2, "primal infeasible");
      }
    }
    if (cx < 0) {
      double dinf = std::max(st.p ? (st.A * x).norm() / resy0 : 0.0, m ? (G_times(st, x) + s).norm() / resz0 : 0.0) / (-cx);
      if (dinf <= tol) {
        Residuals r2{0, dinf, 0};
        return finish(prog, st, SolveStatus::unbounded, x, Vector::Zero(st.p), Vector::Zero(m), -cx, iter, r2,
                      "dual infeasible");
      }
    }
    if (iter == opt.max_iters) break;

    Scaling sc;
    if (!nt_scaling(st, s, z, sc)) break;
    Kkt kkt(st, sc);
    if (!kkt.factor()) break;
    Vector x1, y1, z1;
    kkt.solve(-st.c, st.b, st.h, x1, y1, z1);
    const double denom_base = -(st.c.dot(x1) + st.b.dot(y1) + st.h.dot(z1));
    const double mu = (gap + tau * kappa) / deg;
    const Vector& lam = sc.lambda;

    Vector dx, dy, dz, ds;
    double dtau = 0, dkappa = 0;
    auto newton = [&](double eta, const Vector& rc, double rk) {
      Vector lrc = inv_jordan(st, sc, rc);
      Vector x2, y2, z2;
      kkt.solve(-eta * rx, eta * ry, eta * rz - apply(st, sc, Op::WT, lrc), x2, y2, z2);
      // sign note: rz here is h tau - G x - s, the negative of the textbook form
      dtau = (-eta * rt + rk / tau + st.c.dot(x2) + st.b.dot(y2) + st.h.dot(z2)) / (kappa / tau + denom_base);
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      ds = apply(st, sc, Op::WT, Vector(lrc - apply(st, sc, Op::W, dz)));
      dkappa = (rk - kappa * dtau) / tau;
    };
    auto step_len = [&]() {
      double a = std::min(max_step(st, s, ds), max_step(st, z, dz));
      if (dtau < 0) a = std::min(a, -tau / dtau);
      if (dkappa < 0) a = std::min(a, -kappa / dkappa);
      return a;
    };

    // The linear residual equations here are A'dy + G'dz + c dtau = -eta rx,
    // -A dx + b dtau = -eta ry, -G dx + h dtau - ds = -eta rz.
    newton(1.0, -jordan(st, lam, lam), -tau * kappa);
    if (!finite(dx) || !finite(dz) || !std::isfinite(dtau)) break;
    double a_aff = std::min(1.0, step_len());
    double sigma = std::pow(1.0 - a_aff, 3);
    Vector ds_s = apply(st, sc, Op::WinvT, ds), dz_s = apply(st, sc, Op::W, dz);
    Vector rc = -jordan(st, lam, lam) + sigma * mu * e - jordan(st, ds_s, dz_s);
    double rk = -tau * kappa + sigma * mu - dtau * dkappa;
    newton(1.0 - sigma, rc, rk);
    if (!finite(dx) || !finite(dz) || !std::isfinite(dtau)) break;
    double alpha = std::min(1.0, 0.99 * step_len());
    if (!(alpha > 1e-12)) break;
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 0) || !(kappa > 0)) break;
  }
  if (best.valid)
    return finish(prog, st, SolveStatus::optimal, best.x, best.y, best.z, best.tau, best.iter, best.res,
                  "reduced accuracy");
  return finish(prog, st, SolveStatus::numerical_limit, x, y, z, tau, last_iter, res, "no convergence");
}

}  // namespace beamnet::conic
