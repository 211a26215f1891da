#pragma once

// Real decision vector layout shared by the surrogate and conic layers, and
// the complex-to-real lifting of affine expressions over it.
//
// Lifting convention: a complex vector v maps to [Re v; Im v], so
// Re{u^H v} is the real inner product of the stacked vectors.

#include <cassert>
#include <stdexcept>

#include "sisca/model.hpp"
#include "sisca/types.hpp"

namespace sisca {

enum class ProblemKind { kBeampattern, kFeasibility };

struct Range {
  Index start = 0;
  Index size = 0;
};

/// Block order: X (re/im interleaved, column-major), theta (re/im
/// interleaved), interference bounds p and p_bar, leakage bounds tau and
/// tau_bar, then the objective epigraph slack (beampattern problem) or the
/// slacks delta and delta_bar (feasibility problem).
class VariableLayout {
 public:
  VariableLayout(int L, int N, int K, ProblemKind kind) : L_(L), N_(N), K_(K), kind_(kind) {
    if (L < 1 || N < 1 || K < 1) throw std::invalid_argument("VariableLayout: empty dimensions");
    Index at = 0;
    auto take = [&at](Index n) {
      Range r{at, n};
      at += n;
      return r;
    };
    x_ = take(2 * Index{L} * (K + L));
    theta_ = take(2 * Index{N});
    p_ = take(Index{K} * (K + L - 1));
    p_bar_ = take(Index{K} * (K + L - 1));
    tau_ = take(K);
    tau_bar_ = take(K);
    if (kind == ProblemKind::kBeampattern) {
      epigraph_ = take(1);
    } else {
      delta_ = take(K);
      delta_bar_ = take(K);
    }
    size_ = at;
  }

  int L() const { return L_; }
  int N() const { return N_; }
  int K() const { return K_; }
  int M() const { return K_ + L_; }
  ProblemKind kind() const { return kind_; }
  Index size() const { return size_; }

  Range x_block() const { return x_; }
  Range theta_block() const { return theta_; }
  Range p_block() const { return p_; }
  Range p_bar_block() const { return p_bar_; }
  Range tau_block() const { return tau_; }
  Range tau_bar_block() const { return tau_bar_; }
  Range epigraph_block() const { return epigraph_; }
  Range delta_block() const { return delta_; }
  Range delta_bar_block() const { return delta_bar_; }

  Index x_re(int m, int l) const { return x_.start + 2 * (Index{m} * L_ + l); }
  Index x_im(int m, int l) const { return x_re(m, l) + 1; }
  Index theta_re(int n) const { return theta_.start + 2 * Index{n}; }
  Index theta_im(int n) const { return theta_re(n) + 1; }

  /// Position of the pair (k, l), l != k, among the K + L - 1 interferers of k.
  Index pair(int k, int l) const {
    if (k < 0 || k >= K_ || l < 0 || l >= M() || l == k) {
      throw std::invalid_argument("VariableLayout: invalid (user, interferer) pair");
    }
    return Index{k} * (M() - 1) + (l < k ? l : l - 1);
  }
  Index p(int k, int l) const { return p_.start + pair(k, l); }
  Index p_bar(int k, int l) const { return p_bar_.start + pair(k, l); }
  Index tau(int k) const { return tau_.start + k; }
  Index tau_bar(int k) const { return tau_bar_.start + k; }
  Index epigraph() const {
    if (kind_ != ProblemKind::kBeampattern) throw std::logic_error("no epigraph slack in this layout");
    return epigraph_.start;
  }
  Index delta(int k) const {
    if (kind_ != ProblemKind::kFeasibility) throw std::logic_error("no slacks in this layout");
    return delta_.start + k;
  }
  Index delta_bar(int k) const {
    if (kind_ != ProblemKind::kFeasibility) throw std::logic_error("no slacks in this layout");
    return delta_bar_.start + k;
  }

  /// Writes X and theta; every auxiliary entry is zero.
  RVector pack(const Iterate& it) const {
    if (it.X.rows() != L_ || it.X.cols() != M() || it.theta.size() != N_) {
      throw std::invalid_argument("VariableLayout::pack: iterate dimensions mismatch");
    }
    RVector z = RVector::Zero(size_);
    for (int m = 0; m < M(); ++m) {
      for (int l = 0; l < L_; ++l) {
        z[x_re(m, l)] = it.X(l, m).real();
        z[x_im(m, l)] = it.X(l, m).imag();
      }
    }
    for (int n = 0; n < N_; ++n) {
      z[theta_re(n)] = it.theta[n].real();
      z[theta_im(n)] = it.theta[n].imag();
    }
    return z;
  }

  Iterate unpack(const RVector& z) const {
    if (z.size() != size_) throw std::invalid_argument("VariableLayout::unpack: wrong length");
    Iterate it;
    it.X.resize(L_, M());
    it.theta.resize(N_);
    for (int m = 0; m < M(); ++m) {
      for (int l = 0; l < L_; ++l) it.X(l, m) = cd(z[x_re(m, l)], z[x_im(m, l)]);
    }
    for (int n = 0; n < N_; ++n) it.theta[n] = cd(z[theta_re(n)], z[theta_im(n)]);
    return it;
  }

 private:
  int L_, N_, K_;
  ProblemKind kind_;
  Range x_, theta_, p_, p_bar_, tau_, tau_bar_, epigraph_, delta_, delta_bar_;
  Index size_ = 0;
};

/// v(z) = coeff * z + offset, a complex vector that is affine in the real
/// decision vector. Multiplying by a complex constant or conjugating keeps it
/// affine over the reals.
struct ComplexAffine {
  CMatrix coeff;  // dim x n
  CVector offset;  // dim

  ComplexAffine() = default;
  ComplexAffine(Index dim, Index n) : coeff(CMatrix::Zero(dim, n)), offset(CVector::Zero(dim)) {}

  Index dim() const { return offset.size(); }
  Index num_vars() const { return coeff.cols(); }

  CVector operator()(const RVector& z) const { return coeff * z.cast<cd>() + offset; }

  ComplexAffine& operator+=(const ComplexAffine& o) {
    coeff += o.coeff;
    offset += o.offset;
    return *this;
  }
  ComplexAffine& operator-=(const ComplexAffine& o) {
    coeff -= o.coeff;
    offset -= o.offset;
    return *this;
  }
  friend ComplexAffine operator+(ComplexAffine a, const ComplexAffine& b) { return a += b; }
  friend ComplexAffine operator-(ComplexAffine a, const ComplexAffine& b) { return a -= b; }
  friend ComplexAffine operator*(cd s, ComplexAffine a) {
    a.coeff *= s;
    a.offset *= s;
    return a;
  }
  friend ComplexAffine operator*(double s, ComplexAffine a) { return cd(s, 0.0) * std::move(a); }
};

/// Real image of a complex affine vector: rows are [Re; Im].
struct AffineVectorExpr {
  RMatrix A;
  RVector b;

  Index dim() const { return b.size(); }
  RVector operator()(const RVector& z) const { return A * z + b; }

  static AffineVectorExpr lift(const ComplexAffine& v) {
    const Index d = v.dim();
    AffineVectorExpr e;
    e.A.resize(2 * d, v.num_vars());
    e.A.topRows(d) = v.coeff.real();
    e.A.bottomRows(d) = v.coeff.imag();
    e.b.resize(2 * d);
    e.b.head(d) = v.offset.real();
    e.b.tail(d) = v.offset.imag();
    return e;
  }

  /// Picks a single scalar variable.
  static AffineVectorExpr select(Index var, Index n) {
    AffineVectorExpr e;
    e.A = RMatrix::Zero(1, n);
    e.A(0, var) = 1.0;
    e.b = RVector::Zero(1);
    return e;
  }
};

/// Real linear functional z -> Re{w^H v(z)} split into (coefficients, constant).
inline std::pair<RVector, double> real_inner(const CVector& w, const ComplexAffine& v) {
  assert(w.size() == v.dim());
  const CRowVector wh = w.adjoint();
  const RVector lin = (wh * v.coeff).real().transpose();
  const double c = (wh * v.offset).value().real();
  return {lin, c};
}

/// Column m of X as an affine expression.
inline ComplexAffine column_expr(const VariableLayout& lay, int m) {
  ComplexAffine v(lay.L(), lay.size());
  for (int l = 0; l < lay.L(); ++l) {
    v.coeff(l, lay.x_re(m, l)) = 1.0;
    v.coeff(l, lay.x_im(m, l)) = kJ;
  }
  return v;
}

/// theta as an affine expression.
inline ComplexAffine theta_expr(const VariableLayout& lay) {
  ComplexAffine v(lay.N(), lay.size());
  for (int n = 0; n < lay.N(); ++n) {
    v.coeff(n, lay.theta_re(n)) = 1.0;
    v.coeff(n, lay.theta_im(n)) = kJ;
  }
  return v;
}

/// (direct + theta^T cascade)^H as an L-vector affine in theta, where
/// cascade is N x L. Covers h_k^H (cascade = diag(h_Rk) G) and g^H
/// (cascade = diag(g_R) G, direct = 0).
inline ComplexAffine hermitian_channel_expr(const VariableLayout& lay, const CRowVector& direct,
                                            const CMatrix& cascade) {
  const int L = lay.L();
  ComplexAffine v(L, lay.size());
  v.offset = direct.adjoint();
  // conj(theta_n) = re - j im
  for (int n = 0; n < lay.N(); ++n) {
    for (int l = 0; l < L; ++l) {
      const cd c = std::conj(cascade(n, l));
      v.coeff(l, lay.theta_re(n)) = c;
      v.coeff(l, lay.theta_im(n)) = -kJ * c;
    }
  }
  return v;
}

}  // namespace sisca
