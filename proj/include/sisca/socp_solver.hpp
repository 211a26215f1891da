#pragma once

// Primal-dual interior-point method for second-order cone programs.
//
// Internally the program is put in the form
//   minimize c^T x  s.t.  G x + s = h,  s in K
// and solved through the homogeneous self-dual embedding with
// Nesterov-Todd scaling and Mehrotra predictor-corrector steps. Newton
// systems are reduced to normal equations, factored densely, and polished
// by iterative refinement on the full system.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string_view>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <Eigen/Sparse>

#include "sisca/cone_program.hpp"
#include "sisca/types.hpp"

namespace sisca {

struct SolverOptions {
  double feastol = 1e-8;
  double abstol = 1e-8;
  double reltol = 1e-8;
  // Reduced-accuracy fallback when progress stalls.
  double feastol_inaccurate = 1e-5;
  double abstol_inaccurate = 5e-5;
  double reltol_inaccurate = 5e-5;
  int max_iters = 100;
  double step_fraction = 0.99;
  int refinement_steps = 3;
  int equilibration_passes = 3;
  // Factor wide cone blocks through their row space when it is low rank.
  bool low_rank = true;
};

enum class SolverStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure, kIterationLimit };

inline std::string_view status_name(SolverStatus s) {
  switch (s) {
    case SolverStatus::kOptimal: return "optimal";
    case SolverStatus::kInfeasible: return "infeasible";
    case SolverStatus::kUnbounded: return "unbounded";
    case SolverStatus::kNumericalFailure: return "numerical-failure";
    case SolverStatus::kIterationLimit: return "iteration-limit";
  }
  return "unknown";
}

struct SolverStats {
  int iterations = 0;
  double wall_ms = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  bool reduced_accuracy = false;
  Index compressed_rank = 0;  // row-space dimension of the wide cones, 0 when factored directly
};

/// z is set exactly when status is optimal.
struct SolverResult {
  SolverStatus status = SolverStatus::kNumericalFailure;
  std::optional<RVector> z;
  double objective = std::numeric_limits<double>::quiet_NaN();
  SolverStats stats;
};

namespace detail {

struct ConeBlock {
  Index start = 0;
  Index dim = 0;
  std::vector<Index> support;  // columns touched by the cone's rows
  RMatrix block;  // G restricted to (rows, support); empty for dense cones
  Index dense_col = -1;  // first column in the stacked transpose, dense cones only
};

// Cones touching more columns than this go through one stacked dense update.
inline constexpr Index kDenseSupport = 16;

struct NtScaling {
  double eta = 1.0;
  RVector w;  // normalized: w0^2 - ||w1||^2 = 1
};

inline double soc_residual(double head, double tail_norm) { return (head - tail_norm) * (head + tail_norm); }

class SocpIpm {
 public:
  SocpIpm(const Eigen::SparseMatrix<double>& G, RVector h, RVector c, const std::vector<Index>& dims,
          const SolverOptions& opts)
      : G_(G), h_(std::move(h)), c_(std::move(c)), opts_(opts) {
    n_ = G_.cols();
    m_ = G_.rows();
    Index at = 0;
    for (Index d : dims) {
      ConeBlock b;
      b.start = at;
      b.dim = d;
      cones_.push_back(std::move(b));
      at += d;
    }
    equilibrate();
    build_blocks();
    if (opts_.low_rank) compress();
    if (!compressed_) {
      Gt_ = G_.transpose();
      use_dense_ = G_.nonZeros() * 20 > n_ * m_ && n_ * m_ <= (Index{1} << 24);
      if (use_dense_) Gd_ = RMatrix(G_);
    }
  }

  SolverResult run() {
    SolverResult res;
    if (!initialize()) {
      res.status = SolverStatus::kNumericalFailure;
      return res;
    }
    const double hnorm = std::max(1.0, h_.norm());
    const double cnorm = std::max(1.0, c_.norm());
    const double degree = static_cast<double>(cones_.size()) + 1.0;

    std::optional<Snapshot> fallback;
    SolverStatus status = SolverStatus::kIterationLimit;
    int iter = 0;
    for (;; ++iter) {
      const RVector rx = Gt_mul(z_) + c_ * tau_;
      const RVector rz = G_mul(x_) + s_ - h_ * tau_;
      const double cx = c_.dot(x_);
      const double hz = h_.dot(z_);
      const double rt = kappa_ + cx + hz;
      const double sz = s_.dot(z_);
      const double mu = (sz + tau_ * kappa_) / degree;

      const double pcost = cx / tau_;
      const double dcost = -hz / tau_;
      stats_.primal_residual = rz.norm() / tau_ / hnorm;
      stats_.dual_residual = rx.norm() / tau_ / cnorm;
      stats_.gap = sz / (tau_ * tau_);
      stats_.relative_gap = std::numeric_limits<double>::infinity();
      if (pcost < 0.0) {
        stats_.relative_gap = stats_.gap / -pcost;
      } else if (dcost > 0.0) {
        stats_.relative_gap = stats_.gap / dcost;
      }
      stats_.iterations = iter;
      stats_.compressed_rank = compressed_ ? basis_.cols() : 0;

      const bool feasible = stats_.primal_residual < opts_.feastol && stats_.dual_residual < opts_.feastol;
      if (feasible && (stats_.gap < opts_.abstol || stats_.relative_gap < opts_.reltol)) {
        status = SolverStatus::kOptimal;
        break;
      }
      if (stats_.primal_residual < opts_.feastol_inaccurate && stats_.dual_residual < opts_.feastol_inaccurate &&
          (stats_.gap < opts_.abstol_inaccurate || stats_.relative_gap < opts_.reltol_inaccurate)) {
        Snapshot snap{x_, tau_, stats_};
        const double merit = std::max({snap.stats.primal_residual, snap.stats.dual_residual,
                                       std::min(snap.stats.gap, snap.stats.relative_gap)});
        if (!fallback || merit <= fallback->merit()) fallback = Snapshot{snap};
      }
      if (hz < 0.0) {
        const double pinf = (rx - c_ * tau_).norm() / cnorm / -hz;
        if (pinf < opts_.feastol && tau_ < kappa_) {
          status = SolverStatus::kInfeasible;
          break;
        }
      }
      if (cx < 0.0) {
        const double dinf = (rz + h_ * tau_).norm() / hnorm / -cx;
        if (dinf < opts_.feastol && tau_ < kappa_) {
          status = SolverStatus::kUnbounded;
          break;
        }
      }
      if (iter >= opts_.max_iters) {
        status = SolverStatus::kIterationLimit;
        break;
      }
      if (!std::isfinite(mu) || !step(rx, rz, rt, mu)) {
        status = SolverStatus::kNumericalFailure;
        break;
      }
    }

    res.stats = stats_;
    if (status == SolverStatus::kOptimal) {
      res.status = status;
      res.z = unscale(x_, tau_);
    } else if ((status == SolverStatus::kNumericalFailure || status == SolverStatus::kIterationLimit) && fallback) {
      res.status = SolverStatus::kOptimal;
      res.z = unscale(fallback->x, fallback->tau);
      res.stats = fallback->stats;
      res.stats.iterations = iter;
      res.stats.reduced_accuracy = true;
    } else {
      res.status = status;
    }
    return res;
  }

 private:
  struct Snapshot {
    RVector x;
    double tau;
    SolverStats stats;
    double merit() const {
      return std::max({stats.primal_residual, stats.dual_residual, std::min(stats.gap, stats.relative_gap)});
    }
  };

  // Ruiz-style: columns individually, rows uniformly within each cone so the
  // cone itself is preserved.
  void equilibrate() {
    col_scale_ = RVector::Ones(n_);
    row_scale_ = RVector::Ones(m_);
    for (int pass = 0; pass < opts_.equilibration_passes; ++pass) {
      RVector col_max = RVector::Zero(n_);
      RVector row_max = RVector::Zero(m_);
      for (Index j = 0; j < G_.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
          const double a = std::abs(it.value());
          col_max[j] = std::max(col_max[j], a);
          row_max[it.row()] = std::max(row_max[it.row()], a);
        }
      }
      RVector d(n_), e(m_);
      for (Index j = 0; j < n_; ++j) d[j] = col_max[j] > 0.0 ? 1.0 / std::sqrt(col_max[j]) : 1.0;
      for (const auto& cb : cones_) {
        const double mx = row_max.segment(cb.start, cb.dim).maxCoeff();
        e.segment(cb.start, cb.dim).setConstant(mx > 0.0 ? 1.0 / std::sqrt(mx) : 1.0);
      }
      for (Index j = 0; j < G_.outerSize(); ++j) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) it.valueRef() *= e[it.row()] * d[j];
      }
      col_scale_ = col_scale_.cwiseProduct(d);
      row_scale_ = row_scale_.cwiseProduct(e);
    }
    c_ = col_scale_.cwiseProduct(c_);
    h_ = row_scale_.cwiseProduct(h_);
    obj_scale_ = c_.lpNorm<Eigen::Infinity>();
    if (!(obj_scale_ > 0.0)) obj_scale_ = 1.0;
    c_ /= obj_scale_;
    G_.makeCompressed();
  }

  void build_blocks() {
    const Eigen::SparseMatrix<double, Eigen::RowMajor> Gr = G_;
    std::vector<Index> mark(n_, -1);
    Index dense_cols = 0;
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      auto& cb = cones_[i];
      std::vector<Index> supp;
      for (Index r = cb.start; r < cb.start + cb.dim; ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Gr, r); it; ++it) {
          if (mark[it.col()] != static_cast<Index>(i)) {
            mark[it.col()] = static_cast<Index>(i);
            supp.push_back(it.col());
          }
        }
      }
      std::sort(supp.begin(), supp.end());
      if (static_cast<Index>(supp.size()) > kDenseSupport) {
        cb.dense_col = dense_cols;
        dense_cols += cb.dim;
      } else {
        cb.block = RMatrix::Zero(cb.dim, static_cast<Index>(supp.size()));
        for (Index r = 0; r < cb.dim; ++r) {
          Index p = 0;
          for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Gr, cb.start + r); it; ++it) {
            while (supp[p] != it.col()) ++p;
            cb.block(r, p) = it.value();
          }
        }
      }
      cb.support = std::move(supp);
    }
    dense_t_ = RMatrix::Zero(n_, dense_cols);
    for (const auto& cb : cones_) {
      if (cb.dense_col < 0) continue;
      for (Index r = 0; r < cb.dim; ++r) {
        for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(Gr, cb.start + r); it; ++it) {
          dense_t_(it.col(), cb.dense_col + r) = it.value();
        }
      }
    }
    scaled_t_.resize(n_, dense_cols);
    dense_row_.assign(m_, false);
    for (const auto& cb : cones_) {
      if (cb.dense_col >= 0) std::fill(dense_row_.begin() + cb.start, dense_row_.begin() + cb.start + cb.dim, true);
    }
  }

  // Randomized range finder for the row space of the dense cone rows. The
  // search stops once a fresh Gaussian block has nothing left outside the
  // basis, i.e. the factorization is exact to rounding with overwhelming
  // probability.
  void compress() {
    const Index md = dense_t_.cols();
    if (md == 0 || n_ < 32) return;
    const double dnorm = dense_t_.norm();
    if (!(dnorm > 0.0)) return;
    // Largest rank for which the compressed update is clearly cheaper than
    // the direct one (flop model of the three products it replaces).
    const double direct = 0.5 * double(md) * double(n_) * double(n_);
    Index limit = 0;
    while (limit < n_) {
      const double r = double(limit + 1);
      if (0.5 * double(md) * r * r + double(n_) * r * r + 0.5 * double(n_) * double(n_) * r > 0.7 * direct) break;
      ++limit;
    }
    const Index blk = 16;
    std::mt19937_64 rng(0x5eed);
    std::normal_distribution<double> nd;
    RMatrix Q(n_, 0);
    while (true) {
      RMatrix omega(md, blk);
      for (Index j = 0; j < blk; ++j) {
        for (Index i = 0; i < md; ++i) omega(i, j) = nd(rng);
      }
      RMatrix Y = dense_t_ * omega;
      for (int pass = 0; pass < 2 && Q.cols() > 0; ++pass) Y.noalias() -= Q * (Q.transpose() * Y);
      Eigen::ColPivHouseholderQR<RMatrix> qr(Y);
      Index rank = 0;
      const Index kmax = std::min(Y.rows(), Y.cols());
      while (rank < kmax && std::abs(qr.matrixQR()(rank, rank)) > 1e-11 * dnorm) ++rank;
      if (rank > 0) {
        if (Q.cols() + rank > limit) return;
        const RMatrix fresh = qr.householderQ() * RMatrix::Identity(n_, rank);
        RMatrix grown(n_, Q.cols() + rank);
        grown << Q, fresh;
        Q = std::move(grown);
      }
      if (rank < blk) break;
    }
    RMatrix ct = Q.transpose() * dense_t_;
    basis_ = std::move(Q);
    dense_ct_ = std::move(ct);
    scaled_t_.resize(basis_.cols(), md);

    std::vector<Eigen::Triplet<double>> trips;
    for (Index j = 0; j < G_.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G_, j); it; ++it) {
        if (!dense_row_[it.row()]) trips.emplace_back(it.row(), j, it.value());
      }
    }
    sparse_part_.resize(m_, n_);
    sparse_part_.setFromTriplets(trips.begin(), trips.end());
    sparse_part_t_ = sparse_part_.transpose();
    compressed_ = true;
  }

  RVector Gt_mul(const RVector& v) const {
    if (compressed_) {
      RVector vd(dense_ct_.cols());
      for (const auto& cb : cones_) {
        if (cb.dense_col >= 0) vd.segment(cb.dense_col, cb.dim) = v.segment(cb.start, cb.dim);
      }
      RVector out = sparse_part_t_ * v;
      out.noalias() += basis_ * (dense_ct_ * vd);
      return out;
    }
    if (use_dense_) return Gd_.transpose() * v;
    return Gt_ * v;
  }
  RVector G_mul(const RVector& v) const {
    if (compressed_) {
      RVector out = sparse_part_ * v;
      const RVector vd = dense_ct_.transpose() * (basis_.transpose() * v);
      for (const auto& cb : cones_) {
        if (cb.dense_col >= 0) out.segment(cb.start, cb.dim) += vd.segment(cb.dense_col, cb.dim);
      }
      return out;
    }
    if (use_dense_) return Gd_ * v;
    return G_ * v;
  }

  RVector unscale(const RVector& x, double tau) const { return col_scale_.cwiseProduct(x) / tau; }

  // ---- cone algebra ----

  RVector identity() const {
    RVector e = RVector::Zero(m_);
    for (const auto& cb : cones_) e[cb.start] = 1.0;
    return e;
  }

  // Shifts v into the interior along e when it is not already well inside.
  void bring_to_cone(RVector& v) const {
    double alpha = -std::numeric_limits<double>::infinity();
    for (const auto& cb : cones_) {
      const double tail = v.segment(cb.start + 1, cb.dim - 1).norm();
      alpha = std::max(alpha, tail - v[cb.start]);
    }
    if (alpha >= -1e-7) {
      for (const auto& cb : cones_) v[cb.start] += 1.0 + alpha;
    }
  }

  RVector jordan(const RVector& u, const RVector& v) const {
    RVector out(m_);
    for (const auto& cb : cones_) {
      const Index a = cb.start, t = cb.dim - 1;
      out[a] = u.segment(a, cb.dim).dot(v.segment(a, cb.dim));
      if (t > 0) out.segment(a + 1, t) = u[a] * v.segment(a + 1, t) + v[a] * u.segment(a + 1, t);
    }
    return out;
  }

  // Solves lambda o u = d for u.
  RVector jordan_div(const RVector& lam, const RVector& d) const {
    RVector out(m_);
    for (const auto& cb : cones_) {
      const Index a = cb.start, t = cb.dim - 1;
      if (t == 0) {
        out[a] = d[a] / lam[a];
        continue;
      }
      const auto l1 = lam.segment(a + 1, t);
      const auto d1 = d.segment(a + 1, t);
      const double det = soc_residual(lam[a], l1.norm());
      const double u0 = (lam[a] * d[a] - l1.dot(d1)) / det;
      out[a] = u0;
      out.segment(a + 1, t) = (d1 - u0 * l1) / lam[a];
    }
    return out;
  }

  // Largest alpha with v + alpha dv in the cone (infinity when unbounded).
  double max_step(const RVector& v, const RVector& dv) const {
    double alpha = std::numeric_limits<double>::infinity();
    for (const auto& cb : cones_) {
      const Index a = cb.start, t = cb.dim - 1;
      const double v0 = v[a], d0 = dv[a];
      if (t == 0) {
        if (d0 < 0.0) alpha = std::min(alpha, -v0 / d0);
        continue;
      }
      const auto v1 = v.segment(a + 1, t);
      const auto d1 = dv.segment(a + 1, t);
      const double qa = d0 * d0 - d1.squaredNorm();
      const double qb = v0 * d0 - v1.dot(d1);
      const double qc = std::max(0.0, soc_residual(v0, v1.norm()));
      const double disc = qb * qb - qa * qc;
      if (disc >= 0.0) {
        const double denom = -qb + std::sqrt(disc);
        if (denom > 0.0) alpha = std::min(alpha, qc / denom);
      }
      if (d0 < 0.0) alpha = std::min(alpha, -v0 / d0);
    }
    return alpha;
  }

  bool update_scalings() {
    scal_.resize(cones_.size());
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      const auto& cb = cones_[i];
      const auto s = s_.segment(cb.start, cb.dim);
      const auto z = z_.segment(cb.start, cb.dim);
      const Index t = cb.dim - 1;
      const double sres = t > 0 ? soc_residual(s[0], s.tail(t).norm()) : s[0] * s[0];
      const double zres = t > 0 ? soc_residual(z[0], z.tail(t).norm()) : z[0] * z[0];
      if (!(sres > 0.0) || !(zres > 0.0) || s[0] <= 0.0 || z[0] <= 0.0) return false;
      const double snorm = std::sqrt(sres), znorm = std::sqrt(zres);
      const RVector sb = s / snorm;
      const RVector zb = z / znorm;
      const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
      NtScaling& sc = scal_[i];
      sc.eta = std::sqrt(snorm / znorm);
      sc.w.resize(cb.dim);
      sc.w[0] = (sb[0] + zb[0]) / (2.0 * gamma);
      if (t > 0) sc.w.tail(t) = (sb.tail(t) - zb.tail(t)) / (2.0 * gamma);
    }
    return true;
  }

  RVector apply_w(const RVector& v) const {
    RVector out(m_);
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      const auto& cb = cones_[i];
      const auto& sc = scal_[i];
      const Index a = cb.start, t = cb.dim - 1;
      if (t == 0) {
        out[a] = sc.eta * sc.w[0] * v[a];
        continue;
      }
      const auto w1 = sc.w.tail(t);
      const double dot = w1.dot(v.segment(a + 1, t));
      out[a] = sc.eta * (sc.w[0] * v[a] + dot);
      out.segment(a + 1, t) = sc.eta * (v.segment(a + 1, t) + (v[a] + dot / (1.0 + sc.w[0])) * w1);
    }
    return out;
  }

  RVector apply_winv(const RVector& v) const {
    RVector out(m_);
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      const auto& cb = cones_[i];
      const auto& sc = scal_[i];
      const Index a = cb.start, t = cb.dim - 1;
      if (t == 0) {
        out[a] = v[a] / (sc.eta * sc.w[0]);
        continue;
      }
      const auto w1 = sc.w.tail(t);
      const double dot = w1.dot(v.segment(a + 1, t));
      out[a] = (sc.w[0] * v[a] - dot) / sc.eta;
      out.segment(a + 1, t) = (v.segment(a + 1, t) + (dot / (1.0 + sc.w[0]) - v[a]) * w1) / sc.eta;
    }
    return out;
  }

  // W^{-1} applied to the rows of a cone block.
  RMatrix winv_block(const ConeBlock& cb, const NtScaling& sc) const {
    const Index t = cb.dim - 1;
    RMatrix out(cb.dim, cb.block.cols());
    if (t == 0) {
      out = cb.block / (sc.eta * sc.w[0]);
      return out;
    }
    const auto w1 = sc.w.tail(t);
    const RRowVector dots = w1.transpose() * cb.block.bottomRows(t);
    out.row(0) = (sc.w[0] * cb.block.row(0) - dots) / sc.eta;
    const RRowVector r = dots / (1.0 + sc.w[0]) - cb.block.row(0);
    out.bottomRows(t) = (cb.block.bottomRows(t) + w1 * r) / sc.eta;
    return out;
  }

  // ---- linear algebra ----

  // W^{-1} applied to a cone's rows stored as columns of B.
  static void winv_columns(Eigen::Ref<RMatrix> B, const NtScaling& sc) {
    const Index t = B.cols() - 1;
    if (t == 0) {
      B /= sc.eta * sc.w[0];
      return;
    }
    const auto w1 = sc.w.tail(t);
    const RVector dots = B.rightCols(t) * w1;
    const RVector b0 = B.col(0);
    B.col(0) = (sc.w[0] * b0 - dots) / sc.eta;
    B.rightCols(t).noalias() += (dots / (1.0 + sc.w[0]) - b0) * w1.transpose();
    B.rightCols(t) /= sc.eta;
  }

  bool factor() {
    H_.setZero(n_, n_);
    if (compressed_) {
      scaled_t_ = dense_ct_;
      for (std::size_t i = 0; i < cones_.size(); ++i) {
        const auto& cb = cones_[i];
        if (cb.dense_col >= 0) winv_columns(scaled_t_.middleCols(cb.dense_col, cb.dim), scal_[i]);
      }
      const Index r = basis_.cols();
      RMatrix S = RMatrix::Zero(r, r);
      S.selfadjointView<Eigen::Lower>().rankUpdate(scaled_t_);
      Eigen::LLT<RMatrix> sl(S.selfadjointView<Eigen::Lower>());
      if (sl.info() != Eigen::Success) return false;
      const RMatrix P = basis_ * sl.matrixL();
      H_.selfadjointView<Eigen::Lower>().rankUpdate(P);
    } else if (scaled_t_.cols() > 0) {
      scaled_t_ = dense_t_;
      for (std::size_t i = 0; i < cones_.size(); ++i) {
        const auto& cb = cones_[i];
        if (cb.dense_col >= 0) winv_columns(scaled_t_.middleCols(cb.dense_col, cb.dim), scal_[i]);
      }
      H_.selfadjointView<Eigen::Lower>().rankUpdate(scaled_t_);
    }
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      const auto& cb = cones_[i];
      if (cb.dense_col >= 0) continue;
      const RMatrix gt = winv_block(cb, scal_[i]);
      const Index p = static_cast<Index>(cb.support.size());
      for (Index b = 0; b < p; ++b) {
        for (Index a = b; a < p; ++a) H_(cb.support[a], cb.support[b]) += gt.col(a).dot(gt.col(b));
      }
    }
    const double maxdiag = H_.diagonal().maxCoeff();
    double reg = 1e-13 * std::max(1.0, maxdiag);
    for (int attempt = 0; attempt < 4; ++attempt) {
      H_.diagonal().array() += reg;
      llt_.compute(H_.selfadjointView<Eigen::Lower>());
      H_.diagonal().array() -= reg;
      if (llt_.info() == Eigen::Success) return true;
      reg *= 1e3;
    }
    return false;
  }

  // [0 G^T; G -W^2] [dx; dz] = [r1; r2]
  void solve_kkt(const RVector& r1, const RVector& r2, RVector& dx, RVector& dz) const {
    auto base = [&](const RVector& a, const RVector& b, RVector& ox, RVector& oz) {
      const RVector w2b = apply_winv(apply_winv(b));
      ox = llt_.solve(a + Gt_mul(w2b));
      oz = apply_winv(apply_winv(G_mul(ox))) - w2b;
    };
    base(r1, r2, dx, dz);
    for (int k = 0; k < opts_.refinement_steps; ++k) {
      const RVector e1 = r1 - Gt_mul(dz);
      const RVector e2 = r2 - (G_mul(dx) - apply_w(apply_w(dz)));
      const double err = std::max(e1.lpNorm<Eigen::Infinity>(), e2.lpNorm<Eigen::Infinity>());
      const double ref = std::max({1.0, r1.lpNorm<Eigen::Infinity>(), r2.lpNorm<Eigen::Infinity>()});
      if (err <= 1e-15 * ref) break;
      RVector cx, cz;
      base(e1, e2, cx, cz);
      dx += cx;
      dz += cz;
    }
  }

  bool initialize() {
    H_ = RMatrix::Zero(n_, n_);
    scal_.assign(cones_.size(), NtScaling{});
    for (std::size_t i = 0; i < cones_.size(); ++i) {
      scal_[i].w = RVector::Zero(cones_[i].dim);
      scal_[i].w[0] = 1.0;
    }
    if (!factor()) return false;
    RVector x1, z1, x2, z2;
    // W = I: least squares for the primal, min-norm dual.
    solve_kkt(RVector::Zero(n_), h_, x1, z1);
    x_ = x1;
    s_ = -z1;
    bring_to_cone(s_);
    solve_kkt(-c_, RVector::Zero(m_), x2, z2);
    z_ = z2;
    bring_to_cone(z_);
    tau_ = 1.0;
    kappa_ = 1.0;
    return true;
  }

  struct Direction {
    RVector dx, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
  };

  Direction direction(const RVector& x1, const RVector& z1, const RVector& rx, const RVector& rz, double rt,
                      double sigma, const RVector& ds_target, double dkap) const {
    const RVector u = jordan_div(lambda_, ds_target);
    const RVector wu = apply_w(u);
    RVector x2, z2;
    solve_kkt(-(1.0 - sigma) * rx, -(1.0 - sigma) * rz - wu, x2, z2);
    Direction d;
    const double num = -(1.0 - sigma) * rt - c_.dot(x2) - h_.dot(z2) - dkap / tau_;
    const double den = c_.dot(x1) + h_.dot(z1) - kappa_ / tau_;
    d.dtau = num / den;
    d.dx = x2 + d.dtau * x1;
    d.dz = z2 + d.dtau * z1;
    d.ds = apply_w(u - apply_w(d.dz));
    d.dkappa = (dkap - kappa_ * d.dtau) / tau_;
    return d;
  }

  double step_length(const Direction& d) const {
    double a = std::min(max_step(s_, d.ds), max_step(z_, d.dz));
    if (d.dtau < 0.0) a = std::min(a, -tau_ / d.dtau);
    if (d.dkappa < 0.0) a = std::min(a, -kappa_ / d.dkappa);
    return a;
  }

  bool step(const RVector& rx, const RVector& rz, double rt, double mu) {
    if (!update_scalings()) return false;
    lambda_ = apply_w(z_);
    if (!factor()) return false;
    RVector x1, z1;
    solve_kkt(-c_, h_, x1, z1);

    const RVector lam_sq = jordan(lambda_, lambda_);
    const Direction aff = direction(x1, z1, rx, rz, rt, 0.0, -lam_sq, -kappa_ * tau_);
    const double alpha_aff = std::min(1.0, step_length(aff));
    const double sigma = std::clamp(std::pow(1.0 - alpha_aff, 3), 1e-4, 1.0);

    const RVector corr = jordan(apply_winv(aff.ds), apply_w(aff.dz));
    const RVector ds = -lam_sq - corr + sigma * mu * identity();
    const double dkap = -kappa_ * tau_ - aff.dkappa * aff.dtau + sigma * mu;
    const Direction d = direction(x1, z1, rx, rz, rt, sigma, ds, dkap);
    const double alpha = std::min(1.0, opts_.step_fraction * step_length(d));
    if (!(alpha > 1e-10) || !std::isfinite(alpha)) return false;

    x_ += alpha * d.dx;
    s_ += alpha * d.ds;
    z_ += alpha * d.dz;
    tau_ += alpha * d.dtau;
    kappa_ += alpha * d.dkappa;
    return tau_ > 0.0 && kappa_ > 0.0 && x_.allFinite() && s_.allFinite() && z_.allFinite();
  }

  Eigen::SparseMatrix<double> G_;
  Eigen::SparseMatrix<double> Gt_;
  RMatrix Gd_;
  bool use_dense_ = false;
  RVector h_, c_;
  SolverOptions opts_;
  Index n_ = 0, m_ = 0;
  std::vector<ConeBlock> cones_;
  RVector col_scale_, row_scale_;
  double obj_scale_ = 1.0;

  RVector x_, s_, z_, lambda_;
  double tau_ = 1.0, kappa_ = 1.0;
  std::vector<NtScaling> scal_;
  RMatrix dense_t_, scaled_t_;  // G rows of dense cones, stored transposed
  std::vector<bool> dense_row_;
  bool compressed_ = false;
  RMatrix basis_;  // orthonormal row-space basis of the dense rows
  RMatrix dense_ct_;  // dense rows in that basis, stored transposed
  Eigen::SparseMatrix<double> sparse_part_, sparse_part_t_;  // remaining rows
  RMatrix H_;
  Eigen::LLT<RMatrix> llt_;
  SolverStats stats_;
};

}  // namespace detail

/// Solves a ConeProgram. Deterministic for identical inputs and options.
inline SolverResult solve(const ConeProgram& program, const SolverOptions& opts = {}) {
  const auto t0 = std::chrono::steady_clock::now();
  const Index n = program.num_vars;
  if (program.objective.size() != n) throw std::invalid_argument("solve: objective length mismatch");
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<Index> dims;
  const Index m = program.total_cone_rows();
  RVector h(m);
  Index at = 0;
  for (const auto& cone : program.cones) {
    if (cone.rows.cols() != n || cone.rows.rows() != cone.dim() || cone.dim() < 1) {
      throw std::invalid_argument("solve: malformed cone");
    }
    for (Index r = 0; r < cone.rows.rows(); ++r) {
      for (SparseRows::InnerIterator it(cone.rows, r); it; ++it) trips.emplace_back(at + r, it.col(), -it.value());
    }
    h.segment(at, cone.dim()) = cone.offset;
    dims.push_back(cone.dim());
    at += cone.dim();
  }
  Eigen::SparseMatrix<double> G(m, n);
  G.setFromTriplets(trips.begin(), trips.end());
  detail::SocpIpm ipm(G, std::move(h), -program.objective, dims, opts);
  SolverResult res = ipm.run();
  if (res.z) res.objective = program.objective_value(*res.z);
  res.stats.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

}  // namespace sisca
