#pragma once

// Real second-order cone programs:  maximize c^T z  s.t.  R_i z + o_i in Q_i,
// where Q = {(t, u) : ||u|| <= t}. A one-dimensional cone is t >= 0.

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Sparse>

#include "sisca/layout.hpp"
#include "sisca/surrogate.hpp"
#include "sisca/types.hpp"

namespace sisca {

/// Which reformulated constraint a cone encodes.
enum class ConstraintTag {
  kInterferenceRePos,  // p_kl >= majorant of  Re{h_k x_l}
  kInterferenceReNeg,  // p_kl >= majorant of -Re{h_k x_l}
  kInterferenceImPos,  // p_bar_kl >= majorant of  Im{h_k x_l}
  kInterferenceImNeg,  // p_bar_kl >= majorant of -Im{h_k x_l}
  kLeakageRePos,  // tau_k >= majorant of  Re{g x_k}
  kLeakageReNeg,
  kLeakageImPos,  // tau_bar_k >= majorant of  Im{g x_k}
  kLeakageImNeg,
  kUserSinr,  // f_bar_k / Gamma_k >= sigma_k^2 + sum (p^2 + p_bar^2)
  kTargetLeakage,  // sigma_T^2 + sum_{l != k} f_l >= (tau^2 + tau_bar^2) / Gamma_hat_k
  kTransmitPower,  // ||X|| <= sqrt(P)
  kUnitModulus,  // |theta_n| <= 1
  kObjectiveEpigraph,  // t <= sum_m f_m + zeta * regularizer
  kSlackNonneg,  // delta_k >= 0, delta_bar_k >= 0
  kOther,
};

inline std::string_view tag_name(ConstraintTag t) {
  switch (t) {
    case ConstraintTag::kInterferenceRePos: return "interference_re_pos";
    case ConstraintTag::kInterferenceReNeg: return "interference_re_neg";
    case ConstraintTag::kInterferenceImPos: return "interference_im_pos";
    case ConstraintTag::kInterferenceImNeg: return "interference_im_neg";
    case ConstraintTag::kLeakageRePos: return "leakage_re_pos";
    case ConstraintTag::kLeakageReNeg: return "leakage_re_neg";
    case ConstraintTag::kLeakageImPos: return "leakage_im_pos";
    case ConstraintTag::kLeakageImNeg: return "leakage_im_neg";
    case ConstraintTag::kUserSinr: return "user_sinr";
    case ConstraintTag::kTargetLeakage: return "target_leakage";
    case ConstraintTag::kTransmitPower: return "transmit_power";
    case ConstraintTag::kUnitModulus: return "unit_modulus";
    case ConstraintTag::kObjectiveEpigraph: return "objective_epigraph";
    case ConstraintTag::kSlackNonneg: return "slack_nonneg";
    case ConstraintTag::kOther: return "other";
  }
  return "other";
}

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct SecondOrderCone {
  SparseRows rows;  // dim x n; row 0 is the head
  RVector offset;
  ConstraintTag tag = ConstraintTag::kOther;
  std::string label;

  Index dim() const { return offset.size(); }

  /// head - ||tail|| at z; negative means violated.
  double slack(const RVector& z) const {
    const RVector v = rows * z + offset;
    return v[0] - v.tail(v.size() - 1).norm();
  }
  double residual(const RVector& z) const { return std::max(0.0, -slack(z)); }
};

struct ConeProgram {
  Index num_vars = 0;
  RVector objective;  // maximized
  std::vector<SecondOrderCone> cones;
  std::optional<VariableLayout> layout;

  double objective_value(const RVector& z) const { return objective.dot(z); }

  double max_residual(const RVector& z) const {
    double r = 0.0;
    for (const auto& c : cones) r = std::max(r, c.residual(z));
    return r;
  }

  Index total_cone_rows() const {
    Index m = 0;
    for (const auto& c : cones) m += c.dim();
    return m;
  }

  /// Plain-text dump: header, objective nonzeros, then one block per cone
  /// with its tag, label and triplets.
  void dump(std::ostream& os) const {
    os << "sisca-cone-program v1\n";
    os << "vars " << num_vars << " cones " << cones.size() << " rows " << total_cone_rows() << "\n";
    os.precision(17);
    os << "objective maximize";
    for (Index j = 0; j < objective.size(); ++j) {
      if (objective[j] != 0.0) os << " " << j << ":" << objective[j];
    }
    os << "\n";
    for (std::size_t i = 0; i < cones.size(); ++i) {
      const auto& c = cones[i];
      os << "cone " << i << " dim " << c.dim() << " tag " << tag_name(c.tag);
      if (!c.label.empty()) os << " label " << c.label;
      os << "\n";
      for (Index r = 0; r < c.rows.rows(); ++r) {
        os << "  row " << r << " offset " << c.offset[r];
        for (SparseRows::InnerIterator it(c.rows, r); it; ++it) os << " " << it.col() << ":" << it.value();
        os << "\n";
      }
    }
  }
};

/// Builds ||tail_A z + tail_b|| <= head . z + head_const.
inline SecondOrderCone norm_cone(const RMatrix& tail_A, const RVector& tail_b, const RVector& head,
                                 double head_const, ConstraintTag tag, std::string label = {}) {
  const Index n = head.size();
  RMatrix dense(tail_A.rows() + 1, n);
  dense.row(0) = head.transpose();
  if (tail_A.rows() > 0) dense.bottomRows(tail_A.rows()) = tail_A;
  SecondOrderCone c;
  c.rows = dense.sparseView();
  c.offset.resize(tail_b.size() + 1);
  c.offset[0] = head_const;
  c.offset.tail(tail_b.size()) = tail_b;
  c.tag = tag;
  c.label = std::move(label);
  return c;
}

/// sum_j coef_j ||A_j z + b_j||^2 <= lin . z + constant (every coef_j > 0)
/// as a single cone, using ||w||^2 <= t  <=>  ||(2w, t - 1)|| <= t + 1.
/// Without quadratic terms this is the half-space lin . z + constant >= 0.
inline SecondOrderCone quadratic_cone(const std::vector<QuadTerm>& terms, const RVector& lin, double constant,
                                      ConstraintTag tag, std::string label = {}) {
  const Index n = lin.size();
  if (terms.empty()) return norm_cone(RMatrix(0, n), RVector(0), lin, constant, tag, std::move(label));
  Index p = 0;
  for (const auto& t : terms) {
    if (!(t.coef > 0.0)) throw std::invalid_argument("quadratic_cone: coefficients must be positive");
    p += t.expr.dim();
  }
  RMatrix A(p + 1, n);
  RVector b(p + 1);
  Index at = 0;
  for (const auto& t : terms) {
    const double w = 2.0 * std::sqrt(t.coef);
    A.middleRows(at, t.expr.dim()) = w * t.expr.A;
    b.segment(at, t.expr.dim()) = w * t.expr.b;
    at += t.expr.dim();
  }
  A.row(p) = lin.transpose();
  b[p] = constant - 1.0;
  return norm_cone(A, b, lin, constant + 1.0, tag, std::move(label));
}

}  // namespace sisca
