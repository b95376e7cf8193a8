#ifndef TVSTERGM_SPLINES_HPP
#define TVSTERGM_SPLINES_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tvstergm/errors.hpp"

namespace tvstergm {

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Q x Q matrix D'D with D the order-th difference operator.
inline Eigen::MatrixXd difference_penalty(int dimension, int order) {
  if (order < 1) throw ContractError("penalty order must be >= 1");
  if (dimension <= order) throw ContractError("penalty dimension must exceed its order");
  Eigen::MatrixXd d = Eigen::MatrixXd::Identity(dimension, dimension);
  for (int k = 0; k < order; ++k) {
    Eigen::MatrixXd next(d.rows() - 1, dimension);
    for (Eigen::Index r = 0; r + 1 < d.rows(); ++r) next.row(r) = d.row(r + 1) - d.row(r);
    d = std::move(next);
  }
  return d.transpose() * d;
}

// Orthogonal projector onto the null space of a symmetric PSD matrix.
inline Eigen::MatrixXd null_space_projector(const Eigen::MatrixXd& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  const double tol = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(s.rows(), s.cols());
  for (Eigen::Index k = 0; k < s.rows(); ++k)
    if (std::abs(es.eigenvalues()(k)) <= tol)
      p += es.eigenvectors().col(k) * es.eigenvectors().col(k).transpose();
  return p;
}

// Equidistant B-spline basis on [lower, upper] with `degree` knots replicated
// beyond each boundary at the same spacing.
struct SplineBasis {
  int degree = 2;
  int dimension = 1;
  int penalty_order = 1;
  double lower = 0.0;
  double upper = 1.0;
  std::vector<double> knots;

  static SplineBasis make(double lower, double upper, int dimension, int degree,
                          int penalty_order = 1) {
    if (degree < 0) throw ContractError("spline degree must be >= 0");
    if (dimension < degree + 1) throw ContractError("spline dimension must be >= degree + 1");
    if (!(upper > lower)) {
      if (upper == lower && dimension == 1) {
        upper = lower + 1.0;
      } else {
        throw ContractError("spline range is empty");
      }
    }
    SplineBasis b;
    b.degree = degree;
    b.dimension = dimension;
    b.penalty_order = penalty_order;
    b.lower = lower;
    b.upper = upper;
    const int intervals = dimension - degree;
    const double h = (upper - lower) / intervals;
    b.knots.resize(dimension + degree + 1);
    for (int k = 0; k < int(b.knots.size()); ++k) b.knots[k] = lower + (k - degree) * h;
    return b;
  }

  bool penalized() const { return dimension > penalty_order; }

  Eigen::MatrixXd penalty() const {
    if (!penalized()) return Eigen::MatrixXd::Zero(dimension, dimension);
    return difference_penalty(dimension, penalty_order);
  }

  double clamp(double x) const { return std::min(std::max(x, lower), upper); }

  // Nonzero basis values at x: writes degree + 1 values to `out` and returns
  // the index of the first one.
  int evaluate_local(double x, double* out) const {
    const double tol = 1e-9 * (upper - lower);
    if (x < lower - tol || x > upper + tol || !std::isfinite(x))
      throw ContractError("point " + std::to_string(x) + " outside spline coverage [" +
                          std::to_string(lower) + ", " + std::to_string(upper) + "]");
    x = clamp(x);
    const int p = degree;
    int span = p;
    while (span < dimension - 1 && x >= knots[span + 1]) ++span;
    // Cox-de Boor, triangular form.
    std::vector<double> left(p + 1), right(p + 1);
    out[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
      left[j] = x - knots[span + 1 - j];
      right[j] = knots[span + j] - x;
      double saved = 0.0;
      for (int r = 0; r < j; ++r) {
        double tmp = out[r] / (right[r + 1] + left[j - r]);
        out[r] = saved + right[r + 1] * tmp;
        saved = left[j - r] * tmp;
      }
      out[j] = saved;
    }
    return span - p;
  }

  Eigen::RowVectorXd evaluate(double x) const {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(dimension);
    std::vector<double> v(degree + 1);
    int first = evaluate_local(x, v.data());
    for (int k = 0; k <= degree; ++k) row(first + k) = v[k];
    return row;
  }

  Eigen::MatrixXd evaluate(const std::vector<double>& xs) const {
    Eigen::MatrixXd m(xs.size(), dimension);
    for (std::size_t r = 0; r < xs.size(); ++r) m.row(r) = evaluate(xs[r]);
    return m;
  }
};

// Basis with knots spanning the range of `points`.
inline Eigen::MatrixXd bspline_basis(const std::vector<double>& points, int dimension, int degree) {
  if (points.empty()) throw ContractError("no evaluation points");
  auto [lo, hi] = std::minmax_element(points.begin(), points.end());
  return SplineBasis::make(*lo, *hi, dimension, degree).evaluate(points);
}

// ---------------------------------------------------------------------------
// Design blocks

enum class BlockKind { intercept, constant, varying, random_smooth };

inline const char* to_string(BlockKind k) {
  switch (k) {
    case BlockKind::intercept: return "intercept";
    case BlockKind::constant: return "constant";
    case BlockKind::varying: return "varying";
    case BlockKind::random_smooth: return "random_smooth";
  }
  return "?";
}

// A group of design columns with its penalties. Random-smooth blocks repeat a
// unit of `basis->dimension` columns per level (actor); their penalties are
// given for one unit and apply identically to every level.
struct DesignBlock {
  std::string label;
  BlockKind kind = BlockKind::constant;
  std::string covariate;  // covariate multiplying the block, or the actor role
  std::optional<SplineBasis> basis;
  Eigen::MatrixXd constraint;  // raw unit -> constrained unit, empty if none
  std::vector<std::string> levels;
  std::vector<std::pair<double, double>> level_spans;  // periods where a level exists
  std::vector<Eigen::MatrixXd> penalties;
  std::vector<std::string> penalty_names;
  int repeat = 1;
  SparseRowMatrix columns;

  bool constrained() const { return constraint.size() > 0; }

  int raw_unit_dim() const {
    return (kind == BlockKind::varying || kind == BlockKind::random_smooth) ? basis->dimension : 1;
  }

  int unit_dim() const { return constrained() ? int(constraint.cols()) : raw_unit_dim(); }
  int cols() const { return unit_dim() * repeat; }

  std::optional<int> level_index(const std::string& id) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), id);
    if (it == levels.end() || *it != id) return std::nullopt;
    return int(it - levels.begin());
  }
};

// Nonzero entries of one design row of `block`. Time is clamped to the basis
// range. `level` < 0 means the actor is unknown to the block; random-smooth
// columns are then zero, as they are outside the level's existence span.
inline void block_row(const DesignBlock& b, double x, double t, int level,
                      std::vector<std::pair<int, double>>& out) {
  out.clear();
  switch (b.kind) {
    case BlockKind::intercept: out.emplace_back(0, 1.0); return;
    case BlockKind::constant: out.emplace_back(0, x); return;
    case BlockKind::varying: {
      if (x == 0.0 && !b.constrained()) return;
      std::vector<double> v(b.basis->degree + 1);
      int first = b.basis->evaluate_local(b.basis->clamp(t), v.data());
      if (!b.constrained()) {
        for (int k = 0; k <= b.basis->degree; ++k)
          if (v[k] != 0.0) out.emplace_back(first + k, x * v[k]);
        return;
      }
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(b.unit_dim());
      for (int k = 0; k <= b.basis->degree; ++k) row += x * v[k] * b.constraint.row(first + k);
      for (int k = 0; k < row.size(); ++k)
        if (row(k) != 0.0) out.emplace_back(k, row(k));
      return;
    }
    case BlockKind::random_smooth: {
      if (level < 0) return;
      const double tc = b.basis->clamp(t);
      if (!b.level_spans.empty()) {
        const auto& [lo, hi] = b.level_spans[level];
        if (tc < lo || tc > hi) return;
      }
      std::vector<double> v(b.basis->degree + 1);
      int first = b.basis->evaluate_local(tc, v.data());
      const int off = level * b.basis->dimension;
      for (int k = 0; k <= b.basis->degree; ++k)
        if (v[k] != 0.0) out.emplace_back(off + first + k, v[k]);
      return;
    }
  }
}

namespace detail {

template <class RowFn>
SparseRowMatrix build_columns(std::size_t rows, int cols, RowFn&& fn) {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<std::pair<int, double>> entries;
  for (std::size_t r = 0; r < rows; ++r) {
    fn(r, entries);
    for (const auto& [c, v] : entries) trips.emplace_back(int(r), c, v);
  }
  SparseRowMatrix m(int(rows), cols);
  m.setFromTriplets(trips.begin(), trips.end());
  return m;
}

}  // namespace detail

inline DesignBlock intercept_block(std::size_t rows, std::string label = "intercept") {
  DesignBlock b;
  b.label = std::move(label);
  b.kind = BlockKind::intercept;
  b.columns = detail::build_columns(rows, 1, [&](std::size_t, auto& e) { block_row(b, 1, 0, 0, e); });
  return b;
}

inline DesignBlock constant_block(const std::vector<double>& covariate, std::string label) {
  DesignBlock b;
  b.label = std::move(label);
  b.covariate = b.label;
  b.kind = BlockKind::constant;
  b.columns = detail::build_columns(covariate.size(), 1, [&](std::size_t r, auto& e) {
    block_row(b, covariate[r], 0, 0, e);
  });
  return b;
}

// Row r is covariate[r] * B(times[r]); first-order (or basis order) difference penalty.
inline DesignBlock varying_coeff_block(const std::vector<double>& covariate,
                                       const std::vector<double>& times, const SplineBasis& basis,
                                       std::string label = "varying") {
  if (covariate.size() != times.size())
    throw ContractError("covariate and time columns differ in length");
  DesignBlock b;
  b.label = std::move(label);
  b.covariate = b.label;
  b.kind = BlockKind::varying;
  b.basis = basis;
  if (basis.penalized()) {
    b.penalties.push_back(basis.penalty());
    b.penalty_names.push_back("wiggle");
  }
  b.columns = detail::build_columns(covariate.size(), basis.dimension, [&](std::size_t r, auto& e) {
    block_row(b, covariate[r], times[r], 0, e);
  });
  return b;
}

// One curve B(t) a_i per actor, nested by actor. Two penalties shared by all
// actors of the role: the difference penalty on the curve and a ridge on its
// null space, so every curve is a proper random effect.
inline DesignBlock random_smooth_block(const std::vector<std::string>& actors,
                                       const std::vector<double>& times, const SplineBasis& basis,
                                       std::string label = "random",
                                       std::vector<std::string> levels = {},
                                       std::vector<std::pair<double, double>> level_spans = {}) {
  if (actors.size() != times.size())
    throw ContractError("actor and time columns differ in length");
  DesignBlock b;
  b.label = std::move(label);
  b.covariate = b.label;
  b.kind = BlockKind::random_smooth;
  b.basis = basis;
  if (levels.empty()) {
    levels = actors;
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  }
  b.levels = std::move(levels);
  if (!level_spans.empty() && level_spans.size() != b.levels.size())
    throw ContractError("level spans do not match levels");
  b.level_spans = std::move(level_spans);
  b.repeat = int(b.levels.size());
  if (basis.penalized()) {
    Eigen::MatrixXd wiggle = basis.penalty();
    b.penalties.push_back(wiggle);
    b.penalty_names.push_back("wiggle");
    b.penalties.push_back(null_space_projector(wiggle));
    b.penalty_names.push_back("level");
  } else {
    b.penalties.push_back(Eigen::MatrixXd::Identity(basis.dimension, basis.dimension));
    b.penalty_names.push_back("level");
  }
  std::vector<int> idx(actors.size());
  for (std::size_t r = 0; r < actors.size(); ++r) {
    auto l = b.level_index(actors[r]);
    if (!l) throw ContractError("unknown actor id '" + actors[r] + "'");
    idx[r] = *l;
  }
  b.columns = detail::build_columns(actors.size(), b.cols(), [&](std::size_t r, auto& e) {
    block_row(b, 1.0, times[r], idx[r], e);
  });
  return b;
}

// Reparameterizes the block so its fitted contribution sums to zero over the
// rows: with c the column sums, columns become X Z where Z spans c's
// orthogonal complement (Householder), penalties become Z' S Z.
inline DesignBlock apply_centering_constraint(const DesignBlock& in) {
  if (in.constrained()) throw ContractError("block '" + in.label + "' is already constrained");
  if (in.repeat != 1) throw ContractError("centering applies to single-unit blocks only");
  const int q = in.raw_unit_dim();
  if (q < 2) throw ContractError("cannot center a one-column block");
  Eigen::VectorXd c = Eigen::VectorXd::Zero(q);
  for (int r = 0; r < in.columns.outerSize(); ++r)
    for (SparseRowMatrix::InnerIterator it(in.columns, r); it; ++it) c(it.col()) += it.value();
  if (c.norm() == 0.0) c.setOnes();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(c);
  Eigen::MatrixXd full = qr.householderQ() * Eigen::MatrixXd::Identity(q, q);
  DesignBlock out = in;
  out.constraint = full.rightCols(q - 1);
  for (auto& p : out.penalties) p = out.constraint.transpose() * p * out.constraint;
  Eigen::MatrixXd dense = Eigen::MatrixXd(in.columns) * out.constraint;
  out.columns = dense.sparseView(1.0, 0.0);
  return out;
}

// Maps block coefficients back to the raw spline coefficients of one unit.
inline Eigen::VectorXd raw_coefficients(const DesignBlock& b, const Eigen::VectorXd& unit) {
  return b.constrained() ? Eigen::VectorXd(b.constraint * unit) : unit;
}

}  // namespace tvstergm

#endif
