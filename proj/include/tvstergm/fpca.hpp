#ifndef TVSTERGM_FPCA_HPP
#define TVSTERGM_FPCA_HPP

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvstergm/errors.hpp"
#include "tvstergm/model.hpp"

namespace tvstergm {

// N curves evaluated on an equidistant grid over [grid.front(), grid.back()].
struct CurveBundle {
  std::vector<std::string> actors;
  std::vector<double> grid;
  Eigen::MatrixXd values;  // N x T

  double length() const { return grid.empty() ? 0.0 : grid.back() - grid.front(); }
};

inline std::vector<double> equidistant_grid(double lower, double upper, int points = 100) {
  if (points < 2) throw ContractError("grid needs at least 2 points");
  if (!(upper > lower)) throw ContractError("grid range is empty");
  std::vector<double> g(points);
  for (int k = 0; k < points; ++k) g[k] = lower + (upper - lower) * k / (points - 1);
  return g;
}

// Random curves of one role ("re_sender" / "re_receiver") on one side.
inline CurveBundle discretize_curves(const FittedModel& m, const std::string& role, Side side,
                                     int points = 100) {
  const SideFit& sf = m.side_fit(side);
  if (sf.skipped) throw ContractError(std::string("side ") + to_string(side) + " was not fitted");
  if (!sf.has_block(role)) throw ContractError("no random smooth '" + role + "' on side " + to_string(side));
  const DesignBlock& b = sf.block(role);
  if (b.kind != BlockKind::random_smooth) throw ContractError("'" + role + "' is not a random smooth");
  CurveBundle cb;
  cb.actors = b.levels;
  cb.grid = equidistant_grid(sf.time_lower, sf.time_upper, points);
  cb.values.resize(Eigen::Index(cb.actors.size()), points);
  for (std::size_t i = 0; i < cb.actors.size(); ++i) {
    auto c = m.curve(side, role, cb.grid, cb.actors[i]);
    for (int g = 0; g < points; ++g) cb.values(Eigen::Index(i), g) = c.value[std::size_t(g)];
  }
  return cb;
}

struct FpcaResult {
  std::vector<std::string> actors;
  std::vector<double> grid;
  double weight = 0.0;            // quadrature weight length / T
  Eigen::VectorXd mean;           // T
  Eigen::VectorXd eigenvalues;    // M, descending
  Eigen::MatrixXd eigenfunctions; // M x T, quadrature norm 1
  Eigen::MatrixXd scores;         // N x M
  Eigen::VectorXd variance_shares;
  double total_variance = 0.0;

  int components() const { return int(eigenvalues.size()); }
};

// Eigen-decomposition of the discretized covariance. With quadrature weight
// w = length / T the operator eigenvalues are w * mu for eigenvalues mu of the
// sample covariance, eigenfunctions v / sqrt(w), scores sqrt(w) * (x - mean) v.
inline FpcaResult fpca(const CurveBundle& bundle, int n_components, bool center = true) {
  const Eigen::Index n = bundle.values.rows();
  const Eigen::Index t = bundle.values.cols();
  if (n < 2) throw ContractError("fpca needs at least 2 curves");
  if (t != Eigen::Index(bundle.grid.size())) throw ContractError("grid and curve lengths differ");
  if (n_components < 1 || n_components > std::min<Eigen::Index>(n, t))
    throw ContractError("component count must be in [1, min(N, T)]");
  if (!bundle.values.allFinite()) throw ContractError("curve values must be finite");

  FpcaResult r;
  r.actors = bundle.actors;
  r.grid = bundle.grid;
  r.weight = bundle.length() / double(t);
  r.mean = center ? Eigen::VectorXd(bundle.values.colwise().mean().transpose()) : Eigen::VectorXd::Zero(t);
  Eigen::MatrixXd xc = bundle.values.rowwise() - r.mean.transpose();
  Eigen::MatrixXd cov = xc.transpose() * xc / double(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigen-decomposition failed");

  const double w = r.weight;
  r.total_variance = w * std::max(0.0, cov.trace());
  r.eigenvalues.resize(n_components);
  r.eigenfunctions.resize(n_components, t);
  r.variance_shares.resize(n_components);
  for (int m = 0; m < n_components; ++m) {
    const Eigen::Index src = t - 1 - m;  // ascending order
    Eigen::VectorXd v = es.eigenvectors().col(src);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    r.eigenvalues(m) = w * std::max(0.0, es.eigenvalues()(src));
    r.eigenfunctions.row(m) = v.transpose() / std::sqrt(w);
    r.variance_shares(m) = r.total_variance > 0 ? r.eigenvalues(m) / r.total_variance : 0.0;
  }
  r.scores = w * xc * r.eigenfunctions.transpose();
  return r;
}

// mean +/- multiple * sqrt(eigenvalue) * xi_component
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> perturbation_curves(const FpcaResult& r,
                                                                       int component,
                                                                       double multiple = 2.0) {
  if (component < 0 || component >= r.components())
    throw ContractError("component " + std::to_string(component) + " out of range");
  Eigen::VectorXd d = multiple * std::sqrt(r.eigenvalues(component)) *
                      r.eigenfunctions.row(component).transpose();
  return {r.mean + d, r.mean - d};
}

}  // namespace tvstergm

#endif
