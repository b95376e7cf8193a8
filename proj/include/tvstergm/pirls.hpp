#ifndef TVSTERGM_PIRLS_HPP
#define TVSTERGM_PIRLS_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "tvstergm/errors.hpp"
#include "tvstergm/parallel.hpp"
#include "tvstergm/splines.hpp"

namespace tvstergm {

// Penalties of one design block; every unit of `repeat` copies carries
// sum_j lambda_j * mats[j].
struct PenaltyGroup {
  int offset = 0;
  int unit_dim = 0;
  int repeat = 1;
  std::vector<Eigen::MatrixXd> mats;
  std::vector<int> lambda_index;
  int rank = 0;  // rank of sum_j mats[j]
};

// Stacked penalized logistic regression problem.
struct PenalizedProblem {
  Eigen::VectorXd y;
  SparseRowMatrix x;
  std::vector<PenaltyGroup> groups;
  std::vector<std::string> lambda_labels;
  std::vector<std::pair<int, int>> block_ranges;  // (offset, cols) per block
  int intercept_column = -1;

  int cols() const { return int(x.cols()); }
  int rows() const { return int(x.rows()); }
  int n_lambdas() const { return int(lambda_labels.size()); }
};

inline PenalizedProblem make_problem(const Eigen::VectorXd& y, const std::vector<DesignBlock>& blocks) {
  PenalizedProblem pr;
  pr.y = y;
  int p = 0;
  for (const auto& b : blocks) {
    if (b.columns.rows() != y.size())
      throw ContractError("block '" + b.label + "' row count differs from response length");
    pr.block_ranges.emplace_back(p, b.cols());
    if (b.kind == BlockKind::intercept && pr.intercept_column < 0) pr.intercept_column = p;
    if (!b.penalties.empty()) {
      PenaltyGroup g;
      g.offset = p;
      g.unit_dim = b.unit_dim();
      g.repeat = b.repeat;
      g.mats = b.penalties;
      Eigen::MatrixXd total = Eigen::MatrixXd::Zero(g.unit_dim, g.unit_dim);
      for (std::size_t k = 0; k < b.penalties.size(); ++k) {
        g.lambda_index.push_back(int(pr.lambda_labels.size()));
        std::string name = k < b.penalty_names.size() ? b.penalty_names[k] : std::to_string(k);
        pr.lambda_labels.push_back(b.penalties.size() == 1 && name == "wiggle"
                                       ? b.label
                                       : b.label + ":" + name);
        total += b.penalties[k];
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(total);
      const double tol = 1e-9 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      g.rank = int((es.eigenvalues().array() > tol).count());
      pr.groups.push_back(std::move(g));
    }
    p += b.cols();
  }
  std::vector<Eigen::Triplet<double>> trips;
  int off = 0;
  for (const auto& b : blocks) {
    for (int r = 0; r < b.columns.outerSize(); ++r)
      for (SparseRowMatrix::InnerIterator it(b.columns, r); it; ++it)
        trips.emplace_back(r, off + int(it.col()), it.value());
    off += b.cols();
  }
  pr.x.resize(int(y.size()), p);
  pr.x.setFromTriplets(trips.begin(), trips.end());
  pr.x.makeCompressed();
  for (Eigen::Index k = 0; k < y.size(); ++k)
    if (y(k) != 0.0 && y(k) != 1.0) throw ContractError("response must be binary");
  return pr;
}

// Dense p x p penalty S(lambda).
inline Eigen::MatrixXd penalty_matrix(const PenalizedProblem& pr, const std::vector<double>& lambdas) {
  if (int(lambdas.size()) != pr.n_lambdas())
    throw ContractError("expected " + std::to_string(pr.n_lambdas()) + " smoothing parameters");
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(pr.cols(), pr.cols());
  for (const auto& g : pr.groups) {
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(g.unit_dim, g.unit_dim);
    for (std::size_t k = 0; k < g.mats.size(); ++k) unit += lambdas[g.lambda_index[k]] * g.mats[k];
    for (int r = 0; r < g.repeat; ++r)
      s.block(g.offset + r * g.unit_dim, g.offset + r * g.unit_dim, g.unit_dim, g.unit_dim) = unit;
  }
  return s;
}

// log of the product of the nonzero eigenvalues of S(lambda).
inline double log_pseudo_det(const PenalizedProblem& pr, const std::vector<double>& lambdas) {
  double total = 0.0;
  for (const auto& g : pr.groups) {
    Eigen::MatrixXd unit = Eigen::MatrixXd::Zero(g.unit_dim, g.unit_dim);
    for (std::size_t k = 0; k < g.mats.size(); ++k) unit += lambdas[g.lambda_index[k]] * g.mats[k];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(unit, Eigen::EigenvaluesOnly);
    const auto& ev = es.eigenvalues();  // ascending
    double s = 0.0;
    for (int k = 0; k < g.rank; ++k) s += std::log(ev(g.unit_dim - 1 - k));
    total += g.repeat * s;
  }
  return total;
}

struct PirlsOptions {
  double tolerance = 1e-8;       // relative change of the penalized deviance
  double gradient_tolerance = 1e-6;
  int max_iterations = 200;
  double ridge = 1e-8;           // permanent ridge keeping the system definite
  bool covariance = true;
};

struct FitResult {
  Eigen::VectorXd beta;
  std::vector<double> lambdas;
  std::vector<std::string> lambda_labels;
  Eigen::MatrixXd covariance;  // inverse penalized information
  Eigen::VectorXd score;       // penalized score at beta
  double loglik = 0.0;
  double deviance = 0.0;
  double penalized_deviance = 0.0;
  double reml = 0.0;
  double edf = 0.0;
  std::vector<double> trace;  // penalized deviance per iteration
  int iterations = 0;
  bool converged = false;
  std::size_t n_rows = 0;
  std::vector<std::string> warnings;
};

namespace detail {

inline double log1pexp(double eta) {
  return eta > 0 ? eta + std::log1p(std::exp(-eta)) : std::log1p(std::exp(eta));
}

inline double expit(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

inline double loglik(const PenalizedProblem& pr, const Eigen::VectorXd& eta) {
  double l = 0.0;
  for (Eigen::Index k = 0; k < eta.size(); ++k) l += pr.y(k) * eta(k) - log1pexp(eta(k));
  return l;
}

// Upper triangle of X' W X + S + ridge I.
inline Eigen::MatrixXd information(const PenalizedProblem& pr, const Eigen::VectorXd& w,
                                   const Eigen::MatrixXd& s, double ridge) {
  const int p = pr.cols();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, p);
  const auto* outer = pr.x.outerIndexPtr();
  const auto* inner = pr.x.innerIndexPtr();
  const auto* val = pr.x.valuePtr();
  for (int r = 0; r < pr.rows(); ++r) {
    const double wr = w(r);
    if (wr == 0.0) continue;
    for (auto a = outer[r]; a < outer[r + 1]; ++a) {
      const double wa = wr * val[a];
      const int ca = inner[a];
      for (auto b = a; b < outer[r + 1]; ++b) h(ca, inner[b]) += wa * val[b];
    }
  }
  h.triangularView<Eigen::Upper>() += s;
  h.diagonal().array() += ridge;
  return h;
}

}  // namespace detail

// Penalized log-likelihood l(beta) - beta' S beta / 2 - ridge |beta|^2 / 2.
inline double penalized_loglik(const PenalizedProblem& pr, const Eigen::VectorXd& beta,
                               const std::vector<double>& lambdas, double ridge = 1e-8) {
  Eigen::VectorXd eta = pr.x * beta;
  Eigen::MatrixXd s = penalty_matrix(pr, lambdas);
  return detail::loglik(pr, eta) - 0.5 * beta.dot(s * beta) - 0.5 * ridge * beta.squaredNorm();
}

inline Eigen::VectorXd penalized_score(const PenalizedProblem& pr, const Eigen::VectorXd& beta,
                                       const std::vector<double>& lambdas, double ridge = 1e-8) {
  Eigen::VectorXd eta = pr.x * beta;
  Eigen::VectorXd resid(eta.size());
  for (Eigen::Index k = 0; k < eta.size(); ++k) resid(k) = pr.y(k) - detail::expit(eta(k));
  Eigen::MatrixXd s = penalty_matrix(pr, lambdas);
  return Eigen::VectorXd(pr.x.transpose() * resid) - s * beta - ridge * beta;
}

// Penalized Newton (IRLS) with step halving. The returned reml field is the
// Laplace approximate negative restricted log marginal likelihood
//   -l + b'Sb/2 + log|X'WX + S|/2 - log|S|+/2.
inline FitResult pirls_fit(const PenalizedProblem& pr, const std::vector<double>& lambdas,
                           const PirlsOptions& opt = {},
                           const std::optional<Eigen::VectorXd>& start = std::nullopt) {
  const int p = pr.cols();
  const int n = pr.rows();
  if (p >= n) throw ContractError("column count must be below row count");
  for (double l : lambdas)
    if (!(l >= 0.0) || !std::isfinite(l)) throw ContractError("smoothing parameters must be >= 0");
  const Eigen::MatrixXd s = penalty_matrix(pr, lambdas);

  FitResult res;
  res.lambdas = lambdas;
  res.lambda_labels = pr.lambda_labels;
  res.n_rows = std::size_t(n);

  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  if (start && start->size() == p) {
    beta = *start;
  } else if (pr.intercept_column >= 0) {
    double ybar = std::clamp(pr.y.mean(), 1e-4, 1.0 - 1e-4);
    beta(pr.intercept_column) = std::log(ybar / (1.0 - ybar));
  }

  auto pen_dev = [&](const Eigen::VectorXd& b, const Eigen::VectorXd& eta) {
    return -2.0 * detail::loglik(pr, eta) + b.dot(s * b) + opt.ridge * b.squaredNorm();
  };

  Eigen::VectorXd eta = pr.x * beta;
  double pd = pen_dev(beta, eta);
  Eigen::VectorXd mu(n), w(n), g(p);
  bool small_change = false;
  for (int it = 0; it < opt.max_iterations; ++it) {
    for (int k = 0; k < n; ++k) {
      mu(k) = detail::expit(eta(k));
      w(k) = mu(k) * (1.0 - mu(k));
    }
    g = Eigen::VectorXd(pr.x.transpose() * (pr.y - mu)) - s * beta - opt.ridge * beta;
    const double gmax = g.cwiseAbs().maxCoeff();
    if ((small_change && gmax < opt.gradient_tolerance) || gmax < 1e-12) {
      res.converged = true;
      break;
    }
    Eigen::MatrixXd h = detail::information(pr, w, s, opt.ridge);
    Eigen::LLT<Eigen::MatrixXd, Eigen::Upper> llt(h);
    if (llt.info() != Eigen::Success)
      throw NumericalError("penalized information matrix is not positive definite");
    Eigen::VectorXd step = llt.solve(g);

    double factor = 1.0;
    Eigen::VectorXd trial = beta + step;
    Eigen::VectorXd trial_eta = pr.x * trial;
    double trial_pd = pen_dev(trial, trial_eta);
    int halvings = 0;
    while (!(trial_pd <= pd + 1e-12 * std::abs(pd)) && halvings < 40) {
      factor *= 0.5;
      ++halvings;
      trial = beta + factor * step;
      trial_eta = pr.x * trial;
      trial_pd = pen_dev(trial, trial_eta);
    }
    res.iterations = it + 1;
    if (!(trial_pd <= pd + 1e-12 * std::abs(pd))) {
      // No descent possible in floating point: we are at the optimum to rounding.
      res.converged = gmax < 1e-4 * std::max(1.0, std::abs(pd));
      if (!res.converged) res.warnings.push_back("step halving failed");
      break;
    }
    const double rel = std::abs(pd - trial_pd) / (std::abs(trial_pd) + 0.1);
    beta = trial;
    eta = trial_eta;
    pd = trial_pd;
    res.trace.push_back(pd);
    small_change = rel < opt.tolerance;
  }
  if (!res.converged)
    throw NumericalError("penalized IRLS did not converge in " +
                         std::to_string(opt.max_iterations) + " iterations");

  for (int k = 0; k < n; ++k) {
    mu(k) = detail::expit(eta(k));
    w(k) = mu(k) * (1.0 - mu(k));
  }
  Eigen::MatrixXd h = detail::information(pr, w, s, opt.ridge);
  Eigen::LLT<Eigen::MatrixXd, Eigen::Upper> llt(h);
  if (llt.info() != Eigen::Success)
    throw NumericalError("penalized information matrix is not positive definite");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();

  res.beta = beta;
  res.score = Eigen::VectorXd(pr.x.transpose() * (pr.y - mu)) - s * beta - opt.ridge * beta;
  res.loglik = detail::loglik(pr, eta);
  res.deviance = -2.0 * res.loglik;
  res.penalized_deviance = pd;
  res.reml = -res.loglik + 0.5 * beta.dot(s * beta) + 0.5 * logdet - 0.5 * log_pseudo_det(pr, lambdas);
  if (opt.covariance) {
    res.covariance = llt.solve(Eigen::MatrixXd::Identity(p, p));
    Eigen::MatrixXd sr = s;
    sr.diagonal().array() += opt.ridge;
    res.edf = double(p) - (res.covariance.cwiseProduct(sr)).sum();
  }
  if (beta.size() && beta.cwiseAbs().maxCoeff() > 50.0)
    res.warnings.push_back("possible separation: |coefficient| > 50");
  else if (n && (mu.array().min(1.0 - mu.array())).minCoeff() < 1e-10)
    res.warnings.push_back("possible separation: fitted probabilities numerically 0 or 1");
  return res;
}

struct LambdaSearchOptions {
  double log10_min = -4.0;
  double log10_max = 6.0;
  double grid_step = 0.5;
  double golden_tolerance = 0.05;  // in log10 units
  int max_sweeps = 3;
  double local_radius = 1.0;       // grid radius of sweeps after the first
  double sweep_tolerance = 0.05;   // stop when no log10 lambda moves more
  unsigned threads = 1;
  PirlsOptions pirls;
};

struct LambdaSelection {
  std::vector<double> lambdas;
  double criterion = 0.0;
  int evaluations = 0;
  int sweeps = 0;
};

// Coordinate-wise minimization of the REML criterion over log10 lambda: a
// grid pass, then golden-section refinement around the best grid point.
// Coordinates are swept until none moves by more than `sweep_tolerance`.
// Every grid evaluation warm-starts from the same coefficients, so the result
// does not depend on the thread count.
inline LambdaSelection select_lambdas(const PenalizedProblem& pr, const LambdaSearchOptions& opt = {},
                                      std::vector<double> initial = {}) {
  const int m = pr.n_lambdas();
  LambdaSelection sel;
  if (initial.empty()) initial.assign(m, 1.0);
  std::vector<double> loglam(m);
  for (int k = 0; k < m; ++k)
    loglam[k] = std::clamp(std::log10(initial[k]), opt.log10_min, opt.log10_max);
  PirlsOptions po = opt.pirls;
  po.covariance = false;

  auto to_lambdas = [&](const std::vector<double>& ll) {
    std::vector<double> l(m);
    for (int k = 0; k < m; ++k) l[k] = std::pow(10.0, ll[k]);
    return l;
  };
  auto eval = [&](const std::vector<double>& ll, const Eigen::VectorXd& start) {
    FitResult f = pirls_fit(pr, to_lambdas(ll), po, start);
    return std::make_pair(f.reml, f.beta);
  };

  auto [best, beta] = eval(loglam, Eigen::VectorXd());
  sel.evaluations = 1;
  if (m == 0) {
    sel.criterion = best;
    return sel;
  }

  std::vector<double> full_grid;
  for (int g = 0; opt.log10_min + g * opt.grid_step <= opt.log10_max + 1e-9; ++g)
    full_grid.push_back(opt.log10_min + g * opt.grid_step);

  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    double moved = 0.0;
    for (int k = 0; k < m; ++k) {
      // Later sweeps only revisit the neighbourhood of the current value.
      std::vector<double> grid = full_grid;
      if (sweep > 0) {
        grid.clear();
        for (double v : full_grid)
          if (std::abs(v - loglam[k]) <= opt.local_radius + 1e-9) grid.push_back(v);
        if (grid.empty()) grid = full_grid;
      }
      std::vector<double> crit(grid.size());
      std::vector<Eigen::VectorXd> betas(grid.size());
      parallel_for(grid.size(), opt.threads, [&](std::size_t gi) {
        auto ll = loglam;
        ll[k] = grid[gi];
        try {
          auto [c, b] = eval(ll, beta);
          crit[gi] = c;
          betas[gi] = std::move(b);
        } catch (const NumericalError&) {
          crit[gi] = std::numeric_limits<double>::infinity();
        }
      });
      sel.evaluations += int(grid.size());
      std::size_t gbest = 0;
      for (std::size_t gi = 1; gi < grid.size(); ++gi)
        if (crit[gi] < crit[gbest]) gbest = gi;
      if (!std::isfinite(crit[gbest])) throw NumericalError("REML criterion failed on the whole grid");

      double a = std::max(opt.log10_min, grid[gbest] - opt.grid_step);
      double b = std::min(opt.log10_max, grid[gbest] + opt.grid_step);
      double x_best = grid[gbest], f_best = crit[gbest];
      Eigen::VectorXd b_best = betas[gbest];
      const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
      auto golden_eval = [&](double x) {
        auto ll = loglam;
        ll[k] = x;
        ++sel.evaluations;
        try {
          auto [c, bb] = eval(ll, betas[gbest]);
          if (c < f_best) {
            f_best = c;
            x_best = x;
            b_best = bb;
          }
          return c;
        } catch (const NumericalError&) {
          return std::numeric_limits<double>::infinity();
        }
      };
      double c = b - phi * (b - a), d = a + phi * (b - a);
      double fc = golden_eval(c), fd = golden_eval(d);
      while (b - a > opt.golden_tolerance) {
        if (fc <= fd) {
          b = d;
          d = c;
          fd = fc;
          c = b - phi * (b - a);
          fc = golden_eval(c);
        } else {
          a = c;
          c = d;
          fc = fd;
          d = a + phi * (b - a);
          fd = golden_eval(d);
        }
      }
      moved = std::max(moved, std::abs(x_best - loglam[k]));
      loglam[k] = x_best;
      best = f_best;
      beta = b_best;
    }
    sel.sweeps = sweep + 1;
    if (moved < opt.sweep_tolerance) break;
  }
  sel.lambdas = to_lambdas(loglam);
  sel.criterion = best;
  return sel;
}

}  // namespace tvstergm

#endif
