#ifndef TVSTERGM_TESTS_ORACLES_HPP
#define TVSTERGM_TESTS_ORACLES_HPP

// Deliberately naive reference implementations used as test oracles. None of
// them call into the library beyond the Network container.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tvstergm/network.hpp"

namespace oracle {

inline std::vector<std::string> ids(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t k = 0; k < n; ++k) out.push_back("a" + std::to_string(k));
  return out;
}

inline tvstergm::Network random_network(std::size_t n, double p, std::mt19937_64& g) {
  tvstergm::Network y(ids(n));
  std::bernoulli_distribution b(p);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && b(g)) y.set_edge(i, j);
  return y;
}

inline int e(const tvstergm::Network& y, std::size_t i, std::size_t j) {
  return i != j && y.has_edge(i, j) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Dyadic statistics by enumeration

inline double outdegree(const tvstergm::Network& y, std::size_t i) {
  const std::size_t n = y.size();
  int c = 0;
  for (std::size_t k = 0; k < n; ++k) c += e(y, i, k);
  return 100.0 * c / double(n - 1);
}

inline double two_paths(const tvstergm::Network& y, std::size_t i, std::size_t j) {
  const std::size_t n = y.size();
  int c = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i && k != j) c += e(y, i, k) * e(y, k, j);
  return 100.0 * c / double(n - 2);
}

inline double shared_suppliers(const tvstergm::Network& y, std::size_t i, std::size_t j) {
  const std::size_t n = y.size();
  int c = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i && k != j) c += e(y, k, i) * e(y, k, j);
  return 100.0 * c / double(n - 2);
}

// ---------------------------------------------------------------------------
// Global statistics by enumeration

struct Global {
  double size, order, density, mean_indegree, reciprocity, transitivity;
};

inline Global global(const tvstergm::Network& y) {
  const std::size_t n = y.size();
  Global r{};
  int size = 0, mutual = 0, order = 0;
  for (std::size_t i = 0; i < n; ++i) {
    int touch = 0;
    for (std::size_t j = 0; j < n; ++j) {
      size += e(y, i, j);
      mutual += e(y, i, j) * e(y, j, i);
      touch += e(y, i, j) + e(y, j, i);
    }
    order += touch > 0;
  }
  auto u = [&](std::size_t a, std::size_t b) { return e(y, a, b) || e(y, b, a); };
  // Ordered triples (a, centre, b) with a < b, both joined to the centre.
  int connected = 0, closed = 0;
  for (std::size_t c = 0; c < n; ++c)
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = a + 1; b < n; ++b) {
        if (a == c || b == c || !u(a, c) || !u(b, c)) continue;
        ++connected;
        if (u(a, b)) ++closed;
      }
  r.size = size;
  r.order = order;
  r.density = double(size) / double(n * (n - 1));
  r.mean_indegree = double(size) / double(n);
  r.reciprocity = size ? double(mutual) / size : 0.0;
  r.transitivity = connected ? double(closed) / connected : 0.0;
  return r;
}

// ---------------------------------------------------------------------------
// B-splines: textbook recursion on an explicit knot vector

inline double cox_de_boor(const std::vector<double>& t, int k, int p, double x) {
  if (p == 0) return (t[k] <= x && x < t[k + 1]) ? 1.0 : 0.0;
  double a = 0.0, b = 0.0;
  if (t[k + p] != t[k]) a = (x - t[k]) / (t[k + p] - t[k]) * cox_de_boor(t, k, p - 1, x);
  if (t[k + p + 1] != t[k + 1])
    b = (t[k + p + 1] - x) / (t[k + p + 1] - t[k + 1]) * cox_de_boor(t, k + 1, p - 1, x);
  return a + b;
}

// Equidistant knots over [lo, hi] extended by `degree` knots on each side.
inline std::vector<double> equidistant_knots(double lo, double hi, int dim, int degree) {
  const double h = (hi - lo) / (dim - degree);
  std::vector<double> t;
  for (int k = -degree; k <= dim; ++k) t.push_back(lo + k * h);
  return t;
}

// Basis row at x; the top boundary is evaluated as a left limit.
inline std::vector<double> basis_row(double lo, double hi, int dim, int degree, double x) {
  auto t = equidistant_knots(lo, hi, dim, degree);
  const double xe = x >= hi ? std::nextafter(hi, lo) : x;
  std::vector<double> row(dim);
  for (int k = 0; k < dim; ++k) row[k] = cox_de_boor(t, k, degree, xe);
  return row;
}

inline Eigen::MatrixXd first_difference(int n) {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n - 1, n);
  for (int r = 0; r < n - 1; ++r) {
    d(r, r) = -1;
    d(r, r + 1) = 1;
  }
  return d;
}

// ---------------------------------------------------------------------------
// Logistic MLE: plain Newton on the dense Hessian

inline Eigen::VectorXd logistic_mle(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                                    int max_iter = 100) {
  Eigen::VectorXd b = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd eta = x * b;
    Eigen::VectorXd p = (1.0 / (1.0 + (-eta.array()).exp())).matrix();
    Eigen::VectorXd w = (p.array() * (1.0 - p.array())).matrix();
    Eigen::VectorXd g = x.transpose() * (y - p);
    Eigen::MatrixXd h = x.transpose() * w.asDiagonal() * x;
    Eigen::VectorXd step = h.ldlt().solve(g);
    b += step;
    if (step.lpNorm<Eigen::Infinity>() < 1e-13) break;
  }
  return b;
}

// ---------------------------------------------------------------------------
// Cyclic Jacobi eigensolver for symmetric matrices; descending order.

inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& vectors) {
  const int n = int(a.rows());
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30 * std::max(1.0, a.squaredNorm())) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
  }
  std::vector<int> idx(n);
  for (int k = 0; k < n; ++k) idx[k] = k;
  std::sort(idx.begin(), idx.end(), [&](int x, int y) { return a(x, x) > a(y, y); });
  values.resize(n);
  vectors.resize(n, n);
  for (int k = 0; k < n; ++k) {
    values(k) = a(idx[k], idx[k]);
    vectors.col(k) = v.col(idx[k]);
  }
}

// ---------------------------------------------------------------------------
// AUC by exhaustive enumeration

inline double roc_pairs(const std::vector<double>& s, const std::vector<int>& l) {
  double num = 0, den = 0;
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b)
      if (l[a] == 1 && l[b] == 0) {
        den += 1;
        num += s[a] > s[b] ? 1.0 : s[a] == s[b] ? 0.5 : 0.0;
      }
  return num / den;
}

// Sweep every distinct score as a threshold (predict positive when score >=
// threshold), from the highest down; area = sum of precision * recall gain.
inline double pr_sweep(const std::vector<double>& s, const std::vector<int>& l) {
  std::vector<double> thr(s);
  std::sort(thr.begin(), thr.end(), std::greater<>());
  thr.erase(std::unique(thr.begin(), thr.end()), thr.end());
  double pos = 0;
  for (int v : l) pos += v;
  double area = 0, prev_recall = 0;
  for (double t : thr) {
    double tp = 0, fp = 0;
    for (std::size_t k = 0; k < s.size(); ++k)
      if (s[k] >= t) (l[k] ? tp : fp) += 1;
    const double recall = tp / pos, precision = tp / (tp + fp);
    area += (recall - prev_recall) * precision;
    prev_recall = recall;
  }
  return area;
}

}  // namespace oracle

#endif
