#ifndef TVSTERGM_NETSTATS_HPP
#define TVSTERGM_NETSTATS_HPP

#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "tvstergm/errors.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/network.hpp"
#include "tvstergm/transition.hpp"

namespace tvstergm {

// ---------------------------------------------------------------------------
// Lagged dyadic statistics. Percentages are normed by the size n of the
// network's actor set.

inline double outdegree(const Network& y, std::size_t i) {
  const std::size_t n = y.size();
  if (n < 2) throw ContractError("outdegree needs at least 2 actors");
  if (i >= n) throw ContractError("actor index out of range");
  return 100.0 / double(n - 1) * double(y.outdegree(i));
}

inline double outdegree(const Network& y, std::string_view i) { return outdegree(y, y.require(i)); }

inline double reciprocity(const Network& y, std::size_t i, std::size_t j) {
  if (i == j) throw ContractError("reciprocity undefined for i == j");
  return y.has_edge(j, i) ? 1.0 : 0.0;
}

inline double reciprocity(const Network& y, std::string_view i, std::string_view j) {
  return reciprocity(y, y.require(i), y.require(j));
}

// Directed two-paths i -> k -> j.
inline double transitivity_stat(const Network& y, std::size_t i, std::size_t j) {
  const std::size_t n = y.size();
  if (n < 3) throw ContractError("transitivity needs at least 3 actors");
  if (i == j) throw ContractError("transitivity undefined for i == j");
  std::size_t c = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i && k != j && y.has_edge(i, k) && y.has_edge(k, j)) ++c;
  return 100.0 / double(n - 2) * double(c);
}

inline double transitivity_stat(const Network& y, std::string_view i, std::string_view j) {
  return transitivity_stat(y, y.require(i), y.require(j));
}

// Common senders k -> i and k -> j.
inline double shared_suppliers(const Network& y, std::size_t i, std::size_t j) {
  const std::size_t n = y.size();
  if (n < 3) throw ContractError("shared suppliers needs at least 3 actors");
  if (i == j) throw ContractError("shared suppliers undefined for i == j");
  std::size_t c = 0;
  for (std::size_t k = 0; k < n; ++k)
    if (k != i && k != j && y.has_edge(k, i) && y.has_edge(k, j)) ++c;
  return 100.0 / double(n - 2) * double(c);
}

inline double shared_suppliers(const Network& y, std::string_view i, std::string_view j) {
  return shared_suppliers(y, y.require(i), y.require(j));
}

// ---------------------------------------------------------------------------
// Regressor row of one dyad

struct DyadCovariateRow {
  double sender_outdeg = 0.0;
  double receiver_outdeg = 0.0;
  double recip = 0.0;
  double trans = 0.0;
  double shared_sup = 0.0;
  double alliance = 0.0;
  double poldiff = 0.0;
  double gdp_i = 0.0;
  double gdp_j = 0.0;
  double distance = 0.0;
  double milex_i = 0.0;
  double milex_j = 0.0;

  static const std::vector<std::string>& names() {
    static const std::vector<std::string> n{"sender_outdeg", "receiver_outdeg", "recip",
                                            "trans",         "shared_sup",      "alliance",
                                            "poldiff",       "gdp_i",           "gdp_j",
                                            "distance",      "milex_i",         "milex_j"};
    return n;
  }

  static bool has(std::string_view name) {
    for (const auto& n : names())
      if (n == name) return true;
    return false;
  }

  double value(std::string_view name) const {
    if (name == "sender_outdeg") return sender_outdeg;
    if (name == "receiver_outdeg") return receiver_outdeg;
    if (name == "recip") return recip;
    if (name == "trans") return trans;
    if (name == "shared_sup") return shared_sup;
    if (name == "alliance") return alliance;
    if (name == "poldiff") return poldiff;
    if (name == "gdp_i") return gdp_i;
    if (name == "gdp_j") return gdp_j;
    if (name == "distance") return distance;
    if (name == "milex_i") return milex_i;
    if (name == "milex_j") return milex_j;
    throw ContractError("unknown covariate '" + std::string(name) + "'");
  }
};

// Everything a scorer needs about one ordered dyad at one step.
struct DyadFeatures {
  int period = 0;  // response period t
  std::string sender;
  std::string receiver;
  DyadCovariateRow row;
  double lag = 0.0;  // lagged edge indicator
};

// Bulk row construction for one transition: statistics from the lagged
// network, covariates at the previous period.
class DyadRowBuilder {
 public:
  DyadRowBuilder(const TransitionData& td, const CovariateTables& cov) : td_(td), cov_(cov) {
    const std::size_t n = td.size();
    if (n < 3) throw ContractError("dyad rows need at least 3 common actors");
    Eigen::MatrixXd a = td.lagged.adjacency();
    two_paths_ = a * a;
    shared_ = a.transpose() * a;
    outdeg_.resize(n);
    for (std::size_t i = 0; i < n; ++i) outdeg_[i] = outdegree(td.lagged, i);
    monadic_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& id = td.lag_id(td.actors[i]);
      const auto* v = cov.find_monadic(td.previous, id);
      if (!v) v = cov.find_monadic(td.previous, td.actors[i]);
      if (!v || !v->complete())
        throw InputError("missing monadic covariate for actor " + id + " in period " +
                         std::to_string(td.previous));
      monadic_[i] = {*v->gdp, *v->milex, *v->polity};
    }
  }

  DyadCovariateRow row(std::size_t i, std::size_t j) const {
    if (i == j) throw ContractError("dyad row undefined for i == j");
    const double n2 = double(td_.size() - 2);
    DyadCovariateRow r;
    r.sender_outdeg = outdeg_[i];
    r.receiver_outdeg = outdeg_[j];
    r.recip = td_.lagged.has_edge(j, i) ? 1.0 : 0.0;
    r.trans = 100.0 / n2 * two_paths_(i, j);
    r.shared_sup = 100.0 / n2 * shared_(i, j);
    r.gdp_i = monadic_[i][0];
    r.gdp_j = monadic_[j][0];
    r.milex_i = monadic_[i][1];
    r.milex_j = monadic_[j][1];
    r.poldiff = poldiff(monadic_[i][2], monadic_[j][2]);
    const auto& a = td_.lag_id(td_.actors[i]);
    const auto& b = td_.lag_id(td_.actors[j]);
    const auto* d = cov_.find_dyadic(td_.previous, a, b);
    if (!d || !d->distance_km)
      throw InputError("missing dyadic covariate for " + a + "-" + b + " in period " +
                       std::to_string(td_.previous));
    r.distance = *d->distance_km;
    r.alliance = d->alliance.value_or(0.0);
    return r;
  }

  DyadFeatures features(std::size_t i, std::size_t j) const {
    return DyadFeatures{td_.period, td_.actors[i], td_.actors[j], row(i, j),
                        td_.lagged.has_edge(i, j) ? 1.0 : 0.0};
  }

 private:
  const TransitionData& td_;
  const CovariateTables& cov_;
  Eigen::MatrixXd two_paths_;
  Eigen::MatrixXd shared_;
  std::vector<double> outdeg_;
  std::vector<std::array<double, 3>> monadic_;
};

inline DyadCovariateRow dyad_row(const TransitionData& td, const CovariateTables& cov,
                                 std::string_view i, std::string_view j) {
  return DyadRowBuilder(td, cov).row(td.lagged.require(i), td.lagged.require(j));
}

// ---------------------------------------------------------------------------
// Global statistics

struct GofStats {
  double size = 0.0;
  double order = 0.0;
  double density = 0.0;
  double mean_indegree = 0.0;
  double reciprocity_share = 0.0;
  double transitivity_ratio = 0.0;

  static const std::array<const char*, 6>& names() {
    static const std::array<const char*, 6> n{"size",          "order",
                                              "density",       "mean_indegree",
                                              "reciprocity",   "transitivity"};
    return n;
  }

  std::array<double, 6> values() const {
    return {size, order, density, mean_indegree, reciprocity_share, transitivity_ratio};
  }
};

// Reciprocity counts reciprocated ordered edges over all edges. Transitivity is
// 3 * triangles / connected triples on the undirected skeleton. Both are 0
// when their denominator is.
inline GofStats global_stats(const Network& y, std::size_t n) {
  if (n < 2) throw ContractError("global statistics need n >= 2");
  const std::size_t m = y.size();
  GofStats s;
  std::size_t edges = 0, mutual = 0, active = 0;
  std::vector<std::uint8_t> und(m * m, 0);
  for (std::size_t i = 0; i < m; ++i) {
    bool touched = false;
    for (std::size_t j = 0; j < m; ++j) {
      if (i == j) continue;
      bool ij = y.has_edge(i, j), ji = y.has_edge(j, i);
      if (ij) {
        ++edges;
        if (ji) ++mutual;
      }
      if (ij || ji) {
        und[i * m + j] = 1;
        touched = true;
      }
    }
    if (touched) ++active;
  }
  s.size = double(edges);
  s.order = double(active);
  s.density = double(edges) / (double(n) * double(n - 1));
  s.mean_indegree = double(edges) / double(n);
  s.reciprocity_share = edges ? double(mutual) / double(edges) : 0.0;

  std::size_t triangles = 0, triples = 0;
  std::vector<std::size_t> deg(m, 0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) deg[i] += und[i * m + j];
  for (std::size_t i = 0; i < m; ++i) triples += deg[i] * (deg[i] - (deg[i] ? 1 : 0)) / 2;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      if (!und[i * m + j]) continue;
      for (std::size_t k = j + 1; k < m; ++k)
        if (und[i * m + k] && und[j * m + k]) ++triangles;
    }
  s.transitivity_ratio = triples ? 3.0 * double(triangles) / double(triples) : 0.0;
  return s;
}

inline GofStats global_stats(const Network& y) { return global_stats(y, y.size()); }

}  // namespace tvstergm

#endif
