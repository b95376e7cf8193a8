#ifndef TVSTERGM_NETWORK_HPP
#define TVSTERGM_NETWORK_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "tvstergm/errors.hpp"

namespace tvstergm {

// Directed binary network over a sorted set of actor ids. The diagonal is
// never stored as an edge.
class Network {
 public:
  Network() = default;

  explicit Network(std::vector<std::string> actors) : actors_(std::move(actors)) {
    std::sort(actors_.begin(), actors_.end());
    if (std::adjacent_find(actors_.begin(), actors_.end()) != actors_.end())
      throw ContractError("duplicate actor id in network");
    adj_.assign(actors_.size() * actors_.size(), 0);
  }

  std::size_t size() const { return actors_.size(); }
  const std::vector<std::string>& actors() const { return actors_; }

  std::optional<std::size_t> index_of(std::string_view id) const {
    auto it = std::lower_bound(actors_.begin(), actors_.end(), id,
                               [](const std::string& a, std::string_view b) { return a < b; });
    if (it == actors_.end() || *it != id) return std::nullopt;
    return static_cast<std::size_t>(it - actors_.begin());
  }

  std::size_t require(std::string_view id) const {
    auto k = index_of(id);
    if (!k) throw ContractError("actor '" + std::string(id) + "' not in network");
    return *k;
  }

  bool contains(std::string_view id) const { return index_of(id).has_value(); }

  bool has_edge(std::size_t i, std::size_t j) const { return adj_[i * size() + j] != 0; }

  void set_edge(std::size_t i, std::size_t j, bool on = true) {
    if (i == j) throw ContractError("self-loops are undefined");
    adj_[i * size() + j] = on ? 1 : 0;
  }

  bool has_edge(std::string_view i, std::string_view j) const {
    auto a = index_of(i), b = index_of(j);
    return a && b && has_edge(*a, *b);
  }

  void set_edge(std::string_view i, std::string_view j, bool on = true) {
    set_edge(require(i), require(j), on);
  }

  std::size_t edge_count() const {
    return static_cast<std::size_t>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1}));
  }

  std::vector<std::pair<std::size_t, std::size_t>> edges() const {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j)
        if (has_edge(i, j)) out.emplace_back(i, j);
    return out;
  }

  std::size_t outdegree(std::size_t i) const {
    std::size_t d = 0;
    for (std::size_t j = 0; j < size(); ++j) d += adj_[i * size() + j];
    return d;
  }

  std::size_t indegree(std::size_t j) const {
    std::size_t d = 0;
    for (std::size_t i = 0; i < size(); ++i) d += adj_[i * size() + j];
    return d;
  }

  // Induced subgraph on `ids`; ids absent from this network become isolates.
  Network restricted_to(const std::vector<std::string>& ids) const {
    Network out(ids);
    std::vector<std::optional<std::size_t>> src(out.size());
    for (std::size_t k = 0; k < out.size(); ++k) src[k] = index_of(out.actors_[k]);
    for (std::size_t a = 0; a < out.size(); ++a) {
      if (!src[a]) continue;
      for (std::size_t b = 0; b < out.size(); ++b)
        if (a != b && src[b] && has_edge(*src[a], *src[b])) out.set_edge(a, b);
    }
    return out;
  }

  Eigen::MatrixXd adjacency() const {
    Eigen::MatrixXd a(size(), size());
    for (std::size_t i = 0; i < size(); ++i)
      for (std::size_t j = 0; j < size(); ++j) a(i, j) = has_edge(i, j) ? 1.0 : 0.0;
    return a;
  }

  bool same_actors(const Network& o) const { return actors_ == o.actors_; }

  friend bool operator==(const Network& a, const Network& b) {
    return a.actors_ == b.actors_ && a.adj_ == b.adj_;
  }

 private:
  std::vector<std::string> actors_;
  std::vector<std::uint8_t> adj_;
};

}  // namespace tvstergm

#endif
