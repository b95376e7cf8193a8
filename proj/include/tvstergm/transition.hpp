#ifndef TVSTERGM_TRANSITION_HPP
#define TVSTERGM_TRANSITION_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tvstergm/errors.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/network.hpp"

namespace tvstergm {

enum class Side { formation, persistence, pooled };

inline const char* to_string(Side s) {
  switch (s) {
    case Side::formation: return "formation";
    case Side::persistence: return "persistence";
    case Side::pooled: return "pooled";
  }
  return "?";
}

inline Side side_from_string(const std::string& s) {
  if (s == "formation") return Side::formation;
  if (s == "persistence") return Side::persistence;
  if (s == "pooled") return Side::pooled;
  throw ContractError("unknown side '" + s + "'");
}

// Ordered dyad (i, j) as indices into TransitionData::actors with its response.
struct DyadObs {
  std::size_t i = 0;
  std::size_t j = 0;
  bool response = false;
};

// One step previous -> period over the common actor set.
struct TransitionData {
  int period = 0;
  int previous = 0;
  std::vector<std::string> actors;  // common actors, sorted
  Network lagged;                   // previous network restricted to `actors`
  Network current;                  // current network restricted to `actors`
  std::vector<DyadObs> formation;   // dyads empty in the lagged network
  std::vector<DyadObs> persistence; // dyads present in the lagged network
  // Successor -> predecessor used for lagged network position and covariates.
  std::map<std::string, std::string> lag_alias;
  std::size_t entrants = 0;  // in the current actor set only
  std::size_t exits = 0;     // in the previous actor set only

  std::size_t size() const { return actors.size(); }

  const std::string& lag_id(const std::string& actor) const {
    auto it = lag_alias.find(actor);
    return it == lag_alias.end() ? actor : it->second;
  }

  const std::vector<DyadObs>& rows(Side s) const {
    if (s == Side::persistence) return persistence;
    return formation;
  }
};

namespace detail {

struct CommonSet {
  std::vector<std::string> actors;
  std::map<std::string, std::string> alias;
  std::size_t entrants = 0;
  std::size_t exits = 0;
};

inline CommonSet common_set(const Network& prev, const Network& cur, const ActorRegistry& registry,
                            bool use_predecessors) {
  CommonSet out;
  for (const auto& a : cur.actors()) {
    if (prev.contains(a)) {
      out.actors.push_back(a);
      continue;
    }
    if (use_predecessors) {
      auto it = registry.predecessor.find(a);
      if (it != registry.predecessor.end() && prev.contains(it->second) &&
          !cur.contains(it->second)) {
        out.actors.push_back(a);
        out.alias[a] = it->second;
        continue;
      }
    }
    ++out.entrants;
  }
  for (const auto& a : prev.actors()) {
    bool kept = cur.contains(a);
    for (const auto& [s, p] : out.alias) kept = kept || p == a;
    if (!kept) ++out.exits;
  }
  return out;
}

}  // namespace detail

// A^t intersected with A^{t-1}; with `use_predecessors` a successor entering at t
// whose registered predecessor left at t is kept under the successor's id.
inline std::vector<std::string> common_actors(const NetworkPanel& panel, int t,
                                              bool use_predecessors = false) {
  if (!panel.has(panel.previous(t)))
    throw ContractError("period " + std::to_string(panel.previous(t)) + " not in panel");
  return detail::common_set(panel.at(panel.previous(t)), panel.at(t), panel.registry,
                            use_predecessors)
      .actors;
}

inline TransitionData build_transition(const NetworkPanel& panel, int t,
                                       bool use_predecessors = false) {
  const int tp = panel.previous(t);
  if (!panel.has(tp)) throw ContractError("period " + std::to_string(tp) + " not in panel");
  const Network& prev = panel.at(tp);
  const Network& cur = panel.at(t);
  auto cs = detail::common_set(prev, cur, panel.registry, use_predecessors);
  if (cs.actors.size() < 3)
    throw ContractError("too few common actors in period " + std::to_string(t) + " (" +
                        std::to_string(cs.actors.size()) + " < 3)");

  TransitionData td;
  td.period = t;
  td.previous = tp;
  td.actors = cs.actors;
  td.lag_alias = cs.alias;
  td.entrants = cs.entrants;
  td.exits = cs.exits;
  td.current = cur.restricted_to(td.actors);
  td.lagged = Network(td.actors);
  const std::size_t n = td.actors.size();
  std::vector<std::size_t> src(n);
  for (std::size_t k = 0; k < n; ++k) src[k] = prev.require(td.lag_id(td.actors[k]));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j && prev.has_edge(src[i], src[j])) td.lagged.set_edge(i, j);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      DyadObs d{i, j, td.current.has_edge(i, j)};
      (td.lagged.has_edge(i, j) ? td.persistence : td.formation).push_back(d);
    }
  return td;
}

// Y+ = Y^{t} union Y^{t-1}
inline Network formation_network(const Network& lagged, const Network& current) {
  if (!lagged.same_actors(current)) throw ContractError("networks differ in actor sets");
  Network out(lagged.actors());
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      if (i != j && (lagged.has_edge(i, j) || current.has_edge(i, j))) out.set_edge(i, j);
  return out;
}

// Y- = Y^{t} intersected with Y^{t-1}
inline Network persistence_network(const Network& lagged, const Network& current) {
  if (!lagged.same_actors(current)) throw ContractError("networks differ in actor sets");
  Network out(lagged.actors());
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j)
      if (i != j && lagged.has_edge(i, j) && current.has_edge(i, j)) out.set_edge(i, j);
  return out;
}

namespace detail {

inline void check_reconstruct_pre(const Network& prev, const Network& plus, const Network& minus) {
  if (!prev.same_actors(plus) || !prev.same_actors(minus))
    throw ContractError("reconstruct: networks differ in actor sets");
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < prev.size(); ++j) {
      if (minus.has_edge(i, j) && !prev.has_edge(i, j))
        throw ContractError("reconstruct: persistence network not contained in previous network");
      if (prev.has_edge(i, j) && !plus.has_edge(i, j))
        throw ContractError("reconstruct: previous network not contained in formation network");
    }
}

}  // namespace detail

// Y+ \ (Y^{t-1} \ Y-)
inline Network reconstruct_by_removal(const Network& prev, const Network& plus,
                                      const Network& minus) {
  detail::check_reconstruct_pre(prev, plus, minus);
  Network out(prev.actors());
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) {
      bool dissolved = prev.has_edge(i, j) && !minus.has_edge(i, j);
      if (i != j && plus.has_edge(i, j) && !dissolved) out.set_edge(i, j);
    }
  return out;
}

// Y- union (Y+ \ Y^{t-1})
inline Network reconstruct_by_union(const Network& prev, const Network& plus,
                                    const Network& minus) {
  detail::check_reconstruct_pre(prev, plus, minus);
  Network out(prev.actors());
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) {
      bool formed = plus.has_edge(i, j) && !prev.has_edge(i, j);
      if (i != j && (minus.has_edge(i, j) || formed)) out.set_edge(i, j);
    }
  return out;
}

inline Network reconstruct(const Network& prev, const Network& plus, const Network& minus) {
  return reconstruct_by_union(prev, plus, minus);
}

}  // namespace tvstergm

#endif
