#ifndef TVSTERGM_NETPANEL_HPP
#define TVSTERGM_NETPANEL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "tvstergm/csv.hpp"
#include "tvstergm/errors.hpp"
#include "tvstergm/network.hpp"

namespace tvstergm {

// ---------------------------------------------------------------------------
// Raw valued flows

struct FlowRecord {
  int period = 0;
  std::string sender;
  std::string receiver;
  double value = 0.0;

  friend bool operator==(const FlowRecord&, const FlowRecord&) = default;
};

// Sorted by (period, sender, receiver), one record per key.
struct RawFlows {
  std::vector<FlowRecord> records;

  friend bool operator==(const RawFlows&, const RawFlows&) = default;
};

// Validates and canonicalizes flow records: duplicates are summed.
inline RawFlows make_flows(std::vector<FlowRecord> records) {
  for (const auto& r : records) {
    if (r.sender == r.receiver)
      throw InputError("self-loop " + r.sender + "->" + r.receiver + " in period " +
                       std::to_string(r.period));
    if (!(r.value >= 0.0) || !std::isfinite(r.value))
      throw InputError("negative value for " + r.sender + "->" + r.receiver + " in period " +
                       std::to_string(r.period));
  }
  std::sort(records.begin(), records.end(), [](const FlowRecord& a, const FlowRecord& b) {
    return std::tie(a.period, a.sender, a.receiver) < std::tie(b.period, b.sender, b.receiver);
  });
  RawFlows out;
  for (auto& r : records) {
    if (!out.records.empty()) {
      auto& last = out.records.back();
      if (last.period == r.period && last.sender == r.sender && last.receiver == r.receiver) {
        last.value += r.value;
        continue;
      }
    }
    out.records.push_back(std::move(r));
  }
  return out;
}

struct EdgeListSchema {
  std::string period = "period";
  std::string sender = "sender";
  std::string receiver = "receiver";
  std::string value = "value";
};

inline RawFlows parse_edge_list(const csv::Table& t, const EdgeListSchema& schema = {}) {
  const auto cp = t.column(schema.period), cs = t.column(schema.sender),
             cr = t.column(schema.receiver), cv = t.column(schema.value);
  std::vector<FlowRecord> recs;
  recs.reserve(t.rows.size());
  for (const auto& row : t.rows) {
    FlowRecord r{csv::parse_int(row.fields[cp], row.line, "period"), row.fields[cs],
                 row.fields[cr], csv::parse_double(row.fields[cv], row.line, "value")};
    if (r.sender == r.receiver)
      throw InputError("self-loop at row " + std::to_string(row.line) + ": " + r.sender);
    if (r.value < 0.0)
      throw InputError("negative value at row " + std::to_string(row.line));
    recs.push_back(std::move(r));
  }
  return make_flows(std::move(recs));
}

inline RawFlows load_edge_list(const std::string& path, const EdgeListSchema& schema = {}) {
  return parse_edge_list(csv::read_file(path), schema);
}

// ---------------------------------------------------------------------------
// Actor registry

struct ActorSpan {
  int first = 0;
  int last = 0;
};

struct ActorRegistry {
  std::map<std::string, ActorSpan> actors;
  std::map<std::string, std::string> predecessor;  // successor -> predecessor

  bool empty() const { return actors.empty(); }

  bool exists(const std::string& id, int period) const {
    auto it = actors.find(id);
    return it != actors.end() && it->second.first <= period && period <= it->second.last;
  }

  void validate() const {
    for (const auto& [id, span] : actors)
      if (span.first > span.last) throw InputError("registry: first > last for actor " + id);
    for (const auto& [start, _] : predecessor) {
      std::set<std::string> seen{start};
      auto cur = start;
      for (auto it = predecessor.find(cur); it != predecessor.end(); it = predecessor.find(cur)) {
        cur = it->second;
        if (!seen.insert(cur).second)
          throw InputError("registry: predecessor cycle through actor " + start);
      }
    }
  }
};

inline ActorRegistry parse_registry(const csv::Table& t) {
  const auto ca = t.column("actor"), cf = t.column("first"), cl = t.column("last"),
             cp = t.column("predecessor");
  ActorRegistry reg;
  for (const auto& row : t.rows) {
    const auto& id = row.fields[ca];
    if (id.empty()) throw InputError("registry: empty actor id at row " + std::to_string(row.line));
    ActorSpan span{csv::parse_int(row.fields[cf], row.line, "first"),
                   csv::parse_int(row.fields[cl], row.line, "last")};
    if (!reg.actors.emplace(id, span).second)
      throw InputError("registry: duplicate actor " + id + " at row " + std::to_string(row.line));
    if (!row.fields[cp].empty()) reg.predecessor[id] = row.fields[cp];
  }
  reg.validate();
  return reg;
}

inline ActorRegistry load_registry(const std::string& path) {
  return parse_registry(csv::read_file(path));
}

// ---------------------------------------------------------------------------
// Covariates

struct MonadicValues {
  std::optional<double> gdp;
  std::optional<double> milex;
  std::optional<double> polity;

  bool complete() const { return gdp && milex && polity; }
  friend bool operator==(const MonadicValues&, const MonadicValues&) = default;
};

struct DyadicValues {
  std::optional<double> alliance;
  std::optional<double> distance_km;

  friend bool operator==(const DyadicValues&, const DyadicValues&) = default;
};

using MonadicKey = std::pair<int, std::string>;
using DyadicKey = std::tuple<int, std::string, std::string>;  // actor ids ordered i < j

inline DyadicKey dyad_key(int period, const std::string& a, const std::string& b) {
  return a < b ? DyadicKey{period, a, b} : DyadicKey{period, b, a};
}

struct CovariateTables {
  std::map<MonadicKey, MonadicValues> monadic;
  std::map<DyadicKey, DyadicValues> dyadic;
  // After prepare_covariates: gdp, distance hold natural logs, milex holds log(1 + milex).
  bool transformed = false;

  const MonadicValues* find_monadic(int period, const std::string& actor) const {
    auto it = monadic.find({period, actor});
    return it == monadic.end() ? nullptr : &it->second;
  }

  const DyadicValues* find_dyadic(int period, const std::string& a, const std::string& b) const {
    auto it = dyadic.find(dyad_key(period, a, b));
    return it == dyadic.end() ? nullptr : &it->second;
  }

  std::vector<int> periods() const {
    std::set<int> s;
    for (const auto& [k, _] : monadic) s.insert(k.first);
    return {s.begin(), s.end()};
  }

  std::set<std::string> actors() const {
    std::set<std::string> s;
    for (const auto& [k, _] : monadic) s.insert(k.second);
    return s;
  }

  friend bool operator==(const CovariateTables&, const CovariateTables&) = default;
};

inline void parse_monadic(const csv::Table& t, CovariateTables& out) {
  const auto cp = t.column("period"), ca = t.column("actor"), cg = t.column("gdp"),
             cm = t.column("milex"), cpol = t.column("polity");
  for (const auto& row : t.rows) {
    int period = csv::parse_int(row.fields[cp], row.line, "period");
    MonadicValues v{csv::parse_optional(row.fields[cg], row.line, "gdp"),
                    csv::parse_optional(row.fields[cm], row.line, "milex"),
                    csv::parse_optional(row.fields[cpol], row.line, "polity")};
    if (v.milex && *v.milex < 0.0)
      throw InputError("negative milex at row " + std::to_string(row.line));
    if (v.polity && (*v.polity < -10.0 || *v.polity > 10.0))
      throw InputError("polity outside [-10, 10] at row " + std::to_string(row.line));
    if (!out.monadic.emplace(MonadicKey{period, row.fields[ca]}, v).second)
      throw InputError("duplicate monadic record at row " + std::to_string(row.line));
  }
}

inline void parse_dyadic(const csv::Table& t, CovariateTables& out) {
  const auto cp = t.column("period"), ci = t.column("actor_i"), cj = t.column("actor_j"),
             ca = t.column("alliance"), cd = t.column("distance_km");
  for (const auto& row : t.rows) {
    int period = csv::parse_int(row.fields[cp], row.line, "period");
    const auto &i = row.fields[ci], &j = row.fields[cj];
    if (i == j) throw InputError("self-dyad at row " + std::to_string(row.line));
    DyadicValues v{csv::parse_optional(row.fields[ca], row.line, "alliance"),
                   csv::parse_optional(row.fields[cd], row.line, "distance_km")};
    if (v.alliance && *v.alliance != 0.0 && *v.alliance != 1.0)
      throw InputError("alliance must be 0 or 1 at row " + std::to_string(row.line));
    // Dyadic covariates are symmetric; a second row for (j, i) must agree.
    auto [it, fresh] = out.dyadic.emplace(dyad_key(period, i, j), v);
    if (!fresh && !(it->second == v))
      throw InputError("conflicting dyadic record at row " + std::to_string(row.line));
  }
}

inline CovariateTables load_covariates(const std::string& monadic_path,
                                       const std::string& dyadic_path) {
  CovariateTables out;
  parse_monadic(csv::read_file(monadic_path), out);
  if (!dyadic_path.empty()) parse_dyadic(csv::read_file(dyadic_path), out);
  return out;
}

// ---------------------------------------------------------------------------
// Imputation

// Leading gaps take the first observation, trailing gaps the last one, a single
// interior gap the mean of its neighbours and longer interior runs are
// interpolated linearly in the period. Throws if nothing is observed.
inline std::map<int, double> impute_series(const std::map<int, std::optional<double>>& series) {
  std::vector<int> keys;
  std::vector<std::optional<double>> vals;
  for (const auto& [k, v] : series) {
    keys.push_back(k);
    vals.push_back(v);
  }
  std::vector<std::size_t> obs;
  for (std::size_t k = 0; k < vals.size(); ++k)
    if (vals[k]) obs.push_back(k);
  if (obs.empty()) throw InputError("series has no observed value");

  std::vector<double> filled(vals.size());
  for (std::size_t k = 0; k < vals.size(); ++k) {
    if (vals[k]) {
      filled[k] = *vals[k];
    } else if (k < obs.front()) {
      filled[k] = *vals[obs.front()];
    } else if (k > obs.back()) {
      filled[k] = *vals[obs.back()];
    } else {
      auto hi = *std::upper_bound(obs.begin(), obs.end(), k);
      auto lo = *(std::upper_bound(obs.begin(), obs.end(), k) - 1);
      if (hi - lo == 2) {
        filled[k] = 0.5 * (*vals[lo] + *vals[hi]);
      } else {
        double w = double(keys[k] - keys[lo]) / double(keys[hi] - keys[lo]);
        filled[k] = (1.0 - w) * *vals[lo] + w * *vals[hi];
      }
    }
  }
  std::map<int, double> out;
  for (std::size_t k = 0; k < keys.size(); ++k) out.emplace(keys[k], filled[k]);
  return out;
}

struct ImputationResult {
  CovariateTables covariates;
  std::vector<std::string> dropped_actors;  // no observation at all in some monadic series
};

// Fills monadic series over each actor's existence periods within `periods`,
// holds distance constant per dyad and carries alliance indicators forward
// (backward before the first record).
inline ImputationResult impute_covariates(const CovariateTables& in, const ActorRegistry& registry,
                                          const std::vector<int>& periods) {
  ImputationResult res;
  res.covariates.transformed = in.transformed;
  std::set<std::string> candidates;
  if (registry.empty()) {
    candidates = in.actors();
  } else {
    for (const auto& [id, _] : registry.actors) candidates.insert(id);
  }

  for (const auto& actor : candidates) {
    std::vector<int> alive;
    if (registry.empty()) {
      // Without a registry an actor exists between its first and last monadic record.
      int lo = 0, hi = -1;
      bool any = false;
      for (int p : periods)
        if (in.find_monadic(p, actor)) {
          if (!any) lo = p;
          hi = p;
          any = true;
        }
      for (int p : periods)
        if (any && p >= lo && p <= hi) alive.push_back(p);
    } else {
      for (int p : periods)
        if (registry.exists(actor, p)) alive.push_back(p);
    }
    if (alive.empty()) continue;

    std::map<int, std::optional<double>> gdp, milex, polity;
    for (int p : alive) {
      const auto* v = in.find_monadic(p, actor);
      gdp[p] = v ? v->gdp : std::nullopt;
      milex[p] = v ? v->milex : std::nullopt;
      polity[p] = v ? v->polity : std::nullopt;
    }
    try {
      auto g = impute_series(gdp), m = impute_series(milex), q = impute_series(polity);
      for (int p : alive) res.covariates.monadic[{p, actor}] = MonadicValues{g[p], m[p], q[p]};
    } catch (const InputError&) {
      res.dropped_actors.push_back(actor);
    }
  }

  // Dyadic: per unordered pair across the panel periods.
  std::map<std::pair<std::string, std::string>, std::map<int, DyadicValues>> pairs;
  for (const auto& [key, v] : in.dyadic) {
    const auto& [p, a, b] = key;
    pairs[{a, b}][p] = v;
  }
  for (const auto& [pair, byp] : pairs) {
    std::optional<double> distance;
    double dsum = 0.0;
    int dn = 0;
    for (const auto& [_, v] : byp)
      if (v.distance_km) {
        dsum += *v.distance_km;
        ++dn;
      }
    if (dn > 0) distance = dsum / dn;

    std::optional<double> first_alliance;
    for (const auto& [_, v] : byp)
      if (v.alliance) {
        first_alliance = v.alliance;
        break;
      }
    double carry = first_alliance.value_or(0.0);
    for (int p : periods) {
      auto it = byp.find(p);
      if (it != byp.end() && it->second.alliance) carry = *it->second.alliance;
      res.covariates.dyadic[DyadicKey{p, pair.first, pair.second}] = DyadicValues{carry, distance};
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Time windows

struct WindowedInputs {
  RawFlows flows;
  CovariateTables covariates;
  ActorRegistry registry;
  int width = 1;
};

inline int window_origin(const RawFlows& flows, const CovariateTables& cov) {
  auto ps = cov.periods();
  if (!ps.empty()) return ps.front();
  if (!flows.records.empty()) return flows.records.front().period;
  return 0;
}

// Windows start at the first covariate period; a trailing partial window is
// dropped. Window labels are the first year of each window.
inline WindowedInputs aggregate_windows(const RawFlows& flows, int width,
                                        const CovariateTables& covariates,
                                        const ActorRegistry& registry = {}) {
  if (width < 1) throw ContractError("window width must be >= 1");
  if (width == 1) return {flows, covariates, registry, 1};

  const int origin = window_origin(flows, covariates);
  int last = origin;
  for (int p : covariates.periods()) last = std::max(last, p);
  for (const auto& r : flows.records) last = std::max(last, r.period);
  const int count = (last - origin + 1) / width;
  auto window_of = [&](int p) -> std::optional<int> {
    if (p < origin) return std::nullopt;
    int k = (p - origin) / width;
    if (k >= count) return std::nullopt;
    return origin + k * width;
  };

  WindowedInputs out;
  out.width = width;
  out.covariates.transformed = covariates.transformed;

  std::vector<FlowRecord> recs;
  for (const auto& r : flows.records)
    if (auto w = window_of(r.period)) recs.push_back({*w, r.sender, r.receiver, r.value});
  out.flows = make_flows(std::move(recs));

  struct Acc {
    double sum = 0.0;
    int n = 0;
    void add(const std::optional<double>& v) {
      if (v) {
        sum += *v;
        ++n;
      }
    }
    std::optional<double> mean() const {
      return n ? std::optional<double>(sum / n) : std::nullopt;
    }
  };

  std::map<MonadicKey, std::array<Acc, 3>> mon;
  for (const auto& [key, v] : covariates.monadic)
    if (auto w = window_of(key.first)) {
      auto& a = mon[{*w, key.second}];
      a[0].add(v.gdp);
      a[1].add(v.milex);
      a[2].add(v.polity);
    }
  for (const auto& [key, a] : mon)
    out.covariates.monadic[key] = MonadicValues{a[0].mean(), a[1].mean(), a[2].mean()};

  // Alliance is one only if present in every year of the window.
  std::map<DyadicKey, std::pair<int, Acc>> dy;  // (count of alliance==1 years, distance)
  for (const auto& [key, v] : covariates.dyadic) {
    const auto& [p, a, b] = key;
    if (auto w = window_of(p)) {
      auto& slot = dy[DyadicKey{*w, a, b}];
      if (v.alliance && *v.alliance == 1.0) ++slot.first;
      slot.second.add(v.distance_km);
    }
  }
  for (const auto& [key, slot] : dy)
    out.covariates.dyadic[key] =
        DyadicValues{slot.first == width ? 1.0 : 0.0, slot.second.mean()};

  for (const auto& [id, span] : registry.actors) {
    int lo = std::max(span.first, origin);
    int hi = std::min(span.last, origin + count * width - 1);
    if (lo > hi) continue;
    out.registry.actors[id] = ActorSpan{*window_of(lo), *window_of(hi)};
  }
  for (const auto& [s, p] : registry.predecessor)
    if (out.registry.actors.count(s)) out.registry.predecessor[s] = p;
  return out;
}

// ---------------------------------------------------------------------------
// Panel

struct Provenance {
  std::size_t flow_records = 0;
  std::size_t edges_kept = 0;
  std::size_t below_threshold = 0;
  std::size_t endpoint_not_existent = 0;
  std::size_t outside_periods = 0;
  std::vector<std::string> dropped_actors;
  double threshold = 0.0;
  int window_width = 1;
};

struct NetworkPanel {
  std::vector<int> periods;  // strictly increasing, spaced by `step`
  int step = 1;
  std::map<int, Network> networks;
  CovariateTables covariates;
  ActorRegistry registry;
  Provenance provenance;

  bool has(int t) const { return networks.count(t) > 0; }

  const Network& at(int t) const {
    auto it = networks.find(t);
    if (it == networks.end()) throw ContractError("period " + std::to_string(t) + " not in panel");
    return it->second;
  }

  int previous(int t) const { return t - step; }
  int next(int t) const { return t + step; }
};

// Edge (i, j) is present at t iff the summed value exceeds the threshold and
// both actors exist at t with complete covariates.
inline NetworkPanel binarize(const RawFlows& flows, double threshold, const ActorRegistry& registry,
                             const CovariateTables& covariates, int step = 1,
                             std::vector<std::string> dropped_actors = {}) {
  if (threshold < 0.0) throw ContractError("threshold must be >= 0");
  NetworkPanel panel;
  panel.step = step;
  panel.periods = covariates.periods();
  panel.covariates = covariates;
  panel.registry = registry;
  for (std::size_t k = 1; k < panel.periods.size(); ++k)
    if (panel.periods[k] - panel.periods[k - 1] != step)
      throw InputError("covariate periods are not contiguous at " +
                       std::to_string(panel.periods[k]));

  std::set<std::string> candidates;
  if (registry.empty()) {
    candidates = covariates.actors();
  } else {
    for (const auto& [id, _] : registry.actors) candidates.insert(id);
  }
  std::set<std::string> seen;
  for (int t : panel.periods) {
    std::vector<std::string> alive;
    for (const auto& a : candidates) {
      if (!registry.empty() && !registry.exists(a, t)) continue;
      const auto* v = covariates.find_monadic(t, a);
      if (!v || !v->complete()) continue;
      alive.push_back(a);
      seen.insert(a);
    }
    panel.networks.emplace(t, Network(std::move(alive)));
  }
  for (const auto& a : candidates)
    if (!seen.count(a)) dropped_actors.push_back(a);
  std::sort(dropped_actors.begin(), dropped_actors.end());
  dropped_actors.erase(std::unique(dropped_actors.begin(), dropped_actors.end()),
                       dropped_actors.end());

  auto& prov = panel.provenance;
  prov.threshold = threshold;
  prov.window_width = step;
  prov.flow_records = flows.records.size();
  prov.dropped_actors = std::move(dropped_actors);
  for (const auto& r : flows.records) {
    auto it = panel.networks.find(r.period);
    if (it == panel.networks.end()) {
      ++prov.outside_periods;
      continue;
    }
    if (!(r.value > threshold)) {
      ++prov.below_threshold;
      continue;
    }
    auto& net = it->second;
    auto i = net.index_of(r.sender), j = net.index_of(r.receiver);
    if (!i || !j) {
      ++prov.endpoint_not_existent;
      continue;
    }
    net.set_edge(*i, *j);
    ++prov.edges_kept;
  }
  return panel;
}

// Natural log of gdp and distance, log(1 + x) of milex.
inline CovariateTables prepare_covariates(const CovariateTables& in) {
  if (in.transformed) throw ContractError("covariates already transformed");
  CovariateTables out = in;
  out.transformed = true;
  for (auto& [key, v] : out.monadic) {
    if (v.gdp) {
      if (!(*v.gdp > 0.0))
        throw InputError("nonpositive gdp for actor " + key.second + " in period " +
                         std::to_string(key.first));
      v.gdp = std::log(*v.gdp);
    }
    if (v.milex) {
      if (*v.milex < 0.0)
        throw InputError("negative milex for actor " + key.second + " in period " +
                         std::to_string(key.first));
      v.milex = std::log1p(*v.milex);
    }
  }
  for (auto& [key, v] : out.dyadic) {
    if (v.distance_km) {
      if (!(*v.distance_km > 0.0))
        throw InputError("nonpositive distance for dyad " + std::get<1>(key) + "-" +
                         std::get<2>(key) + " in period " + std::to_string(std::get<0>(key)));
      v.distance_km = std::log(*v.distance_km);
    }
  }
  return out;
}

inline double poldiff(double polity_i, double polity_j) { return std::abs(polity_i - polity_j); }

struct PanelInputs {
  RawFlows flows;
  CovariateTables covariates;  // raw, untransformed
  ActorRegistry registry;
};

struct PanelOptions {
  double threshold = 0.0;
  int window_width = 1;
};

inline PanelInputs load_panel_inputs(const std::string& edges, const std::string& monadic,
                                     const std::string& dyadic, const std::string& registry) {
  PanelInputs in;
  in.flows = load_edge_list(edges);
  in.covariates = load_covariates(monadic, dyadic);
  if (!registry.empty()) in.registry = load_registry(registry);
  return in;
}

// impute -> aggregate windows -> binarize -> log transforms
inline NetworkPanel build_panel(const PanelInputs& in, const PanelOptions& opt) {
  auto periods = in.covariates.periods();
  if (periods.empty()) throw InputError("no monadic covariate records");
  std::vector<int> range;
  for (int p = periods.front(); p <= periods.back(); ++p) range.push_back(p);
  auto imputed = impute_covariates(in.covariates, in.registry, range);
  ActorRegistry reg = in.registry;
  for (const auto& a : imputed.dropped_actors) {
    reg.actors.erase(a);
    reg.predecessor.erase(a);
  }
  auto win = aggregate_windows(in.flows, opt.window_width, imputed.covariates, reg);
  auto panel = binarize(win.flows, opt.threshold, win.registry, win.covariates, win.width,
                        imputed.dropped_actors);
  panel.covariates = prepare_covariates(panel.covariates);
  return panel;
}

}  // namespace tvstergm

#endif
