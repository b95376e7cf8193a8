#ifndef TVSTERGM_SYNTH_HPP
#define TVSTERGM_SYNTH_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tvstergm/csv.hpp"
#include "tvstergm/errors.hpp"
#include "tvstergm/model.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/netstats.hpp"
#include "tvstergm/network.hpp"
#include "tvstergm/transition.hpp"

namespace tvstergm {

// Synthetic panel drawn from a separable model with known coefficient curves
// (constant, linear and sinusoidal in time) and per-actor random curves.
struct SynthConfig {
  int actors = 30;
  int periods = 40;
  int first_period = 1;
  std::uint64_t seed = 20161;
  int late_entrants = 2;  // actors entering a quarter into the panel
  int early_exits = 2;    // actors leaving a quarter before its end
  double missing_rate = 0.0;  // share of monadic cells blanked out
};

// Lower quantiles of pooled trade values: probability -> value. Above the
// last knot values follow a Pareto tail.
inline double tiv_quantile(double u) {
  static const std::array<std::pair<double, double>, 5> knots{
      {{0.0, 0.020}, {0.0475, 0.700}, {0.095, 1.332}, {0.1425, 2.200}, {0.19, 3.0}}};
  if (u <= 0.0) return knots[0].second;
  for (std::size_t k = 1; k < knots.size(); ++k)
    if (u <= knots[k].first) {
      const auto [u0, v0] = knots[k - 1];
      const auto [u1, v1] = knots[k];
      return v0 + (v1 - v0) * (u - u0) / (u1 - u0);
    }
  return 3.0 * std::pow((1.0 - u) / 0.81, -1.2);
}

struct TrueSide {
  double intercept = 0.0;
  double gdp_i = 0.0;                 // constant
  double gdp_j_start = 0.0;           // linear from start to end
  double gdp_j_end = 0.0;
  double milex_j_amplitude = 0.0;     // amplitude * sin(2 pi s)
  double recip = 0.0;                 // constant
  std::map<std::string, std::array<double, 2>> sender;    // level, slope
  std::map<std::string, std::array<double, 2>> receiver;
};

class TrueModel : public DyadScorer {
 public:
  double t_lower = 0.0;  // first response period
  double t_upper = 1.0;  // last response period
  TrueSide formation;
  TrueSide persistence;
  std::map<std::string, ActorSpan> spans;

  double position(double t) const { return (t - t_lower) / (t_upper - t_lower); }

  const TrueSide& side(Side s) const {
    if (s == Side::pooled) throw ContractError("the generating model is separable");
    return s == Side::formation ? formation : persistence;
  }

  // Coefficient of a fixed term at time t.
  double coefficient(Side s, const std::string& term, double t) const {
    const TrueSide& ts = side(s);
    const double u = position(t);
    if (term == "intercept") return ts.intercept;
    if (term == "gdp_i") return ts.gdp_i;
    if (term == "gdp_j") return ts.gdp_j_start + (ts.gdp_j_end - ts.gdp_j_start) * u;
    if (term == "milex_j") return ts.milex_j_amplitude * std::sin(2.0 * M_PI * u);
    if (term == "recip") return ts.recip;
    throw ContractError("generating model has no term '" + term + "'");
  }

  // Random curve of `actor` in role "re_sender" / "re_receiver"; zero where the
  // actor does not exist.
  double random_curve(Side s, const std::string& role, const std::string& actor, double t) const {
    const TrueSide& ts = side(s);
    const auto& m = role == "re_sender" ? ts.sender : ts.receiver;
    auto it = m.find(actor);
    if (it == m.end()) return 0.0;
    auto sp = spans.find(actor);
    if (sp != spans.end() && (t < sp->second.first || t > sp->second.last)) return 0.0;
    return it->second[0] + it->second[1] * (2.0 * position(t) - 1.0);
  }

  double logit(Side s, const DyadFeatures& f) const override {
    const double t = f.period;
    return coefficient(s, "intercept", t) + coefficient(s, "gdp_i", t) * f.row.gdp_i +
           coefficient(s, "gdp_j", t) * f.row.gdp_j + coefficient(s, "milex_j", t) * f.row.milex_j +
           coefficient(s, "recip", t) * f.row.recip + random_curve(s, "re_sender", f.sender, t) +
           random_curve(s, "re_receiver", f.receiver, t);
  }
};

// Fixed terms of the generating model as fitted: curves for gdp_i, gdp_j and
// milex_j, a constant reciprocity effect and both random smooths.
inline ModelSpec synthetic_spec() {
  ModelSpec s;
  s.variant = Variant::stergm_re;
  s.terms = {{"gdp_i", TermKind::time_varying},
             {"gdp_j", TermKind::time_varying},
             {"milex_j", TermKind::time_varying},
             {"recip", TermKind::constant},
             {"", TermKind::random_sender},
             {"", TermKind::random_receiver}};
  s.varying = {12, 2, 1};
  s.random = {9, 2, 1};
  return s;
}

struct SynthData {
  SynthConfig config;
  PanelInputs inputs;  // raw flows, untransformed covariates, registry
  TrueModel truth;
  std::map<int, Network> networks;
};

inline std::string synth_actor_id(int k) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "A%02d", k);
  return buf;
}

inline SynthData make_synthetic(const SynthConfig& cfg) {
  if (cfg.actors < 4) throw ContractError("synthetic panel needs at least 4 actors");
  if (cfg.periods < 4) throw ContractError("synthetic panel needs at least 4 periods");
  if (cfg.late_entrants + cfg.early_exits > cfg.actors - 3)
    throw ContractError("too many entering or exiting actors");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  SynthData d;
  d.config = cfg;
  const int t0 = cfg.first_period;
  const int t1 = cfg.first_period + cfg.periods - 1;
  std::vector<std::string> ids;
  for (int k = 0; k < cfg.actors; ++k) ids.push_back(synth_actor_id(k));

  // Registry: the last actors enter late or exit early.
  auto& reg = d.inputs.registry;
  const int quarter = cfg.periods / 4;
  for (int k = 0; k < cfg.actors; ++k) {
    ActorSpan sp{t0, t1};
    if (k >= cfg.actors - cfg.late_entrants) sp.first = t0 + quarter;
    else if (k >= cfg.actors - cfg.late_entrants - cfg.early_exits) sp.last = t1 - quarter;
    reg.actors[ids[k]] = sp;
  }

  // Monadic covariates on the raw scale.
  auto& cov = d.inputs.covariates;
  for (int k = 0; k < cfg.actors; ++k) {
    const auto& sp = reg.actors[ids[k]];
    double z = normal(rng);
    const double mu = 0.5 + 1.5 * unif(rng);
    double ar = normal(rng);
    int polity = int(std::floor(unif(rng) * 21.0)) - 10;
    for (int t = sp.first; t <= sp.last; ++t) {
      if (t > sp.first) z += 0.15 * normal(rng);
      ar = 0.7 * ar + std::sqrt(1.0 - 0.49) * normal(rng);
      if (unif(rng) < 0.05) polity = int(std::floor(unif(rng) * 21.0)) - 10;
      const double m = std::max(0.0, mu + 0.3 * ar);
      MonadicValues v;
      v.gdp = std::exp(z);
      v.milex = std::expm1(m);
      v.polity = double(polity);
      cov.monadic[{t, ids[k]}] = v;
    }
  }
  // Dyadic covariates: fixed distances, slowly switching alliances.
  for (int a = 0; a < cfg.actors; ++a)
    for (int b = a + 1; b < cfg.actors; ++b) {
      const double km = std::exp(std::log(500.0) + unif(rng) * (std::log(15000.0) - std::log(500.0)));
      bool ally = unif(rng) < 0.15;
      for (int t = t0; t <= t1; ++t) {
        if (t > t0 && unif(rng) < 0.03) ally = !ally;
        DyadicValues v;
        v.alliance = ally ? 1.0 : 0.0;
        v.distance_km = km;
        cov.dyadic[dyad_key(t, ids[a], ids[b])] = v;
      }
    }

  // Generating coefficients.
  TrueModel& tm = d.truth;
  tm.t_lower = t0 + 1;
  tm.t_upper = t1;
  tm.spans = reg.actors;
  tm.formation = {-3.2, 0.6, -0.4, 0.4, 0.8, 1.5, {}, {}};
  tm.persistence = {0.8, 0.4, 0.5, -0.3, 0.6, 0.8, {}, {}};
  for (const auto& id : ids) {
    tm.formation.sender[id] = {0.7 * normal(rng), 0.4 * normal(rng)};
    tm.formation.receiver[id] = {0.7 * normal(rng), 0.4 * normal(rng)};
    tm.persistence.sender[id] = {0.5 * normal(rng), 0.3 * normal(rng)};
    tm.persistence.receiver[id] = {0.5 * normal(rng), 0.3 * normal(rng)};
  }

  // Networks: an initial random draw, then transitions from the true model.
  const CovariateTables transformed = prepare_covariates(cov);
  auto alive = [&](int t) {
    std::vector<std::string> a;
    for (const auto& id : ids)
      if (reg.exists(id, t)) a.push_back(id);
    return a;
  };
  {
    Network y(alive(t0));
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t j = 0; j < y.size(); ++j)
        if (i != j && unif(rng) < 0.1) y.set_edge(i, j);
    d.networks.emplace(t0, std::move(y));
  }
  for (int t = t0 + 1; t <= t1; ++t) {
    const Network& prev = d.networks.at(t - 1);
    Network cur(alive(t));
    TransitionData td;
    td.period = t;
    td.previous = t - 1;
    for (const auto& a : cur.actors())
      if (prev.contains(a)) td.actors.push_back(a);
    td.lagged = prev.restricted_to(td.actors);
    td.current = Network(td.actors);
    DyadRowBuilder rb(td, transformed);
    for (std::size_t i = 0; i < cur.size(); ++i)
      for (std::size_t j = 0; j < cur.size(); ++j) {
        if (i == j) continue;
        const auto ii = td.lagged.index_of(cur.actors()[i]);
        const auto jj = td.lagged.index_of(cur.actors()[j]);
        double p = 0.05;  // dyads with an entering actor
        if (ii && jj) {
          const Side s = td.lagged.has_edge(*ii, *jj) ? Side::persistence : Side::formation;
          p = tm.probability(s, rb.features(*ii, *jj));
        }
        if (unif(rng) < p) cur.set_edge(i, j);
      }
    d.networks.emplace(t, std::move(cur));
  }

  // Valued flows for every edge.
  std::vector<FlowRecord> flows;
  for (const auto& [t, y] : d.networks)
    for (const auto& [i, j] : y.edges())
      flows.push_back({t, y.actors()[i], y.actors()[j], tiv_quantile(unif(rng))});
  d.inputs.flows = make_flows(std::move(flows));

  // Optional gaps for the imputation path; first and last records stay.
  if (cfg.missing_rate > 0.0)
    for (auto& [key, v] : cov.monadic) {
      const auto& sp = reg.actors[key.second];
      if (key.first == sp.first || key.first == sp.last) continue;
      if (unif(rng) < cfg.missing_rate) v.gdp.reset();
      if (unif(rng) < cfg.missing_rate) v.milex.reset();
    }
  return d;
}

inline void write_synthetic(const SynthData& d, const std::string& dir) {
  {
    csv::Writer w(dir + "/edges.csv");
    w.row("period", "sender", "receiver", "value");
    for (const auto& r : d.inputs.flows.records) w.row(r.period, r.sender, r.receiver, r.value);
  }
  auto opt = [](const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string(); };
  {
    csv::Writer w(dir + "/monadic.csv");
    w.row("period", "actor", "gdp", "milex", "polity");
    for (const auto& [key, v] : d.inputs.covariates.monadic)
      w.row(key.first, key.second, opt(v.gdp), opt(v.milex), opt(v.polity));
  }
  {
    csv::Writer w(dir + "/dyadic.csv");
    w.row("period", "actor_i", "actor_j", "alliance", "distance_km");
    for (const auto& [key, v] : d.inputs.covariates.dyadic)
      w.row(std::get<0>(key), std::get<1>(key), std::get<2>(key), opt(v.alliance), opt(v.distance_km));
  }
  {
    csv::Writer w(dir + "/registry.csv");
    w.row("actor", "first", "last", "predecessor");
    for (const auto& [id, sp] : d.inputs.registry.actors) {
      auto it = d.inputs.registry.predecessor.find(id);
      w.row(id, sp.first, sp.last, it == d.inputs.registry.predecessor.end() ? "" : it->second);
    }
  }
}

}  // namespace tvstergm

#endif
