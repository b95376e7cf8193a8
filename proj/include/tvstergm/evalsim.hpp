#ifndef TVSTERGM_EVALSIM_HPP
#define TVSTERGM_EVALSIM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tvstergm/errors.hpp"
#include "tvstergm/model.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/netstats.hpp"
#include "tvstergm/network.hpp"
#include "tvstergm/parallel.hpp"
#include "tvstergm/transition.hpp"

namespace tvstergm {

// ---------------------------------------------------------------------------
// Scoring

namespace detail {

inline void check_scores(const std::vector<double>& scores, const std::vector<int>& labels) {
  if (scores.size() != labels.size()) throw ContractError("scores and labels differ in length");
  for (double s : scores)
    if (!std::isfinite(s)) throw ContractError("scores must be finite");
  for (int l : labels)
    if (l != 0 && l != 1) throw ContractError("labels must be 0 or 1");
}

// Indices sorted by score, ascending or descending; ties keep input order.
inline std::vector<std::size_t> order_by(const std::vector<double>& scores, bool descending) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return descending ? scores[a] > scores[b] : scores[a] < scores[b];
  });
  return idx;
}

}  // namespace detail

// P(score+ > score-) + P(tie) / 2 over all positive/negative pairs.
inline double roc_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  detail::check_scores(scores, labels);
  auto idx = detail::order_by(scores, false);
  double pos = 0, neg = 0, u = 0, neg_below = 0;
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    double gp = 0, gn = 0;
    while (b < idx.size() && scores[idx[b]] == scores[idx[a]]) {
      (labels[idx[b]] ? gp : gn) += 1;
      ++b;
    }
    u += gp * (neg_below + 0.5 * gn);
    neg_below += gn;
    pos += gp;
    neg += gn;
    a = b;
  }
  if (pos == 0 || neg == 0) throw ContractError("roc_auc needs both classes");
  return u / (pos * neg);
}

// Step integral of precision over recall increments, thresholds at the
// distinct scores (ties grouped).
inline double pr_auc(const std::vector<double>& scores, const std::vector<int>& labels) {
  detail::check_scores(scores, labels);
  const double pos = double(std::count(labels.begin(), labels.end(), 1));
  if (pos == 0) throw ContractError("pr_auc needs at least one positive");
  auto idx = detail::order_by(scores, true);
  double tp = 0, fp = 0, area = 0, recall = 0;
  for (std::size_t a = 0; a < idx.size();) {
    std::size_t b = a;
    while (b < idx.size() && scores[idx[b]] == scores[idx[a]]) {
      (labels[idx[b]] ? tp : fp) += 1;
      ++b;
    }
    const double r = tp / pos;
    area += (r - recall) * tp / (tp + fp);
    recall = r;
    a = b;
  }
  return area;
}

// ---------------------------------------------------------------------------
// Prediction

struct ScoredDyad {
  std::string sender;
  std::string receiver;
  Side side = Side::formation;
  double probability = 0.0;
  int observed = -1;  // -1 when the horizon is not observed
  std::size_t i = 0;  // indices into PredictionSet::actors
  std::size_t j = 0;
};

struct PredictionSet {
  int origin = 0;   // t
  int horizon = 0;  // t + 1
  bool observed = false;
  std::vector<std::string> actors;
  Network lagged;  // Y^t over `actors`
  std::vector<ScoredDyad> dyads;

  double expected_size() const {
    double s = 0;
    for (const auto& d : dyads) s += d.probability;
    return s;
  }

  double size_variance() const {
    double s = 0;
    for (const auto& d : dyads) s += d.probability * (1.0 - d.probability);
    return s;
  }
};

// Step t -> t+1. Without an observed horizon the actor set is A^t.
inline TransitionData forecast_transition(const NetworkPanel& panel, int t,
                                          bool use_predecessors = false) {
  const int h = panel.next(t);
  if (panel.has(h)) return build_transition(panel, h, use_predecessors);
  const Network& y = panel.at(t);
  if (y.size() < 3) throw ContractError("too few actors in period " + std::to_string(t));
  TransitionData td;
  td.period = h;
  td.previous = t;
  td.actors = y.actors();
  td.lagged = y;
  td.current = Network(td.actors);
  for (std::size_t i = 0; i < y.size(); ++i)
    for (std::size_t j = 0; j < y.size(); ++j)
      if (i != j) (y.has_edge(i, j) ? td.persistence : td.formation).push_back({i, j, false});
  return td;
}

inline PredictionSet predict_transition(const DyadScorer& model, const NetworkPanel& panel, int t,
                                        bool use_predecessors = false) {
  TransitionData td = forecast_transition(panel, t, use_predecessors);
  PredictionSet ps;
  ps.origin = t;
  ps.horizon = td.period;
  ps.observed = panel.has(td.period);
  ps.actors = td.actors;
  ps.lagged = td.lagged;
  DyadRowBuilder rb(td, panel.covariates);
  for (std::size_t i = 0; i < td.size(); ++i)
    for (std::size_t j = 0; j < td.size(); ++j) {
      if (i == j) continue;
      const Side side = td.lagged.has_edge(i, j) ? Side::persistence : Side::formation;
      DyadFeatures f = rb.features(i, j);
      // Sides the model cannot score carry NaN and are left out of AUCs.
      const double p = model.available(side) ? model.probability(side, f) : std::nan("");
      ScoredDyad d{f.sender, f.receiver, side, p, -1, i, j};
      if (model.available(side) && !std::isfinite(p)) throw NumericalError("non-finite probability");
      if (ps.observed) d.observed = td.current.has_edge(i, j) ? 1 : 0;
      ps.dyads.push_back(std::move(d));
    }
  return ps;
}

struct AucRow {
  int period = 0;  // horizon
  std::string side;
  double pr_auc = 0.0;
  double roc_auc = 0.0;
  std::size_t dyads = 0;
  std::size_t positives = 0;
};

struct RollingResult {
  std::vector<AucRow> rows;
  std::vector<std::string> diagnostics;
};

// AUC rows of one scored set for formation, persistence and both pooled.
inline void score_prediction(const PredictionSet& ps, RollingResult& out) {
  for (const char* name : {"formation", "persistence", "combined"}) {
    const std::string side = name;
    std::vector<double> s;
    std::vector<int> l;
    for (const auto& d : ps.dyads) {
      if (side != "combined" && to_string(d.side) != side) continue;
      if (std::isnan(d.probability) || d.observed < 0) continue;
      s.push_back(d.probability);
      l.push_back(d.observed);
    }
    const auto pos = std::size_t(std::count(l.begin(), l.end(), 1));
    if (pos == 0 || pos == l.size()) {
      out.diagnostics.push_back("period " + std::to_string(ps.horizon) + ": " + side +
                                (l.empty() ? " has no scored dyads" : " has a single observed class"));
      continue;
    }
    out.rows.push_back({ps.horizon, side, pr_auc(s, l), roc_auc(s, l), l.size(), pos});
  }
}

struct RollingOptions {
  FitOptions fit;
  unsigned threads = 1;  // across origins; each fit then runs single-threaded
};

// For each origin t with start < t < end: fit on step t-1 -> t, score t -> t+1.
inline RollingResult rolling_evaluation(const NetworkPanel& panel, const ModelSpec& spec, int start,
                                        int end, const RollingOptions& opt = {}) {
  spec.validate();
  const int step = panel.step;
  if (end < start + 2 * step) throw ContractError("insufficient horizon: need end >= start + 2 periods");
  if (!panel.has(start) || !panel.has(end))
    throw ContractError("evaluation range [" + std::to_string(start) + ", " +
                        std::to_string(end) + "] not within panel");
  std::vector<int> origins;
  for (int t = start + step; t + step <= end; t += step) origins.push_back(t);

  std::vector<RollingResult> parts(origins.size());
  FitOptions fo = opt.fit;
  if (opt.threads > 1) fo.threads = 1;
  parallel_for(origins.size(), opt.threads, [&](std::size_t k) {
    const int t = origins[k];
    RollingResult& part = parts[k];
    std::vector<TransitionData> tds{build_transition(panel, t, spec.use_predecessors)};
    FittedModel m = fit_transitions(tds, panel.covariates, spec, fo);
    for (const auto& sf : m.sides)
      if (sf.skipped)
        part.diagnostics.push_back("period " + std::to_string(t) + ": " + to_string(sf.side) +
                                   " fit skipped (" + sf.diagnostic + ")");
    if (!m.usable(Side::formation) && !m.usable(Side::persistence)) return;
    score_prediction(predict_transition(m, panel, t, spec.use_predecessors), part);
  });
  RollingResult out;
  for (auto& p : parts) {
    out.rows.insert(out.rows.end(), p.rows.begin(), p.rows.end());
    out.diagnostics.insert(out.diagnostics.end(), p.diagnostics.begin(), p.diagnostics.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Simulation

// Uniform in [0, 1) from the top 53 bits.
inline double unit_uniform(std::mt19937_64& g) { return double(g() >> 11) * 0x1p-53; }

// Replicate r draws its dyads from a generator seeded with (seed, period, r);
// the dyad index is the position in the stream.
inline std::mt19937_64 replicate_engine(std::uint64_t seed, int period, std::size_t replicate) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(period),
                    std::uint32_t(replicate), std::uint32_t(std::uint64_t(replicate) >> 32)};
  return std::mt19937_64(seq);
}

inline Network simulate_replicate(const PredictionSet& ps, std::uint64_t seed, std::size_t replicate) {
  auto g = replicate_engine(seed, ps.horizon, replicate);
  Network plus = ps.lagged;
  Network minus(ps.actors);
  for (const auto& d : ps.dyads) {
    if (std::isnan(d.probability))
      throw ContractError(std::string("no ") + to_string(d.side) + " model to simulate from");
    const bool on = unit_uniform(g) < d.probability;
    if (!on) continue;
    if (d.side == Side::formation) {
      plus.set_edge(d.i, d.j);
    } else {
      minus.set_edge(d.i, d.j);
    }
  }
  return reconstruct(ps.lagged, plus, minus);
}

inline std::vector<Network> simulate_networks(const PredictionSet& ps, std::size_t n_sims,
                                              std::uint64_t seed, unsigned threads = 1) {
  std::vector<Network> out(n_sims);
  parallel_for(n_sims, threads, [&](std::size_t r) { out[r] = simulate_replicate(ps, seed, r); });
  return out;
}

inline std::vector<Network> simulate_networks(const DyadScorer& model, const NetworkPanel& panel,
                                              int t, std::size_t n_sims, std::uint64_t seed,
                                              unsigned threads = 1, bool use_predecessors = false) {
  return simulate_networks(predict_transition(model, panel, t, use_predecessors), n_sims, seed,
                           threads);
}

// ---------------------------------------------------------------------------
// Goodness of fit

struct StatSummary {
  double observed = 0.0;
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
  double observed_quantile = 0.0;  // (#below + #equal / 2) / replicates
};

struct GofPeriod {
  int period = 0;
  std::size_t replicates = 0;
  GofStats observed;
  std::array<StatSummary, 6> stats;
};

struct GofReport {
  std::vector<GofPeriod> periods;
};

// Linear interpolation between order statistics.
inline double quantile(std::vector<double> v, double p) {
  if (v.empty()) throw ContractError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double h = (double(v.size()) - 1.0) * p;
  const auto lo = std::size_t(std::floor(h));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - double(lo)) * (v[hi] - v[lo]);
}

inline StatSummary summarize(const std::vector<double>& sample, double observed) {
  StatSummary s;
  s.observed = observed;
  s.min = *std::min_element(sample.begin(), sample.end());
  s.max = *std::max_element(sample.begin(), sample.end());
  s.q25 = quantile(sample, 0.25);
  s.median = quantile(sample, 0.5);
  s.q75 = quantile(sample, 0.75);
  double below = 0, equal = 0;
  for (double x : sample) {
    if (x < observed) below += 1;
    if (x == observed) equal += 1;
  }
  s.observed_quantile = (below + 0.5 * equal) / double(sample.size());
  return s;
}

// Statistics of replicate networks against the observed network of the same
// period, restricted to the replicates' actor set.
inline GofPeriod gof_period(int period, const std::vector<GofStats>& simulated, const GofStats& observed) {
  if (simulated.empty()) throw ContractError("no replicates for period " + std::to_string(period));
  GofPeriod gp;
  gp.period = period;
  gp.replicates = simulated.size();
  gp.observed = observed;
  const auto obs = observed.values();
  for (std::size_t k = 0; k < obs.size(); ++k) {
    std::vector<double> col(simulated.size());
    for (std::size_t r = 0; r < simulated.size(); ++r) col[r] = simulated[r].values()[k];
    gp.stats[k] = summarize(col, obs[k]);
  }
  return gp;
}

inline GofReport gof_compare(const std::map<int, std::vector<Network>>& simulated,
                             const NetworkPanel& observed) {
  GofReport rep;
  for (const auto& [t, nets] : simulated) {
    if (nets.empty()) throw ContractError("no replicates for period " + std::to_string(t));
    const Network obs = observed.at(t).restricted_to(nets.front().actors());
    std::vector<GofStats> sims;
    sims.reserve(nets.size());
    for (const auto& n : nets) sims.push_back(global_stats(n));
    rep.periods.push_back(gof_period(t, sims, global_stats(obs)));
  }
  return rep;
}

}  // namespace tvstergm

#endif
