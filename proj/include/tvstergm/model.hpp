#ifndef TVSTERGM_MODEL_HPP
#define TVSTERGM_MODEL_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "tvstergm/errors.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/netstats.hpp"
#include "tvstergm/parallel.hpp"
#include "tvstergm/pirls.hpp"
#include "tvstergm/splines.hpp"
#include "tvstergm/transition.hpp"

namespace tvstergm {

// ---------------------------------------------------------------------------
// Model specification

enum class Variant {
  ar_ergm,
  tergm,
  tergm_re,
  tergm_stability,
  tergm_stability_re,
  stergm,
  stergm_re
};

inline const std::vector<std::pair<Variant, const char*>>& variant_names() {
  static const std::vector<std::pair<Variant, const char*>> v{
      {Variant::ar_ergm, "ar_ergm"},
      {Variant::tergm, "tergm"},
      {Variant::tergm_re, "tergm_re"},
      {Variant::tergm_stability, "tergm_stability"},
      {Variant::tergm_stability_re, "tergm_stability_re"},
      {Variant::stergm, "stergm"},
      {Variant::stergm_re, "stergm_re"}};
  return v;
}

inline const char* to_string(Variant v) {
  for (const auto& [k, n] : variant_names())
    if (k == v) return n;
  return "?";
}

inline Variant variant_from_string(const std::string& s) {
  for (const auto& [k, n] : variant_names())
    if (s == n) return k;
  throw ContractError("unknown model variant '" + s + "'");
}

inline bool is_separable(Variant v) { return v == Variant::stergm || v == Variant::stergm_re; }

inline bool has_random_effects(Variant v) {
  return v == Variant::tergm_re || v == Variant::tergm_stability_re || v == Variant::stergm_re;
}

inline bool has_stability(Variant v) {
  return v == Variant::tergm_stability || v == Variant::tergm_stability_re;
}

enum class TermKind { constant, time_varying, random_sender, random_receiver };

inline const char* to_string(TermKind k) {
  switch (k) {
    case TermKind::constant: return "constant";
    case TermKind::time_varying: return "time_varying";
    case TermKind::random_sender: return "random_sender";
    case TermKind::random_receiver: return "random_receiver";
  }
  return "?";
}

inline TermKind term_kind_from_string(const std::string& s) {
  if (s == "constant") return TermKind::constant;
  if (s == "time_varying") return TermKind::time_varying;
  if (s == "random_sender") return TermKind::random_sender;
  if (s == "random_receiver") return TermKind::random_receiver;
  throw ContractError("unknown term kind '" + s + "'");
}

inline bool is_random(TermKind k) {
  return k == TermKind::random_sender || k == TermKind::random_receiver;
}

// Covariates a term may reference besides the dyad row fields: "lag" (lagged
// edge) and "intercept" (a time-varying intercept).
inline bool known_covariate(const std::string& name) {
  return name == "lag" || name == "intercept" || DyadCovariateRow::has(name);
}

struct Term {
  std::string covariate;  // ignored for random terms
  TermKind kind = TermKind::constant;

  std::string label() const {
    if (kind == TermKind::random_sender) return "re_sender";
    if (kind == TermKind::random_receiver) return "re_receiver";
    return covariate;
  }

  friend bool operator==(const Term& a, const Term& b) {
    return a.kind == b.kind && (is_random(a.kind) || a.covariate == b.covariate);
  }
};

struct BasisConfig {
  int dimension = 9;
  int degree = 2;
  int penalty_order = 1;
};

struct ModelSpec {
  Variant variant = Variant::stergm_re;
  std::vector<Term> terms;
  BasisConfig varying{65, 2, 1};
  BasisConfig random{9, 2, 1};
  bool include_intercept = true;
  bool use_predecessors = false;

  // Terms actually fitted: stability variants get a constant lag term.
  std::vector<Term> effective_terms() const {
    std::vector<Term> t = terms;
    if (has_stability(variant)) {
      bool has_lag = false;
      for (const auto& x : t) has_lag = has_lag || (!is_random(x.kind) && x.covariate == "lag");
      if (!has_lag) t.push_back({"lag", TermKind::constant});
    }
    return t;
  }

  void validate() const {
    std::set<std::string> labels;
    bool any_random = false, has_lag = false;
    for (const auto& t : terms) {
      if (!is_random(t.kind) && !known_covariate(t.covariate))
        throw ContractError("unknown covariate '" + t.covariate + "'");
      if (t.kind == TermKind::constant && t.covariate == "intercept")
        throw ContractError("use include_intercept for a constant intercept");
      if (!labels.insert(t.label()).second)
        throw ContractError("duplicate term '" + t.label() + "'");
      any_random = any_random || is_random(t.kind);
      has_lag = has_lag || (!is_random(t.kind) && t.covariate == "lag");
    }
    for (const auto* b : {&varying, &random})
      if (b->dimension < 1 || b->degree < 0 || b->penalty_order < 1)
        throw ContractError("invalid basis configuration");
    if (is_separable(variant) && has_lag)
      throw ContractError("separable variants cannot use the lagged edge as a regressor");
    if ((variant == Variant::tergm || variant == Variant::tergm_re) && has_lag)
      throw ContractError("variant " + std::string(to_string(variant)) +
                          " has no stability term; use a stability variant");
    if (any_random && !has_random_effects(variant))
      throw ContractError("variant " + std::string(to_string(variant)) +
                          " does not allow random-smooth terms");
    if (!any_random && has_random_effects(variant))
      throw ContractError("variant " + std::string(to_string(variant)) +
                          " requires at least one random-smooth term");
    if (variant == Variant::ar_ergm) {
      if (!include_intercept || terms.size() != 1 || terms[0].covariate != "lag" ||
          terms[0].kind != TermKind::constant)
        throw ContractError("ar_ergm takes exactly an intercept and a constant lag term");
    }
  }

  // The full time-varying specification with both random smooths where the
  // variant allows them.
  static ModelSpec defaults(Variant v) {
    ModelSpec s;
    s.variant = v;
    if (v == Variant::ar_ergm) {
      s.terms = {{"lag", TermKind::constant}};
      return s;
    }
    for (const auto& name : DyadCovariateRow::names()) s.terms.push_back({name, TermKind::time_varying});
    if (has_random_effects(v)) {
      s.terms.push_back({"", TermKind::random_sender});
      s.terms.push_back({"", TermKind::random_receiver});
    }
    return s;
  }
};

// ---------------------------------------------------------------------------
// Design assembly

// Rows of one side stacked over transitions.
struct StackedRows {
  std::vector<double> y;
  std::vector<double> time;
  std::vector<std::string> sender;
  std::vector<std::string> receiver;
  std::map<std::string, std::vector<double>> values;  // per covariate
  std::vector<std::string> actors;                    // sorted union of common actors
  std::vector<std::pair<double, double>> spans;       // per actor: first/last period seen

  std::size_t size() const { return y.size(); }
};

inline double feature_value(const DyadFeatures& f, const std::string& covariate) {
  if (covariate == "lag") return f.lag;
  if (covariate == "intercept") return 1.0;
  return f.row.value(covariate);
}

inline StackedRows stack_rows(const std::vector<TransitionData>& transitions,
                              const CovariateTables& cov, const std::vector<Term>& terms, Side side,
                              unsigned threads = 1) {
  std::set<std::string> covs;
  for (const auto& t : terms)
    if (!is_random(t.kind)) covs.insert(t.covariate);

  struct Part {
    std::vector<double> y, time;
    std::vector<std::string> sender, receiver;
    std::map<std::string, std::vector<double>> values;
  };
  std::vector<Part> parts(transitions.size());
  parallel_for(transitions.size(), threads, [&](std::size_t k) {
    const auto& td = transitions[k];
    DyadRowBuilder rb(td, cov);
    Part& p = parts[k];
    auto add = [&](std::size_t i, std::size_t j, bool response) {
      DyadFeatures f = rb.features(i, j);
      p.y.push_back(response ? 1.0 : 0.0);
      p.time.push_back(double(td.period));
      p.sender.push_back(f.sender);
      p.receiver.push_back(f.receiver);
      for (const auto& c : covs) p.values[c].push_back(feature_value(f, c));
    };
    if (side == Side::pooled) {
      for (std::size_t i = 0; i < td.size(); ++i)
        for (std::size_t j = 0; j < td.size(); ++j)
          if (i != j) add(i, j, td.current.has_edge(i, j));
    } else {
      for (const auto& d : td.rows(side)) add(d.i, d.j, d.response);
    }
  });

  StackedRows out;
  std::map<std::string, std::pair<double, double>> spans;
  for (const auto& td : transitions)
    for (const auto& a : td.actors) {
      auto [it, fresh] = spans.emplace(a, std::make_pair(double(td.period), double(td.period)));
      if (!fresh) {
        it->second.first = std::min(it->second.first, double(td.period));
        it->second.second = std::max(it->second.second, double(td.period));
      }
    }
  for (const auto& [a, s] : spans) {
    out.actors.push_back(a);
    out.spans.push_back(s);
  }
  for (const auto& c : covs) out.values[c];
  for (auto& p : parts) {
    out.y.insert(out.y.end(), p.y.begin(), p.y.end());
    out.time.insert(out.time.end(), p.time.begin(), p.time.end());
    out.sender.insert(out.sender.end(), p.sender.begin(), p.sender.end());
    out.receiver.insert(out.receiver.end(), p.receiver.begin(), p.receiver.end());
    for (const auto& c : covs)
      out.values[c].insert(out.values[c].end(), p.values[c].begin(), p.values[c].end());
  }
  return out;
}

// Basis over [lower, upper] whose dimension is capped by the number of distinct
// periods; a single period collapses curves to constants.
inline SplineBasis capped_basis(const BasisConfig& cfg, double lower, double upper, int n_periods) {
  int dim = std::max(1, std::min(cfg.dimension, n_periods));
  int degree = std::min(cfg.degree, dim - 1);
  if (upper <= lower) dim = 1, degree = 0;
  return SplineBasis::make(lower, upper, dim, degree, cfg.penalty_order);
}

struct Design {
  Side side = Side::formation;
  Eigen::VectorXd y;
  std::vector<DesignBlock> blocks;
  double time_lower = 0.0;
  double time_upper = 0.0;

  std::size_t rows() const { return std::size_t(y.size()); }
};

inline Design build_design(const StackedRows& rows, const ModelSpec& spec, Side side,
                           double lower, double upper, int n_periods) {
  Design d;
  d.side = side;
  d.time_lower = lower;
  d.time_upper = upper;
  d.y = Eigen::Map<const Eigen::VectorXd>(rows.y.data(), Eigen::Index(rows.y.size()));
  const std::size_t n = rows.size();
  if (spec.include_intercept) d.blocks.push_back(intercept_block(n));
  const SplineBasis vb = capped_basis(spec.varying, lower, upper, n_periods);
  const SplineBasis rb = capped_basis(spec.random, lower, upper, n_periods);
  for (const auto& t : spec.effective_terms()) {
    switch (t.kind) {
      case TermKind::constant:
        d.blocks.push_back(constant_block(rows.values.at(t.covariate), t.label()));
        break;
      case TermKind::time_varying: {
        auto b = varying_coeff_block(rows.values.at(t.covariate), rows.time, vb, t.label());
        b.covariate = t.covariate;
        // A time smooth of the constant 1 is confounded with the intercept.
        if (t.covariate == "intercept" && spec.include_intercept && vb.dimension > 1)
          b = apply_centering_constraint(b);
        d.blocks.push_back(std::move(b));
        break;
      }
      case TermKind::random_sender:
      case TermKind::random_receiver: {
        const auto& ids = t.kind == TermKind::random_sender ? rows.sender : rows.receiver;
        auto b = random_smooth_block(ids, rows.time, rb, t.label(), rows.actors, rows.spans);
        b.covariate = t.kind == TermKind::random_sender ? "sender" : "receiver";
        d.blocks.push_back(std::move(b));
        break;
      }
    }
  }
  return d;
}

// Response and blocks for one side over the given transitions.
inline Design assemble_design(const std::vector<TransitionData>& transitions,
                              const CovariateTables& cov, const ModelSpec& spec, Side side,
                              unsigned threads = 1) {
  spec.validate();
  if (transitions.empty()) throw ContractError("no transitions to assemble");
  if (side == Side::pooled && is_separable(spec.variant))
    throw ContractError("separable variants model formation and persistence sides");
  if (side != Side::pooled && !is_separable(spec.variant))
    throw ContractError("variant " + std::string(to_string(spec.variant)) +
                        " models the pooled side");
  auto rows = stack_rows(transitions, cov, spec.effective_terms(), side, threads);
  std::set<int> periods;
  for (const auto& td : transitions) periods.insert(td.period);
  return build_design(rows, spec, side, double(*periods.begin()), double(*periods.rbegin()),
                      int(periods.size()));
}

// ---------------------------------------------------------------------------
// Fitted models

class DyadScorer {
 public:
  virtual ~DyadScorer() = default;
  virtual double logit(Side side, const DyadFeatures& f) const = 0;
  virtual bool available(Side) const { return true; }

  double probability(Side side, const DyadFeatures& f) const {
    return detail::expit(logit(side, f));
  }
};

struct SideFit {
  Side side = Side::formation;
  bool skipped = false;
  std::string diagnostic;
  std::vector<DesignBlock> blocks;  // design columns dropped after fitting
  std::vector<int> offsets;
  FitResult fit;
  double time_lower = 0.0;
  double time_upper = 0.0;

  // A time-varying intercept shares its label with the constant intercept;
  // `want` picks between them.
  enum class Want { any, curve, scalar };

  static bool is_curve(BlockKind k) { return k == BlockKind::varying || k == BlockKind::random_smooth; }

  const DesignBlock& block(const std::string& label, int* offset = nullptr, Want want = Want::any) const {
    for (std::size_t k = 0; k < blocks.size(); ++k)
      if (blocks[k].label == label &&
          (want == Want::any || is_curve(blocks[k].kind) == (want == Want::curve))) {
        if (offset) *offset = offsets[k];
        return blocks[k];
      }
    throw ContractError("unknown term '" + label + "' on side " + to_string(side));
  }

  bool has_block(const std::string& label, Want want = Want::any) const {
    for (const auto& b : blocks)
      if (b.label == label && (want == Want::any || is_curve(b.kind) == (want == Want::curve))) return true;
    return false;
  }
};

struct FitOptions {
  bool select = true;                          // REML selection; otherwise fixed
  std::map<std::string, double> fixed;         // per penalty label, see lambdas_for
  std::optional<double> fixed_default;         // for labels missing from `fixed`
  LambdaSearchOptions search;
  PirlsOptions pirls;
  unsigned threads = 1;
};

struct CurveValues {
  std::vector<double> grid;
  std::vector<double> value;
  std::vector<double> se;
};

class FittedModel : public DyadScorer {
 public:
  ModelSpec spec;
  std::vector<SideFit> sides;
  std::vector<int> periods;  // response periods used
  std::map<std::string, std::string> provenance;

  const SideFit& side_fit(Side s) const {
    if (!is_separable(spec.variant)) s = Side::pooled;
    for (const auto& f : sides)
      if (f.side == s) return f;
    throw ContractError(std::string("no fit for side ") + to_string(s));
  }

  bool usable(Side s) const {
    try {
      return !side_fit(s).skipped;
    } catch (const ContractError&) {
      return false;
    }
  }

  bool available(Side s) const override { return usable(s); }

  double logit(Side s, const DyadFeatures& f) const override {
    const SideFit& sf = side_fit(s);
    if (sf.skipped) throw ContractError(std::string("side ") + to_string(s) + " was not fitted");
    double eta = 0.0;
    std::vector<std::pair<int, double>> entries;
    for (std::size_t k = 0; k < sf.blocks.size(); ++k) {
      const auto& b = sf.blocks[k];
      double x = 1.0;
      int level = 0;
      if (b.kind == BlockKind::constant || b.kind == BlockKind::varying) {
        x = feature_value(f, b.covariate);
      } else if (b.kind == BlockKind::random_smooth) {
        auto l = b.level_index(b.covariate == "sender" ? f.sender : f.receiver);
        level = l ? *l : -1;
      }
      block_row(b, x, double(f.period), level, entries);
      for (const auto& [c, v] : entries) eta += v * sf.fit.beta(sf.offsets[k] + c);
    }
    return eta;
  }

  double loglik() const {
    double l = 0.0;
    for (const auto& s : sides)
      if (!s.skipped) l += s.fit.loglik;
    return l;
  }

  // Coefficient curve (time-varying term) or random curve of `actor`.
  CurveValues curve(Side s, const std::string& label, const std::vector<double>& grid,
                    const std::string& actor = "") const {
    const SideFit& sf = side_fit(s);
    if (sf.skipped) throw ContractError(std::string("side ") + to_string(s) + " was not fitted");
    int off = 0;
    sf.block(label);  // unknown terms
    if (!sf.has_block(label, SideFit::Want::curve)) throw ContractError("term '" + label + "' is not a curve");
    const DesignBlock& b = sf.block(label, &off, SideFit::Want::curve);
    int level = 0;
    if (b.kind == BlockKind::random_smooth) {
      auto l = b.level_index(actor);
      if (!l) throw ContractError("unknown actor '" + actor + "' for term '" + label + "'");
      level = *l;
    } else if (!actor.empty()) {
      throw ContractError("term '" + label + "' has no actor curves");
    }
    CurveValues out;
    out.grid = grid;
    const int p = b.cols();
    const bool cov = sf.fit.covariance.size() > 0;
    std::vector<std::pair<int, double>> entries;
    for (double t : grid) {
      block_row(b, 1.0, t, level, entries);
      double v = 0.0;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(p);
      for (const auto& [c, x] : entries) {
        v += x * sf.fit.beta(off + c);
        row(c) = x;
      }
      out.value.push_back(v);
      if (cov) {
        double var = row.dot(sf.fit.covariance.block(off, off, p, p) * row);
        out.se.push_back(std::sqrt(std::max(0.0, var)));
      } else {
        out.se.push_back(std::nan(""));
      }
    }
    return out;
  }

  double constant(Side s, const std::string& label) const {
    const SideFit& sf = side_fit(s);
    int off = 0;
    sf.block(label);
    if (!sf.has_block(label, SideFit::Want::scalar)) throw ContractError("term '" + label + "' is not constant");
    const DesignBlock& b = sf.block(label, &off, SideFit::Want::scalar);
    return sf.fit.beta(off);
  }
};

inline CurveValues coefficient_curve(const FittedModel& m, Side s, const std::string& label,
                                     const std::vector<double>& grid) {
  return m.curve(s, label, grid);
}

// Fixed smoothing parameters by "<side>/<label>", then "<label>", then the default.
inline std::vector<double> lambdas_for(const PenalizedProblem& pr, const FitOptions& opt, Side side) {
  std::vector<double> out;
  for (const auto& label : pr.lambda_labels) {
    auto it = opt.fixed.find(std::string(to_string(side)) + "/" + label);
    if (it == opt.fixed.end()) it = opt.fixed.find(label);
    if (it != opt.fixed.end()) {
      out.push_back(it->second);
    } else if (opt.fixed_default) {
      out.push_back(*opt.fixed_default);
    } else {
      throw ContractError("no fixed smoothing parameter for '" + label + "'");
    }
  }
  return out;
}

inline SideFit fit_design(Design&& d, const FitOptions& opt) {
  SideFit sf;
  sf.side = d.side;
  sf.time_lower = d.time_lower;
  sf.time_upper = d.time_upper;
  int off = 0;
  for (const auto& b : d.blocks) {
    sf.offsets.push_back(off);
    off += b.cols();
  }
  const double positives = d.y.sum();
  if (d.rows() == 0) {
    sf.skipped = true;
    sf.diagnostic = "no rows";
  } else if (positives == 0.0 || positives == double(d.rows())) {
    sf.skipped = true;
    sf.diagnostic = "response has a single class";
  } else if (std::size_t(off) >= d.rows()) {
    sf.skipped = true;
    sf.diagnostic = "fewer rows than columns";
  }
  if (!sf.skipped) {
    PenalizedProblem pr = make_problem(d.y, d.blocks);
    std::vector<double> lambdas;
    if (opt.select) {
      auto so = opt.search;
      so.threads = opt.threads;
      so.pirls = opt.pirls;
      std::vector<double> init;
      if (!opt.fixed.empty() || opt.fixed_default) {
        FitOptions tmp = opt;
        if (!tmp.fixed_default) tmp.fixed_default = 1.0;
        init = lambdas_for(pr, tmp, d.side);
      }
      lambdas = select_lambdas(pr, so, init).lambdas;
    } else {
      lambdas = lambdas_for(pr, opt, d.side);
    }
    auto po = opt.pirls;
    po.covariance = true;
    sf.fit = pirls_fit(pr, lambdas, po);
  }
  for (auto& b : d.blocks) b.columns = SparseRowMatrix();
  sf.blocks = std::move(d.blocks);
  return sf;
}

inline FittedModel fit_transitions(const std::vector<TransitionData>& transitions,
                                   const CovariateTables& cov, const ModelSpec& spec,
                                   const FitOptions& opt = {}) {
  spec.validate();
  if (transitions.empty()) throw ContractError("no transitions to fit");
  FittedModel m;
  m.spec = spec;
  for (const auto& td : transitions) m.periods.push_back(td.period);
  std::vector<Side> sides = is_separable(spec.variant)
                                ? std::vector<Side>{Side::formation, Side::persistence}
                                : std::vector<Side>{Side::pooled};
  for (Side s : sides) m.sides.push_back(fit_design(assemble_design(transitions, cov, spec, s, opt.threads), opt));
  return m;
}

inline std::vector<TransitionData> build_transitions(const NetworkPanel& panel,
                                                     const std::vector<int>& periods,
                                                     bool use_predecessors, unsigned threads = 1) {
  std::vector<TransitionData> out(periods.size());
  parallel_for(periods.size(), threads, [&](std::size_t k) {
    out[k] = build_transition(panel, periods[k], use_predecessors);
  });
  return out;
}

inline FittedModel fit_model(const NetworkPanel& panel, const ModelSpec& spec,
                             const FitOptions& opt = {}) {
  if (panel.periods.size() < 3) throw ContractError("fitting needs a panel with at least 3 periods");
  std::vector<int> ts(panel.periods.begin() + 1, panel.periods.end());
  return fit_transitions(build_transitions(panel, ts, spec.use_predecessors, opt.threads),
                         panel.covariates, spec, opt);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ModelSpec& s) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : s.terms) {
    nlohmann::json j{{"kind", to_string(t.kind)}};
    if (!is_random(t.kind)) j["covariate"] = t.covariate;
    terms.push_back(j);
  }
  auto basis = [](const BasisConfig& b) {
    return nlohmann::json{{"dimension", b.dimension}, {"degree", b.degree},
                          {"penalty_order", b.penalty_order}};
  };
  return {{"variant", to_string(s.variant)},
          {"terms", terms},
          {"varying_basis", basis(s.varying)},
          {"random_basis", basis(s.random)},
          {"include_intercept", s.include_intercept},
          {"use_predecessors", s.use_predecessors}};
}

inline ModelSpec spec_from_json(const nlohmann::json& j) {
  auto known = [](const nlohmann::json& o, std::initializer_list<const char*> keys, const char* what) {
    if (!o.is_object()) throw ContractError(std::string(what) + " must be an object");
    for (const auto& [k, v] : o.items())
      if (std::none_of(keys.begin(), keys.end(), [&](const char* x) { return k == x; }))
        throw ContractError(std::string("unknown ") + what + " field '" + k + "'");
  };
  known(j, {"variant", "terms", "varying_basis", "random_basis", "include_intercept", "use_predecessors"}, "model");
  ModelSpec s;
  s.variant = variant_from_string(j.value("variant", std::string("stergm_re")));
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      known(t, {"covariate", "kind"}, "term");
      s.terms.push_back({t.value("covariate", std::string()),
                         term_kind_from_string(t.at("kind").get<std::string>())});
    }
  } else {
    s.terms = ModelSpec::defaults(s.variant).terms;
  }
  auto basis = [&](const nlohmann::json& b, BasisConfig d) {
    known(b, {"dimension", "degree", "penalty_order"}, "basis");
    d.dimension = b.value("dimension", d.dimension);
    d.degree = b.value("degree", d.degree);
    d.penalty_order = b.value("penalty_order", d.penalty_order);
    return d;
  };
  if (j.contains("varying_basis")) s.varying = basis(j.at("varying_basis"), s.varying);
  if (j.contains("random_basis")) s.random = basis(j.at("random_basis"), s.random);
  s.include_intercept = j.value("include_intercept", true);
  s.use_predecessors = j.value("use_predecessors", false);
  return s;
}

namespace detail {

inline nlohmann::json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> v;
  v.reserve(std::size_t(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) v.push_back(m(r, c));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}};
}

inline Eigen::MatrixXd matrix_from_json(const nlohmann::json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto v = j.at("data").get<std::vector<double>>();
  if (Eigen::Index(v.size()) != rows * cols) throw InputError("matrix size mismatch in model file");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[std::size_t(r * cols + c)];
  return m;
}

inline BlockKind block_kind_from_string(const std::string& s) {
  for (auto k : {BlockKind::intercept, BlockKind::constant, BlockKind::varying, BlockKind::random_smooth})
    if (s == to_string(k)) return k;
  throw InputError("unknown block kind '" + s + "'");
}

}  // namespace detail

inline nlohmann::json to_json(const FittedModel& m) {
  nlohmann::json sides = nlohmann::json::array();
  for (const auto& sf : m.sides) {
    nlohmann::json blocks = nlohmann::json::array();
    for (std::size_t k = 0; k < sf.blocks.size(); ++k) {
      const auto& b = sf.blocks[k];
      nlohmann::json jb{{"label", b.label},
                        {"kind", to_string(b.kind)},
                        {"covariate", b.covariate},
                        {"offset", sf.offsets[k]},
                        {"cols", b.cols()},
                        {"repeat", b.repeat},
                        {"penalty_names", b.penalty_names}};
      if (b.basis)
        jb["basis"] = {{"lower", b.basis->lower},         {"upper", b.basis->upper},
                       {"dimension", b.basis->dimension}, {"degree", b.basis->degree},
                       {"penalty_order", b.basis->penalty_order}};
      if (b.constrained()) jb["constraint"] = detail::matrix_json(b.constraint);
      if (!b.levels.empty()) {
        jb["levels"] = b.levels;
        nlohmann::json spans = nlohmann::json::array();
        for (const auto& [lo, hi] : b.level_spans) spans.push_back({lo, hi});
        jb["level_spans"] = spans;
      }
      blocks.push_back(jb);
    }
    nlohmann::json js{{"side", to_string(sf.side)},
                      {"skipped", sf.skipped},
                      {"diagnostic", sf.diagnostic},
                      {"time_range", {sf.time_lower, sf.time_upper}},
                      {"blocks", blocks}};
    if (!sf.skipped) {
      const auto& f = sf.fit;
      nlohmann::json lam = nlohmann::json::array();
      for (std::size_t k = 0; k < f.lambdas.size(); ++k)
        lam.push_back({{"label", f.lambda_labels[k]},
                       {"lambda", f.lambdas[k]},
                       {"sigma2", f.lambdas[k] > 0 ? 1.0 / f.lambdas[k] : -1.0}});
      js["smoothing"] = lam;
      js["coefficients"] = std::vector<double>(f.beta.data(), f.beta.data() + f.beta.size());
      js["covariance"] = detail::matrix_json(f.covariance);
      js["loglik"] = f.loglik;
      js["deviance"] = f.deviance;
      js["penalized_deviance"] = f.penalized_deviance;
      js["reml"] = f.reml;
      js["edf"] = f.edf;
      js["deviance_trace"] = f.trace;
      js["iterations"] = f.iterations;
      js["converged"] = f.converged;
      js["rows"] = f.n_rows;
      js["warnings"] = f.warnings;
    }
    sides.push_back(js);
  }
  return {{"format", "tvstergm-fit-1"},
          {"spec", to_json(m.spec)},
          {"periods", m.periods},
          {"provenance", m.provenance},
          {"sides", sides}};
}

inline FittedModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "tvstergm-fit-1") throw InputError("not a fit file");
  FittedModel m;
  m.spec = spec_from_json(j.at("spec"));
  m.periods = j.at("periods").get<std::vector<int>>();
  m.provenance = j.value("provenance", std::map<std::string, std::string>{});
  for (const auto& js : j.at("sides")) {
    SideFit sf;
    sf.side = side_from_string(js.at("side").get<std::string>());
    sf.skipped = js.at("skipped").get<bool>();
    sf.diagnostic = js.value("diagnostic", std::string());
    sf.time_lower = js.at("time_range")[0].get<double>();
    sf.time_upper = js.at("time_range")[1].get<double>();
    for (const auto& jb : js.at("blocks")) {
      DesignBlock b;
      b.label = jb.at("label").get<std::string>();
      b.kind = detail::block_kind_from_string(jb.at("kind").get<std::string>());
      b.covariate = jb.at("covariate").get<std::string>();
      b.repeat = jb.at("repeat").get<int>();
      b.penalty_names = jb.at("penalty_names").get<std::vector<std::string>>();
      if (jb.contains("basis")) {
        const auto& jbs = jb.at("basis");
        b.basis = SplineBasis::make(jbs.at("lower").get<double>(), jbs.at("upper").get<double>(),
                                    jbs.at("dimension").get<int>(), jbs.at("degree").get<int>(),
                                    jbs.at("penalty_order").get<int>());
      }
      if (jb.contains("constraint")) b.constraint = detail::matrix_from_json(jb.at("constraint"));
      if (jb.contains("levels")) {
        b.levels = jb.at("levels").get<std::vector<std::string>>();
        for (const auto& s : jb.at("level_spans"))
          b.level_spans.emplace_back(s[0].get<double>(), s[1].get<double>());
      }
      if (b.cols() != jb.at("cols").get<int>()) throw InputError("block size mismatch in fit file");
      sf.offsets.push_back(jb.at("offset").get<int>());
      sf.blocks.push_back(std::move(b));
    }
    if (!sf.skipped) {
      auto& f = sf.fit;
      auto beta = js.at("coefficients").get<std::vector<double>>();
      f.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), Eigen::Index(beta.size()));
      for (const auto& l : js.at("smoothing")) {
        f.lambda_labels.push_back(l.at("label").get<std::string>());
        f.lambdas.push_back(l.at("lambda").get<double>());
      }
      f.covariance = detail::matrix_from_json(js.at("covariance"));
      f.loglik = js.at("loglik").get<double>();
      f.deviance = js.at("deviance").get<double>();
      f.penalized_deviance = js.at("penalized_deviance").get<double>();
      f.reml = js.at("reml").get<double>();
      f.edf = js.at("edf").get<double>();
      f.trace = js.at("deviance_trace").get<std::vector<double>>();
      f.iterations = js.at("iterations").get<int>();
      f.converged = js.at("converged").get<bool>();
      f.n_rows = js.at("rows").get<std::size_t>();
      f.warnings = js.at("warnings").get<std::vector<std::string>>();
    }
    m.sides.push_back(std::move(sf));
  }
  return m;
}

}  // namespace tvstergm

#endif
