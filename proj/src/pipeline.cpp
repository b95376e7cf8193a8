#include "tvstergm/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <Eigen/Core>
#include <openssl/evp.h>

#include "tvstergm/csv.hpp"
#include "tvstergm/evalsim.hpp"
#include "tvstergm/fpca.hpp"
#include "tvstergm/netpanel.hpp"
#include "tvstergm/svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tvstergm::pipeline {

// ---------------------------------------------------------------------------
// Config

void RunConfig::validate() const {
  spec.validate();
  if (threshold < 0) throw ContractError("threshold must be >= 0");
  if (window < 1) throw ContractError("window width must be >= 1");
  if (n_sims < 1) throw ContractError("n_sims must be >= 1");
  if (fpca.components < 1) throw ContractError("fpca components must be >= 1");
  if (fpca.grid_points < 2) throw ContractError("fpca grid needs at least 2 points");
  if (!(fpca.multiple > 0)) throw ContractError("perturbation multiple must be positive");
  for (double t : robustness.thresholds)
    if (t < 0) throw ContractError("robustness thresholds must be >= 0");
  for (int w : robustness.windows)
    if (w < 1) throw ContractError("robustness windows must be >= 1");
  if (!select_lambdas)
    for (const auto& [k, v] : fixed_lambdas)
      if (!(v >= 0)) throw ContractError("fixed smoothing parameter '" + k + "' must be >= 0");
}

namespace {

std::string resolve(const std::string& p, const std::string& base) {
  if (p.empty() || base.empty() || fs::path(p).is_absolute()) return p;
  return (fs::path(base) / p).lexically_normal().string();
}

}  // namespace

RunConfig config_from_json(const json& j, const std::string& base_dir) {
  static const std::set<std::string> known{"inputs", "threshold", "window", "model", "lambda",
                                           "evaluation", "n_sims", "seed", "out_dir", "fpca",
                                           "robustness", "synth"};
  for (const auto& [k, _] : j.items())
    if (!known.count(k)) throw ContractError("unknown config field '" + k + "'");
  RunConfig c;
  if (j.contains("inputs")) {
    const auto& in = j.at("inputs");
    c.edges = resolve(in.value("edges", std::string()), base_dir);
    c.monadic = resolve(in.value("monadic", std::string()), base_dir);
    c.dyadic = resolve(in.value("dyadic", std::string()), base_dir);
    c.registry = resolve(in.value("registry", std::string()), base_dir);
  }
  c.threshold = j.value("threshold", c.threshold);
  c.window = j.value("window", c.window);
  if (j.contains("model")) c.spec = spec_from_json(j.at("model"));
  if (j.contains("lambda")) {
    const auto& l = j.at("lambda");
    if (l.is_string()) {
      if (l.get<std::string>() != "select") throw ContractError("lambda must be \"select\", a number or a map");
    } else if (l.is_number()) {
      c.select_lambdas = false;
      c.fixed_lambda_default = l.get<double>();
    } else if (l.is_object()) {
      c.select_lambdas = false;
      for (const auto& [k, v] : l.items()) c.fixed_lambdas[k] = v.get<double>();
    } else {
      throw ContractError("lambda must be \"select\", a number or a map");
    }
  }
  if (j.contains("evaluation")) {
    const auto& e = j.at("evaluation");
    if (e.contains("start") && !e.at("start").is_null()) c.eval_start = e.at("start").get<int>();
    if (e.contains("end") && !e.at("end").is_null()) c.eval_end = e.at("end").get<int>();
  }
  c.n_sims = j.value("n_sims", c.n_sims);
  c.seed = j.value("seed", c.seed);
  c.out_dir = resolve(j.value("out_dir", c.out_dir), base_dir);
  if (j.contains("fpca")) {
    const auto& f = j.at("fpca");
    c.fpca.components = f.value("components", c.fpca.components);
    c.fpca.grid_points = f.value("grid_points", c.fpca.grid_points);
    c.fpca.multiple = f.value("multiple", c.fpca.multiple);
    c.fpca.center = f.value("center", c.fpca.center);
  }
  if (j.contains("robustness")) {
    const auto& r = j.at("robustness");
    c.robustness.thresholds = r.value("thresholds", c.robustness.thresholds);
    c.robustness.windows = r.value("windows", c.robustness.windows);
  }
  if (j.contains("synth")) {
    const auto& s = j.at("synth");
    c.synth.actors = s.value("actors", c.synth.actors);
    c.synth.periods = s.value("periods", c.synth.periods);
    c.synth.first_period = s.value("first_period", c.synth.first_period);
    c.synth.seed = s.value("seed", c.synth.seed);
    c.synth.late_entrants = s.value("late_entrants", c.synth.late_entrants);
    c.synth.early_exits = s.value("early_exits", c.synth.early_exits);
    c.synth.missing_rate = s.value("missing_rate", c.synth.missing_rate);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw InputError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return config_from_json(j, fs::path(path).parent_path().string());
}

json config_to_json(const RunConfig& c) {
  json lambda;
  if (c.select_lambdas) {
    lambda = "select";
  } else if (!c.fixed_lambdas.empty()) {
    lambda = c.fixed_lambdas;
  } else {
    lambda = c.fixed_lambda_default.value_or(1.0);
  }
  json eval = json::object();
  eval["start"] = c.eval_start ? json(*c.eval_start) : json(nullptr);
  eval["end"] = c.eval_end ? json(*c.eval_end) : json(nullptr);
  return {{"inputs", {{"edges", c.edges}, {"monadic", c.monadic}, {"dyadic", c.dyadic}, {"registry", c.registry}}},
          {"threshold", c.threshold},
          {"window", c.window},
          {"model", to_json(c.spec)},
          {"lambda", lambda},
          {"evaluation", eval},
          {"n_sims", c.n_sims},
          {"seed", c.seed},
          {"fpca",
           {{"components", c.fpca.components},
            {"grid_points", c.fpca.grid_points},
            {"multiple", c.fpca.multiple},
            {"center", c.fpca.center}}},
          {"robustness", {{"thresholds", c.robustness.thresholds}, {"windows", c.robustness.windows}}},
          {"synth",
           {{"actors", c.synth.actors},
            {"periods", c.synth.periods},
            {"first_period", c.synth.first_period},
            {"seed", c.synth.seed},
            {"late_entrants", c.synth.late_entrants},
            {"early_exits", c.synth.early_exits},
            {"missing_rate", c.synth.missing_rate}}}};
}

// ---------------------------------------------------------------------------
// Hashing

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw NumericalError("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned k = 0; k < len; ++k) {
    std::snprintf(buf, sizeof buf, "%02x", md[k]);
    hex += buf;
  }
  return hex;
}

std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return sha256_hex(ss.str());
}

namespace {

// ---------------------------------------------------------------------------
// Run context

class Context {
 public:
  Context(const RunConfig& c, const RunOptions& o, std::string sub)
      : cfg(c), opt(o), subcommand(std::move(sub)), dir(c.out_dir) {
    fs::create_directories(dir);
  }

  std::string path(const std::string& name) const { return (fs::path(dir) / name).string(); }

  // Registers an output written by this run.
  void wrote(const std::string& name) { written_.insert(name); }

  void note(const std::string& msg) const {
    if (opt.log) *opt.log << "note: " << msg << '\n';
  }

  std::map<std::string, std::string> input_hashes() const {
    std::map<std::string, std::string> h;
    for (const auto& [role, p] : inputs())
      if (!p.empty()) h[role] = sha256_file(p);
    return h;
  }

  std::string config_hash() const { return sha256_hex(config_to_json(cfg).dump()); }

  std::map<std::string, std::string> inputs() const {
    return {{"edges", cfg.edges}, {"monadic", cfg.monadic}, {"dyadic", cfg.dyadic}, {"registry", cfg.registry}};
  }

  void finish() {
    {
      std::ofstream f(path("run_config.json"), std::ios::binary);
      f << config_to_json(cfg).dump(2) << '\n';
    }
    wrote("run_config.json");
    json manifest;
    const std::string mpath = path("manifest.json");
    if (fs::exists(mpath)) {
      std::ifstream in(mpath, std::ios::binary);
      try {
        manifest = json::parse(in);
      } catch (const json::exception&) {
        manifest = json::object();
      }
    }
    manifest["tool"] = "tvstergm";
    manifest["version"] = version;
    manifest["libraries"] = {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                            std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                            std::to_string(EIGEN_MINOR_VERSION)},
                             {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                                   std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    manifest["config_sha256"] = config_hash();
    json in = json::object();
    for (const auto& [role, p] : inputs())
      if (!p.empty() && subcommand != "synth") in[role] = {{"path", p}, {"sha256", sha256_file(p)}};
    if (subcommand != "synth") manifest["inputs"] = in;
    if (!manifest.contains("outputs")) manifest["outputs"] = json::object();
    for (const auto& name : written_)
      manifest["outputs"][name] = {{"sha256", sha256_file(path(name))}, {"subcommand", subcommand}};
    std::ofstream f(mpath, std::ios::binary);
    f << manifest.dump(2) << '\n';
  }

  const RunConfig& cfg;
  const RunOptions& opt;
  std::string subcommand;
  std::string dir;

 private:
  std::set<std::string> written_;
};

std::string fit_path(const Context& ctx) {
  return ctx.opt.fit_path.empty() ? ctx.path("fit.json") : ctx.opt.fit_path;
}

void require_inputs(const RunConfig& c) {
  if (c.edges.empty() || c.monadic.empty() || c.dyadic.empty())
    throw ContractError("config needs edges, monadic and dyadic input paths");
}

PanelInputs load_inputs(const RunConfig& c) {
  require_inputs(c);
  return load_panel_inputs(c.edges, c.monadic, c.dyadic, c.registry);
}

NetworkPanel load_panel(const RunConfig& c) {
  return build_panel(load_inputs(c), {c.threshold, c.window});
}

FitOptions fit_options(const RunConfig& c, unsigned threads) {
  FitOptions fo;
  fo.select = c.select_lambdas;
  fo.fixed = c.fixed_lambdas;
  fo.fixed_default = c.fixed_lambda_default;
  fo.threads = threads;
  return fo;
}

FittedModel load_fit(const Context& ctx) {
  const std::string p = fit_path(ctx);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InputError("cannot read fit '" + p + "'; run the fit subcommand first");
  try {
    return model_from_json(json::parse(in));
  } catch (const json::exception& e) {
    throw InputError("fit file '" + p + "' is malformed: " + e.what());
  }
}

std::vector<Side> fitted_sides(const FittedModel& m) {
  std::vector<Side> s;
  for (const auto& sf : m.sides)
    if (!sf.skipped) s.push_back(sf.side);
  return s;
}

std::vector<double> period_grid(const FittedModel& m) {
  return std::vector<double>(m.periods.begin(), m.periods.end());
}

std::string file_stem(std::string s) {
  for (auto& ch : s)
    if (!std::isalnum(static_cast<unsigned char>(ch)) && ch != '_' && ch != '-') ch = '_';
  return s;
}

// ---------------------------------------------------------------------------
// Subcommands

void cmd_synth(Context& ctx) {
  auto d = make_synthetic(ctx.cfg.synth);
  write_synthetic(d, ctx.dir);
  for (const char* f : {"edges.csv", "monadic.csv", "dyadic.csv", "registry.csv"}) ctx.wrote(f);

  std::vector<double> grid;
  for (int t = int(d.truth.t_lower); t <= int(d.truth.t_upper); ++t) grid.push_back(t);
  {
    csv::Writer w(ctx.path("truth_curves.csv"));
    w.row("side", "term", "period", "value");
    for (Side s : {Side::formation, Side::persistence})
      for (const char* term : {"intercept", "gdp_i", "gdp_j", "milex_j", "recip"})
        for (double t : grid) w.row(to_string(s), term, int(t), d.truth.coefficient(s, term, t));
  }
  {
    csv::Writer w(ctx.path("truth_random.csv"));
    w.row("side", "role", "actor", "period", "value");
    for (Side s : {Side::formation, Side::persistence})
      for (const char* role : {"re_sender", "re_receiver"})
        for (const auto& [id, _] : d.inputs.registry.actors)
          for (double t : grid) w.row(to_string(s), role, id, int(t), d.truth.random_curve(s, role, id, t));
  }
  ctx.wrote("truth_curves.csv");
  ctx.wrote("truth_random.csv");

  RunConfig rc = ctx.cfg;
  rc.edges = "edges.csv";
  rc.monadic = "monadic.csv";
  rc.dyadic = "dyadic.csv";
  rc.registry = "registry.csv";
  rc.spec = synthetic_spec();
  json j = config_to_json(rc);
  j["out_dir"] = "results";
  std::ofstream f(ctx.path("config.json"), std::ios::binary);
  f << j.dump(2) << '\n';
  f.close();
  ctx.wrote("config.json");
}

void cmd_ingest(Context& ctx) {
  auto panel = load_panel(ctx.cfg);
  {
    csv::Writer w(ctx.path("panel_summary.csv"));
    w.row("period", "actors", "edges", "density", "common_actors", "entrants", "exits",
          "formation_dyads", "persistence_dyads");
    for (int t : panel.periods) {
      const Network& y = panel.at(t);
      const double n = double(y.size());
      const double dens = n > 1 ? double(y.edge_count()) / (n * (n - 1)) : 0.0;
      if (panel.has(panel.previous(t))) {
        auto cs = detail::common_set(panel.at(panel.previous(t)), y, panel.registry,
                                     ctx.cfg.spec.use_predecessors);
        std::size_t plus = 0, minus = 0;
        if (cs.actors.size() >= 3) {
          auto td = build_transition(panel, t, ctx.cfg.spec.use_predecessors);
          plus = td.formation.size();
          minus = td.persistence.size();
        }
        w.row(t, y.size(), y.edge_count(), dens, cs.actors.size(), cs.entrants, cs.exits, plus, minus);
      } else {
        w.row(t, y.size(), y.edge_count(), dens, "", "", "", "", "");
      }
    }
  }
  ctx.wrote("panel_summary.csv");
  const auto& p = panel.provenance;
  json prov{{"flow_records", p.flow_records},
            {"edges_kept", p.edges_kept},
            {"below_threshold", p.below_threshold},
            {"endpoint_not_existent", p.endpoint_not_existent},
            {"outside_periods", p.outside_periods},
            {"dropped_actors", p.dropped_actors},
            {"threshold", p.threshold},
            {"window_width", p.window_width},
            {"periods", panel.periods},
            {"inputs", ctx.input_hashes()}};
  std::ofstream f(ctx.path("provenance.json"), std::ios::binary);
  f << prov.dump(2) << '\n';
  f.close();
  ctx.wrote("provenance.json");
}

void write_fit_summary(Context& ctx, const FittedModel& m) {
  {
    csv::Writer w(ctx.path("smoothing.csv"));
    w.row("side", "penalty", "lambda", "sigma2");
    for (const auto& sf : m.sides) {
      if (sf.skipped) continue;
      for (std::size_t k = 0; k < sf.fit.lambdas.size(); ++k)
        w.row(to_string(sf.side), sf.fit.lambda_labels[k], sf.fit.lambdas[k],
              sf.fit.lambdas[k] > 0 ? 1.0 / sf.fit.lambdas[k] : std::nan(""));
    }
  }
  {
    csv::Writer w(ctx.path("fit_summary.csv"));
    w.row("side", "status", "rows", "loglik", "deviance", "edf", "reml", "iterations", "converged", "diagnostic");
    for (const auto& sf : m.sides) {
      if (sf.skipped) {
        w.row(to_string(sf.side), "skipped", "", "", "", "", "", "", "", sf.diagnostic);
        continue;
      }
      std::string warn;
      for (const auto& x : sf.fit.warnings) warn += (warn.empty() ? "" : "; ") + x;
      w.row(to_string(sf.side), "fitted", sf.fit.n_rows, sf.fit.loglik, sf.fit.deviance, sf.fit.edf,
            sf.fit.reml, sf.fit.iterations, sf.fit.converged ? 1 : 0, warn);
    }
  }
  {
    csv::Writer w(ctx.path("constants.csv"));
    w.row("side", "term", "estimate", "se");
    for (const auto& sf : m.sides) {
      if (sf.skipped) continue;
      for (std::size_t k = 0; k < sf.blocks.size(); ++k) {
        const auto& b = sf.blocks[k];
        if (b.kind != BlockKind::constant && b.kind != BlockKind::intercept) continue;
        const int o = sf.offsets[k];
        w.row(to_string(sf.side), b.label, sf.fit.beta(o), std::sqrt(std::max(0.0, sf.fit.covariance(o, o))));
      }
    }
  }
  for (const char* f : {"smoothing.csv", "fit_summary.csv", "constants.csv"}) ctx.wrote(f);
}

void cmd_fit(Context& ctx) {
  auto panel = load_panel(ctx.cfg);
  auto m = fit_model(panel, ctx.cfg.spec, fit_options(ctx.cfg, ctx.opt.threads));
  m.provenance["config_sha256"] = ctx.config_hash();
  for (const auto& [role, h] : ctx.input_hashes()) m.provenance["input_" + role + "_sha256"] = h;
  for (const auto& sf : m.sides) {
    if (sf.skipped) ctx.note(std::string(to_string(sf.side)) + " fit skipped: " + sf.diagnostic);
    for (const auto& wmsg : sf.fit.warnings) ctx.note(std::string(to_string(sf.side)) + ": " + wmsg);
  }
  std::ofstream f(fit_path(ctx), std::ios::binary);
  if (!f) throw InputError("cannot write '" + fit_path(ctx) + "'");
  f << to_json(m).dump(1) << '\n';
  f.close();
  if (ctx.opt.fit_path.empty()) ctx.wrote("fit.json");
  write_fit_summary(ctx, m);
}

void cmd_curves(Context& ctx) {
  auto m = load_fit(ctx);
  const auto grid = period_grid(m);
  csv::Writer w(ctx.path("coefficients.csv"));
  w.row("side", "term", "period", "value", "se");
  csv::Writer wr(ctx.path("random_curves.csv"));
  wr.row("side", "role", "actor", "period", "value", "se");
  for (Side s : fitted_sides(m)) {
    const auto& sf = m.side_fit(s);
    for (const auto& b : sf.blocks) {
      if (b.kind == BlockKind::varying) {
        auto c = m.curve(s, b.label, grid);
        svg::Plot plot;
        plot.title = std::string(to_string(s)) + ": " + b.label;
        plot.xlabel = "period";
        plot.ylabel = "coefficient";
        svg::Band band{grid, {}, {}, "#cccccc"};
        for (std::size_t k = 0; k < grid.size(); ++k) {
          w.row(to_string(s), b.label, int(grid[k]), c.value[k], c.se[k]);
          band.lower.push_back(c.value[k] - 2 * c.se[k]);
          band.upper.push_back(c.value[k] + 2 * c.se[k]);
        }
        plot.bands.push_back(band);
        plot.series.push_back({grid, c.value, "estimate"});
        const std::string name = "curve_" + std::string(to_string(s)) + "_" + file_stem(b.label) + ".svg";
        plot.save(ctx.path(name));
        ctx.wrote(name);
      } else if (b.kind == BlockKind::random_smooth) {
        for (const auto& actor : b.levels) {
          auto c = m.curve(s, b.label, grid, actor);
          for (std::size_t k = 0; k < grid.size(); ++k)
            wr.row(to_string(s), b.label, actor, int(grid[k]), c.value[k], c.se[k]);
        }
      }
    }
  }
  ctx.wrote("coefficients.csv");
  ctx.wrote("random_curves.csv");
}

void cmd_fpca(Context& ctx) {
  auto m = load_fit(ctx);
  const auto& fc = ctx.cfg.fpca;
  csv::Writer ws(ctx.path("scores.csv"));
  csv::Writer we(ctx.path("eigenfunctions.csv"));
  csv::Writer wv(ctx.path("variance_shares.csv"));
  csv::Writer wp(ctx.path("perturbation.csv"));
  std::vector<std::string> hs{"side", "role", "actor"}, he{"side", "role", "grid"};
  for (int k = 1; k <= fc.components; ++k) {
    hs.push_back("comp" + std::to_string(k));
    he.push_back("xi" + std::to_string(k));
  }
  ws.row(hs);
  we.row(he);
  wv.row("side", "role", "component", "eigenvalue", "share");
  wp.row("side", "role", "component", "grid", "mean", "plus", "minus");
  bool any = false;
  for (Side s : fitted_sides(m)) {
    const auto& sf = m.side_fit(s);
    for (const auto& b : sf.blocks) {
      if (b.kind != BlockKind::random_smooth) continue;
      auto bundle = discretize_curves(m, b.label, s, fc.grid_points);
      if (bundle.actors.size() < 2) {
        ctx.note(std::string(to_string(s)) + " " + b.label + ": fewer than 2 curves, fpca skipped");
        continue;
      }
      any = true;
      const int comps = std::min<int>(fc.components, int(bundle.actors.size()));
      auto r = fpca(bundle, comps, fc.center);
      const std::string side = to_string(s);
      for (std::size_t i = 0; i < r.actors.size(); ++i) {
        std::vector<std::string> row{side, b.label, r.actors[i]};
        for (int k = 0; k < fc.components; ++k) row.push_back(k < comps ? csv::fmt(r.scores(Eigen::Index(i), k)) : "");
        ws.row(row);
      }
      for (std::size_t g = 0; g < r.grid.size(); ++g) {
        std::vector<std::string> row{side, b.label, csv::fmt(r.grid[g])};
        for (int k = 0; k < fc.components; ++k)
          row.push_back(k < comps ? csv::fmt(r.eigenfunctions(k, Eigen::Index(g))) : "");
        we.row(row);
      }
      for (int k = 0; k < comps; ++k) wv.row(side, b.label, k + 1, r.eigenvalues(k), r.variance_shares(k));
      for (int k = 0; k < std::min(comps, 2); ++k) {
        auto [plus, minus] = perturbation_curves(r, k, fc.multiple);
        for (std::size_t g = 0; g < r.grid.size(); ++g)
          wp.row(side, b.label, k + 1, r.grid[g], r.mean(Eigen::Index(g)), plus(Eigen::Index(g)),
                 minus(Eigen::Index(g)));
        svg::Plot plot;
        char share[32];
        std::snprintf(share, sizeof share, "%.1f%%", 100.0 * r.variance_shares(k));
        plot.title = side + " " + b.label + ": component " + std::to_string(k + 1) + " (" + share + ")";
        plot.xlabel = "period";
        plot.ylabel = "effect";
        auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
        plot.series.push_back({r.grid, vec(r.mean), "mean"});
        plot.series.push_back({r.grid, vec(plus), "+", "#b2182b", "6,3"});
        plot.series.push_back({r.grid, vec(minus), "-", "#2166ac", "2,2"});
        const std::string name = "fpca_" + side + "_" + file_stem(b.label) + "_comp" + std::to_string(k + 1) + ".svg";
        plot.save(ctx.path(name));
        ctx.wrote(name);
      }
    }
  }
  if (!any) throw ContractError("fit has no random-smooth terms for fpca");
  for (const char* f : {"scores.csv", "eigenfunctions.csv", "variance_shares.csv", "perturbation.csv"}) ctx.wrote(f);
}

void cmd_evaluate(Context& ctx) {
  require_inputs(ctx.cfg);
  auto panel = load_panel(ctx.cfg);
  if (panel.periods.size() < 3) throw ContractError("insufficient horizon: panel has fewer than 3 periods");
  const int start = ctx.cfg.eval_start.value_or(panel.periods.front());
  const int end = ctx.cfg.eval_end.value_or(panel.periods.back());
  RollingOptions ro;
  ro.fit = fit_options(ctx.cfg, 1);
  ro.threads = ctx.opt.threads;
  auto res = rolling_evaluation(panel, ctx.cfg.spec, start, end, ro);
  for (const auto& d : res.diagnostics) ctx.note(d);
  csv::Writer w(ctx.path("auc.csv"));
  w.row("period", "side", "pr_auc", "roc_auc", "dyads", "positives");
  std::map<std::string, svg::Series> roc, pr;
  for (const auto& r : res.rows) {
    w.row(r.period, r.side, r.pr_auc, r.roc_auc, r.dyads, r.positives);
    roc[r.side].x.push_back(r.period);
    roc[r.side].y.push_back(r.roc_auc);
    pr[r.side].x.push_back(r.period);
    pr[r.side].y.push_back(r.pr_auc);
  }
  ctx.wrote("auc.csv");
  const std::map<std::string, std::pair<std::string, std::string>> style{
      {"formation", {"#2166ac", "6,3"}}, {"persistence", {"#b2182b", "2,2"}}, {"combined", {"#000000", ""}}};
  for (auto* kind : {&roc, &pr}) {
    svg::Plot plot;
    const bool is_roc = kind == &roc;
    plot.title = is_roc ? "ROC AUC by period" : "PR AUC by period";
    plot.xlabel = "period";
    plot.ylabel = "AUC";
    plot.zero_line = false;
    for (auto& [side, s] : *kind) {
      s.label = side;
      s.color = style.at(side).first;
      s.dash = style.at(side).second;
      plot.series.push_back(s);
    }
    const std::string name = is_roc ? "auc_roc.svg" : "auc_pr.svg";
    plot.save(ctx.path(name));
    ctx.wrote(name);
  }
}

// Simulated replicate statistics per horizon from the stored fit.
std::map<int, std::vector<GofStats>> simulate_stats(Context& ctx, const FittedModel& m,
                                                   const NetworkPanel& panel,
                                                   std::map<int, GofStats>& observed) {
  std::map<int, std::vector<GofStats>> out;
  for (int h : m.periods) {
    const int t = panel.previous(h);
    if (!panel.has(t) || !panel.has(h)) {
      ctx.note("period " + std::to_string(h) + " not in panel, not simulated");
      continue;
    }
    auto ps = predict_transition(m, panel, t, m.spec.use_predecessors);
    std::vector<GofStats> stats(std::size_t(ctx.cfg.n_sims));
    parallel_for(stats.size(), ctx.opt.threads, [&](std::size_t r) {
      stats[r] = global_stats(simulate_replicate(ps, ctx.cfg.seed, r));
    });
    out[h] = std::move(stats);
    observed[h] = global_stats(panel.at(h).restricted_to(ps.actors));
  }
  return out;
}

void cmd_simulate(Context& ctx, bool with_gof) {
  auto m = load_fit(ctx);
  auto panel = load_panel(ctx.cfg);
  std::map<int, GofStats> observed;
  auto sims = simulate_stats(ctx, m, panel, observed);
  {
    csv::Writer w(ctx.path("sim_stats.csv"));
    std::vector<std::string> h{"period", "replicate"};
    for (const char* n : GofStats::names()) h.push_back(n);
    w.row(h);
    for (const auto& [t, stats] : sims)
      for (std::size_t r = 0; r < stats.size(); ++r) {
        std::vector<std::string> row{std::to_string(t), std::to_string(r)};
        for (double v : stats[r].values()) row.push_back(csv::fmt(v));
        w.row(row);
      }
  }
  ctx.wrote("sim_stats.csv");
  if (!with_gof) return;

  GofReport rep;
  for (const auto& [t, stats] : sims) rep.periods.push_back(gof_period(t, stats, observed.at(t)));
  csv::Writer w(ctx.path("gof.csv"));
  w.row("period", "statistic", "observed", "min", "q25", "median", "q75", "max", "observed_quantile");
  for (const auto& gp : rep.periods)
    for (std::size_t k = 0; k < gp.stats.size(); ++k) {
      const auto& s = gp.stats[k];
      w.row(gp.period, GofStats::names()[k], s.observed, s.min, s.q25, s.median, s.q75, s.max,
            s.observed_quantile);
    }
  ctx.wrote("gof.csv");
  for (std::size_t k = 0; k < GofStats::names().size(); ++k) {
    svg::Plot plot;
    plot.title = std::string("GOF: ") + GofStats::names()[k];
    plot.xlabel = "period";
    plot.ylabel = GofStats::names()[k];
    plot.zero_line = false;
    svg::Band outer{{}, {}, {}, "#e0e0e0"}, inner{{}, {}, {}, "#a0a0a0"};
    svg::Series med{{}, {}, "simulated median", "#555555", "4,2"}, obs{{}, {}, "observed"};
    for (const auto& gp : rep.periods) {
      const auto& s = gp.stats[k];
      const double x = gp.period;
      outer.x.push_back(x);
      outer.lower.push_back(s.min);
      outer.upper.push_back(s.max);
      inner.x.push_back(x);
      inner.lower.push_back(s.q25);
      inner.upper.push_back(s.q75);
      med.x.push_back(x);
      med.y.push_back(s.median);
      obs.x.push_back(x);
      obs.y.push_back(s.observed);
    }
    plot.bands = {outer, inner};
    plot.series = {med, obs};
    const std::string name = std::string("gof_") + GofStats::names()[k] + ".svg";
    plot.save(ctx.path(name));
    ctx.wrote(name);
  }
}

void cmd_robustness(Context& ctx) {
  auto inputs = load_inputs(ctx.cfg);
  // Smoothing parameters of the baseline fit, held fixed across settings.
  FitOptions fo = fit_options(ctx.cfg, ctx.opt.threads);
  FittedModel base;
  if (fs::exists(fit_path(ctx))) {
    base = load_fit(ctx);
  } else {
    ctx.note("no baseline fit found; selecting smoothing parameters at the configured setting");
    base = fit_model(build_panel(inputs, {ctx.cfg.threshold, ctx.cfg.window}), ctx.cfg.spec, fo);
  }
  fo.select = false;
  fo.fixed.clear();
  fo.fixed_default = 1.0;
  for (const auto& sf : base.sides)
    for (std::size_t k = 0; k < sf.fit.lambdas.size(); ++k)
      fo.fixed[std::string(to_string(sf.side)) + "/" + sf.fit.lambda_labels[k]] = sf.fit.lambdas[k];

  csv::Writer wc(ctx.path("robustness.csv"));
  wc.row("window", "threshold", "side", "term", "period", "value", "se");
  csv::Writer wr(ctx.path("robustness_runs.csv"));
  wr.row("window", "threshold", "periods", "side", "rows", "status", "message");
  csv::Writer wn(ctx.path("nesting.csv"));
  wn.row("window", "threshold", "period", "edges", "nested_in_lower_threshold");

  auto thresholds = ctx.cfg.robustness.thresholds;
  std::sort(thresholds.begin(), thresholds.end());
  // (side, term) -> series across thresholds at window 1.
  std::map<std::pair<std::string, std::string>, std::vector<svg::Series>> overlays;
  for (int w : ctx.cfg.robustness.windows) {
    std::optional<NetworkPanel> lower;
    for (double th : thresholds) {
      auto panel = build_panel(inputs, {th, w});
      for (int t : panel.periods) {
        int nested = -1;
        if (lower) {
          nested = 1;
          for (const auto& [i, j] : panel.at(t).edges())
            if (!lower->at(t).has_edge(panel.at(t).actors()[i], panel.at(t).actors()[j])) nested = 0;
        }
        wn.row(w, th, t, panel.at(t).edge_count(), nested < 0 ? std::string() : std::to_string(nested));
      }
      try {
        auto m = fit_model(panel, ctx.cfg.spec, fo);
        for (const auto& sf : m.sides) {
          wr.row(w, th, panel.periods.size(), to_string(sf.side), sf.skipped ? 0 : sf.fit.n_rows,
                 sf.skipped ? "skipped" : "fitted", sf.diagnostic);
          if (sf.skipped) continue;
          const auto grid = period_grid(m);
          for (std::size_t k = 0; k < sf.blocks.size(); ++k) {
            const auto& b = sf.blocks[k];
            if (b.kind == BlockKind::varying) {
              auto c = m.curve(sf.side, b.label, grid);
              for (std::size_t g = 0; g < grid.size(); ++g)
                wc.row(w, th, to_string(sf.side), b.label, int(grid[g]), c.value[g], c.se[g]);
              if (w == ctx.cfg.robustness.windows.front()) {
                char lab[32];
                std::snprintf(lab, sizeof lab, "threshold %.1f", th);
                overlays[{to_string(sf.side), b.label}].push_back({grid, c.value, lab});
              }
            } else if (b.kind == BlockKind::constant || b.kind == BlockKind::intercept) {
              const int o = sf.offsets[k];
              wc.row(w, th, to_string(sf.side), b.label, "", sf.fit.beta(o),
                     std::sqrt(std::max(0.0, sf.fit.covariance(o, o))));
            }
          }
        }
      } catch (const NumericalError& e) {
        wr.row(w, th, panel.periods.size(), "", "", "failed", e.what());
        ctx.note("window " + std::to_string(w) + " threshold " + csv::fmt(th) + ": " + e.what());
      } catch (const ContractError& e) {
        wr.row(w, th, panel.periods.size(), "", "", "failed", e.what());
        ctx.note("window " + std::to_string(w) + " threshold " + csv::fmt(th) + ": " + e.what());
      }
      lower = std::move(panel);
    }
  }
  for (const char* f : {"robustness.csv", "robustness_runs.csv", "nesting.csv"}) ctx.wrote(f);
  for (auto& [key, series] : overlays) {
    svg::Plot plot;
    plot.title = key.first + ": " + key.second + " across thresholds";
    plot.xlabel = "period";
    plot.ylabel = "coefficient";
    for (std::size_t k = 0; k < series.size(); ++k) {
      series[k].dash = k == 0 ? "" : "5,3";
      series[k].width = k == 0 ? 2.0 : 1.0;
      series[k].color = k == 0 ? "#000000" : "#777777";
      if (k != 0 && k + 1 != series.size()) series[k].label.clear();
      plot.series.push_back(series[k]);
    }
    const std::string name = "robust_" + key.first + "_" + file_stem(key.second) + ".svg";
    plot.save(ctx.path(name));
    ctx.wrote(name);
  }
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s{"synth",    "ingest",   "fit", "curves",     "fpca",
                                          "evaluate", "simulate", "gof", "robustness", "all"};
  return s;
}

void run(const std::string& subcommand, const RunConfig& config, const RunOptions& options) {
  if (std::find(subcommands().begin(), subcommands().end(), subcommand) == subcommands().end())
    throw ContractError("unknown subcommand '" + subcommand + "'");
  config.validate();
  Context ctx(config, options, subcommand);
  if (subcommand == "synth") cmd_synth(ctx);
  else if (subcommand == "ingest") cmd_ingest(ctx);
  else if (subcommand == "fit") cmd_fit(ctx);
  else if (subcommand == "curves") cmd_curves(ctx);
  else if (subcommand == "fpca") cmd_fpca(ctx);
  else if (subcommand == "evaluate") cmd_evaluate(ctx);
  else if (subcommand == "simulate") cmd_simulate(ctx, false);
  else if (subcommand == "gof") cmd_simulate(ctx, true);
  else if (subcommand == "robustness") cmd_robustness(ctx);
  else if (subcommand == "all") {
    cmd_ingest(ctx);
    cmd_fit(ctx);
    cmd_curves(ctx);
    bool has_random = false;
    for (const auto& t : config.spec.terms) has_random = has_random || is_random(t.kind);
    if (has_random) cmd_fpca(ctx);
    cmd_evaluate(ctx);
    cmd_simulate(ctx, true);
  }
  ctx.finish();
}

}  // namespace tvstergm::pipeline
