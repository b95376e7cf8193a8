#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tvstergm/model.hpp"
#include "tvstergm/synth.hpp"

using namespace tvstergm;

namespace {

const SynthData& small_fixture() {
  static const SynthData d = [] {
    SynthConfig c;
    c.actors = 12;
    c.periods = 8;
    c.seed = 77;
    c.late_entrants = 1;
    c.early_exits = 1;
    return make_synthetic(c);
  }();
  return d;
}

NetworkPanel small_panel() { return build_panel(small_fixture().inputs, {}); }

FitOptions fixed(double lambda = 10.0) {
  FitOptions o;
  o.select = false;
  o.fixed_default = lambda;
  return o;
}

ModelSpec small_spec(Variant v) {
  ModelSpec s;
  s.variant = v;
  s.varying = {4, 2, 1};
  s.random = {4, 2, 1};
  if (v == Variant::ar_ergm) {
    s.terms = {{"lag", TermKind::constant}};
    return s;
  }
  s.terms = {{"recip", TermKind::constant}, {"gdp_i", TermKind::time_varying}};
  if (has_random_effects(v)) s.terms.push_back({"", TermKind::random_sender});
  return s;
}

}  // namespace

TEST(ModelSpec, Validation) {
  auto s = ModelSpec::defaults(Variant::stergm);
  EXPECT_NO_THROW(s.validate());
  s.terms.push_back({"lag", TermKind::constant});
  EXPECT_THROW(s.validate(), ContractError);
  auto t = ModelSpec::defaults(Variant::tergm);
  t.terms.push_back({"", TermKind::random_sender});
  EXPECT_THROW(t.validate(), ContractError);
  auto r = ModelSpec::defaults(Variant::stergm_re);
  r.terms.pop_back();
  r.terms.pop_back();
  EXPECT_THROW(r.validate(), ContractError);
  auto a = ModelSpec::defaults(Variant::ar_ergm);
  EXPECT_NO_THROW(a.validate());
  a.terms.push_back({"recip", TermKind::constant});
  EXPECT_THROW(a.validate(), ContractError);
  ModelSpec u;
  u.variant = Variant::stergm;
  u.terms = {{"bogus", TermKind::constant}};
  EXPECT_THROW(u.validate(), ContractError);
  u.terms = {{"recip", TermKind::constant}, {"recip", TermKind::time_varying}};
  EXPECT_THROW(u.validate(), ContractError);
}

TEST(AssembleDesign, CompleteLagHasNoFormationRows) {
  auto panel = small_panel();
  const int t0 = panel.periods[1];
  Network& prev = panel.networks.at(panel.periods[0]);
  for (std::size_t i = 0; i < prev.size(); ++i)
    for (std::size_t j = 0; j < prev.size(); ++j)
      if (i != j) prev.set_edge(i, j);
  auto td = build_transition(panel, t0);
  auto d = assemble_design({td}, panel.covariates, small_spec(Variant::stergm), Side::formation);
  EXPECT_EQ(d.rows(), 0u);
}

TEST(AssembleDesign, ArErgmHasTwoColumns) {
  auto panel = small_panel();
  auto tds = build_transitions(panel, {panel.periods[1], panel.periods[2]}, false);
  auto d = assemble_design(tds, panel.covariates, small_spec(Variant::ar_ergm), Side::pooled);
  int cols = 0;
  for (const auto& b : d.blocks) cols += b.cols();
  EXPECT_EQ(cols, 2);
}

TEST(AssembleDesign, PooledRowCountAndSideContract) {
  auto panel = small_panel();
  std::vector<int> ts(panel.periods.begin() + 1, panel.periods.end());
  auto tds = build_transitions(panel, ts, false);
  auto d = assemble_design(tds, panel.covariates, small_spec(Variant::tergm), Side::pooled);
  std::size_t want = 0;
  for (int t : ts) {
    const auto a = common_actors(panel, t);
    want += a.size() * (a.size() - 1);
  }
  EXPECT_EQ(d.rows(), want);
  EXPECT_THROW(assemble_design(tds, panel.covariates, small_spec(Variant::tergm), Side::formation), ContractError);
  EXPECT_THROW(assemble_design(tds, panel.covariates, small_spec(Variant::stergm), Side::pooled), ContractError);
}

TEST(FitModel, EmptyPersistenceIsSkipped) {
  auto panel = small_panel();
  for (std::size_t k = 0; k + 1 < panel.periods.size(); ++k) {
    Network& y = panel.networks.at(panel.periods[k]);
    y = Network(y.actors());
  }
  auto m = fit_model(panel, small_spec(Variant::stergm), fixed());
  EXPECT_TRUE(m.side_fit(Side::persistence).skipped);
  EXPECT_FALSE(m.side_fit(Side::formation).skipped);
  EXPECT_FALSE(m.available(Side::persistence));
}

TEST(FitModel, JointLoglikIsSumOverDyads) {
  auto panel = small_panel();
  auto m = fit_model(panel, small_spec(Variant::stergm), fixed());
  double direct = 0.0;
  for (std::size_t k = 1; k < panel.periods.size(); ++k) {
    auto td = build_transition(panel, panel.periods[k]);
    DyadRowBuilder rb(td, panel.covariates);
    for (Side s : {Side::formation, Side::persistence})
      for (const auto& d : s == Side::formation ? td.formation : td.persistence) {
        const double p = m.probability(s, rb.features(d.i, d.j));
        direct += d.response ? std::log(p) : std::log1p(-p);
      }
  }
  EXPECT_NEAR(m.loglik(), direct, 1e-8 * std::abs(direct));
  EXPECT_EQ(m.loglik(), m.side_fit(Side::formation).fit.loglik + m.side_fit(Side::persistence).fit.loglik);
}

TEST(FitModel, PermutingPersistenceRowsLeavesFormation) {
  auto panel = small_panel();
  std::vector<int> ts(panel.periods.begin() + 1, panel.periods.end());
  auto tds = build_transitions(panel, ts, false);
  auto a = fit_transitions(tds, panel.covariates, small_spec(Variant::stergm), fixed());
  std::mt19937_64 g(3);
  for (auto& td : tds) std::shuffle(td.persistence.begin(), td.persistence.end(), g);
  auto b = fit_transitions(tds, panel.covariates, small_spec(Variant::stergm), fixed());
  const auto& fa = a.side_fit(Side::formation).fit.beta;
  const auto& fb = b.side_fit(Side::formation).fit.beta;
  ASSERT_EQ(fa.size(), fb.size());
  for (Eigen::Index k = 0; k < fa.size(); ++k) EXPECT_EQ(fa(k), fb(k));
}

TEST(FitModel, AllVariantsFit) {
  auto panel = small_panel();
  for (const auto& [v, name] : variant_names()) {
    auto m = fit_model(panel, small_spec(v), fixed());
    for (const auto& sf : m.sides) {
      if (sf.skipped) continue;
      EXPECT_TRUE(sf.fit.converged) << name;
    }
    EXPECT_TRUE(std::isfinite(m.loglik())) << name;
  }
}

TEST(FitModel, TooFewPeriods) {
  auto panel = small_panel();
  panel.periods.resize(2);
  EXPECT_THROW(fit_model(panel, small_spec(Variant::stergm), fixed()), ContractError);
}

TEST(CoefficientCurve, ConstantTermIsNotACurve) {
  auto m = fit_model(small_panel(), small_spec(Variant::stergm), fixed());
  EXPECT_THROW(coefficient_curve(m, Side::formation, "recip", {2, 3}), ContractError);
  EXPECT_THROW(coefficient_curve(m, Side::formation, "nope", {2, 3}), ContractError);
  auto c = coefficient_curve(m, Side::formation, "gdp_i", {2, 3, 4});
  EXPECT_EQ(c.value.size(), 3u);
  for (double se : c.se) EXPECT_GT(se, 0.0);
}

TEST(CoefficientCurve, CenteredTimeSmoothSumsToZeroOverRows) {
  auto panel = small_panel();
  auto spec = small_spec(Variant::stergm);
  spec.terms.push_back({"intercept", TermKind::time_varying});
  auto m = fit_model(panel, spec, fixed(1.0));
  double sum = 0.0;
  std::size_t rows = 0;
  for (std::size_t k = 1; k < panel.periods.size(); ++k) {
    const int t = panel.periods[k];
    auto td = build_transition(panel, t);
    auto c = coefficient_curve(m, Side::formation, "intercept", {double(t)});
    sum += c.value[0] * double(td.formation.size());
    rows += td.formation.size();
  }
  EXPECT_LT(std::abs(sum), 1e-8 * double(rows));
}

TEST(FittedModel, JsonRoundTrip) {
  auto panel = small_panel();
  auto m = fit_model(panel, small_spec(Variant::stergm_re), fixed());
  auto back = model_from_json(nlohmann::json::parse(to_json(m).dump()));
  EXPECT_EQ(to_json(back).dump(), to_json(m).dump());
  auto td = build_transition(panel, panel.periods.back());
  DyadRowBuilder rb(td, panel.covariates);
  for (const auto& d : td.formation)
    EXPECT_EQ(m.logit(Side::formation, rb.features(d.i, d.j)), back.logit(Side::formation, rb.features(d.i, d.j)));
}

TEST(ModelSpec, JsonRoundTrip) {
  auto s = ModelSpec::defaults(Variant::tergm_stability_re);
  s.varying = {20, 3, 2};
  auto back = spec_from_json(to_json(s));
  EXPECT_EQ(to_json(back), to_json(s));
  EXPECT_THROW(spec_from_json(nlohmann::json{{"variant", "nope"}}), ContractError);
}
