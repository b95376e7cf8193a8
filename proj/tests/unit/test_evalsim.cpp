#include <gtest/gtest.h>

#include <random>

#include "../support/oracles.hpp"
#include "tvstergm/evalsim.hpp"
#include "tvstergm/synth.hpp"

using namespace tvstergm;

namespace {

struct ConstantScorer : DyadScorer {
  double formation = 0.0, persistence = 0.0;
  ConstantScorer(double f, double p) : formation(f), persistence(p) {}
  double logit(Side s, const DyadFeatures&) const override {
    return s == Side::persistence ? persistence : formation;
  }
};

const SynthData& fixture() {
  static const SynthData d = [] {
    SynthConfig c;
    c.actors = 12;
    c.periods = 10;
    c.seed = 31;
    return make_synthetic(c);
  }();
  return d;
}

}  // namespace

TEST(RocAuc, Examples) {
  EXPECT_EQ(roc_auc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}), 1.0);
  EXPECT_EQ(roc_auc({0.5, 0.5, 0.5}, {1, 0, 1}), 0.5);
  EXPECT_DOUBLE_EQ(roc_auc({0.9, 0.8, 0.3, 0.2}, {1, 0, 1, 0}), 0.75);
  EXPECT_THROW(roc_auc({0.1, 0.2}, {1, 1}), ContractError);
}

TEST(PrAuc, Examples) {
  EXPECT_EQ(pr_auc({0.9, 0.8, 0.3, 0.2}, {1, 1, 0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(pr_auc({0.4, 0.4, 0.4, 0.4, 0.4}, {1, 0, 0, 1, 0}), 0.4);
  std::vector<double> s{0.9, 0.7, 0.7, 0.4, 0.2, 0.1};
  std::vector<int> l{1, 0, 1, 1, 0, 0};
  EXPECT_NEAR(pr_auc(s, l), oracle::pr_sweep(s, l), 1e-12);
  EXPECT_THROW(pr_auc({0.1, 0.2}, {0, 0}), ContractError);
}

TEST(Auc, RandomFixturesMatchEnumeration) {
  std::mt19937_64 g(1);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = 2 + rep % 40;
    std::uniform_int_distribution<int> lv(0, 1), sv(0, 6);
    std::vector<double> s(n);
    std::vector<int> l(n);
    for (int k = 0; k < n; ++k) {
      s[k] = rep % 2 ? sv(g) / 6.0 : std::uniform_real_distribution<double>(0, 1)(g);
      l[k] = lv(g);
    }
    l[0] = 1;
    l[1] = 0;
    EXPECT_NEAR(roc_auc(s, l), oracle::roc_pairs(s, l), 1e-12);
    EXPECT_NEAR(pr_auc(s, l), oracle::pr_sweep(s, l), 1e-12);
    // Strictly increasing transforms leave ROC AUC unchanged.
    std::vector<double> t(n);
    for (int k = 0; k < n; ++k) t[k] = std::exp(3 * s[k]) - 7;
    EXPECT_NEAR(roc_auc(t, l), roc_auc(s, l), 1e-15);
  }
}

TEST(PredictTransition, ZeroLogitGivesHalf) {
  auto panel = build_panel(fixture().inputs, {});
  auto ps = predict_transition(ConstantScorer(0, 0), panel, panel.periods[3]);
  for (const auto& d : ps.dyads) EXPECT_EQ(d.probability, 0.5);
}

TEST(PredictTransition, InterceptOnlyGivesBaseRate) {
  auto panel = build_panel(fixture().inputs, {});
  ModelSpec spec;
  spec.variant = Variant::stergm;
  FitOptions fo;
  fo.select = false;
  fo.fixed_default = 1.0;
  const int t = panel.periods[4];
  auto m = fit_transitions({build_transition(panel, t)}, panel.covariates, spec, fo);
  auto td = build_transition(panel, t);
  double fpos = 0, ppos = 0;
  for (auto& d : td.formation) fpos += d.response;
  for (auto& d : td.persistence) ppos += d.response;
  auto ps = predict_transition(m, panel, t);
  for (const auto& d : ps.dyads) {
    const double want = d.side == Side::formation ? fpos / td.formation.size() : ppos / td.persistence.size();
    EXPECT_NEAR(d.probability, want, 1e-6);
  }
}

TEST(PredictTransition, PartitionAndMissingHorizon) {
  auto panel = build_panel(fixture().inputs, {});
  const int t = panel.periods[2];
  auto ps = predict_transition(ConstantScorer(-1, 1), panel, t);
  const auto actors = common_actors(panel, panel.next(t));
  EXPECT_EQ(ps.dyads.size(), actors.size() * (actors.size() - 1));
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& d : ps.dyads) {
    EXPECT_TRUE(seen.insert({d.sender, d.receiver}).second);
    EXPECT_EQ(d.side == Side::persistence, ps.lagged.has_edge(d.i, d.j));
  }
  auto last = predict_transition(ConstantScorer(-1, 1), panel, panel.periods.back());
  EXPECT_FALSE(last.observed);
  for (const auto& d : last.dyads) EXPECT_EQ(d.observed, -1);
}

TEST(PredictTransition, SyntheticGeneratorBeatsPrevalence) {
  auto panel = build_panel(fixture().inputs, {});
  RollingResult rr;
  for (std::size_t k = 1; k + 1 < panel.periods.size(); ++k)
    score_prediction(predict_transition(fixture().truth, panel, panel.periods[k]), rr);
  int combined = 0;
  for (const auto& r : rr.rows)
    if (r.side == "combined") {
      ++combined;
      EXPECT_GT(r.pr_auc, double(r.positives) / double(r.dyads));
    }
  EXPECT_GT(combined, 0);
}

TEST(RollingEvaluation, InsufficientHorizon) {
  auto panel = build_panel(fixture().inputs, {});
  EXPECT_THROW(rolling_evaluation(panel, ModelSpec::defaults(Variant::stergm), panel.periods[0], panel.periods[1]),
               ContractError);
}

TEST(RollingEvaluation, ProducesRowsPerHorizon) {
  auto panel = build_panel(fixture().inputs, {});
  ModelSpec spec;
  spec.variant = Variant::stergm;
  spec.terms = {{"recip", TermKind::constant}, {"sender_outdeg", TermKind::constant}};
  RollingOptions ro;
  ro.fit.select = false;
  ro.fit.fixed_default = 1.0;
  auto a = rolling_evaluation(panel, spec, panel.periods.front(), panel.periods.back(), ro);
  ro.threads = 3;
  auto b = rolling_evaluation(panel, spec, panel.periods.front(), panel.periods.back(), ro);
  ASSERT_EQ(a.rows.size(), b.rows.size());
  for (std::size_t k = 0; k < a.rows.size(); ++k) {
    EXPECT_EQ(a.rows[k].period, b.rows[k].period);
    EXPECT_EQ(a.rows[k].roc_auc, b.rows[k].roc_auc);
    EXPECT_GE(a.rows[k].roc_auc, 0.0);
    EXPECT_LE(a.rows[k].roc_auc, 1.0);
  }
  EXPECT_FALSE(a.rows.empty());
}

TEST(Simulate, DegenerateProbabilities) {
  auto panel = build_panel(fixture().inputs, {});
  const int t = panel.periods[3];
  for (const auto& y : simulate_networks(ConstantScorer(-1e3, -1e3), panel, t, 5, 1)) EXPECT_EQ(y.edge_count(), 0u);
  for (const auto& y : simulate_networks(ConstantScorer(1e3, 1e3), panel, t, 5, 1))
    EXPECT_EQ(y.edge_count(), y.size() * (y.size() - 1));
}

TEST(Simulate, ReproducibleAcrossThreads) {
  auto panel = build_panel(fixture().inputs, {});
  auto ps = predict_transition(fixture().truth, panel, panel.periods[5]);
  auto a = simulate_networks(ps, 50, 99, 1), b = simulate_networks(ps, 50, 99, 4), c = simulate_networks(ps, 50, 100, 1);
  bool differs = false;
  for (std::size_t r = 0; r < 50; ++r) {
    EXPECT_EQ(a[r].edges(), b[r].edges());
    differs = differs || a[r].edges() != c[r].edges();
  }
  EXPECT_TRUE(differs);
}

TEST(Simulate, MeanSizeWithinThreeStandardErrors) {
  auto panel = build_panel(fixture().inputs, {});
  auto ps = predict_transition(fixture().truth, panel, panel.periods[5]);
  auto nets = simulate_networks(ps, 1000, 7);
  double mean = 0;
  for (const auto& y : nets) mean += double(y.edge_count());
  mean /= 1000.0;
  EXPECT_LT(std::abs(mean - ps.expected_size()), 3.0 * std::sqrt(ps.size_variance() / 1000.0));
}

TEST(Gof, SingleReplicateEqualToObservation) {
  auto panel = build_panel(fixture().inputs, {});
  const int t = panel.periods[4];
  std::map<int, std::vector<Network>> sims{{t, {panel.at(t)}}};
  auto rep = gof_compare(sims, panel);
  ASSERT_EQ(rep.periods.size(), 1u);
  for (const auto& s : rep.periods[0].stats) {
    EXPECT_EQ(s.min, s.observed);
    EXPECT_EQ(s.q25, s.observed);
    EXPECT_EQ(s.median, s.observed);
    EXPECT_EQ(s.max, s.observed);
    EXPECT_EQ(s.observed_quantile, 0.5);
  }
}

TEST(Gof, EmptyNetworks) {
  NetworkPanel panel;
  panel.periods = {1};
  panel.networks.emplace(1, Network(oracle::ids(4)));
  std::map<int, std::vector<Network>> sims{{1, {Network(oracle::ids(4)), Network(oracle::ids(4))}}};
  auto rep = gof_compare(sims, panel);
  for (const auto& s : rep.periods[0].stats) {
    EXPECT_EQ(s.observed, 0.0);
    EXPECT_EQ(s.max, 0.0);
  }
}

TEST(Gof, QuantilesAreType7) {
  EXPECT_DOUBLE_EQ(quantile({1, 2, 3, 4}, 0.25), 1.75);
  EXPECT_DOUBLE_EQ(quantile({5, 1, 3}, 0.5), 3.0);
}
