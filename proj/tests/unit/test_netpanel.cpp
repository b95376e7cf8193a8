#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "tvstergm/netpanel.hpp"
#include "tvstergm/synth.hpp"

using namespace tvstergm;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  auto dir = std::filesystem::temp_directory_path() / "tvstergm_netpanel";
  std::filesystem::create_directories(dir);
  auto p = (dir / name).string();
  std::ofstream(p) << body;
  return p;
}

// Three actors over periods 1..n with complete covariates.
CovariateTables full_covariates(int n, std::vector<std::string> actors = {"A", "B", "C"}) {
  CovariateTables c;
  for (int t = 1; t <= n; ++t) {
    for (const auto& a : actors) c.monadic[{t, a}] = {100.0 * t, 5.0, 0.0};
    for (std::size_t i = 0; i < actors.size(); ++i)
      for (std::size_t j = i + 1; j < actors.size(); ++j)
        c.dyadic[dyad_key(t, actors[i], actors[j])] = {0.0, 1000.0};
  }
  return c;
}

}  // namespace

TEST(LoadEdgeList, SumsDuplicates) {
  auto p = write_temp("dup.csv", "period,sender,receiver,value\n1950,USA,GBR,1.5\n1950,USA,GBR,2\n1951,GBR,USA,3\n");
  auto f = load_edge_list(p);
  ASSERT_EQ(f.records.size(), 2u);
  EXPECT_DOUBLE_EQ(f.records[0].value, 3.5);
}

TEST(LoadEdgeList, EmptyFileWithHeader) {
  auto p = write_temp("empty.csv", "period,sender,receiver,value\n");
  EXPECT_TRUE(load_edge_list(p).records.empty());
}

TEST(LoadEdgeList, RejectsSelfLoop) {
  auto p = write_temp("loop.csv", "period,sender,receiver,value\n1950,USA,USA,5\n");
  EXPECT_THROW(load_edge_list(p), InputError);
}

TEST(LoadEdgeList, RejectsNegativeAndNonNumeric) {
  EXPECT_THROW(load_edge_list(write_temp("neg.csv", "period,sender,receiver,value\n1950,A,B,-1\n")), InputError);
  EXPECT_THROW(load_edge_list(write_temp("nan.csv", "period,sender,receiver,value\n1950,A,B,x\n")), InputError);
}

TEST(Binarize, StrictThreshold) {
  auto cov = full_covariates(2);
  auto flows = make_flows({{1, "A", "B", 0.02}, {1, "B", "C", 3.0}, {2, "A", "C", 3.0001}});
  auto p0 = binarize(flows, 0.0, {}, cov);
  EXPECT_TRUE(p0.at(1).has_edge("A", "B"));
  auto p3 = binarize(flows, 3.0, {}, cov);
  EXPECT_FALSE(p3.at(1).has_edge("B", "C"));
  EXPECT_TRUE(p3.at(2).has_edge("A", "C"));
  EXPECT_EQ(p3.provenance.below_threshold, 2u);
}

TEST(Binarize, RespectsRegistry) {
  auto cov = full_covariates(2);
  ActorRegistry reg;
  reg.actors = {{"A", {1, 2}}, {"B", {1, 2}}, {"C", {2, 2}}};
  auto flows = make_flows({{1, "A", "C", 1.0}, {2, "A", "C", 1.0}});
  auto p = binarize(flows, 0.0, reg, cov);
  EXPECT_FALSE(p.at(1).contains("C"));
  EXPECT_TRUE(p.at(2).has_edge("A", "C"));
  EXPECT_EQ(p.provenance.endpoint_not_existent, 1u);
}

TEST(Binarize, MonotoneNesting) {
  std::mt19937_64 g(3);
  std::uniform_real_distribution<double> u(0, 4);
  std::vector<FlowRecord> recs;
  const std::vector<std::string> a{"A", "B", "C"};
  for (int t = 1; t <= 3; ++t)
    for (auto& i : a)
      for (auto& j : a)
        if (i != j) recs.push_back({t, i, j, u(g)});
  auto flows = make_flows(recs);
  auto cov = full_covariates(3);
  for (double lo = 0; lo < 3; lo += 0.5) {
    auto pl = binarize(flows, lo, {}, cov), ph = binarize(flows, lo + 0.5, {}, cov);
    for (int t = 1; t <= 3; ++t)
      for (auto [i, j] : ph.at(t).edges()) EXPECT_TRUE(pl.at(t).has_edge(ph.at(t).actors()[i], ph.at(t).actors()[j]));
  }
}

// Drawn from the synthetic TIV quantiles, threshold 3 removes about 19% of edges.
TEST(Binarize, ThresholdThreeRemovesAboutNineteenPercent) {
  std::mt19937_64 g(11);
  std::uniform_real_distribution<double> u(0, 1);
  const int n = 200000;
  int kept = 0;
  for (int k = 0; k < n; ++k) kept += tiv_quantile(u(g)) > 3.0;
  const double removed = 1.0 - double(kept) / n;
  EXPECT_NEAR(removed, 0.19, 0.005);
}

TEST(AggregateWindows, WidthOneIsIdentity) {
  auto cov = full_covariates(4);
  auto flows = make_flows({{1, "A", "B", 1.0}, {3, "B", "C", 2.0}});
  auto w = aggregate_windows(flows, 1, cov);
  ASSERT_EQ(w.flows.records.size(), 2u);
  EXPECT_EQ(w.flows.records[1].value, 2.0);
  EXPECT_EQ(w.covariates.monadic, cov.monadic);
  EXPECT_EQ(w.covariates.dyadic, cov.dyadic);
}

TEST(AggregateWindows, SumsFlowsAndCombinesCovariates) {
  auto cov = full_covariates(5);
  cov.dyadic[dyad_key(1, "A", "B")].alliance = 1.0;
  cov.dyadic[dyad_key(2, "A", "B")].alliance = 0.0;
  cov.dyadic[dyad_key(3, "A", "B")].alliance = 1.0;
  cov.dyadic[dyad_key(4, "A", "B")].alliance = 1.0;
  auto flows = make_flows({{1, "A", "B", 1.0}, {2, "A", "B", 2.5}, {5, "A", "B", 9.0}});
  auto w = aggregate_windows(flows, 2, cov);
  ASSERT_EQ(w.flows.records.size(), 1u);  // period 5 is a trailing partial window
  EXPECT_EQ(w.flows.records[0].period, 1);
  EXPECT_DOUBLE_EQ(w.flows.records[0].value, 3.5);
  EXPECT_EQ(*w.covariates.find_dyadic(1, "A", "B")->alliance, 0.0);
  EXPECT_EQ(*w.covariates.find_dyadic(3, "A", "B")->alliance, 1.0);
  EXPECT_DOUBLE_EQ(*w.covariates.find_monadic(1, "A")->gdp, 150.0);
  EXPECT_THROW(aggregate_windows(flows, 0, cov), ContractError);
}

TEST(ImputeSeries, SingleInteriorGapIsMean) {
  auto r = impute_series({{1, 2.0}, {2, std::nullopt}, {3, 4.0}});
  EXPECT_DOUBLE_EQ(r.at(2), 3.0);
}

TEST(ImputeSeries, LeadingAndTrailingCarry) {
  auto r = impute_series({{1, std::nullopt}, {2, 5.0}, {3, std::nullopt}});
  EXPECT_DOUBLE_EQ(r.at(1), 5.0);
  EXPECT_DOUBLE_EQ(r.at(3), 5.0);
}

TEST(ImputeSeries, LongGapInterpolatesLinearly) {
  auto r = impute_series({{1, 1.0}, {2, std::nullopt}, {3, std::nullopt}, {4, 4.0}});
  // Independent oracle: straight line through (1, 1) and (4, 4).
  for (int t = 1; t <= 4; ++t) EXPECT_NEAR(r.at(t), 1.0 + (t - 1) * (4.0 - 1.0) / 3.0, 1e-15);
}

TEST(ImputeSeries, AllMissingThrowsAndObservedUntouched) {
  EXPECT_THROW(impute_series({{1, std::nullopt}}), InputError);
  std::map<int, std::optional<double>> s{{1, 1.5}, {2, std::nullopt}, {3, 7.0}, {4, std::nullopt}};
  auto once = impute_series(s);
  EXPECT_EQ(once.at(1), 1.5);
  EXPECT_EQ(once.at(3), 7.0);
  std::map<int, std::optional<double>> again;
  for (auto [k, v] : once) again[k] = v;
  EXPECT_EQ(impute_series(again), once);
}

TEST(ImputeCovariates, DropsActorsWithoutAnySeries) {
  auto cov = full_covariates(3);
  for (int t = 1; t <= 3; ++t) cov.monadic[{t, "C"}].milex.reset();
  auto r = impute_covariates(cov, {}, {1, 2, 3});
  EXPECT_EQ(r.dropped_actors, std::vector<std::string>{"C"});
}

TEST(PrepareCovariates, Transforms) {
  CovariateTables c;
  c.monadic[{1, "A"}] = {1.0, 0.0, -10.0};
  c.monadic[{1, "B"}] = {std::exp(2.0), std::expm1(1.0), 10.0};
  c.dyadic[dyad_key(1, "A", "B")] = {1.0, std::exp(3.0)};
  auto p = prepare_covariates(c);
  EXPECT_EQ(*p.find_monadic(1, "A")->gdp, 0.0);
  EXPECT_EQ(*p.find_monadic(1, "A")->milex, 0.0);
  EXPECT_NEAR(*p.find_monadic(1, "B")->gdp, 2.0, 1e-15);
  EXPECT_NEAR(*p.find_monadic(1, "B")->milex, 1.0, 1e-15);
  EXPECT_NEAR(*p.find_dyadic(1, "A", "B")->distance_km, 3.0, 1e-15);
  EXPECT_EQ(poldiff(-10, 10), 20.0);
}

TEST(PrepareCovariates, RejectsNonpositiveGdp) {
  CovariateTables c;
  c.monadic[{1, "A"}] = {0.0, 0.0, 0.0};
  EXPECT_THROW(prepare_covariates(c), InputError);
}

TEST(Registry, RejectsPredecessorCycle) {
  auto p = write_temp("reg.csv", "actor,first,last,predecessor\nA,1,2,B\nB,1,2,A\n");
  EXPECT_THROW(load_registry(p), InputError);
}
