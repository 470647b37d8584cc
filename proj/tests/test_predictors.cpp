#include <gtest/gtest.h>

#include <sstream>
#include <stdexcept>

#include "supest/csv.hpp"
#include "supest/distributions.hpp"
#include "supest/predictors.hpp"
#include "supest/sampling.hpp"

using namespace supest;

TEST(OraclePredictor, Examples) {
  const auto u = oracle_predictor(zipf_distribution(4, 0.0));
  EXPECT_DOUBLE_EQ(u.predict(2), 0.25);
  EXPECT_THROW((void)u.predict(5), std::out_of_range);
  const auto z = oracle_predictor(zipf_distribution(2, 0.5));
  EXPECT_NEAR(z.predict(1), 0.585786, 1e-6);
  EXPECT_EQ(u.kind(), Predictor::Kind::oracle);
}

TEST(NoisyOracle, UnitNoiseIsExact) {
  const auto d = zipf_distribution(1000, 0.8);
  const auto exact = oracle_predictor(d);
  const auto noisy = noisy_oracle_predictor(d, 1.0, 99);
  for (const auto& m : d.entries()) EXPECT_EQ(noisy.predict(m.id), exact.predict(m.id));
}

TEST(NoisyOracle, SandwichHoldsExhaustively) {
  const auto d = zipf_distribution(100000, 0.5);
  for (const double b : {1.5, 2.0, 8.0}) {
    const auto pred = noisy_oracle_predictor(d, b, 7);
    for (const auto& m : d.entries()) {
      const double q = pred.predict(m.id);
      ASSERT_LE(q, m.prob);
      ASSERT_LE(m.prob, b * q);
      ASSERT_GE(q, pred.floor());
      ASSERT_LE(q, 1.0);
    }
  }
}

TEST(NoisyOracle, UniformRangeAndDeterminism) {
  const auto d = uniform_distribution(10, 1000);
  const auto a = noisy_oracle_predictor(d, 2.0, 5);
  const auto b = noisy_oracle_predictor(d, 2.0, 5);
  const auto c = noisy_oracle_predictor(d, 2.0, 6);
  bool differs = false;
  for (const auto& m : d.entries()) {
    EXPECT_GE(a.predict(m.id), 0.05);
    EXPECT_LE(a.predict(m.id), 0.1);
    EXPECT_EQ(a.predict(m.id), b.predict(m.id));
    differs = differs || a.predict(m.id) != c.predict(m.id);
  }
  EXPECT_TRUE(differs);
  EXPECT_THROW(noisy_oracle_predictor(d, 0.5, 1), std::invalid_argument);
}

TEST(EmpiricalPredictor, Examples) {
  const Distribution single(1, {{4, 1.0}});
  Rng rng(1);
  EXPECT_DOUBLE_EQ(empirical_predictor(single, 1.0, rng).predict(4), 1.0);

  const auto d = zipf_distribution(1000, 1.0);
  Rng r2(2);
  const auto pred = empirical_predictor(d, 0.01, r2);
  EXPECT_DOUBLE_EQ(pred.predict(123456), 1.0 / static_cast<double>(d.n()));
}

TEST(EmpiricalPredictor, Concentration) {
  const Distribution d(1000000, {{1, 0.5}, {2, 0.5}});
  Rng rng(3);
  const auto pred = empirical_predictor(d, 0.5, rng);
  EXPECT_GE(pred.predict(1), 0.45);
  EXPECT_LE(pred.predict(1), 0.55);
  EXPECT_NEAR(pred.predict(1) + pred.predict(2), 1.0, 1e-12);
}

TEST(EmpiricalPredictor, RebuildIsIdentical) {
  const auto d = zipf_distribution(5000, 0.5);
  Rng a(77);
  Rng b(77);
  const auto p = empirical_predictor(d, 0.2, a);
  const auto q = empirical_predictor(d, 0.2, b);
  for (const auto& m : d.entries()) EXPECT_EQ(p.predict(m.id), q.predict(m.id));
  for (const auto& m : d.entries()) {
    EXPECT_GE(p.predict(m.id), p.floor());
    EXPECT_LE(p.predict(m.id), 1.0);
  }
}

TEST(TablePredictor, FloorApplies) {
  const auto t = table_predictor({{7, 0.001}, {8, 1e-9}}, 10000);
  EXPECT_DOUBLE_EQ(t.predict(7), 0.001);
  EXPECT_DOUBLE_EQ(t.predict(9), 1e-4);
  EXPECT_DOUBLE_EQ(t.predict(8), 1e-4);
  EXPECT_EQ(known_ids(t), (std::vector<ElementId>{7, 8}));
}

TEST(TablePredictor, FileRoundTrip) {
  const auto d = zipf_distribution(20, 1.0);
  const auto oracle = oracle_predictor(d);
  std::vector<ElementId> ids;
  for (const auto& m : d.entries()) ids.push_back(m.id);
  std::stringstream buf;
  save_predictor_table(oracle, ids, buf);
  const auto loaded = load_table_predictor(buf, d.n());
  for (const auto id : ids) EXPECT_EQ(loaded.predict(id), oracle.predict(id));

  std::istringstream bad("id,predicted_prob\n1,2.5\n");
  EXPECT_THROW(load_table_predictor(bad, 10), ParseError);
  std::istringstream wrong("id,prob\n1,0.5\n");
  EXPECT_THROW(load_table_predictor(wrong, 10), ParseError);
}
