#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "sqlova/error.hpp"
#include "sqlova/metrics.hpp"
#include "test_util.hpp"

using namespace sqlova;

namespace {

TableMap f1_tables() {
  TableMap t;
  t.emplace("f1", fixtures::fixture_f1());
  return t;
}

ScoredSketch scored(SqlSketch s, double log_prob = -1.0) { return {std::move(s), log_prob, {}}; }

const SqlSketch kGoldA{0, AggOp::Count, {{1, CondOp::Gt, "4"}, {0, CondOp::Eq, "bob"}}};
const SqlSketch kGoldB{1, AggOp::Sum, {}};

}  // namespace

TEST(Metrics, PerfectPredictions) {
  const std::vector<Example> gold = {{"a", "f1", kGoldA}, {"b", "f1", kGoldB}};
  const EvalReport r = evaluate({scored(kGoldA), scored(kGoldB, -2.0)}, gold, f1_tables());
  EXPECT_EQ(r.lf_accuracy, 1.0);
  EXPECT_EQ(r.x_accuracy, 1.0);
  EXPECT_EQ(r.submodule.sel_column, 1.0);
  EXPECT_EQ(r.submodule.where_value, 1.0);
  EXPECT_NEAR(r.pr.auc, 1.0, 1e-12);
}

TEST(Metrics, ReorderedConditionsCountAsCorrect) {
  SqlSketch swapped = kGoldA;
  std::swap(swapped.conds[0], swapped.conds[1]);
  const EvalReport r = evaluate({scored(swapped)}, {{"a", "f1", kGoldA}}, f1_tables());
  EXPECT_EQ(r.lf_correct, 1u);
  EXPECT_EQ(r.submodule.where_op, 1.0);
}

TEST(Metrics, WrongAggregation) {
  const SqlSketch gold{1, AggOp::Count, {}};
  const SqlSketch pred{1, AggOp::Sum, {}};
  const EvalReport r = evaluate({scored(pred)}, {{"q", "f1", gold}}, f1_tables());
  EXPECT_EQ(r.submodule.sel_column, 1.0);
  EXPECT_EQ(r.submodule.sel_agg, 0.0);
  EXPECT_EQ(r.lf_accuracy, 0.0);
  EXPECT_EQ(r.x_accuracy, 0.0);  // 3 vs 10

  // Different sketch, same answer.
  const EvalReport x = evaluate({scored({1, AggOp::Max, {}})},
                                {{"q", "f1", {1, AggOp::Max, {{1, CondOp::Gt, "4"}}}}}, f1_tables());
  EXPECT_EQ(x.lf_accuracy, 0.0);
  EXPECT_EQ(x.x_accuracy, 1.0);
}

TEST(Metrics, SlotComparison) {
  const SqlSketch pred{0, AggOp::Count, {{1, CondOp::Gt, "5"}, {0, CondOp::Lt, "bob"}}};
  const SlotMatch m = compare_slots(pred, kGoldA);
  EXPECT_TRUE(m.sel_column);
  EXPECT_TRUE(m.sel_agg);
  EXPECT_TRUE(m.where_number);
  EXPECT_TRUE(m.where_column);
  EXPECT_FALSE(m.where_op);
  EXPECT_FALSE(m.where_value);
}

TEST(Metrics, LengthMismatchIsUsageError) {
  try {
    evaluate({scored(kGoldA)}, {}, f1_tables());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Usage);
  }
}

TEST(PrSweep, HandExample) {
  const PrCurve c = pr_sweep({0.9, 0.5}, {true, false});
  ASSERT_EQ(c.points.size(), 2u);
  EXPECT_EQ(c.points[0].threshold, 0.5);
  EXPECT_EQ(c.points[0].recall, 1.0);
  EXPECT_EQ(c.points[0].precision, 0.5);
  EXPECT_EQ(c.points[1].threshold, 0.9);
  EXPECT_EQ(c.points[1].precision, 1.0);
  EXPECT_EQ(c.points[1].recall, 0.5);
  // (0,1) -> (0.5,1) -> (1,0.5)
  EXPECT_NEAR(c.auc, 0.5 + 0.5 * 0.75, 1e-12);
}

TEST(PrSweep, AllCorrect) {
  const PrCurve c = pr_sweep({0.1, 0.4, 0.4, 0.8}, {true, true, true, true});
  EXPECT_EQ(c.points.size(), 3u);
  for (const auto& p : c.points) EXPECT_EQ(p.precision, 1.0);
  EXPECT_NEAR(c.auc, 1.0, 1e-12);
}

TEST(PrSweep, Properties) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 100; ++t) {
    std::vector<double> conf;
    std::vector<bool> ok;
    for (std::size_t i = 0, n = 1 + rng() % 20; i < n; ++i) {
      conf.push_back(static_cast<double>(rng() % 10) / 10.0);
      ok.push_back(rng() % 2);
    }
    const PrCurve c = pr_sweep(conf, ok);
    EXPECT_GE(c.auc, 0.0);
    EXPECT_LE(c.auc, 1.0);
    EXPECT_EQ(c.points.front().recall, 1.0);
    const double acc = static_cast<double>(std::count(ok.begin(), ok.end(), true)) / ok.size();
    EXPECT_NEAR(c.points.front().precision, acc, 1e-12);
    for (std::size_t i = 1; i < c.points.size(); ++i) {
      EXPECT_LT(c.points[i - 1].threshold, c.points[i].threshold);
      EXPECT_GE(c.points[i - 1].recall, c.points[i].recall);
    }
  }
}

TEST(Metrics, ImplicationsHold) {
  // LF correct implies X correct; w-val implies w-col and w-op.
  std::mt19937_64 rng(9);
  const TableMap tables = f1_tables();
  auto random_sketch = [&] {
    SqlSketch s{rng() % 2, static_cast<AggOp>(rng() % 6), {}};
    for (std::size_t i = 0, n = rng() % 3; i < n; ++i)
      s.conds.push_back({rng() % 2, static_cast<CondOp>(rng() % 3), std::to_string(rng() % 6)});
    return s;
  };
  for (int t = 0; t < 500; ++t) {
    const SqlSketch g = random_sketch();
    const SqlSketch p = rng() % 3 == 0 ? g : random_sketch();
    const EvalReport r = evaluate({scored(p)}, {{"q", "f1", g}}, tables);
    if (r.lf_correct) EXPECT_EQ(r.x_correct, 1u);
    const SlotMatch m = compare_slots(p, g);
    if (m.where_value) {
      EXPECT_TRUE(m.where_column);
      EXPECT_TRUE(m.where_op);
    }
  }
}

TEST(Metrics, JsonAndCsv) {
  const EvalReport r = evaluate({scored(kGoldA, -0.1), scored(kGoldA, -3.0)},
                                {{"a", "f1", kGoldA}, {"b", "f1", kGoldB}}, f1_tables());
  const auto j = to_json(r);
  for (const char* key : {"lf_accuracy", "x_accuracy", "s_col", "s_agg", "w_num", "w_col", "w_op",
                          "w_val", "pr_curve", "auc"})
    EXPECT_TRUE(j.contains(key) || j["submodule"].contains(key)) << key;
  std::ostringstream csv;
  write_pr_csv(csv, r.pr);
  const std::string text = csv.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "threshold,precision,recall");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
