#include <gtest/gtest.h>

#include <cmath>

#include "sqlova/error.hpp"
#include "sqlova/model_output.hpp"
#include "test_util.hpp"

using namespace sqlova;
using namespace sqlova::fixtures;

namespace {

const Vocabulary& vocab() {
  static const Vocabulary v({"how", "many", "players", "scored", "more", "than", "4", "ann", "bob"});
  return v;
}

const std::string kQ1 = "how many players scored more than 4";

}  // namespace

TEST(ModelOutput, UniformIsValid) {
  EXPECT_FALSE(find_invariant_violation(uniform_output(3, 5)));
  ModelOutput bad = uniform_output(3, 5);
  bad.p_sc[0] += 1e-6;
  EXPECT_TRUE(find_invariant_violation(bad));
  bad = uniform_output(3, 5);
  bad.p_wc[1] = 1.0;
  EXPECT_TRUE(find_invariant_violation(bad));
  bad = uniform_output(3, 5);
  bad.p_wo = Matrix(2, 3, 1.0 / 3);
  EXPECT_TRUE(find_invariant_violation(bad));
}

TEST(ModelOutput, JsonRoundTrip) {
  ModelOutput o = uniform_output(2, 3);
  peak(o.p_sc, 1);
  peak(wv_start(o, 1, CondOp::Lt), 2);
  const ModelOutput back = model_output_from_json(to_json(o));
  EXPECT_EQ(back.p_sc, o.p_sc);
  EXPECT_EQ(back.p_wv_start, o.p_wv_start);
  EXPECT_EQ(back.p_sa, o.p_sa);
  const auto j = to_json(o);
  EXPECT_EQ(j["p_wv_start"].size(), 2u);
  EXPECT_EQ(j["p_wv_start"][0].size(), 3u);
  EXPECT_EQ(j["p_wv_start"][0][0].size(), 3u);
  auto broken = j;
  broken["p_sc"] = {0.7, 0.7};
  EXPECT_THROW(model_output_from_json(broken), Error);
  broken = j;
  broken.erase("p_wo");
  EXPECT_THROW(model_output_from_json(broken), Error);
}

TEST(ModelOutput, RankingBreaksTiesByIndex) {
  const std::vector<double> p = {0.2, 0.4, 0.2, 0.4};
  EXPECT_EQ(ranked_indices(p), (std::vector<std::size_t>{1, 3, 0, 2}));
  EXPECT_EQ(argmax(p), 1u);
  const std::vector<double> wc = {0.9, 0.1, 0.8};
  const auto top = ranked_indices(wc);
  EXPECT_EQ(top[0], 0u);
  EXPECT_EQ(top[1], 2u);
}

TEST(ModelOutput, SpanSearch) {
  const std::vector<double> s = {0.1, 0.6, 0.3}, e = {0.2, 0.2, 0.6};
  const auto best = ranked_spans(s, e, 3, 1);
  ASSERT_EQ(best.size(), 1u);
  EXPECT_EQ(best[0].start, 1u);
  EXPECT_EQ(best[0].end, 2u);
  EXPECT_NEAR(best[0].prob, 0.36, 1e-15);
  EXPECT_EQ(ranked_spans(s, e, 3, 100).size(), 6u);
  for (const auto& sp : ranked_spans(s, e, 2, 100)) {
    EXPECT_LE(sp.start, sp.end);
    EXPECT_LT(sp.end, sp.start + 2);
  }
  // Span length 1 forces start == end.
  const auto one = ranked_spans(s, e, 1, 1);
  EXPECT_EQ(one[0].start, one[0].end);
}

TEST(ModelOutput, GreedyZeroConditions) {
  const TokenizedText tok = tokenize_question(kQ1, vocab());
  ModelOutput o = uniform_output(2, tok.subtokens.size());
  peak(o.p_wn, 0);
  peak(o.p_sc, 0, 0.8);
  const ScoredSketch s = decode_greedy(o, kQ1, tok);
  EXPECT_TRUE(s.sketch.conds.empty());
  EXPECT_NEAR(s.log_prob, std::log(0.8) + std::log(1.0 / 6) + std::log(0.9), 1e-12);
  EXPECT_EQ(s.sketch.agg, AggOp::None);
}

TEST(ModelOutput, GreedyDecodesQ1) {
  const TokenizedText tok = tokenize_question(kQ1, vocab());
  ModelOutput o = uniform_output(2, tok.subtokens.size());
  peak(o.p_sc, 0);
  peak(o.p_sa.row(0), static_cast<std::size_t>(AggOp::Count));
  peak(o.p_wn, 1);
  o.p_wc = {0.1, 0.95};
  peak(o.p_wo.row(1), static_cast<std::size_t>(CondOp::Gt));
  peak(wv_start(o, 1, CondOp::Gt), 6);
  peak(wv_end(o, 1, CondOp::Gt), 6);
  const ScoredSketch s = decode_greedy(o, kQ1, tok);
  const SqlSketch want{0, AggOp::Count, {{1, CondOp::Gt, "4"}}};
  EXPECT_EQ(s.sketch, want);
  EXPECT_NEAR(s.log_prob, s.parts.total(), 1e-15);
  EXPECT_NEAR(s.parts.where_value, 2 * std::log(0.9), 1e-12);
  EXPECT_NEAR(s.parts.where_column, std::log(0.95), 1e-12);
  // Deterministic.
  const ScoredSketch again = decode_greedy(o, kQ1, tok);
  EXPECT_EQ(again.sketch, s.sketch);
  EXPECT_EQ(again.log_prob, s.log_prob);
}

TEST(ModelOutput, GreedyClampsConditionCount) {
  const TokenizedText tok = tokenize_question(kQ1, vocab());
  ModelOutput o = uniform_output(2, tok.subtokens.size());
  peak(o.p_wn, 4);
  const ScoredSketch s = decode_greedy(o, kQ1, tok);
  EXPECT_EQ(s.sketch.conds.size(), 2u);
  EXPECT_NEAR(s.parts.where_number, std::log(0.9), 1e-12);
}

TEST(ModelOutput, GreedyRespectsMaxSpan) {
  const TokenizedText tok = tokenize_question(kQ1, vocab());
  ModelOutput o = uniform_output(1, tok.subtokens.size());
  peak(o.p_wn, 1);
  peak(wv_start(o, 0, CondOp::Eq), 0);
  peak(wv_end(o, 0, CondOp::Eq), 6);
  const ScoredSketch s = decode_greedy(o, kQ1, tok, {3});
  ASSERT_EQ(s.sketch.conds.size(), 1u);
  const auto words = basic_tokenize(s.sketch.conds[0].value);
  EXPECT_LE(words.size(), 3u);
  EXPECT_EQ(decode_greedy(o, kQ1, tok, {12}).sketch.conds[0].value, kQ1);
}
