#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "sqlova/model_output.hpp"
#include "sqlova/sql.hpp"

namespace sqlova {

struct EgConfig {
  std::size_t n_agg_pairs = 4;
  std::size_t n_wc = kDefaultMaxConds + 2;
  std::size_t n_ops = kNumCondOps;
  std::size_t n_spans = 2;
  std::size_t n_wn = 3;
  std::size_t max_span = 12;
};

/// Throws Config unless every width is positive (and n_ops <= 3).
void validate(const EgConfig& cfg);

struct SelectChoice {
  std::size_t sel = 0;
  AggOp agg = AggOp::None;
  double log_sel_column = 0.0;
  double log_sel_agg = 0.0;
  bool fallback = false;  // every candidate pair was pruned
};

/// Keeps the greedy (sel, agg) pair unless it pairs a Text column with a
/// numeric aggregation; otherwise takes the most probable legal pair among
/// the top n_agg_pairs by p_sc * p_sa, falling back to the best (sel, NONE).
SelectChoice eg_select(const ModelOutput& out, const Table& table, const EgConfig& cfg);

struct WhereChoice {
  std::vector<Condition> conds;
  double log_where_number = 0.0;
  double log_where_column = 0.0;
  double log_where_op = 0.0;
  double log_where_value = 0.0;
  bool fallback = false;  // no candidate survived; greedy conditions returned
};

/// Keeps the greedy where-clause when each condition and the conjunction
/// execute to a non-Empty result. Otherwise searches condition counts in
/// p_wn order; within a count, candidates built from the top columns, ops
/// and spans are tried by descending joint probability, skipping any whose
/// conditions individually, or jointly, execute to Empty.
WhereChoice eg_where(const ModelOutput& out, std::string_view question, const TokenizedText& tok,
                     const Table& table, std::size_t sel, AggOp agg, const EgConfig& cfg);

struct EgResult {
  ScoredSketch scored;
  bool select_fallback = false;
  bool where_fallback = false;
};

EgResult decode_eg(const ModelOutput& out, std::string_view question, const TokenizedText& tok,
                   const Table& table, const EgConfig& cfg = {});

}  // namespace sqlova
