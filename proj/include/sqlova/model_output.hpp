#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sqlova/matrix.hpp"
#include "sqlova/sql.hpp"
#include "sqlova/tokenizer.hpp"

namespace sqlova {

/// The six probability structures of the sketch decoder for one question.
struct ModelOutput {
  std::vector<double> p_sc;  // [N_h]
  Matrix p_sa;               // [N_h x 6], AggOp order
  std::vector<double> p_wn;  // [max_conds + 1]; element k = P(k conditions)
  std::vector<double> p_wc;  // [N_h], independent sigmoids
  Matrix p_wo;               // [N_h x 3], CondOp order
  Matrix p_wv_start;         // [(N_h * 3) x L], row c * 3 + op
  Matrix p_wv_end;

  std::size_t num_columns() const { return p_sc.size(); }
  std::size_t question_len() const { return p_wv_start.cols(); }
  std::size_t max_conds() const { return p_wn.empty() ? 0 : p_wn.size() - 1; }

  std::span<const double> wv_start(std::size_t col, CondOp op) const {
    return p_wv_start.row(col * kNumCondOps + static_cast<std::size_t>(op));
  }
  std::span<const double> wv_end(std::size_t col, CondOp op) const {
    return p_wv_end.row(col * kNumCondOps + static_cast<std::size_t>(op));
  }
};

/// Normalisation and shape invariants; returns a description of the first
/// violation, or nullopt.
std::optional<std::string> find_invariant_violation(const ModelOutput& out, double tol = 1e-9);

nlohmann::json to_json(const ModelOutput& out);
ModelOutput model_output_from_json(const nlohmann::json& j);

/// Per-sub-module log-probabilities of a decoded sketch.
struct SketchLogProbs {
  double sel_column = 0.0;
  double sel_agg = 0.0;
  double where_number = 0.0;
  double where_column = 0.0;
  double where_op = 0.0;
  double where_value = 0.0;

  double total() const {
    return sel_column + sel_agg + where_number + where_column + where_op + where_value;
  }
};

nlohmann::json to_json(const SketchLogProbs& parts);

struct ScoredSketch {
  SqlSketch sketch;
  double log_prob = 0.0;  // == parts.total()
  SketchLogProbs parts;
};

struct DecodeConfig {
  std::size_t max_span = 12;  // in subtokens
};

struct ValueSpan {
  std::size_t start = 0;
  std::size_t end = 0;  // inclusive
  double prob = 0.0;
};

/// Indices ordered by descending probability; ties keep the lower index first.
std::vector<std::size_t> ranked_indices(std::span<const double> probs);
std::size_t argmax(std::span<const double> probs);

/// Spans (start <= end < start + max_span) ranked by p_start[s] * p_end[e],
/// ties by (start, end). Returns at most `limit` spans.
std::vector<ValueSpan> ranked_spans(std::span<const double> p_start, std::span<const double> p_end,
                                    std::size_t max_span, std::size_t limit);

/// Independent argmax per slot: select column, its aggregation, condition
/// count k (clamped to N_h), the top-k where columns, and per column its
/// operator and best value span.
ScoredSketch decode_greedy(const ModelOutput& out, std::string_view question,
                           const TokenizedText& tok, const DecodeConfig& cfg = {});

}  // namespace sqlova
