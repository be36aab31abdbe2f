#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "sqlova/head.hpp"
#include "sqlova/params.hpp"

namespace sqlova {

struct Nl2SqlConfig {
  std::size_t input_dim = 128;   // encoder output width
  std::size_t lstm_hidden = 100;  // per direction
  std::size_t lstm_layers = 2;
  std::size_t hidden = 100;  // width of the intermediate affine maps
  std::size_t max_conds = kDefaultMaxConds;
};

/// Question-token and per-header LSTM encodings.
struct ContextVectors {
  Var E;  // [L x 2*lstm_hidden]
  Var D;  // [N_h x 2*lstm_hidden]
};

/// Column-conditioned question summaries: row c is sum_n p(n|c) E_n with
/// p(.|c) = softmax_n(D_c^T W E_n). W is [dim(D) x dim(E)].
Var column_attention(Var E, Var D, Var W);

/// Six-module sketch decoder on top of shared question and header biLSTMs.
/// Every affine map belongs to exactly one module.
class Nl2SqlLayer : public DecodingLayer {
 public:
  explicit Nl2SqlLayer(Nl2SqlConfig cfg);

  /// Adds "head.*" arrays (group Head) to the store and binds to them.
  void register_params(ParamStore& store, Rng& rng);
  void bind(const ParamStore& store);

  HeadOutput forward(Graph& g, const ParamStore& params, const EncoderOutput& enc,
                     const ValueRequest& values) const override;

  ContextVectors contextualize(Graph& g, const ParamStore& params,
                               const EncoderOutput& enc) const;
  Var select_column(Graph& g, const ParamStore& params, const ContextVectors& cv) const;
  Var select_agg(Graph& g, const ParamStore& params, const ContextVectors& cv) const;
  Var where_number(Graph& g, const ParamStore& params, const ContextVectors& cv) const;
  Var where_column(Graph& g, const ParamStore& params, const ContextVectors& cv) const;
  Var where_operator(Graph& g, const ParamStore& params, const ContextVectors& cv) const;
  /// (p_start, p_end) for each requested pair, in request order.
  std::vector<std::pair<Var, Var>> where_value(
      Graph& g, const ParamStore& params, const ContextVectors& cv,
      const std::vector<std::pair<std::size_t, CondOp>>& pairs) const;

  const Nl2SqlConfig& config() const { return cfg_; }

 private:
  struct LstmIds {
    ParamId fwd_input, fwd_recurrent, bwd_input, bwd_recurrent;
  };
  struct Ids {
    std::vector<LstmIds> question_lstm, header_lstm;
    ParamId sc_attention, sc_column, sc_context, sc_score;
    ParamId sa_attention, sa_hidden, sa_score;
    ParamId wn_column_score, wn_init_hidden, wn_init_cell;
    LstmIds wn_lstm;
    ParamId wn_token_score, wn_hidden, wn_score;
    ParamId wc_attention, wc_column, wc_context, wc_score;
    ParamId wo_attention, wo_column, wo_context, wo_hidden, wo_score;
    ParamId wv_attention, wv_context, wv_column, wv_op, wv_token, wv_condition, wv_score;
  };

  /// Calls f(name, rows, cols, init_bound, slot) for every array in
  /// registration order.
  template <class F>
  void for_each_param(F&& f);
  Var bilstm(Graph& g, const ParamStore& params, Var x, const std::vector<LstmIds>& layers) const;

  Nl2SqlConfig cfg_;
  Ids ids_{};
  bool bound_ = false;
};

}  // namespace sqlova
