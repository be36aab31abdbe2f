#include "sqlova/nl2sql_layer.hpp"

#include <cmath>

#include "sqlova/error.hpp"

namespace sqlova {

namespace {

double fan_in_bound(std::size_t fan_in) { return 1.0 / std::sqrt(static_cast<double>(fan_in)); }

Var zeros(Graph& g, std::size_t cols) { return g.constant(Matrix(1, cols)); }

Var one_hot_row(Graph& g, std::size_t n, std::size_t hot) {
  Matrix m(1, n);
  m(0, hot) = 1.0;
  return g.constant(std::move(m));
}

// [n x 1] scores to a [1 x n] distribution.
Var softmax_column(Var scores) { return ad::softmax_rows(ad::transpose(scores)); }

}  // namespace

Var column_attention(Var E, Var D, Var W) {
  // scores[c, n] = D_c^T W E_n
  const Var projected = ad::matmul_nt(E, W);  // [L x dim(D)]
  const Var p = ad::softmax_rows(ad::matmul_nt(D, projected));
  return ad::matmul(p, E);
}

Nl2SqlLayer::Nl2SqlLayer(Nl2SqlConfig cfg) : cfg_(cfg) {
  check(cfg_.input_dim > 0 && cfg_.lstm_hidden > 0 && cfg_.hidden > 0, ErrorKind::Config,
        "nl2sql layer dimensions must be positive");
  check(cfg_.lstm_layers >= 1, ErrorKind::Config, "nl2sql layer needs at least one LSTM layer");
  check(cfg_.max_conds >= 1, ErrorKind::Config, "max_conds must be positive");
}

template <class F>
void Nl2SqlLayer::for_each_param(F&& f) {
  const std::size_t H = cfg_.lstm_hidden;
  const std::size_t ctx = 2 * H;
  const std::size_t h = cfg_.hidden;
  const double lstm_bound = fan_in_bound(H);

  auto lstm = [&](const std::string& prefix, std::size_t in, LstmIds& ids) {
    f(prefix + "fwd.input", 4 * H, in + 1, lstm_bound, ids.fwd_input);
    f(prefix + "fwd.recurrent", 4 * H, H, lstm_bound, ids.fwd_recurrent);
    f(prefix + "bwd.input", 4 * H, in + 1, lstm_bound, ids.bwd_input);
    f(prefix + "bwd.recurrent", 4 * H, H, lstm_bound, ids.bwd_recurrent);
  };
  auto affine = [&](const std::string& name, std::size_t out, std::size_t in, ParamId& slot) {
    f(name, out, in + 1, fan_in_bound(in), slot);
  };
  auto bilinear = [&](const std::string& name, ParamId& slot) {
    f(name, ctx, ctx, fan_in_bound(ctx), slot);
  };

  ids_.question_lstm.resize(cfg_.lstm_layers);
  ids_.header_lstm.resize(cfg_.lstm_layers);
  for (std::size_t l = 0; l < cfg_.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? cfg_.input_dim : ctx;
    lstm("head.question_lstm.layer" + std::to_string(l) + ".", in, ids_.question_lstm[l]);
  }
  for (std::size_t l = 0; l < cfg_.lstm_layers; ++l) {
    const std::size_t in = l == 0 ? cfg_.input_dim : ctx;
    lstm("head.header_lstm.layer" + std::to_string(l) + ".", in, ids_.header_lstm[l]);
  }

  bilinear("head.select_column.attention", ids_.sc_attention);
  affine("head.select_column.column_proj", h, ctx, ids_.sc_column);
  affine("head.select_column.context_proj", h, ctx, ids_.sc_context);
  affine("head.select_column.score", 1, 2 * h, ids_.sc_score);

  bilinear("head.select_agg.attention", ids_.sa_attention);
  affine("head.select_agg.hidden", h, ctx, ids_.sa_hidden);
  affine("head.select_agg.score", kNumAggOps, h, ids_.sa_score);

  affine("head.where_number.column_score", 1, ctx, ids_.wn_column_score);
  affine("head.where_number.init_hidden", H, ctx, ids_.wn_init_hidden);
  affine("head.where_number.init_cell", H, ctx, ids_.wn_init_cell);
  lstm("head.where_number.lstm.", ctx, ids_.wn_lstm);
  affine("head.where_number.token_score", 1, ctx, ids_.wn_token_score);
  affine("head.where_number.hidden", h, ctx, ids_.wn_hidden);
  affine("head.where_number.score", cfg_.max_conds + 1, h, ids_.wn_score);

  bilinear("head.where_column.attention", ids_.wc_attention);
  affine("head.where_column.column_proj", h, ctx, ids_.wc_column);
  affine("head.where_column.context_proj", h, ctx, ids_.wc_context);
  affine("head.where_column.score", 1, 2 * h, ids_.wc_score);

  bilinear("head.where_operator.attention", ids_.wo_attention);
  affine("head.where_operator.column_proj", h, ctx, ids_.wo_column);
  affine("head.where_operator.context_proj", h, ctx, ids_.wo_context);
  affine("head.where_operator.hidden", h, 2 * h, ids_.wo_hidden);
  affine("head.where_operator.score", kNumCondOps, h, ids_.wo_score);

  // The first where-value map acts on [E_n; W C_c; W D_c; W V_op]. It is held
  // as a token part with the bias and a bias-free condition part so the
  // condition half is computed once per (column, op) rather than per token.
  bilinear("head.where_value.attention", ids_.wv_attention);
  affine("head.where_value.context_proj", h, ctx, ids_.wv_context);
  affine("head.where_value.column_proj", h, ctx, ids_.wv_column);
  affine("head.where_value.op_proj", h, kNumCondOps, ids_.wv_op);
  affine("head.where_value.token_proj", h, ctx, ids_.wv_token);
  f("head.where_value.condition_proj", h, 3 * h, fan_in_bound(ctx + 3 * h), ids_.wv_condition);
  affine("head.where_value.score", 2, h, ids_.wv_score);
}

void Nl2SqlLayer::register_params(ParamStore& store, Rng& rng) {
  for_each_param([&](const std::string& name, std::size_t r, std::size_t c, double bound,
                     ParamId& slot) {
    Matrix m(r, c);
    init_uniform(m, rng, bound);
    slot = store.add(name, std::move(m), ParamGroup::Head);
  });
  bound_ = true;
}

void Nl2SqlLayer::bind(const ParamStore& store) {
  for_each_param([&](const std::string& name, std::size_t r, std::size_t c, double,
                     ParamId& slot) {
    slot = store.id(name);
    const Matrix& m = store.value(slot);
    check(m.rows() == r && m.cols() == c, ErrorKind::Config,
          name + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
              ", expected " + std::to_string(r) + "x" + std::to_string(c));
  });
  bound_ = true;
}

Var Nl2SqlLayer::bilstm(Graph& g, const ParamStore& params, Var x,
                        const std::vector<LstmIds>& layers) const {
  const std::size_t H = cfg_.lstm_hidden;
  for (const LstmIds& l : layers) {
    const Var h0 = zeros(g, H);
    const Var fwd = ad::lstm_sequence(ad::affine(x, g.param(params, l.fwd_input)),
                                      g.param(params, l.fwd_recurrent), h0, h0, false);
    const Var bwd = ad::lstm_sequence(ad::affine(x, g.param(params, l.bwd_input)),
                                      g.param(params, l.bwd_recurrent), h0, h0, true);
    const Var both[] = {fwd, bwd};
    x = ad::concat_cols(both);
  }
  return x;
}

ContextVectors Nl2SqlLayer::contextualize(Graph& g, const ParamStore& params,
                                          const EncoderOutput& enc) const {
  check(bound_, ErrorKind::Internal, "nl2sql layer used before bind()");
  check(enc.question.rows() > 0, ErrorKind::Contract, "the question has no tokens");
  check(!enc.headers.empty(), ErrorKind::Contract, "the table has no headers");
  ContextVectors cv;
  cv.E = bilstm(g, params, enc.question, ids_.question_lstm);
  std::vector<Var> finals;
  finals.reserve(enc.headers.size());
  for (const Var& header : enc.headers) {
    const Var out = bilstm(g, params, header, ids_.header_lstm);
    finals.push_back(ad::slice_rows(out, out.rows() - 1, 1));
  }
  cv.D = ad::concat_rows(finals);
  return cv;
}

Var Nl2SqlLayer::select_column(Graph& g, const ParamStore& params, const ContextVectors& cv) const {
  const Var C = column_attention(cv.E, cv.D, g.param(params, ids_.sc_attention));
  const Var parts[] = {ad::affine(cv.D, g.param(params, ids_.sc_column)),
                       ad::affine(C, g.param(params, ids_.sc_context))};
  const Var s = ad::affine(ad::tanh(ad::concat_cols(parts)), g.param(params, ids_.sc_score));
  return softmax_column(s);
}

Var Nl2SqlLayer::select_agg(Graph& g, const ParamStore& params, const ContextVectors& cv) const {
  const Var C = column_attention(cv.E, cv.D, g.param(params, ids_.sa_attention));
  const Var hidden = ad::tanh(ad::affine(C, g.param(params, ids_.sa_hidden)));
  return ad::softmax_rows(ad::affine(hidden, g.param(params, ids_.sa_score)));
}

Var Nl2SqlLayer::where_number(Graph& g, const ParamStore& params, const ContextVectors& cv) const {
  // Self-attention over columns summarises the table.
  const Var p_col = softmax_column(ad::affine(cv.D, g.param(params, ids_.wn_column_score)));
  const Var table = ad::matmul(p_col, cv.D);
  const Var h0 = ad::affine(table, g.param(params, ids_.wn_init_hidden));
  const Var c0 = ad::affine(table, g.param(params, ids_.wn_init_cell));
  const LstmIds& l = ids_.wn_lstm;
  const Var fwd = ad::lstm_sequence(ad::affine(cv.E, g.param(params, l.fwd_input)),
                                    g.param(params, l.fwd_recurrent), h0, c0, false);
  const Var bwd = ad::lstm_sequence(ad::affine(cv.E, g.param(params, l.bwd_input)),
                                    g.param(params, l.bwd_recurrent), h0, c0, true);
  const Var both[] = {fwd, bwd};
  const Var seeded = ad::concat_cols(both);
  const Var p_tok = softmax_column(ad::affine(seeded, g.param(params, ids_.wn_token_score)));
  const Var question = ad::matmul(p_tok, cv.E);
  const Var hidden = ad::tanh(ad::affine(question, g.param(params, ids_.wn_hidden)));
  return ad::softmax_rows(ad::affine(hidden, g.param(params, ids_.wn_score)));
}

Var Nl2SqlLayer::where_column(Graph& g, const ParamStore& params, const ContextVectors& cv) const {
  const Var C = column_attention(cv.E, cv.D, g.param(params, ids_.wc_attention));
  const Var parts[] = {ad::affine(cv.D, g.param(params, ids_.wc_column)),
                       ad::affine(C, g.param(params, ids_.wc_context))};
  const Var s = ad::affine(ad::tanh(ad::concat_cols(parts)), g.param(params, ids_.wc_score));
  return ad::sigmoid(ad::transpose(s));
}

Var Nl2SqlLayer::where_operator(Graph& g, const ParamStore& params,
                                const ContextVectors& cv) const {
  const Var C = column_attention(cv.E, cv.D, g.param(params, ids_.wo_attention));
  const Var parts[] = {ad::affine(cv.D, g.param(params, ids_.wo_column)),
                       ad::affine(C, g.param(params, ids_.wo_context))};
  const Var hidden =
      ad::tanh(ad::affine(ad::concat_cols(parts), g.param(params, ids_.wo_hidden)));
  return ad::softmax_rows(ad::affine(hidden, g.param(params, ids_.wo_score)));
}

std::vector<std::pair<Var, Var>> Nl2SqlLayer::where_value(
    Graph& g, const ParamStore& params, const ContextVectors& cv,
    const std::vector<std::pair<std::size_t, CondOp>>& pairs) const {
  std::vector<std::pair<Var, Var>> result;
  if (pairs.empty()) return result;
  const std::size_t n = cv.D.rows();
  const Var C = column_attention(cv.E, cv.D, g.param(params, ids_.wv_attention));
  const Var ctx = ad::affine(C, g.param(params, ids_.wv_context));
  const Var col = ad::affine(cv.D, g.param(params, ids_.wv_column));
  const Var tokens = ad::affine(cv.E, g.param(params, ids_.wv_token));
  const Var cond_w = g.param(params, ids_.wv_condition);
  const Var score_w = g.param(params, ids_.wv_score);
  std::vector<Var> op_proj(kNumCondOps);
  for (std::size_t op = 0; op < kNumCondOps; ++op)
    op_proj[op] = ad::affine(one_hot_row(g, kNumCondOps, op), g.param(params, ids_.wv_op));

  result.reserve(pairs.size());
  for (const auto& [c, op] : pairs) {
    check(c < n, ErrorKind::Bounds, "where-value column out of range");
    const Var parts[] = {ad::slice_rows(ctx, c, 1), ad::slice_rows(col, c, 1),
                         op_proj[static_cast<std::size_t>(op)]};
    const Var cond = ad::matmul_nt(ad::concat_cols(parts), cond_w);
    const Var s = ad::affine(ad::tanh(ad::add_row(tokens, cond)), score_w);  // [L x 2]
    result.emplace_back(softmax_column(ad::slice_cols(s, 0, 1)),
                        softmax_column(ad::slice_cols(s, 1, 1)));
  }
  return result;
}

HeadOutput Nl2SqlLayer::forward(Graph& g, const ParamStore& params, const EncoderOutput& enc,
                                const ValueRequest& values) const {
  const ContextVectors cv = contextualize(g, params, enc);
  HeadOutput out;
  out.p_sc = select_column(g, params, cv);
  out.p_sa = select_agg(g, params, cv);
  out.p_wn = where_number(g, params, cv);
  out.p_wc = where_column(g, params, cv);
  out.p_wo = where_operator(g, params, cv);

  std::vector<std::pair<std::size_t, CondOp>> pairs;
  if (values) {
    pairs = *values;
  } else {
    for (std::size_t c = 0; c < enc.headers.size(); ++c)
      for (std::size_t op = 0; op < kNumCondOps; ++op) pairs.emplace_back(c, static_cast<CondOp>(op));
  }
  const auto wv = where_value(g, params, cv, pairs);
  for (std::size_t i = 0; i < pairs.size(); ++i)
    out.wv.emplace(value_slot(pairs[i].first, pairs[i].second), wv[i]);
  return out;
}

}  // namespace sqlova
