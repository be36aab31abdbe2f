#include "sqlova/shallow_layer.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "sqlova/error.hpp"

namespace sqlova {

namespace {

constexpr std::size_t kFixedComponents = 11;

Var column_as_row(Var x, std::size_t component) {
  return ad::transpose(ad::slice_cols(x, component, 1));
}

}  // namespace

void validate(const ShallowConfig& cfg, std::size_t d_out) {
  if (cfg.value_end_offset < cfg.max_headers)
    fail(ErrorKind::Config, "shallow layer: value_end_offset " +
                                std::to_string(cfg.value_end_offset) + " must be >= max_headers " +
                                std::to_string(cfg.max_headers) +
                                " so start and end components do not overlap");
  if (d_out < cfg.value_end_offset + cfg.max_headers)
    fail(ErrorKind::Config, "shallow layer: encoder output width " + std::to_string(d_out) +
                                " is below value_end_offset + max_headers = " +
                                std::to_string(cfg.value_end_offset + cfg.max_headers));
  if (d_out < kFixedComponents)
    fail(ErrorKind::Config, "shallow layer: encoder output width must be at least 11");
  check(cfg.max_conds >= 1, ErrorKind::Config, "max_conds must be positive");
}

Var shallow_select_column(Var header_first) {
  return ad::softmax_rows(column_as_row(header_first, kShallowSelectComponent));
}

Var shallow_select_agg(Var header_first) {
  return ad::softmax_rows(ad::slice_cols(header_first, kShallowAggComponent, kNumAggOps));
}

Var shallow_where_column(Var header_first) {
  return ad::sigmoid(column_as_row(header_first, kShallowWhereComponent));
}

Var shallow_where_operator(Var header_first) {
  std::vector<Var> parts;
  for (std::size_t component : kShallowOpComponent)
    parts.push_back(ad::slice_cols(header_first, component, 1));
  return ad::softmax_rows(ad::concat_cols(parts));
}

Var shallow_where_number(Var cls, Var w) { return ad::softmax_rows(ad::affine(cls, w)); }

std::pair<Var, Var> shallow_where_value(Var question, std::size_t mu, const ShallowConfig& cfg) {
  validate(cfg, question.cols());
  if (mu >= cfg.max_headers)
    fail(ErrorKind::Config, "shallow layer: column " + std::to_string(mu) +
                                " exceeds max_headers " + std::to_string(cfg.max_headers));
  return {ad::softmax_rows(column_as_row(question, mu)),
          ad::softmax_rows(column_as_row(question, mu + cfg.value_end_offset))};
}

ShallowLayer::ShallowLayer(ShallowConfig cfg, std::size_t d_out) : cfg_(cfg), d_out_(d_out) {
  validate(cfg_, d_out_);
}

void ShallowLayer::register_params(ParamStore& store, Rng& rng) {
  Matrix w(cfg_.max_conds + 1, d_out_ + 1);
  init_uniform(w, rng, 1.0 / std::sqrt(static_cast<double>(d_out_)));
  where_number_ = store.add("shallow.where_number", std::move(w), ParamGroup::Head);
  bound_ = true;
}

void ShallowLayer::bind(const ParamStore& store) {
  where_number_ = store.id("shallow.where_number");
  const Matrix& m = store.value(where_number_);
  check(m.rows() == cfg_.max_conds + 1 && m.cols() == d_out_ + 1, ErrorKind::Config,
        "shallow.where_number does not match the configured shape");
  bound_ = true;
}

HeadOutput ShallowLayer::forward(Graph& g, const ParamStore& params, const EncoderOutput& enc,
                                 const ValueRequest& values) const {
  check(bound_, ErrorKind::Internal, "shallow layer used before bind()");
  check(enc.H.cols() == d_out_, ErrorKind::Internal, "encoder width differs from configuration");
  check(enc.question.rows() > 0, ErrorKind::Contract, "the question has no tokens");
  const std::size_t n = enc.headers.size();
  if (n > cfg_.max_headers)
    fail(ErrorKind::Config, "table has " + std::to_string(n) + " headers; the shallow layer allows " +
                                std::to_string(cfg_.max_headers));
  std::vector<Var> firsts;
  for (const Var& h : enc.headers) firsts.push_back(ad::slice_rows(h, 0, 1));
  const Var header_first = ad::concat_rows(firsts);

  HeadOutput out;
  out.p_sc = shallow_select_column(header_first);
  out.p_sa = shallow_select_agg(header_first);
  out.p_wn = shallow_where_number(enc.cls, g.param(params, where_number_));
  out.p_wc = shallow_where_column(header_first);
  out.p_wo = shallow_where_operator(header_first);

  // The value distributions depend on the column only.
  std::vector<std::pair<std::size_t, CondOp>> pairs;
  if (values) {
    pairs = *values;
  } else {
    for (std::size_t c = 0; c < n; ++c)
      for (std::size_t op = 0; op < kNumCondOps; ++op) pairs.emplace_back(c, static_cast<CondOp>(op));
  }
  std::vector<std::optional<std::pair<Var, Var>>> per_column(n);
  for (const auto& [c, op] : pairs) {
    check(c < n, ErrorKind::Bounds, "where-value column out of range");
    if (!per_column[c]) per_column[c] = shallow_where_value(enc.question, c, cfg_);
    out.wv.emplace(value_slot(c, op), *per_column[c]);
  }
  return out;
}

}  // namespace sqlova
