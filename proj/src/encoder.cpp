#include "sqlova/encoder.hpp"

#include <cmath>

#include "sqlova/error.hpp"

namespace sqlova {

EncoderInput assemble_input(std::span<const int> question_ids,
                            const std::vector<std::vector<int>>& header_ids,
                            std::size_t max_len) {
  check(!header_ids.empty(), ErrorKind::Contract, "table-aware input needs at least one header");
  EncoderInput in;
  in.token_ids.push_back(kClsId);
  in.question_span.start = 1;
  in.token_ids.insert(in.token_ids.end(), question_ids.begin(), question_ids.end());
  in.question_span.end = in.token_ids.size();
  in.token_ids.push_back(kSepId);
  in.segment_ids.assign(in.token_ids.size(), 0);
  for (const auto& h : header_ids) {
    Span s{in.token_ids.size(), 0};
    in.token_ids.insert(in.token_ids.end(), h.begin(), h.end());
    s.end = in.token_ids.size();
    in.header_spans.push_back(s);
    in.token_ids.push_back(kSepId);
  }
  in.segment_ids.resize(in.token_ids.size(), 1);
  if (in.token_ids.size() > max_len)
    fail(ErrorKind::Length, "encoder input of " + std::to_string(in.token_ids.size()) +
                                " tokens exceeds max_len " + std::to_string(max_len));
  return in;
}

EncoderInput assemble_input(const TokenizedText& question, const Table& table,
                            const Vocabulary& vocab, std::size_t max_len) {
  std::vector<std::vector<int>> headers;
  headers.reserve(table.headers.size());
  for (const auto& h : table.headers) headers.push_back(tokenize_header(h.name, vocab));
  const auto ids = question.ids();
  return assemble_input(ids, headers, max_len);
}

EncoderOutput split_encoder_output(Var H, const EncoderInput& input) {
  check(H.rows() == input.token_ids.size(), ErrorKind::Internal,
        "encoder output rows do not match the input layout");
  EncoderOutput out;
  out.H = H;
  out.cls = ad::slice_rows(H, 0, 1);
  out.question = ad::slice_rows(H, input.question_span.start, input.question_span.size());
  for (const auto& s : input.header_spans) out.headers.push_back(ad::slice_rows(H, s.start, s.size()));
  return out;
}

EncoderOutput encode_table_aware(Graph& g, const ParamStore& params, const EncoderInput& input,
                                 const ContextualEncoder& encoder) {
  auto layers = encoder.encode(g, params, input.token_ids, input.segment_ids);
  check(layers.size() >= 2, ErrorKind::Internal,
        "contextual encoder produced " + std::to_string(layers.size()) +
            " layers; the final two are required");
  const Var a = layers[layers.size() - 2];
  const Var b = layers.back();
  check(a.value().same_shape(b.value()), ErrorKind::Internal,
        "final encoder layers differ in shape");
  const Var parts[] = {a, b};
  return split_encoder_output(ad::concat_cols(parts), input);
}

// ---------------------------------------------------------------------------

ToyTransformer::ToyTransformer(ToyTransformerConfig cfg) : cfg_(cfg) {
  check(cfg_.n_layers >= 2, ErrorKind::Config, "toy transformer needs at least two layers");
  check(cfg_.heads >= 1 && cfg_.d_model % cfg_.heads == 0, ErrorKind::Config,
        "d_model must be divisible by the number of heads");
  check(cfg_.vocab_size > kNumReserved, ErrorKind::Config, "vocabulary too small");
}

void ToyTransformer::register_params(ParamStore& store, Rng& rng) {
  const std::size_t d = cfg_.d_model;
  auto normal = [&](std::size_t r, std::size_t c) {
    Matrix m(r, c);
    init_normal(m, rng, cfg_.init_std);
    return m;
  };
  // Packed affine [out x (in+1)]: normal weights, zero bias column.
  auto affine = [&](std::size_t out, std::size_t in) {
    Matrix m = normal(out, in + 1);
    for (std::size_t o = 0; o < out; ++o) m(o, in) = 0.0;
    return m;
  };
  auto norm = [&] {
    Matrix m(2, d);
    for (std::size_t j = 0; j < d; ++j) m(0, j) = 1.0;
    return m;
  };
  const auto G = ParamGroup::Encoder;
  store.add("encoder.token_embedding", normal(cfg_.vocab_size, d), G);
  store.add("encoder.position_embedding", normal(cfg_.max_len, d), G);
  store.add("encoder.segment_embedding", normal(2, d), G);
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    store.add(p + "attn_query", affine(d, d), G);
    store.add(p + "attn_key", affine(d, d), G);
    store.add(p + "attn_value", affine(d, d), G);
    store.add(p + "attn_output", affine(d, d), G);
    store.add(p + "attn_norm", norm(), G);
    store.add(p + "ffn_in", affine(cfg_.ff, d), G);
    store.add(p + "ffn_out", affine(d, cfg_.ff), G);
    store.add(p + "ffn_norm", norm(), G);
  }
  bind(store);
}

void ToyTransformer::bind(const ParamStore& store) {
  auto expect = [&](const std::string& name, std::size_t r, std::size_t c) {
    const ParamId id = store.id(name);
    const Matrix& m = store.value(id);
    check(m.rows() == r && m.cols() == c, ErrorKind::Config,
          name + " has shape " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) +
              ", expected " + std::to_string(r) + "x" + std::to_string(c));
    return id;
  };
  const std::size_t d = cfg_.d_model;
  token_emb_ = expect("encoder.token_embedding", cfg_.vocab_size, d);
  position_emb_ = expect("encoder.position_embedding", cfg_.max_len, d);
  segment_emb_ = expect("encoder.segment_embedding", 2, d);
  layers_.clear();
  for (std::size_t l = 0; l < cfg_.n_layers; ++l) {
    const std::string p = "encoder.layer" + std::to_string(l) + ".";
    layers_.push_back({expect(p + "attn_query", d, d + 1), expect(p + "attn_key", d, d + 1),
                       expect(p + "attn_value", d, d + 1), expect(p + "attn_output", d, d + 1),
                       expect(p + "attn_norm", 2, d), expect(p + "ffn_in", cfg_.ff, d + 1),
                       expect(p + "ffn_out", d, cfg_.ff + 1), expect(p + "ffn_norm", 2, d)});
  }
}

std::vector<Var> ToyTransformer::encode(Graph& g, const ParamStore& params,
                                        std::span<const int> token_ids,
                                        std::span<const int> segment_ids) const {
  check(token_ids.size() == segment_ids.size(), ErrorKind::Contract,
        "token and segment id sequences differ in length");
  check(token_ids.size() <= cfg_.max_len, ErrorKind::Length,
        "input longer than the position table");
  check(!layers_.empty(), ErrorKind::Internal, "toy transformer used before bind()");
  const std::size_t len = token_ids.size();
  std::vector<int> positions(len);
  for (std::size_t i = 0; i < len; ++i) positions[i] = static_cast<int>(i);

  const Var tok = ad::gather_rows(g.param(params, token_emb_), token_ids);
  const Var pos = ad::gather_rows(g.param(params, position_emb_), positions);
  const Var seg = ad::gather_rows(g.param(params, segment_emb_), segment_ids);
  const Var emb_terms[] = {tok, pos, seg};
  Var x = ad::add_n(emb_terms);

  const std::size_t dh = cfg_.d_model / cfg_.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outputs;
  for (const LayerIds& L : layers_) {
    const Var q = ad::affine(x, g.param(params, L.query));
    const Var k = ad::affine(x, g.param(params, L.key));
    const Var v = ad::affine(x, g.param(params, L.value));
    std::vector<Var> heads;
    for (std::size_t h = 0; h < cfg_.heads; ++h) {
      const Var qh = ad::slice_cols(q, h * dh, dh);
      const Var kh = ad::slice_cols(k, h * dh, dh);
      const Var vh = ad::slice_cols(v, h * dh, dh);
      const Var attn = ad::softmax_rows(ad::scale(ad::matmul_nt(qh, kh), inv_sqrt));
      heads.push_back(ad::matmul(attn, vh));
    }
    const Var attn_out = ad::affine(ad::concat_cols(heads), g.param(params, L.output));
    x = ad::layer_norm(ad::add(x, attn_out), g.param(params, L.attn_norm), kLayerNormEps);
    const Var hidden = ad::gelu(ad::affine(x, g.param(params, L.ffn_in)));
    const Var ffn = ad::affine(hidden, g.param(params, L.ffn_out));
    x = ad::layer_norm(ad::add(x, ffn), g.param(params, L.ffn_norm), kLayerNormEps);
    outputs.push_back(x);
  }
  return outputs;
}

}  // namespace sqlova
