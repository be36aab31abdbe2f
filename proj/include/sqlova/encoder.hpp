#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sqlova/autograd.hpp"
#include "sqlova/params.hpp"
#include "sqlova/sql.hpp"
#include "sqlova/tokenizer.hpp"

namespace sqlova {

inline constexpr std::size_t kDefaultMaxLen = 222;

/// Half-open index range.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - start; }
  friend bool operator==(const Span&, const Span&) = default;
};

/// [CLS] question [SEP] header_1 [SEP] ... header_N [SEP], with segment 0 up
/// to and including the first [SEP] and segment 1 afterwards.
struct EncoderInput {
  std::vector<int> token_ids;
  std::vector<int> segment_ids;
  Span question_span;
  std::vector<Span> header_spans;  // trailing [SEP] excluded
};

EncoderInput assemble_input(std::span<const int> question_ids,
                            const std::vector<std::vector<int>>& header_ids,
                            std::size_t max_len = kDefaultMaxLen);
EncoderInput assemble_input(const TokenizedText& question, const Table& table,
                            const Vocabulary& vocab, std::size_t max_len = kDefaultMaxLen);

/// Pluggable contextual encoder: one output matrix [len x d_model] per layer.
class ContextualEncoder {
 public:
  virtual ~ContextualEncoder() = default;
  virtual std::vector<Var> encode(Graph& g, const ParamStore& params,
                                  std::span<const int> token_ids,
                                  std::span<const int> segment_ids) const = 0;
  virtual std::size_t model_dim() const = 0;
};

/// Final-two-layer concatenation, partitioned by the input layout.
struct EncoderOutput {
  Var H;                     // [len x 2*d_model]
  Var cls;                   // row 0
  Var question;              // question rows (may have zero rows)
  std::vector<Var> headers;  // one block of rows per header
};

EncoderOutput encode_table_aware(Graph& g, const ParamStore& params, const EncoderInput& input,
                                 const ContextualEncoder& encoder);

/// Partitions an already computed H by the input layout.
EncoderOutput split_encoder_output(Var H, const EncoderInput& input);

struct ToyTransformerConfig {
  std::size_t vocab_size = 0;
  std::size_t max_len = kDefaultMaxLen;
  std::size_t n_layers = 4;
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t ff = 256;
  double init_std = 0.02;
};

/// Small post-norm transformer standing in for a pre-trained encoder.
class ToyTransformer : public ContextualEncoder {
 public:
  explicit ToyTransformer(ToyTransformerConfig cfg);

  /// Adds "encoder.*" arrays (group Encoder) to the store and binds to them.
  void register_params(ParamStore& store, Rng& rng);
  /// Binds to arrays already present in the store (e.g. after loading).
  void bind(const ParamStore& store);

  std::vector<Var> encode(Graph& g, const ParamStore& params, std::span<const int> token_ids,
                          std::span<const int> segment_ids) const override;
  std::size_t model_dim() const override { return cfg_.d_model; }
  const ToyTransformerConfig& config() const { return cfg_; }

 private:
  struct LayerIds {
    ParamId query, key, value, output, attn_norm, ffn_in, ffn_out, ffn_norm;
  };

  ToyTransformerConfig cfg_;
  ParamId token_emb_ = 0, position_emb_ = 0, segment_emb_ = 0;
  std::vector<LayerIds> layers_;
};

inline constexpr double kLayerNormEps = 1e-12;

}  // namespace sqlova
