#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "sqlova/encoder.hpp"
#include "sqlova/head.hpp"
#include "sqlova/nl2sql_layer.hpp"
#include "sqlova/params.hpp"
#include "sqlova/shallow_layer.hpp"

namespace sqlova {

enum class LayerKind { Nl2Sql, Shallow };

const char* layer_name(LayerKind kind);
LayerKind parse_layer(std::string_view name);  // "nl2sql" | "shallow"

struct ModelConfig {
  LayerKind layer = LayerKind::Nl2Sql;
  ToyTransformerConfig encoder;
  std::size_t lstm_hidden = 100;
  std::size_t lstm_layers = 2;
  std::size_t hidden = 100;
  std::size_t max_conds = kDefaultMaxConds;
  std::size_t value_end_offset = 100;
  std::size_t max_headers = 44;

  std::size_t encoder_width() const { return 2 * encoder.d_model; }
  ShallowConfig shallow() const { return {value_end_offset, max_headers, max_conds}; }
  Nl2SqlConfig nl2sql() const {
    return {encoder_width(), lstm_hidden, lstm_layers, hidden, max_conds};
  }
};

nlohmann::json to_json(const ModelConfig& cfg);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// A question made ready for the encoder.
struct PreparedExample {
  std::string question;
  TokenizedText tokens;
  EncoderInput input;
  const Table* table = nullptr;
};

/// Toy encoder plus one decoding layer over a single parameter store.
class Model {
 public:
  /// Fresh parameters drawn from `seed`.
  Model(ModelConfig cfg, std::uint64_t seed);
  /// Configuration from the checkpoint metadata, arrays restored strictly.
  explicit Model(const Checkpoint& ckpt);

  const ModelConfig& config() const { return cfg_; }
  ParamStore& params() { return params_; }
  const ParamStore& params() const { return params_; }
  const DecodingLayer& head() const;
  const ToyTransformer& encoder() const { return encoder_; }

  Checkpoint checkpoint() const;
  /// Only the encoder arrays; used to share an encoder between layers.
  Checkpoint encoder_checkpoint() const;

  /// Throws Length when the input does not fit and Config when the
  /// vocabulary size differs from the model's.
  PreparedExample prepare(std::string question, const Table& table, const Vocabulary& vocab) const;

  HeadOutput forward(Graph& g, const PreparedExample& ex, const ValueRequest& values) const;
  ModelOutput infer(const PreparedExample& ex) const;

 private:
  void build(Rng* rng);

  ModelConfig cfg_;
  ParamStore params_;
  ToyTransformer encoder_;
  std::variant<Nl2SqlLayer, ShallowLayer> head_;
};

}  // namespace sqlova
