#include "sqlova/model.hpp"

#include "sqlova/error.hpp"

namespace sqlova {

using nlohmann::json;

const char* layer_name(LayerKind kind) {
  return kind == LayerKind::Nl2Sql ? "nl2sql" : "shallow";
}

LayerKind parse_layer(std::string_view name) {
  if (name == "nl2sql") return LayerKind::Nl2Sql;
  if (name == "shallow") return LayerKind::Shallow;
  fail(ErrorKind::Config, "unknown layer '" + std::string(name) + "' (expected nl2sql or shallow)");
}

json to_json(const ModelConfig& cfg) {
  return json{{"layer", layer_name(cfg.layer)},
              {"vocab_size", cfg.encoder.vocab_size},
              {"max_len", cfg.encoder.max_len},
              {"n_layers", cfg.encoder.n_layers},
              {"d_model", cfg.encoder.d_model},
              {"heads", cfg.encoder.heads},
              {"ff", cfg.encoder.ff},
              {"init_std", cfg.encoder.init_std},
              {"lstm_hidden", cfg.lstm_hidden},
              {"lstm_layers", cfg.lstm_layers},
              {"hidden", cfg.hidden},
              {"max_conds", cfg.max_conds},
              {"value_end_offset", cfg.value_end_offset},
              {"max_headers", cfg.max_headers}};
}

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig cfg;
    cfg.layer = parse_layer(j.at("layer").get<std::string>());
    cfg.encoder.vocab_size = j.at("vocab_size").get<std::size_t>();
    cfg.encoder.max_len = j.at("max_len").get<std::size_t>();
    cfg.encoder.n_layers = j.at("n_layers").get<std::size_t>();
    cfg.encoder.d_model = j.at("d_model").get<std::size_t>();
    cfg.encoder.heads = j.at("heads").get<std::size_t>();
    cfg.encoder.ff = j.at("ff").get<std::size_t>();
    cfg.encoder.init_std = j.at("init_std").get<double>();
    cfg.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    cfg.lstm_layers = j.at("lstm_layers").get<std::size_t>();
    cfg.hidden = j.at("hidden").get<std::size_t>();
    cfg.max_conds = j.at("max_conds").get<std::size_t>();
    cfg.value_end_offset = j.at("value_end_offset").get<std::size_t>();
    cfg.max_headers = j.at("max_headers").get<std::size_t>();
    return cfg;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string("model configuration: ") + e.what());
  }
}

namespace {

std::variant<Nl2SqlLayer, ShallowLayer> make_head(const ModelConfig& cfg) {
  if (cfg.layer == LayerKind::Shallow) return ShallowLayer(cfg.shallow(), cfg.encoder_width());
  return Nl2SqlLayer(cfg.nl2sql());
}

}  // namespace

Model::Model(ModelConfig cfg, std::uint64_t seed)
    : cfg_(cfg), encoder_(cfg.encoder), head_(make_head(cfg)) {
  Rng rng(seed);
  build(&rng);
}

Model::Model(const Checkpoint& ckpt)
    : Model(model_config_from_json([&] {
              try {
                return json::parse(ckpt.meta);
              } catch (const json::exception& e) {
                fail(ErrorKind::Parse, std::string("checkpoint metadata: ") + e.what());
              }
            }()),
            0) {
  restore(params_, ckpt, true);
}

void Model::build(Rng* rng) {
  encoder_.register_params(params_, *rng);
  std::visit([&](auto& layer) { layer.register_params(params_, *rng); }, head_);
}

const DecodingLayer& Model::head() const {
  return std::visit([](const auto& layer) -> const DecodingLayer& { return layer; }, head_);
}

Checkpoint Model::checkpoint() const { return snapshot(params_, to_json(cfg_).dump()); }

Checkpoint Model::encoder_checkpoint() const {
  Checkpoint ckpt{to_json(cfg_).dump(), {}};
  for (ParamId id = 0; id < params_.size(); ++id)
    if (params_.group(id) == ParamGroup::Encoder)
      ckpt.arrays.emplace_back(params_.name(id), params_.value(id));
  return ckpt;
}

PreparedExample Model::prepare(std::string question, const Table& table,
                               const Vocabulary& vocab) const {
  check(vocab.size() == cfg_.encoder.vocab_size, ErrorKind::Config,
        "vocabulary has " + std::to_string(vocab.size()) + " entries; the model expects " +
            std::to_string(cfg_.encoder.vocab_size));
  PreparedExample ex;
  ex.tokens = tokenize_question(question, vocab);
  ex.input = assemble_input(ex.tokens, table, vocab, cfg_.encoder.max_len);
  ex.question = std::move(question);
  ex.table = &table;
  return ex;
}

HeadOutput Model::forward(Graph& g, const PreparedExample& ex, const ValueRequest& values) const {
  const EncoderOutput enc = encode_table_aware(g, params_, ex.input, encoder_);
  return head().forward(g, params_, enc, values);
}

ModelOutput Model::infer(const PreparedExample& ex) const {
  Graph g(false);
  return to_model_output(forward(g, ex, std::nullopt));
}

}  // namespace sqlova
