// Command-line entry point: data generation, training, prediction,
// evaluation and direct execution of sketches.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sqlova/dataset_io.hpp"
#include "sqlova/eg_decoder.hpp"
#include "sqlova/error.hpp"
#include "sqlova/executor.hpp"
#include "sqlova/metrics.hpp"
#include "sqlova/model.hpp"
#include "sqlova/synthetic.hpp"
#include "sqlova/training.hpp"

using namespace sqlova;
using nlohmann::json;

namespace {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Io: return 3;
    case ErrorKind::Internal: return 4;
    default: return 2;
  }
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + path);
  return out;
}

void close_out(std::ofstream& out, const std::string& path) {
  out.close();
  if (!out) fail(ErrorKind::Io, "error writing " + path);
}

// Flat JSON config object -> "--key value" arguments placed before the real
// command-line arguments, so that the command line wins.
std::vector<std::string> config_args(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Usage, "cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, "config file " + path + ": " + e.what());
  }
  check(j.is_object(), ErrorKind::Usage, "config file must hold a JSON object");
  std::vector<std::string> args;
  for (const auto& [key, value] : j.items()) {
    args.push_back("--" + key);
    if (value.is_string())
      args.push_back(value.get<std::string>());
    else if (value.is_boolean())
      args.push_back(value.get<bool>() ? "true" : "false");
    else
      args.push_back(value.dump());
  }
  return args;
}

json sketch_json(const SqlSketch& s) { return to_json(s); }

SqlSketch sketch_from_record(const json& j) {
  if (j.contains("sketch")) return sketch_from_json(j.at("sketch"));
  return sketch_from_json(j.at("sql"));
}

// ---------------------------------------------------------------------------

struct ModelFlags {
  std::string layer = "nl2sql";
  std::size_t d_model = 64, n_layers = 4, heads = 4, ff = 256, max_len = kDefaultMaxLen;
  std::size_t lstm_hidden = 100, hidden = 100, max_conds = kDefaultMaxConds;
  std::size_t value_end_offset = 44, max_headers = 44;

  void add(CLI::App* cmd) {
    cmd->add_option("--layer", layer, "Decoding layer")->check(CLI::IsMember({"nl2sql", "shallow"}));
    cmd->add_option("--d-model", d_model, "Toy encoder width");
    cmd->add_option("--n-layers", n_layers, "Toy encoder layers");
    cmd->add_option("--heads", heads, "Attention heads");
    cmd->add_option("--ff", ff, "Feed-forward width");
    cmd->add_option("--max-len", max_len, "Maximum encoder input length");
    cmd->add_option("--lstm-hidden", lstm_hidden, "LSTM hidden size per direction");
    cmd->add_option("--hidden", hidden, "Width of the intermediate affine maps");
    cmd->add_option("--max-conds", max_conds, "Maximum number of where conditions");
    cmd->add_option("--value-end-offset", value_end_offset, "Shallow layer end-index offset");
    cmd->add_option("--max-headers", max_headers, "Shallow layer header limit");
  }

  ModelConfig config(std::size_t vocab_size) const {
    ModelConfig c;
    c.layer = parse_layer(layer);
    c.encoder = {vocab_size, max_len, n_layers, d_model, heads, ff, 0.02};
    c.lstm_hidden = lstm_hidden;
    c.hidden = hidden;
    c.max_conds = max_conds;
    c.value_end_offset = value_end_offset;
    c.max_headers = max_headers;
    return c;
  }
};

struct DataFlags {
  std::string tables, examples, vocab;

  void add(CLI::App* cmd, bool need_vocab = true) {
    cmd->add_option("--tables", tables, "Table records (JSON lines)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--examples", examples, "Question records (JSON lines)")
        ->required()
        ->check(CLI::ExistingFile);
    if (need_vocab)
      cmd->add_option("--vocab", vocab, "Vocabulary file")->required()->check(CLI::ExistingFile);
  }
};

// ---------------------------------------------------------------------------

int cmd_gen_synthetic(const std::string& out_dir, const SyntheticConfig& cfg) {
  std::filesystem::create_directories(out_dir);
  const SyntheticData data = generate_synthetic(cfg);
  auto write = [&](const std::string& name, auto&& body) {
    const std::string path = (std::filesystem::path(out_dir) / name).string();
    auto out = open_out(path);
    body(out);
    close_out(out, path);
  };
  write("tables.jsonl", [&](std::ostream& o) { write_tables(o, data.tables); });
  write("train.jsonl", [&](std::ostream& o) { write_examples(o, data.train); });
  write("dev.jsonl", [&](std::ostream& o) { write_examples(o, data.dev); });
  data.vocab.save((std::filesystem::path(out_dir) / "vocab.txt").string());
  std::cout << json{{"tables", data.tables.size()},
                    {"train", data.train.size()},
                    {"dev", data.dev.size()},
                    {"vocab_size", data.vocab.size()}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_build_vocab(const std::string& tables_path, const std::vector<std::string>& example_paths,
                    const std::string& out, const VocabOptions& opts) {
  const TableMap tables = load_tables(tables_path);
  std::vector<Example> examples;
  for (const auto& p : example_paths) {
    auto more = load_examples(p);
    examples.insert(examples.end(), more.begin(), more.end());
  }
  const Vocabulary vocab = build_vocabulary(corpus_words(examples, tables), opts);
  vocab.save(out);
  std::cout << json{{"vocab_size", vocab.size()}}.dump() << '\n';
  return 0;
}

int cmd_train(const DataFlags& data, const ModelFlags& mf, TrainConfig tc,
              std::uint64_t init_seed, const std::string& checkpoint_out,
              const std::string& encoder_from, const std::string& log_path) {
  const TableMap tables = load_tables(data.tables);
  const auto examples = load_examples(data.examples, mf.max_conds);
  validate_examples(examples, tables, mf.max_conds);
  const Vocabulary vocab = Vocabulary::load(data.vocab);

  Model model(mf.config(vocab.size()), init_seed);
  if (!encoder_from.empty()) {
    const Checkpoint enc = load_checkpoint(encoder_from);
    std::size_t copied = 0;
    for (const auto& [name, m] : enc.arrays) {
      if (!name.starts_with("encoder.")) continue;
      Matrix& dst = model.params().value(model.params().id(name));
      check(dst.same_shape(m), ErrorKind::Config, "encoder array " + name + " has wrong shape");
      dst = m;
      ++copied;
    }
    check(copied == model.encoder_checkpoint().arrays.size(), ErrorKind::Config,
          encoder_from + " does not hold every encoder array");
  }

  std::ofstream log;
  if (!log_path.empty()) log = open_out(log_path);
  const TrainReport report =
      train(model, examples, tables, vocab, tc, [&](const EpochRecord& rec) {
        const std::string line = to_json(rec).dump();
        std::cerr << line << '\n';
        if (log.is_open()) log << line << '\n' << std::flush;
      });
  if (log.is_open()) close_out(log, log_path);
  save_checkpoint(checkpoint_out, model.checkpoint());
  std::cout << json{{"used", report.used},
                    {"skipped_unlocatable", report.skipped.unlocatable},
                    {"skipped_too_long", report.skipped.too_long},
                    {"checkpoint", checkpoint_out}}
                   .dump()
            << '\n';
  return 0;
}

int cmd_predict(const DataFlags& data, const std::string& checkpoint, const std::string& out_path,
                bool eg, const EgConfig& eg_cfg, const std::string& dump_outputs) {
  const TableMap tables = load_tables(data.tables);
  const Vocabulary vocab = Vocabulary::load(data.vocab);
  const Model model(load_checkpoint(checkpoint));
  const auto examples = load_examples(data.examples, model.config().max_conds);
  for (const auto& ex : examples) lookup_table(tables, ex.table_id);
  validate(eg_cfg);

  auto out = open_out(out_path);
  std::ofstream dump;
  if (!dump_outputs.empty()) dump = open_out(dump_outputs);
  std::size_t fallbacks = 0, skipped = 0;
  for (const auto& ex : examples) {
    const Table& table = lookup_table(tables, ex.table_id);
    json rec{{"table_id", ex.table_id}, {"eg_used", eg}};
    PreparedExample p;
    try {
      p = model.prepare(ex.question, table, vocab);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Length) throw;
      ++skipped;
      rec["sketch"] = sketch_json(SqlSketch{});
      rec["log_prob"] = nullptr;
      rec["skipped"] = e.what();
      rec["fallback"] = false;
      out << rec.dump() << '\n';
      continue;
    }
    const ModelOutput mo = model.infer(p);
    if (dump.is_open()) dump << to_json(mo).dump() << '\n';
    ScoredSketch s;
    bool fallback = false;
    if (eg) {
      const EgResult r = decode_eg(mo, p.question, p.tokens, table, eg_cfg);
      s = r.scored;
      fallback = r.select_fallback || r.where_fallback;
    } else {
      s = decode_greedy(mo, p.question, p.tokens, {eg_cfg.max_span});
    }
    fallbacks += fallback;
    rec["sketch"] = sketch_json(s.sketch);
    rec["log_prob"] = s.log_prob;
    rec["parts"] = to_json(s.parts);
    rec["fallback"] = fallback;
    out << rec.dump() << '\n';
  }
  close_out(out, out_path);
  if (dump.is_open()) close_out(dump, dump_outputs);
  std::cerr << json{{"predictions", examples.size()}, {"fallbacks", fallbacks}, {"skipped", skipped}}
                   .dump()
            << '\n';
  return 0;
}

std::vector<ScoredSketch> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  std::vector<ScoredSketch> preds;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ScoredSketch s;
      s.sketch = sketch_from_record(j);
      const auto lp = j.find("log_prob");
      s.log_prob = lp == j.end()     ? 0.0
                   : lp->is_null()   ? -std::numeric_limits<double>::infinity()
                                     : lp->get<double>();
      preds.push_back(std::move(s));
    } catch (const json::exception& e) {
      fail(ErrorKind::Parse, path + " line " + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      fail(e.kind(), path + " line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return preds;
}

int cmd_evaluate(const std::string& pred_path, const std::string& gold_path,
                 const std::string& tables_path, const std::string& out_path,
                 const std::string& pr_csv) {
  const TableMap tables = load_tables(tables_path);
  const auto golds = load_examples(gold_path);
  const auto preds = load_predictions(pred_path);
  const EvalReport report = evaluate(preds, golds, tables);
  const std::string doc = to_json(report).dump(2);
  std::cout << doc << '\n';
  if (!out_path.empty()) {
    auto out = open_out(out_path);
    out << doc << '\n';
    close_out(out, out_path);
  }
  if (!pr_csv.empty()) {
    auto out = open_out(pr_csv);
    write_pr_csv(out, report.pr);
    close_out(out, pr_csv);
  }
  return 0;
}

int cmd_exec_sql(const std::string& tables_path, const std::string& sketch_text) {
  const TableMap tables = load_tables(tables_path);
  json j;
  try {
    j = json::parse(sketch_text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Usage, std::string("sketch is not valid JSON: ") + e.what());
  }
  check(j.is_object() && j.contains("table_id"), ErrorKind::Usage,
        "sketch needs a table_id field");
  const Table& table = lookup_table(tables, j.at("table_id").get<std::string>());
  const SqlSketch sketch = sketch_from_json(j);
  validate(sketch, table, sketch.conds.size());
  std::cout << to_json(execute(sketch, table)).dump() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sqlova: sketch-based natural-language-to-SQL on WikiSQL-format data", "sqlova"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  // gen-synthetic
  auto* gen = app.add_subcommand("gen-synthetic", "Write the bundled synthetic dataset");
  std::string gen_out;
  SyntheticConfig syn;
  gen->add_option("--out-dir", gen_out, "Output directory")->required();
  gen->add_option("--seed", syn.seed, "Generator seed");
  gen->add_option("--train-size", syn.train_examples, "Training questions");
  gen->add_option("--dev-size", syn.dev_examples, "Development questions");

  // build-vocab
  auto* bv = app.add_subcommand("build-vocab", "Build a WordPiece vocabulary from data files");
  std::string bv_tables, bv_out;
  std::vector<std::string> bv_examples;
  VocabOptions vopts;
  bv->add_option("--tables", bv_tables, "Table records")->required()->check(CLI::ExistingFile);
  bv->add_option("--examples", bv_examples, "Question records (repeatable)")
      ->required()
      ->check(CLI::ExistingFile)
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeAll);
  bv->add_option("--out", bv_out, "Vocabulary output path")->required();
  bv->add_option("--max-words", vopts.max_words, "Whole-word token limit");
  bv->add_option("--min-count", vopts.min_count, "Minimum word frequency");

  // train
  auto* tr = app.add_subcommand("train", "Train a model and write a checkpoint");
  DataFlags tr_data;
  ModelFlags tr_model;
  TrainConfig tc;
  std::uint64_t init_seed = 7;
  std::string tr_ckpt, tr_encoder_from, tr_log;
  tr_data.add(tr);
  tr_model.add(tr);
  tr->add_option("--checkpoint-out", tr_ckpt, "Checkpoint path")->required();
  tr->add_option("--encoder-from", tr_encoder_from, "Initialise the encoder from a checkpoint")
      ->check(CLI::ExistingFile);
  tr->add_option("--log", tr_log, "Per-epoch metrics (JSON lines)");
  tr->add_option("--seed", init_seed, "Seed for initialisation and shuffling");
  tr->add_option("--epochs", tc.optim.epochs, "Epochs");
  tr->add_option("--batch-size", tc.optim.batch_size, "Batch size");
  tr->add_option("--lr-encoder", tc.optim.lr_encoder, "Encoder learning rate");
  tr->add_option("--lr-head", tc.optim.lr_head, "Decoding layer learning rate");
  tr->add_option("--beta1", tc.optim.beta1, "Adam beta1");
  tr->add_option("--beta2", tc.optim.beta2, "Adam beta2");
  tr->add_option("--adam-epsilon", tc.optim.epsilon, "Adam epsilon");
  tr->add_option("--threads", tc.threads, "Worker threads (0: all cores)");
  tr->add_option("--eval-every", tc.eval_every, "Greedy training-set LF every n epochs");

  // predict
  auto* pr = app.add_subcommand("predict", "Decode questions with a trained checkpoint");
  DataFlags pr_data;
  std::string pr_ckpt, pr_out, pr_dump;
  bool pr_eg = false;
  EgConfig eg_cfg;
  pr_data.add(pr);
  pr->add_option("--checkpoint", pr_ckpt, "Checkpoint path")->required()->check(CLI::ExistingFile);
  pr->add_option("--out", pr_out, "Predictions output (JSON lines)")->required();
  pr->add_option("--eg", pr_eg, "Execution-guided decoding (on/off)");
  pr->add_option("--n-agg-pairs", eg_cfg.n_agg_pairs, "EG (select, agg) beam");
  pr->add_option("--n-wc", eg_cfg.n_wc, "EG where-column candidates");
  pr->add_option("--n-ops", eg_cfg.n_ops, "EG operators per column");
  pr->add_option("--n-spans", eg_cfg.n_spans, "EG value spans per (column, op)");
  pr->add_option("--n-wn", eg_cfg.n_wn, "EG condition-count candidates");
  pr->add_option("--max-span", eg_cfg.max_span, "Longest value span in subtokens");
  pr->add_option("--dump-outputs", pr_dump, "Also write raw model outputs (JSON lines)");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Score predictions against gold queries");
  std::string ev_pred, ev_gold, ev_tables, ev_out, ev_csv;
  ev->add_option("--predictions", ev_pred, "Prediction records")->required()->check(CLI::ExistingFile);
  ev->add_option("--gold", ev_gold, "Gold question records")->required()->check(CLI::ExistingFile);
  ev->add_option("--tables", ev_tables, "Table records")->required()->check(CLI::ExistingFile);
  ev->add_option("--out", ev_out, "Report output (JSON)");
  ev->add_option("--pr-csv", ev_csv, "Precision-recall curve output (CSV)");

  // exec-sql
  auto* ex = app.add_subcommand("exec-sql", "Execute one sketch against a table");
  std::string ex_tables, ex_sketch;
  ex->add_option("--tables", ex_tables, "Table records")->required()->check(CLI::ExistingFile);
  ex->add_option("--sketch", ex_sketch,
                 R"(Sketch JSON, e.g. {"table_id":"t","sel":1,"agg":1,"conds":[]})")
      ->required();

  // --config FILE: flat JSON object of long option names to values.
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  try {
    for (std::size_t i = 0; i < args.size(); ++i) {
      std::string path;
      std::size_t n = 0;
      if (args[i] == "--config" && i + 1 < args.size()) {
        path = args[i + 1];
        n = 2;
      } else if (args[i].starts_with("--config=")) {
        path = args[i].substr(9);
        n = 1;
      }
      if (n == 0) continue;
      args.erase(args.begin() + static_cast<std::ptrdiff_t>(i),
                 args.begin() + static_cast<std::ptrdiff_t>(i + n));
      const auto extra = config_args(path);
      const std::size_t at = args.empty() ? 0 : 1;  // after the subcommand name
      args.insert(args.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
      break;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code(e.kind());
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*gen) return cmd_gen_synthetic(gen_out, syn);
    if (*bv) return cmd_build_vocab(bv_tables, bv_examples, bv_out, vopts);
    if (*tr) {
      tc.seed = init_seed;
      return cmd_train(tr_data, tr_model, tc, init_seed, tr_ckpt, tr_encoder_from, tr_log);
    }
    if (*pr) return cmd_predict(pr_data, pr_ckpt, pr_out, pr_eg, eg_cfg, pr_dump);
    if (*ev) return cmd_evaluate(ev_pred, ev_gold, ev_tables, ev_out, ev_csv);
    if (*ex) return cmd_exec_sql(ex_tables, ex_sketch);
  } catch (const Error& e) {
    std::cerr << "error (" << error_kind_name(e.kind()) << "): " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 4;
  }
  return 2;
}
