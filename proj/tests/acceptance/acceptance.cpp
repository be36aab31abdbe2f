// End-to-end acceptance checks. Prints one [PASS]/[FAIL] line per criterion
// and exits non-zero when any criterion fails.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "sqlova/dataset_io.hpp"
#include "sqlova/eg_decoder.hpp"
#include "sqlova/error.hpp"
#include "sqlova/executor.hpp"
#include "sqlova/metrics.hpp"
#include "sqlova/model.hpp"
#include "sqlova/synthetic.hpp"
#include "sqlova/training.hpp"
#include "test_util.hpp"

using namespace sqlova;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) {
  return std::chrono::duration<double>(Clock::now() - t).count();
}

int failures = 0;

void report(bool ok, const std::string& name, const std::string& detail) {
  std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Gradient fidelity

void gradient_fidelity() {
  const auto start = Clock::now();
  TableMap tables;
  tables.emplace("t3", Table{"t3",
                             {{"Player", ColumnType::Text},
                              {"Team", ColumnType::Text},
                              {"Score", ColumnType::Real}},
                             {{std::string("ann"), std::string("lions"), 4.0}}});
  const std::vector<Example> examples = {
      {"which player of lions scored 4", "t3",
       {0, AggOp::None, {{1, CondOp::Eq, "lions"}, {2, CondOp::Gt, "4"}}}}};
  const Vocabulary vocab = build_vocabulary(corpus_words(examples, tables));

  struct Case {
    std::string name;
    LayerKind layer;
    std::vector<std::string> prefixes;
    std::string corrupt;
  };
  const std::vector<Case> cases = {
      {"nl2sql layer", LayerKind::Nl2Sql, {"head."}, "head.where_value.score"},
      {"shallow layer", LayerKind::Shallow, {"shallow."}, "shallow.where_number"},
      {"toy encoder", LayerKind::Nl2Sql, {"encoder."}, "encoder.layer1.ffn_in"},
  };
  bool ok = true;
  std::string detail;
  for (const Case& c : cases) {
    Model model(fixtures::tiny_config(vocab.size(), c.layer), 21);
    const auto data = prepare_training_set(model, examples, tables, vocab);
    if (data.size() != 1 || data[0].prepared.tokens.subtokens.size() > 6) {
      ok = false;
      detail += c.name + ": fixture not usable; ";
      continue;
    }
    GradCheckConfig cfg;
    cfg.samples_per_array = 6;
    cfg.prefixes = c.prefixes;
    const GradCheckResult r = grad_check(model, data[0].prepared, data[0].labels, cfg);
    cfg.corrupt_array = c.corrupt;
    cfg.prefixes = {c.corrupt};
    const GradCheckResult m = grad_check(model, data[0].prepared, data[0].labels, cfg);
    const bool case_ok = r.max_rel_error < 1e-4 && r.max_abs_error < 1e-8 && m.max_rel_error > 0.3;
    ok = ok && case_ok;
    detail += c.name + " rel " + fmt(r.max_rel_error, 3) + " (" + std::to_string(r.coords_checked) +
              " coords), mutation " + fmt(m.max_rel_error, 3) + "; ";
  }
  const double secs = seconds_since(start);
  ok = ok && secs < 120.0;
  report(ok, "gradient fidelity", detail + fmt(secs, 3) + " s");
}

// ---------------------------------------------------------------------------
// Executor oracle: a deliberately naive scan, written without the library's
// helpers.

std::string lower_trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  std::string out = s.substr(b, e - b + 1);
  for (char& ch : out) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return out;
}

bool oracle_number(const std::string& raw, double& out) {
  static const std::regex pattern(R"(^[+-]?(\d{1,3}(,\d{3})+|\d+)(\.\d+)?$)");
  const std::string s = lower_trim(raw);
  if (!std::regex_match(s, pattern)) return false;
  std::string digits;
  for (char ch : s)
    if (ch != ',') digits += ch;
  out = std::stod(digits);
  return true;
}

std::string oracle_cell_text(const Value& v) {
  if (const double* d = std::get_if<double>(&v)) {
    std::ostringstream s;
    s.precision(17);
    s << *d;
    return s.str();
  }
  return std::get<std::string>(v);
}

ExecResult oracle_execute(const SqlSketch& q, const Table& t) {
  std::vector<std::size_t> hits;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    bool all = true;
    for (const Condition& c : q.conds) {
      const Value& cell = t.rows[r][c.column];
      bool m = false;
      if (c.op == CondOp::Eq && t.headers[c.column].type == ColumnType::Text) {
        m = lower_trim(std::get<std::string>(cell)) == lower_trim(c.value);
      } else {
        double lhs = 0, rhs = 0;
        bool lhs_ok = std::holds_alternative<double>(cell)
                          ? (lhs = std::get<double>(cell), true)
                          : oracle_number(std::get<std::string>(cell), lhs);
        if (lhs_ok && oracle_number(c.value, rhs))
          m = c.op == CondOp::Eq ? lhs == rhs : c.op == CondOp::Gt ? lhs > rhs : lhs < rhs;
      }
      all = all && m;
    }
    if (all) hits.push_back(r);
  }
  if (q.agg == AggOp::Count) return Scalar{static_cast<double>(hits.size())};
  if (hits.empty()) return Empty{};
  if (q.agg == AggOp::None) {
    Rows rows;
    for (std::size_t r : hits) rows.values.push_back(t.rows[r][q.sel]);
    return rows;
  }
  if (t.headers[q.sel].type == ColumnType::Text) return Empty{};
  std::vector<double> vals;
  for (std::size_t r : hits) vals.push_back(std::get<double>(t.rows[r][q.sel]));
  switch (q.agg) {
    case AggOp::Max: return Scalar{*std::max_element(vals.begin(), vals.end())};
    case AggOp::Min: return Scalar{*std::min_element(vals.begin(), vals.end())};
    case AggOp::Sum: return Scalar{std::accumulate(vals.begin(), vals.end(), 0.0)};
    default: return Scalar{std::accumulate(vals.begin(), vals.end(), 0.0) / vals.size()};
  }
}

void executor_oracle() {
  const auto start = Clock::now();
  std::mt19937_64 rng(2024);
  auto pick = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
  const std::vector<std::string> words = {"ann", "Bob", "carol", "new york", "12", "7.5",
                                          "1,200", "-3", "x"};
  auto random_number_text = [&]() -> std::string {
    switch (pick(6)) {
      case 0: return std::to_string(static_cast<int>(pick(21)) - 10);
      case 1: return std::to_string(pick(20)) + "." + std::to_string(pick(10));
      case 2: return std::to_string(1 + pick(9)) + "," + std::to_string(100 + pick(900));
      case 3: return " " + std::to_string(pick(10)) + " ";
      case 4: return "abc";
      default: return "+" + std::to_string(pick(10));
    }
  };
  auto random_number = [&]() -> double {
    switch (pick(4)) {
      case 0: return static_cast<double>(pick(21)) - 10.0;
      case 1: return static_cast<double>(pick(200)) / 10.0;
      case 2: return 1000.0 * (1 + pick(9)) + static_cast<double>(pick(1000));
      default: return static_cast<double>(pick(10));
    }
  };

  std::size_t mismatches = 0, non_empty = 0;
  std::string first_bad;
  const std::size_t kCases = 10000;
  for (std::size_t i = 0; i < kCases; ++i) {
    Table t;
    t.id = "r";
    const std::size_t cols = 1 + pick(8), rows = pick(21);
    for (std::size_t c = 0; c < cols; ++c)
      t.headers.push_back({"c" + std::to_string(c), pick(2) ? ColumnType::Real : ColumnType::Text});
    for (std::size_t r = 0; r < rows; ++r) {
      std::vector<Value> row;
      for (std::size_t c = 0; c < cols; ++c)
        row.push_back(t.headers[c].type == ColumnType::Real ? Value{random_number()}
                                                            : Value{words[pick(words.size())]});
      t.rows.push_back(std::move(row));
    }
    SqlSketch q{pick(cols), static_cast<AggOp>(pick(6)), {}};
    for (std::size_t k = 0, n = pick(5); k < n; ++k) {
      Condition c{pick(cols), static_cast<CondOp>(pick(3)), ""};
      if (rows > 0 && pick(2)) {
        c.value = oracle_cell_text(t.rows[pick(rows)][c.column]);
        if (pick(3) == 0) c.value = " " + c.value;
        if (pick(3) == 0)
          for (char& ch : c.value) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
      } else {
        c.value = pick(2) ? random_number_text() : words[pick(words.size())];
      }
      q.conds.push_back(std::move(c));
    }
    const ExecResult got = execute(q, t);
    const ExecResult want = oracle_execute(q, t);
    if (!is_empty(want)) ++non_empty;
    if (!results_equal(got, want)) {
      if (mismatches++ == 0)
        first_bad = to_json(q).dump() + " got " + to_json(got).dump() + " want " + to_json(want).dump();
    }
  }

  const Table f1 = fixtures::fixture_f1();
  std::size_t fixture_bad = 0;
  const auto fixtures = fixtures::f1_exec_fixtures();
  for (const auto& fx : fixtures)
    if (!results_equal(execute(fx.sketch, f1), fx.expected)) ++fixture_bad;

  const double secs = seconds_since(start);
  std::string detail = std::to_string(kCases - mismatches) + "/" + std::to_string(kCases) +
                       " random cases agree (" + std::to_string(non_empty) + " non-Empty), " +
                       std::to_string(fixtures.size() - fixture_bad) + "/" +
                       std::to_string(fixtures.size()) + " F1 fixtures, " + fmt(secs, 3) + " s";
  if (!first_bad.empty()) detail += "; first mismatch " + first_bad;
  report(mismatches == 0 && fixture_bad == 0 && secs < 60.0, "executor oracle", detail);
}

// ---------------------------------------------------------------------------
// Normalization suite

std::vector<double> softmax(std::span<const double> x) {
  Graph g(false);
  const Matrix m = ad::softmax_rows(g.constant(Matrix::row_vector(x))).value();
  return {m.values().begin(), m.values().end()};
}

void normalization_suite() {
  const auto start = Clock::now();
  std::mt19937_64 rng(99);
  std::size_t violations = 0, shift_failures = 0, decode_failures = 0;
  std::string first;
  const Vocabulary vocab({"a", "b", "c", "d", "e", "f", "g", "h"});
  const std::size_t kTrials = 1000;
  for (std::size_t trial = 0; trial < kTrials; ++trial) {
    const LayerKind kind = trial % 2 ? LayerKind::Shallow : LayerKind::Nl2Sql;
    const std::size_t len = 1 + rng() % 6, n = 1 + rng() % 5;
    const std::size_t d_out = 32;
    const double h_scale = std::uniform_real_distribution<double>(0.3, 3.0)(rng);
    std::vector<std::vector<int>> headers(n);
    for (auto& h : headers) h.assign(1 + rng() % 3, 5);
    const EncoderInput input = assemble_input(std::vector<int>(len, 4), headers);
    const Matrix H = fixtures::random_matrix(input.token_ids.size(), d_out, rng, h_scale);

    ParamStore store;
    Rng prng(rng());
    HeadOutput out;
    Graph g(false);
    const EncoderOutput enc = split_encoder_output(g.constant(H), input);
    if (kind == LayerKind::Nl2Sql) {
      Nl2SqlLayer layer({d_out, 5, 2, 6, 4});
      layer.register_params(store, prng);
      const double w_scale = std::uniform_real_distribution<double>(0.5, 4.0)(rng);
      for (ParamId id = 0; id < store.size(); ++id)
        for (double& v : store.value(id).values()) v *= w_scale;
      out = layer.forward(g, store, enc, std::nullopt);
    } else {
      ShallowLayer layer({14, 14, 4}, d_out);
      layer.register_params(store, prng);
      out = layer.forward(g, store, enc, std::nullopt);
    }
    const ModelOutput mo = to_model_output(out);
    if (auto v = find_invariant_violation(mo, 1e-9)) {
      if (violations++ == 0) first = std::string(layer_name(kind)) + ": " + *v;
    }

    // Shift invariance of softmax on raw scores, and of greedy decoding.
    ModelOutput a = fixtures::uniform_output(n, len), b = a;
    auto fill = [&](std::span<double> pa, std::span<double> pb) {
      std::vector<double> s(pa.size());
      for (double& v : s) v = std::normal_distribution<double>(0.0, 2.0)(rng);
      std::vector<double> shifted = s;
      const double c = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
      for (double& v : shifted) v += c;
      const auto p = softmax(s), q = softmax(shifted);
      for (std::size_t i = 0; i < p.size(); ++i)
        if (std::fabs(p[i] - q[i]) > 1e-12) ++shift_failures;
      std::copy(p.begin(), p.end(), pa.begin());
      std::copy(q.begin(), q.end(), pb.begin());
    };
    fill(a.p_sc, b.p_sc);
    fill(a.p_wn, b.p_wn);
    for (std::size_t c = 0; c < n; ++c) {
      fill(a.p_sa.row(c), b.p_sa.row(c));
      fill(a.p_wo.row(c), b.p_wo.row(c));
      a.p_wc[c] = b.p_wc[c] = std::uniform_real_distribution<double>(0.01, 0.99)(rng);
    }
    for (std::size_t r = 0; r < n * kNumCondOps; ++r) {
      fill(a.p_wv_start.row(r), b.p_wv_start.row(r));
      fill(a.p_wv_end.row(r), b.p_wv_end.row(r));
    }
    std::string q;
    for (std::size_t i = 0; i < len; ++i) q += std::string(1, static_cast<char>('a' + i)) + " ";
    const TokenizedText tok = tokenize_question(q, vocab);
    if (!(decode_greedy(a, q, tok).sketch == decode_greedy(b, q, tok).sketch)) ++decode_failures;
  }
  const double secs = seconds_since(start);
  std::string detail = std::to_string(kTrials) + " parameterizations: " +
                       std::to_string(violations) + " invariant violations, " +
                       std::to_string(shift_failures) + " shift mismatches, " +
                       std::to_string(decode_failures) + " decode changes under shift, " +
                       fmt(secs, 3) + " s";
  if (!first.empty()) detail += "; first: " + first;
  report(violations == 0 && shift_failures == 0 && decode_failures == 0, "normalization suite",
         detail);
}

// ---------------------------------------------------------------------------
// Training-based criteria share one overfit model.

struct Overfit {
  SyntheticData data;
  ModelConfig cfg;
  std::unique_ptr<Model> model;
};

std::string rates(const EvalReport& r) {
  const auto& s = r.submodule;
  return "s-col " + fmt(s.sel_column) + ", s-agg " + fmt(s.sel_agg) + ", w-num " +
         fmt(s.where_number) + ", w-col " + fmt(s.where_column) + ", w-op " + fmt(s.where_op) +
         ", w-val " + fmt(s.where_value);
}

std::vector<ScoredSketch> greedy_predictions(const Model& model, const std::vector<Example>& ex,
                                             const TableMap& tables, const Vocabulary& vocab,
                                             std::vector<PreparedExample>* prepared = nullptr) {
  std::vector<ScoredSketch> out;
  for (const Example& e : ex) {
    const PreparedExample p = model.prepare(e.question, lookup_table(tables, e.table_id), vocab);
    out.push_back(decode_greedy(model.infer(p), p.question, p.tokens));
    if (prepared) prepared->push_back(p);
  }
  return out;
}

void overfit_run(Overfit& of) {
  const auto start = Clock::now();
  of.data = generate_synthetic();
  of.cfg.encoder.vocab_size = of.data.vocab.size();
  of.model = std::make_unique<Model>(of.cfg, 7);
  TrainConfig tc;
  tc.optim.epochs = 50;
  const TrainReport tr = train(*of.model, of.data.train, of.data.tables, of.data.vocab, tc);
  const double train_secs = seconds_since(start);
  const EvalReport r = evaluate(greedy_predictions(*of.model, of.data.train, of.data.tables, of.data.vocab),
                                of.data.train, of.data.tables);
  const auto& s = r.submodule;
  const double worst_sub = std::min({s.sel_column, s.sel_agg, s.where_number, s.where_column,
                                     s.where_op, s.where_value});
  const bool ok = r.lf_accuracy >= 0.95 && worst_sub >= 0.95 && train_secs <= 600.0 &&
                  of.data.vocab.size() <= 200 && tr.used == of.data.train.size();
  report(ok, "overfit run",
         std::to_string(of.data.train.size()) + " examples over " +
             std::to_string(of.data.tables.size()) + " tables, vocab " +
             std::to_string(of.data.vocab.size()) + ", " + std::to_string(tr.used) +
             " used, training LF " + fmt(r.lf_accuracy) + " after " +
             std::to_string(tc.optim.epochs) + " epochs (" + rates(r) + "), final loss " +
             fmt(tr.epochs.back().loss) + ", " + fmt(train_secs, 4) + " s");
}

void eg_properties(const Overfit& of) {
  Model noisy(of.model->checkpoint());
  std::mt19937_64 rng(11);
  for (ParamId id = 0; id < noisy.params().size(); ++id)
    for (double& v : noisy.params().value(id).values())
      v *= 1.0 + 0.1 * std::normal_distribution<double>()(rng);

  const auto& dev = of.data.dev;
  std::size_t illegal = 0, empty_conds = 0, fallbacks = 0, eg_x = 0, greedy_x = 0, changed = 0;
  for (const Example& ex : dev) {
    const Table& t = lookup_table(of.data.tables, ex.table_id);
    const PreparedExample p = noisy.prepare(ex.question, t, of.data.vocab);
    const ModelOutput mo = noisy.infer(p);
    const ScoredSketch g = decode_greedy(mo, p.question, p.tokens);
    const EgResult e = decode_eg(mo, p.question, p.tokens, t);
    const SqlSketch& s = e.scored.sketch;
    if (is_numeric_agg(s.agg) && t.headers[s.sel].type == ColumnType::Text) ++illegal;
    if (e.where_fallback) {
      ++fallbacks;
    } else {
      for (const Condition& c : s.conds)
        if (is_empty(execute({s.sel, s.agg, {c}}, t))) ++empty_conds;
    }
    const ExecResult gold = execute(ex.gold, t);
    eg_x += results_equal(execute(s, t), gold);
    greedy_x += results_equal(execute(g.sketch, t), gold);
    changed += !(s == g.sketch);
  }
  const double n = static_cast<double>(dev.size());
  report(illegal == 0, "EG (a) no Text column with a numeric aggregation",
         std::to_string(illegal) + " illegal pairs over " + std::to_string(dev.size()) +
             " noisy dev predictions");
  report(empty_conds == 0, "EG (b) every emitted condition executes non-Empty",
         std::to_string(empty_conds) + " Empty conditions, " + std::to_string(fallbacks) +
             " counted fallbacks");
  report(eg_x >= greedy_x, "EG (c) execution accuracy at least greedy",
         "EG X " + fmt(eg_x / n) + " vs greedy X " + fmt(greedy_x / n) + " on the dev split (" +
             std::to_string(changed) + " sketches changed by EG)");
}

void lf_invariance(const Overfit& of) {
  // A noisy model gives a mix of right and wrong predictions.
  Model noisy(of.model->checkpoint());
  std::mt19937_64 rng(12);
  for (ParamId id = 0; id < noisy.params().size(); ++id)
    for (double& v : noisy.params().value(id).values())
      v *= 1.0 + 0.1 * std::normal_distribution<double>()(rng);
  const auto preds = greedy_predictions(noisy, of.data.dev, of.data.tables, of.data.vocab);
  const std::string base = to_json(evaluate(preds, of.data.dev, of.data.tables)).dump();
  std::size_t multi = 0;
  for (const auto& ex : of.data.dev) multi += ex.gold.conds.size() > 1;
  std::size_t differing = 0;
  const int kPermutations = 20;
  for (int k = 0; k < kPermutations; ++k) {
    std::vector<Example> permuted = of.data.dev;
    for (auto& ex : permuted) std::shuffle(ex.gold.conds.begin(), ex.gold.conds.end(), rng);
    if (to_json(evaluate(preds, permuted, of.data.tables)).dump() != base) ++differing;
  }
  const EvalReport r = evaluate(preds, of.data.dev, of.data.tables);
  report(differing == 0, "LF metric invariance",
         std::to_string(kPermutations) + " gold condition permutations (" + std::to_string(multi) +
             " multi-condition questions), " + std::to_string(differing) +
             " changed any number; LF " + fmt(r.lf_accuracy) + ", X " + fmt(r.x_accuracy));
}

void shallow_parity(const Overfit& of) {
  ModelConfig cfg = of.cfg;
  cfg.layer = LayerKind::Shallow;
  cfg.value_end_offset = 44;
  cfg.max_headers = 44;
  Model shallow(cfg, 7);
  const Checkpoint enc = of.model->encoder_checkpoint();
  for (const auto& [name, m] : enc.arrays) shallow.params().value(shallow.params().id(name)) = m;

  TrainConfig tc;
  tc.optim.epochs = 2;
  tc.optim.lr_encoder = 0.0;
  train(shallow, of.data.train, of.data.tables, of.data.vocab, tc);

  std::size_t violations = 0, decoded = 0;
  std::string first;
  for (const auto& ex : of.data.dev) {
    const PreparedExample p =
        shallow.prepare(ex.question, lookup_table(of.data.tables, ex.table_id), of.data.vocab);
    const ModelOutput mo = shallow.infer(p);
    if (auto v = find_invariant_violation(mo, 1e-9)) {
      if (violations++ == 0) first = *v;
    }
    decode_greedy(mo, p.question, p.tokens);
    ++decoded;
  }

  const Checkpoint full = shallow.checkpoint();
  std::vector<std::string> extra;
  std::size_t differing_encoder = 0;
  for (const auto& [name, m] : full.arrays) {
    const auto it = std::find_if(enc.arrays.begin(), enc.arrays.end(),
                                 [&](const auto& a) { return a.first == name; });
    if (it == enc.arrays.end())
      extra.push_back(name);
    else if (!(it->second == m))
      ++differing_encoder;
  }
  const bool ok = violations == 0 && extra == std::vector<std::string>{"shallow.where_number"} &&
                  differing_encoder == 0 && full.arrays.size() == enc.arrays.size() + 1;
  std::string names;
  for (const auto& e : extra) names += (names.empty() ? "" : ",") + e;
  report(ok, "shallow-layer parity",
         std::to_string(decoded) + " dev outputs, " + std::to_string(violations) +
             " invariant violations; checkpoint adds [" + names + "] to " +
             std::to_string(enc.arrays.size()) + " shared encoder arrays (" +
             std::to_string(differing_encoder) + " differ)" + (first.empty() ? "" : "; " + first));
}

// ---------------------------------------------------------------------------
// Determinism through the command-line tool.

int run(const std::string& args) {
  const std::string cmd = std::string(SQLOVA_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const auto start = Clock::now();
  const fs::path dir = fs::temp_directory_path() / "sqlova_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string d = dir.string();
  bool ok = run("gen-synthetic --out-dir " + d + "/data") == 0;
  const std::string data = " --tables " + d + "/data/tables.jsonl --vocab " + d + "/data/vocab.txt";
  for (const char* name : {"a", "b"}) {
    ok = ok && run("train" + data + " --examples " + d + "/data/train.jsonl --epochs 3 --seed 7" +
                   " --checkpoint-out " + d + "/" + name + ".ckpt") == 0;
    ok = ok && run("predict" + data + " --examples " + d + "/data/dev.jsonl --checkpoint " + d +
                   "/" + name + ".ckpt --eg on --out " + d + "/" + name + ".pred.jsonl") == 0;
  }
  const std::string ca = slurp(dir / "a.ckpt"), cb = slurp(dir / "b.ckpt");
  const std::string pa = slurp(dir / "a.pred.jsonl"), pb = slurp(dir / "b.pred.jsonl");
  const bool same = ok && !ca.empty() && ca == cb && !pa.empty() && pa == pb;
  report(same, "determinism",
         std::string(ok ? "" : "a command failed; ") + "checkpoints " +
             std::to_string(ca.size()) + " bytes " + (ca == cb ? "identical" : "differ") +
             ", prediction files " + (pa == pb ? "identical" : "differ") + ", " +
             fmt(seconds_since(start), 3) + " s");
  fs::remove_all(dir);
}

}  // namespace

int main() {
  const auto start = Clock::now();
  auto guarded = [](const std::string& name, const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      report(false, name, std::string("threw: ") + e.what());
    }
  };
  guarded("gradient fidelity", gradient_fidelity);
  guarded("executor oracle", executor_oracle);
  guarded("normalization suite", normalization_suite);
  Overfit of;
  guarded("overfit run", [&] { overfit_run(of); });
  if (of.model) {
    guarded("EG properties", [&] { eg_properties(of); });
    guarded("LF metric invariance", [&] { lf_invariance(of); });
    guarded("shallow-layer parity", [&] { shallow_parity(of); });
  } else {
    report(false, "EG properties", "no overfit model");
    report(false, "LF metric invariance", "no overfit model");
    report(false, "shallow-layer parity", "no overfit model");
  }
  guarded("determinism", determinism);
  std::cout << (failures == 0 ? "all acceptance criteria passed" : std::to_string(failures) + " failed")
            << " in " << fmt(seconds_since(start), 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
