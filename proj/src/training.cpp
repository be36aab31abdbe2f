#include "sqlova/training.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "parallel.hpp"
#include "sqlova/error.hpp"

namespace sqlova {

using nlohmann::json;

namespace {

constexpr double kLogFloor = 1e-12;
constexpr std::size_t kGradShards = 8;

Var log_of(Var v) { return ad::log_clamped(v, kLogFloor); }

Var sum_row(Graph& g, Var row) {
  Matrix ones(1, row.cols());
  ones.fill(1.0);
  return ad::matmul_nt(row, g.constant(std::move(ones)));
}

}  // namespace

void validate(const OptimConfig& cfg) {
  check(cfg.lr_encoder >= 0.0 && cfg.lr_head >= 0.0, ErrorKind::Config,
        "learning rates must be non-negative");
  check(cfg.beta1 > 0.0 && cfg.beta1 < 1.0 && cfg.beta2 > 0.0 && cfg.beta2 < 1.0,
        ErrorKind::Config, "Adam betas must lie in (0, 1)");
  check(cfg.epsilon > 0.0, ErrorKind::Config, "Adam epsilon must be positive");
  check(cfg.batch_size > 0, ErrorKind::Config, "batch size must be positive");
}

std::optional<GoldLabels> make_labels(const SqlSketch& gold, std::string_view question,
                                      const TokenizedText& tok) {
  const std::size_t n_words = tok.words.size();
  std::vector<std::size_t> first(n_words, SIZE_MAX), last(n_words, 0);
  for (std::size_t s = 0; s < tok.subtokens.size(); ++s) {
    const std::size_t w = tok.subtokens[s].word_index;
    first[w] = std::min(first[w], s);
    last[w] = std::max(last[w], s);
  }

  GoldLabels labels{gold.sel, gold.agg, gold.conds, {}};
  for (const Condition& c : gold.conds) {
    const std::string_view value = trim(c.value);
    std::optional<std::pair<std::size_t, std::size_t>> span;
    for (std::size_t i = 0; i < n_words && !span; ++i) {
      for (std::size_t j = i; j < n_words; ++j) {
        const std::size_t begin = tok.words[i].char_start;
        const std::size_t len = tok.words[j].char_end - begin;
        if (len > value.size()) break;
        if (text_equal(question.substr(begin, len), value)) {
          span.emplace(first[i], last[j]);
          break;
        }
      }
    }
    if (!span) return std::nullopt;
    labels.spans.push_back(*span);
  }
  return labels;
}

std::vector<std::pair<std::size_t, CondOp>> value_pairs(const GoldLabels& gold) {
  std::vector<std::pair<std::size_t, CondOp>> pairs;
  for (const auto& c : gold.conds) {
    const std::pair<std::size_t, CondOp> p{c.column, c.op};
    if (std::find(pairs.begin(), pairs.end(), p) == pairs.end()) pairs.push_back(p);
  }
  return pairs;
}

Var loss(const HeadOutput& head, const GoldLabels& gold) {
  Graph& g = *head.p_sc.graph;
  const std::size_t n = head.p_sc.cols();
  check(gold.sel < n, ErrorKind::Contract, "gold select column out of range");
  check(gold.conds.size() < head.p_wn.cols(), ErrorKind::Contract,
        "gold condition count exceeds max_conds");
  check(gold.spans.size() == gold.conds.size(), ErrorKind::Contract, "one span per condition");

  std::vector<Var> terms;
  terms.push_back(log_of(ad::pick(head.p_sc, 0, gold.sel)));
  terms.push_back(log_of(ad::pick(head.p_sa, gold.sel, static_cast<std::size_t>(gold.agg))));
  terms.push_back(log_of(ad::pick(head.p_wn, 0, gold.conds.size())));

  Matrix target(1, n), rest(1, n);
  rest.fill(1.0);
  for (const auto& c : gold.conds) {
    check(c.column < n, ErrorKind::Contract, "gold condition column out of range");
    target(0, c.column) = 1.0;
    rest(0, c.column) = 0.0;
  }
  const Var pos = ad::mul(log_of(head.p_wc), g.constant(std::move(target)));
  const Var neg = ad::mul(log_of(ad::shift(ad::scale(head.p_wc, -1.0), 1.0)),
                          g.constant(std::move(rest)));
  terms.push_back(sum_row(g, ad::add(pos, neg)));

  for (std::size_t i = 0; i < gold.conds.size(); ++i) {
    const Condition& c = gold.conds[i];
    terms.push_back(log_of(ad::pick(head.p_wo, c.column, static_cast<std::size_t>(c.op))));
    const auto it = head.wv.find(value_slot(c.column, c.op));
    check(it != head.wv.end(), ErrorKind::Internal, "where-value output missing for a gold pair");
    const std::size_t len = it->second.first.cols();
    check(gold.spans[i].first <= gold.spans[i].second && gold.spans[i].second < len,
          ErrorKind::Contract, "gold span outside the question");
    terms.push_back(log_of(ad::pick(it->second.first, 0, gold.spans[i].first)));
    terms.push_back(log_of(ad::pick(it->second.second, 0, gold.spans[i].second)));
  }
  return ad::scale(ad::add_n(terms), -1.0);
}

double loss(const ModelOutput& out, const GoldLabels& gold) {
  Graph g(false);
  HeadOutput h;
  h.p_sc = g.constant(Matrix::row_vector(out.p_sc));
  h.p_sa = g.constant(out.p_sa);
  h.p_wn = g.constant(Matrix::row_vector(out.p_wn));
  h.p_wc = g.constant(Matrix::row_vector(out.p_wc));
  h.p_wo = g.constant(out.p_wo);
  for (std::size_t c = 0; c < out.num_columns(); ++c)
    for (std::size_t op = 0; op < kNumCondOps; ++op) {
      const auto cop = static_cast<CondOp>(op);
      h.wv.emplace(value_slot(c, cop),
                   std::pair{g.constant(Matrix::row_vector(out.wv_start(c, cop))),
                             g.constant(Matrix::row_vector(out.wv_end(c, cop)))});
    }
  return loss(h, gold).scalar();
}

// ---------------------------------------------------------------------------

Adam::Adam(const ParamStore& store, const OptimConfig& cfg) : cfg_(cfg) {
  validate(cfg_);
  for (ParamId id = 0; id < store.size(); ++id) {
    const Matrix& v = store.value(id);
    m_.emplace_back(v.rows(), v.cols());
    v_.emplace_back(v.rows(), v.cols());
  }
}

void Adam::step(ParamStore& store, const GradBuffer& grads) {
  check(store.size() == m_.size(), ErrorKind::Internal, "optimizer built for another store");
  ++t_;
  const double t = static_cast<double>(t_);
  const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
  for (ParamId id = 0; id < store.size(); ++id) {
    const Matrix* g = grads.find(id);
    const double lr = store.group(id) == ParamGroup::Encoder ? cfg_.lr_encoder : cfg_.lr_head;
    if (!g || lr == 0.0) continue;
    Matrix& p = store.value(id);
    Matrix& m = m_[id];
    Matrix& v = v_[id];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = (*g)[i];
      m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
      v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.epsilon);
    }
  }
}

// ---------------------------------------------------------------------------

std::vector<TrainExample> prepare_training_set(const Model& model,
                                               const std::vector<Example>& examples,
                                               const TableMap& tables, const Vocabulary& vocab,
                                               PrepareStats* stats) {
  PrepareStats local;
  std::vector<TrainExample> out;
  for (const Example& ex : examples) {
    const Table& table = lookup_table(tables, ex.table_id);
    validate(ex.gold, table, model.config().max_conds);
    PreparedExample prepared;
    try {
      prepared = model.prepare(ex.question, table, vocab);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Length) throw;
      ++local.too_long;
      continue;
    }
    auto labels = make_labels(ex.gold, prepared.question, prepared.tokens);
    if (!labels) {
      ++local.unlocatable;
      continue;
    }
    out.push_back({std::move(prepared), std::move(*labels), ex.gold});
  }
  if (stats) *stats = local;
  return out;
}

json to_json(const EpochRecord& r) {
  json j{{"epoch", r.epoch},
         {"loss", r.loss},
         {"s_col", r.sel_column},
         {"s_agg", r.sel_agg},
         {"w_num", r.where_number},
         {"w_col", r.where_column},
         {"w_op", r.where_op},
         {"w_val", r.where_value}};
  if (r.lf_accuracy) j["lf_accuracy"] = *r.lf_accuracy;
  return j;
}

namespace {

struct ExampleStats {
  double loss = 0.0;
  bool sel_column = false, sel_agg = false, where_number = false, where_column = false,
       where_op = false, where_value = false;
};

ExampleStats teacher_forced_stats(const HeadOutput& head, const GoldLabels& gold, double loss) {
  ExampleStats s;
  s.loss = loss;
  const Matrix& sc = head.p_sc.value();
  s.sel_column = argmax(sc.row(0)) == gold.sel;
  s.sel_agg = argmax(head.p_sa.value().row(gold.sel)) == static_cast<std::size_t>(gold.agg);
  s.where_number = argmax(head.p_wn.value().row(0)) == gold.conds.size();

  const auto ranked = ranked_indices(head.p_wc.value().row(0));
  std::vector<std::size_t> predicted(ranked.begin(),
                                     ranked.begin() + std::min(gold.conds.size(), ranked.size()));
  std::vector<std::size_t> expected;
  for (const auto& c : gold.conds) expected.push_back(c.column);
  std::sort(predicted.begin(), predicted.end());
  std::sort(expected.begin(), expected.end());
  s.where_column = predicted == expected;

  s.where_op = s.where_value = true;
  for (std::size_t i = 0; i < gold.conds.size(); ++i) {
    const Condition& c = gold.conds[i];
    if (argmax(head.p_wo.value().row(c.column)) != static_cast<std::size_t>(c.op))
      s.where_op = false;
    const auto& [start, end] = head.wv.at(value_slot(c.column, c.op));
    const auto best = ranked_spans(start.value().row(0), end.value().row(0), 12, 1);
    if (best.empty() || best[0].start != gold.spans[i].first || best[0].end != gold.spans[i].second)
      s.where_value = false;
  }
  return s;
}

}  // namespace

TrainReport train(Model& model, const std::vector<Example>& examples, const TableMap& tables,
                  const Vocabulary& vocab, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  validate(cfg.optim);
  check(!examples.empty(), ErrorKind::Usage, "training set is empty");
  TrainReport report;
  const auto data = prepare_training_set(model, examples, tables, vocab, &report.skipped);
  check(!data.empty(), ErrorKind::Usage, "no training example has locatable condition values");
  report.used = data.size();

  Adam adam(model.params(), cfg.optim);
  Rng rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<GradBuffer> shards(kGradShards, GradBuffer(model.params()));
  std::vector<ExampleStats> stats(data.size());

  for (std::size_t epoch = 1; epoch <= cfg.optim.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += cfg.optim.batch_size) {
      const std::size_t batch_end = std::min(order.size(), b + cfg.optim.batch_size);
      for (auto& s : shards) s.clear();
      detail::parallel_for(kGradShards, cfg.threads, [&](std::size_t shard) {
        for (std::size_t i = b + shard; i < batch_end; i += kGradShards) {
          const TrainExample& ex = data[order[i]];
          Graph g;
          const HeadOutput head = model.forward(g, ex.prepared, value_pairs(ex.labels));
          const Var l = loss(head, ex.labels);
          g.backward(l);
          g.accumulate(shards[shard]);
          stats[order[i]] = teacher_forced_stats(head, ex.labels, l.scalar());
        }
      });
      GradBuffer total(model.params());
      for (const auto& s : shards) total.add(s);
      total.scale(1.0 / static_cast<double>(batch_end - b));
      adam.step(model.params(), total);
    }

    EpochRecord rec;
    rec.epoch = epoch;
    const double n = static_cast<double>(data.size());
    std::array<std::size_t, 6> hits{};
    for (const auto& s : stats) {
      rec.loss += s.loss;
      hits[0] += s.sel_column;
      hits[1] += s.sel_agg;
      hits[2] += s.where_number;
      hits[3] += s.where_column;
      hits[4] += s.where_op;
      hits[5] += s.where_value;
    }
    rec.loss /= n;
    rec.sel_column = static_cast<double>(hits[0]) / n;
    rec.sel_agg = static_cast<double>(hits[1]) / n;
    rec.where_number = static_cast<double>(hits[2]) / n;
    rec.where_column = static_cast<double>(hits[3]) / n;
    rec.where_op = static_cast<double>(hits[4]) / n;
    rec.where_value = static_cast<double>(hits[5]) / n;
    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) {
      const auto preds = predict_greedy(model, data, cfg.threads);
      std::size_t right = 0;
      for (std::size_t i = 0; i < data.size(); ++i) right += sketch_equal(preds[i].sketch, data[i].gold);
      rec.lf_accuracy = static_cast<double>(right) / n;
    }
    report.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  return report;
}

std::vector<ScoredSketch> predict_greedy(const Model& model,
                                         const std::vector<TrainExample>& examples,
                                         std::size_t threads, std::size_t max_span) {
  std::vector<ScoredSketch> out(examples.size());
  detail::parallel_for(examples.size(), threads, [&](std::size_t i) {
    const PreparedExample& p = examples[i].prepared;
    out[i] = decode_greedy(model.infer(p), p.question, p.tokens, {max_span});
  });
  return out;
}

// ---------------------------------------------------------------------------

GradCheckResult grad_check(Model& model, const PreparedExample& ex, const GoldLabels& gold,
                           const GradCheckConfig& cfg) {
  ParamStore& store = model.params();
  const auto pairs = value_pairs(gold);
  GradBuffer analytic(store);
  {
    Graph g;
    const Var l = loss(model.forward(g, ex, pairs), gold);
    g.backward(l);
    g.accumulate(analytic);
  }
  auto loss_at = [&] {
    Graph g(false);
    return loss(model.forward(g, ex, pairs), gold).scalar();
  };

  auto selected = [&](const std::string& name) {
    if (cfg.prefixes.empty()) return true;
    return std::any_of(cfg.prefixes.begin(), cfg.prefixes.end(),
                       [&](const std::string& p) { return name.starts_with(p); });
  };

  Rng rng(cfg.seed);
  GradCheckResult res;
  for (ParamId id = 0; id < store.size(); ++id) {
    const std::string& name = store.name(id);
    if (!selected(name)) continue;
    Matrix& p = store.value(id);
    Matrix a(p.rows(), p.cols());
    if (const Matrix* g = analytic.find(id)) a = *g;
    if (cfg.corrupt_array && *cfg.corrupt_array == name)
      for (double& v : a.values()) v *= cfg.corrupt_factor;

    std::vector<std::size_t> large, small;
    for (std::size_t i = 0; i < a.size(); ++i)
      (std::fabs(a[i]) >= cfg.relative_floor ? large : small).push_back(i);
    std::shuffle(large.begin(), large.end(), rng);
    std::shuffle(small.begin(), small.end(), rng);
    large.resize(std::min(large.size(), cfg.samples_per_array));
    small.resize(std::min<std::size_t>(small.size(), 1));

    auto numeric = [&](std::size_t i) {
      const double saved = p[i];
      p[i] = saved + cfg.epsilon;
      const double up = loss_at();
      p[i] = saved - cfg.epsilon;
      const double down = loss_at();
      p[i] = saved;
      return (up - down) / (2.0 * cfg.epsilon);
    };
    for (std::size_t i : large) {
      const double n = numeric(i);
      const double rel = std::fabs(a[i] - n) / std::max(1e-8, std::fabs(a[i]) + std::fabs(n));
      ++res.coords_checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_array = name;
      }
    }
    for (std::size_t i : small) {
      const double n = numeric(i);
      ++res.coords_checked;
      res.max_abs_error = std::max(res.max_abs_error, std::fabs(a[i] - n));
    }
  }
  return res;
}

}  // namespace sqlova
