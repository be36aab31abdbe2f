#include "sqlova/synthetic.hpp"

#include <algorithm>
#include <array>
#include <random>

#include "sqlova/error.hpp"
#include "sqlova/executor.hpp"
#include "sqlova/params.hpp"

namespace sqlova {

namespace {

enum class Pool { Names, Places, Brands, Titles };

struct ColumnSpec {
  const char* name;
  ColumnType type;
  Pool pool = Pool::Names;  // Text columns
  int lo = 0, hi = 0;       // Real columns
};

struct TableSpec {
  const char* id;
  std::vector<ColumnSpec> columns;
};

ColumnSpec text(const char* name, Pool pool) { return {name, ColumnType::Text, pool, 0, 0}; }
ColumnSpec real(const char* name, int lo, int hi) { return {name, ColumnType::Real, Pool::Names, lo, hi}; }

const std::vector<TableSpec>& table_specs() {
  static const std::vector<TableSpec> specs = {
      {"players", {text("player", Pool::Names), text("team", Pool::Brands), real("points", 0, 40),
                   real("age", 18, 40), real("games", 1, 30)}},
      {"cities", {text("city", Pool::Places), text("country", Pool::Titles),
                  real("population", 100, 990), real("area", 10, 99)}},
      {"cars", {text("model", Pool::Titles), text("maker", Pool::Brands), real("price", 10, 90),
                real("top speed", 100, 250), real("year", 1990, 2020)}},
      {"films", {text("title", Pool::Titles), text("director", Pool::Names), real("year", 1970, 2020),
                 real("rating", 1, 10)}},
      {"schools", {text("school", Pool::Titles), text("town", Pool::Places), real("students", 100, 900),
                   real("teachers", 5, 60)}},
      {"songs", {text("song", Pool::Titles), text("artist", Pool::Names), real("length", 120, 400),
                 real("rank", 1, 50), real("year", 1960, 2020)}},
      {"races", {text("driver", Pool::Names), text("team", Pool::Brands), real("laps", 10, 80),
                 real("position", 1, 20)}},
      {"books", {text("book", Pool::Titles), text("author", Pool::Names), real("pages", 50, 800),
                 real("price", 5, 60)}},
      {"stores", {text("store", Pool::Brands), text("city", Pool::Places), real("sales", 100, 999),
                  real("staff", 2, 40)}},
      {"matches", {text("opponent", Pool::Places), text("venue", Pool::Titles), real("goals", 0, 9),
                   real("attendance", 500, 990), real("week", 1, 17)}},
  };
  return specs;
}

const std::vector<std::string>& pool_values(Pool p) {
  static const std::vector<std::string> names = {"ann",  "bob", "carl", "dina", "eve",
                                                 "fred", "gina", "hugo", "ivy", "jack"};
  static const std::vector<std::string> places = {"paris", "rome",     "oslo", "lima",
                                                  "cairo", "new york", "kyoto", "san jose"};
  static const std::vector<std::string> brands = {"red", "blue", "green", "gold", "silver", "black"};
  static const std::vector<std::string> titles = {"storm", "river", "night", "dawn",
                                                  "echo",  "flame", "stone", "cloud"};
  switch (p) {
    case Pool::Names: return names;
    case Pool::Places: return places;
    case Pool::Brands: return brands;
    case Pool::Titles: return titles;
  }
  return names;
}

template <class T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Table make_table(const TableSpec& spec, Rng& rng) {
  Table t;
  t.id = spec.id;
  for (const auto& c : spec.columns) t.headers.push_back({c.name, c.type});
  const int n_rows = uniform(rng, 10, 15);
  for (int r = 0; r < n_rows; ++r) {
    std::vector<Value> row;
    for (const auto& c : spec.columns) {
      if (c.type == ColumnType::Text)
        row.emplace_back(pick(pool_values(c.pool), rng));
      else
        row.emplace_back(static_cast<double>(uniform(rng, c.lo, c.hi)));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string select_phrase(AggOp agg, const std::string& col, Rng& rng) {
  switch (agg) {
    case AggOp::None: {
      static const std::array<const char*, 3> forms = {"what is the ", "which ", "name the "};
      return forms[static_cast<std::size_t>(uniform(rng, 0, 2))] + col;
    }
    case AggOp::Max: return "what is the highest " + col;
    case AggOp::Min: return "what is the lowest " + col;
    case AggOp::Count: return "how many " + col + " are there";
    case AggOp::Sum: return "what is the total " + col;
    case AggOp::Avg: return "what is the average " + col;
  }
  return col;
}

std::string condition_phrase(const Condition& c, const Table& t) {
  const std::string& col = t.headers[c.column].name;
  switch (c.op) {
    case CondOp::Eq: return col + " is " + c.value;
    case CondOp::Gt: return col + " is more than " + c.value;
    case CondOp::Lt: return col + " is less than " + c.value;
  }
  return col;
}

Example make_example(const Table& t, Rng& rng) {
  static const std::discrete_distribution<std::size_t> cond_count{15, 35, 25, 15, 10};
  auto count_dist = cond_count;
  const auto& row = pick(t.rows, rng);
  const std::size_t n_cols = t.num_columns();
  const std::size_t k = std::min(count_dist(rng), n_cols);

  std::vector<std::size_t> cols(n_cols);
  for (std::size_t i = 0; i < n_cols; ++i) cols[i] = i;
  std::shuffle(cols.begin(), cols.end(), rng);
  cols.resize(k);

  SqlSketch sk;
  for (std::size_t c : cols) {
    Condition cond{c, CondOp::Eq, value_to_string(row[c])};
    if (t.headers[c].type == ColumnType::Real) {
      const double v = std::get<double>(row[c]);
      cond.op = static_cast<CondOp>(uniform(rng, 0, 2));
      // Nothing lies below a zero anchor cell in these tables.
      if (cond.op == CondOp::Gt && v <= 0.0) cond.op = CondOp::Lt;
      if (cond.op == CondOp::Gt) cond.value = format_number(std::max(0.0, v - uniform(rng, 1, 5)));
      if (cond.op == CondOp::Lt) cond.value = format_number(v + uniform(rng, 1, 5));
    }
    sk.conds.push_back(std::move(cond));
  }
  sk.sel = static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(n_cols) - 1));
  if (t.headers[sk.sel].type == ColumnType::Real)
    sk.agg = static_cast<AggOp>(uniform(rng, 0, static_cast<int>(kNumAggOps) - 1));
  else
    sk.agg = uniform(rng, 0, 1) ? AggOp::Count : AggOp::None;

  std::string q = select_phrase(sk.agg, t.headers[sk.sel].name, rng);
  for (std::size_t i = 0; i < sk.conds.size(); ++i)
    q += (i == 0 ? " when " : " and ") + condition_phrase(sk.conds[i], t);
  q += "?";
  return {std::move(q), t.id, std::move(sk)};
}

}  // namespace

std::vector<std::string> corpus_words(const std::vector<Example>& examples, const TableMap& tables) {
  std::vector<std::string> words;
  for (const auto& ex : examples)
    for (const auto& w : basic_tokenize(ex.question)) words.push_back(w.text);
  for (const auto& [id, t] : tables)
    for (const auto& h : t.headers)
      for (auto& w : header_words(h.name)) words.push_back(std::move(w));
  return words;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg) {
  Rng rng(cfg.seed);
  SyntheticData data;
  std::vector<const Table*> order;
  for (const auto& spec : table_specs()) {
    Table t = make_table(spec, rng);
    validate(t);
    auto [it, inserted] = data.tables.emplace(t.id, std::move(t));
    order.push_back(&it->second);
  }
  auto draw = [&](std::size_t n, std::vector<Example>& out) {
    for (std::size_t i = 0; i < n; ++i) {
      const Table& t = *pick(order, rng);
      Example ex = make_example(t, rng);
      check(!is_empty(execute(ex.gold, t)), ErrorKind::Internal,
            "synthetic gold query returned nothing");
      out.push_back(std::move(ex));
    }
  };
  draw(cfg.train_examples, data.train);
  draw(cfg.dev_examples, data.dev);

  std::vector<Example> all = data.train;
  all.insert(all.end(), data.dev.begin(), data.dev.end());
  data.vocab = build_vocabulary(corpus_words(all, data.tables));
  return data;
}

}  // namespace sqlova
