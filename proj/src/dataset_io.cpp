#include "sqlova/dataset_io.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "sqlova/error.hpp"

namespace sqlova {

using nlohmann::json;

namespace {

const json& field(const json& j, const char* key) {
  if (!j.is_object()) fail(ErrorKind::Parse, "record is not a JSON object");
  auto it = j.find(key);
  if (it == j.end()) fail(ErrorKind::Parse, std::string("missing field '") + key + "'");
  return *it;
}

std::string as_string(const json& j, const char* what) {
  if (!j.is_string()) fail(ErrorKind::Parse, std::string(what) + " must be a string");
  return j.get<std::string>();
}

long long as_int(const json& j, const char* what) {
  if (!j.is_number_integer() && !j.is_number_unsigned())
    fail(ErrorKind::Parse, std::string(what) + " must be an integer");
  return j.get<long long>();
}

std::string cond_value_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number()) return format_number(v.get<double>());
  fail(ErrorKind::Parse, "condition value must be a string or number");
}

template <typename F>
void for_each_record(std::istream& in, F&& f) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      json j;
      try {
        j = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::Parse, std::string("malformed JSON: ") + e.what());
      }
      f(j);
    } catch (const Error& e) {
      throw Error(e.kind(), "line " + std::to_string(lineno) + ": " + e.what());
    } catch (const json::exception& e) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open " + path);
  return in;
}

}  // namespace

Table table_from_json(const json& j) {
  Table t;
  t.id = as_string(field(j, "id"), "id");
  const json& header = field(j, "header");
  const json& types = field(j, "types");
  if (!header.is_array() || !types.is_array())
    fail(ErrorKind::Parse, "header and types must be arrays");
  check(header.size() == types.size(), ErrorKind::Schema,
        "table " + t.id + ": header and types differ in length");
  for (std::size_t c = 0; c < header.size(); ++c) {
    Column col{as_string(header[c], "header"), ColumnType::Text};
    const std::string ty = to_lower(as_string(types[c], "type"));
    if (ty == "real") col.type = ColumnType::Real;
    else if (ty != "text") fail(ErrorKind::Parse, "unknown column type '" + ty + "'");
    t.headers.push_back(std::move(col));
  }
  const json& rows = field(j, "rows");
  if (!rows.is_array()) fail(ErrorKind::Parse, "rows must be an array");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const json& row = rows[r];
    if (!row.is_array()) fail(ErrorKind::Parse, "row must be an array");
    check(row.size() == t.headers.size(), ErrorKind::Schema,
          "table " + t.id + " row " + std::to_string(r) + " has " +
              std::to_string(row.size()) + " cells for " +
              std::to_string(t.headers.size()) + " headers");
    std::vector<Value> cells;
    cells.reserve(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      const json& cell = row[c];
      if (t.headers[c].type == ColumnType::Real) {
        std::optional<double> v;
        if (cell.is_number()) v = cell.get<double>();
        else if (cell.is_string()) v = parse_number(cell.get<std::string>());
        if (!v || !std::isfinite(*v))
          fail(ErrorKind::Type, "table " + t.id + " row " + std::to_string(r) + ": value " +
                                    cell.dump() + " in real column " + t.headers[c].name +
                                    " is not a number");
        cells.emplace_back(*v);
      } else if (cell.is_string()) {
        cells.emplace_back(cell.get<std::string>());
      } else if (cell.is_number()) {
        cells.emplace_back(format_number(cell.get<double>()));
      } else {
        fail(ErrorKind::Parse, "cell must be a string or number");
      }
    }
    t.rows.push_back(std::move(cells));
  }
  validate(t);
  return t;
}

SqlSketch sketch_from_json(const json& j, std::size_t max_conds) {
  SqlSketch s;
  const long long sel = as_int(field(j, "sel"), "sel");
  check(sel >= 0, ErrorKind::Code, "negative select column");
  s.sel = static_cast<std::size_t>(sel);
  s.agg = agg_from_code(as_int(field(j, "agg"), "agg"));
  const json& conds = field(j, "conds");
  if (!conds.is_array()) fail(ErrorKind::Parse, "conds must be an array");
  check(conds.size() <= max_conds, ErrorKind::Code,
        std::to_string(conds.size()) + " conditions exceed max_conds " +
            std::to_string(max_conds));
  for (const json& c : conds) {
    if (!c.is_array() || c.size() != 3)
      fail(ErrorKind::Parse, "condition must be [column, op, value]");
    const long long col = as_int(c[0], "condition column");
    check(col >= 0, ErrorKind::Code, "negative condition column");
    s.conds.push_back({static_cast<std::size_t>(col), cond_from_code(as_int(c[1], "op")),
                       cond_value_string(c[2])});
  }
  return s;
}

Example example_from_json(const json& j, std::size_t max_conds) {
  Example ex;
  ex.question = as_string(field(j, "question"), "question");
  ex.table_id = as_string(field(j, "table_id"), "table_id");
  ex.gold = sketch_from_json(field(j, "sql"), max_conds);
  return ex;
}

TableMap parse_tables(std::istream& in) {
  TableMap tables;
  for_each_record(in, [&](const json& j) {
    Table t = table_from_json(j);
    const std::string id = t.id;
    check(!tables.contains(id), ErrorKind::Parse, "duplicate table id " + id);
    tables.emplace(id, std::move(t));
  });
  return tables;
}

std::vector<Example> parse_examples(std::istream& in, std::size_t max_conds) {
  std::vector<Example> out;
  for_each_record(in, [&](const json& j) { out.push_back(example_from_json(j, max_conds)); });
  return out;
}

TableMap load_tables(const std::string& path) {
  auto in = open_input(path);
  return parse_tables(in);
}

std::vector<Example> load_examples(const std::string& path, std::size_t max_conds) {
  auto in = open_input(path);
  return parse_examples(in, max_conds);
}

const Table& lookup_table(const TableMap& tables, const std::string& id) {
  auto it = tables.find(id);
  if (it == tables.end()) fail(ErrorKind::Usage, "unknown table id " + id);
  return it->second;
}

void validate_examples(const std::vector<Example>& examples, const TableMap& tables,
                       std::size_t max_conds) {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    try {
      validate(examples[i].gold, lookup_table(tables, examples[i].table_id), max_conds);
    } catch (const Error& e) {
      throw Error(ErrorKind::Usage, "example " + std::to_string(i) + ": " + e.what());
    }
  }
}

json to_json(const Table& table) {
  json header = json::array(), types = json::array(), rows = json::array();
  for (const auto& h : table.headers) {
    header.push_back(h.name);
    types.push_back(h.type == ColumnType::Real ? "real" : "text");
  }
  for (const auto& row : table.rows) {
    json r = json::array();
    for (const auto& v : row) {
      if (const auto* s = std::get_if<std::string>(&v)) r.push_back(*s);
      else r.push_back(std::get<double>(v));
    }
    rows.push_back(std::move(r));
  }
  return json{{"id", table.id}, {"header", header}, {"types", types}, {"rows", rows}};
}

json to_json(const SqlSketch& sketch) {
  json conds = json::array();
  for (const auto& c : sketch.conds)
    conds.push_back(json::array({c.column, static_cast<int>(c.op), c.value}));
  return json{{"sel", sketch.sel}, {"agg", static_cast<int>(sketch.agg)}, {"conds", conds}};
}

json to_json(const Example& example) {
  return json{{"question", example.question},
              {"table_id", example.table_id},
              {"sql", to_json(example.gold)}};
}

void write_tables(std::ostream& out, const TableMap& tables) {
  for (const auto& [id, t] : tables) out << to_json(t).dump() << '\n';
}

void write_examples(std::ostream& out, const std::vector<Example>& examples) {
  for (const auto& ex : examples) out << to_json(ex).dump() << '\n';
}

}  // namespace sqlova
