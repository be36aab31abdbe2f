#pragma once

// WikiSQL-style JSON-lines ingestion and serialization.
//
// Table records:   {"id": ..., "header": [...], "types": ["text"|"real"], "rows": [[...]]}
// Example records: {"question": ..., "table_id": ..., "sql": {"sel": n, "agg": n,
//                   "conds": [[col, op, "value"], ...]}}
// Unknown fields (page_title, phase, ...) are ignored.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "sqlova/sql.hpp"

namespace sqlova {

using TableMap = std::map<std::string, Table, std::less<>>;

TableMap parse_tables(std::istream& in);
std::vector<Example> parse_examples(std::istream& in, std::size_t max_conds = kDefaultMaxConds);

TableMap load_tables(const std::string& path);
std::vector<Example> load_examples(const std::string& path,
                                   std::size_t max_conds = kDefaultMaxConds);

/// Every table id resolves and every gold sketch fits its table.
void validate_examples(const std::vector<Example>& examples, const TableMap& tables,
                       std::size_t max_conds = kDefaultMaxConds);

const Table& lookup_table(const TableMap& tables, const std::string& id);

nlohmann::json to_json(const Table& table);
nlohmann::json to_json(const SqlSketch& sketch);
nlohmann::json to_json(const Example& example);

Table table_from_json(const nlohmann::json& j);
SqlSketch sketch_from_json(const nlohmann::json& j, std::size_t max_conds = kDefaultMaxConds);
Example example_from_json(const nlohmann::json& j, std::size_t max_conds = kDefaultMaxConds);

void write_tables(std::ostream& out, const TableMap& tables);
void write_examples(std::ostream& out, const std::vector<Example>& examples);

}  // namespace sqlova
