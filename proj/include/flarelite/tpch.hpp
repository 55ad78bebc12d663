#pragma once

#include "flarelite/catalog.hpp"
#include "flarelite/plan.hpp"
#include "flarelite/udf.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace flarelite::tpch {

/// lineitem, orders, customer, part, partsupp, supplier, nation, region.
const std::vector<std::string>& table_names();
Schema schema(std::string_view table);

struct GenConfig {
    double scale_factor = 0.01;
    std::uint64_t seed = 42;
};

/// Expected row count of `table` at a scale factor.
std::uint64_t expected_rows(std::string_view table, double scale_factor);

/// Deterministic simplified TPC-H data: uniform value distributions with the
/// standard schemas, key relationships and value domains.
std::map<std::string, ColumnTable> generate(const GenConfig& cfg);

enum class FileFormat : std::uint8_t { Csv, Fbc };

/// Writes `<dir>/<table>.tbl` (pipe-delimited) or `<dir>/<table>.fbc`.
void write_tables(const std::map<std::string, ColumnTable>& tables, const std::filesystem::path& dir, FileFormat fmt);

void register_all(Catalog& catalog, std::map<std::string, ColumnTable> tables);

struct Query {
    std::string name;
    std::string description;
    /// Empty when the query is built through the DataFrame API.
    std::string sql;
    /// Result rows are ordered by the query.
    bool ordered = false;
};

/// Q1, Q3, Q4, Q6, Q12, Q13, Q14, Q19.
const std::vector<Query>& suite();
/// Throws Error "unknown query <name>".
const Query& find_query(std::string_view name);
/// Bound logical plan (UDF calls still present).
PlanPtr build(const Query& q, const Catalog& catalog, const UdfRegistry& udfs);

/// A single lineitem-orders equi-join used for pipeline-structure checks.
inline constexpr const char* kJoinSql =
    "select l_orderkey, l_quantity, o_orderdate from lineitem join orders on l_orderkey = o_orderkey";

} // namespace flarelite::tpch
