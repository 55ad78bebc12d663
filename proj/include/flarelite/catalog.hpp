#pragma once

#include "flarelite/column.hpp"
#include "flarelite/fbc.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace flarelite {

/// A registered relation: either resident in memory or backed by an FBC file
/// whose columns are read on demand.
struct CatalogEntry {
    std::string name;
    Schema schema;
    TablePtr table;
    std::optional<std::filesystem::path> fbc_path;
    std::uint64_t row_count = 0;
};

/// Table registry. Safe for concurrent readers; writers must be serialized
/// by the caller.
class Catalog {
public:
    /// Throws PlanError naming the offending column when `table` does not
    /// conform to `schema`. Re-registration replaces the prior binding.
    void register_table(const std::string& name, const Schema& schema, TablePtr table);
    void register_table(const std::string& name, ColumnTable table);
    /// Reads only the file directory; column payloads are loaded at execution.
    void register_fbc(const std::string& name, const std::filesystem::path& path);
    void drop(const std::string& name);

    bool contains(std::string_view name) const;
    /// Throws PlanError "unknown table <name>".
    const CatalogEntry& lookup(std::string_view name) const;
    std::vector<std::string> table_names() const;

    /// Returns a table containing at least the named columns. Resident tables
    /// are returned as-is; file-backed tables read only those payloads.
    TablePtr load(std::string_view name, const std::vector<std::string>& columns, FbcReadStats* stats = nullptr) const;

private:
    std::map<std::string, CatalogEntry, std::less<>> tables_;
};

} // namespace flarelite
