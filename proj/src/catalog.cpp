#include "flarelite/catalog.hpp"

#include "flarelite/error.hpp"

namespace flarelite {

void Catalog::register_table(const std::string& name, const Schema& schema, TablePtr table) {
    if (name.empty()) {
        throw PlanError("table name must not be empty");
    }
    if (!table) {
        throw PlanError("table " + name + " has no storage");
    }
    const Schema& actual = table->schema();
    if (actual.size() != schema.size()) {
        throw PlanError("table " + name + ": schema has " + std::to_string(schema.size()) +
                        " columns but storage has " + std::to_string(actual.size()));
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
        if (schema[i].dtype != table->column(i).dtype()) {
            throw PlanError("table " + name + ": column " + schema[i].name + " declared " +
                            std::string(to_string(schema[i].dtype)) + " but stored as " +
                            std::string(to_string(table->column(i).dtype())));
        }
        if (table->column(i).nullable() && !schema[i].nullable) {
            throw PlanError("table " + name + ": column " + schema[i].name +
                            " stores NULLs but is declared non-nullable");
        }
    }
    CatalogEntry e{name, schema, std::move(table), std::nullopt, 0};
    e.row_count = e.table->row_count();
    tables_.insert_or_assign(name, std::move(e));
}

void Catalog::register_table(const std::string& name, ColumnTable table) {
    Schema schema = table.schema();
    register_table(name, schema, std::make_shared<const ColumnTable>(std::move(table)));
}

void Catalog::register_fbc(const std::string& name, const std::filesystem::path& path) {
    if (name.empty()) {
        throw PlanError("table name must not be empty");
    }
    auto dir = read_fbc_directory(path);
    CatalogEntry e{name, dir.schema(), nullptr, path, dir.row_count()};
    tables_.insert_or_assign(name, std::move(e));
}

void Catalog::drop(const std::string& name) { tables_.erase(name); }

bool Catalog::contains(std::string_view name) const { return tables_.find(name) != tables_.end(); }

const CatalogEntry& Catalog::lookup(std::string_view name) const {
    auto it = tables_.find(name);
    if (it == tables_.end()) {
        throw PlanError("unknown table " + std::string(name));
    }
    return it->second;
}

std::vector<std::string> Catalog::table_names() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : tables_) {
        out.push_back(k);
    }
    return out;
}

TablePtr Catalog::load(std::string_view name, const std::vector<std::string>& columns, FbcReadStats* stats) const {
    const auto& e = lookup(name);
    if (e.fbc_path) {
        return std::make_shared<const ColumnTable>(read_fbc(*e.fbc_path, columns, stats));
    }
    return e.table;
}

} // namespace flarelite
