#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace flarelite {

/// Column and expression types. `Bool` only exists for predicates and
/// staged expressions; it can never be stored in a table.
enum class DataType : std::uint8_t {
    Int64 = 0,
    Float64 = 1,
    Date = 2, // yyyymmdd packed into an Int64
    Text = 3,
    Bool = 4,
};

std::string_view to_string(DataType t);

inline bool is_numeric(DataType t) { return t == DataType::Int64 || t == DataType::Float64; }
inline bool is_storable(DataType t) { return t != DataType::Bool; }
/// Int64 and Date share the same physical representation.
inline bool is_integral_repr(DataType t) { return t == DataType::Int64 || t == DataType::Date; }

/// A single nullable value. monostate is SQL NULL.
using Scalar = std::variant<std::monostate, std::int64_t, double, std::string, bool>;

inline bool is_null(const Scalar& s) { return std::holds_alternative<std::monostate>(s); }
std::string scalar_to_string(const Scalar& s, DataType t);

namespace date {

/// Checks the month/day ranges of a yyyymmdd value and that the day exists.
bool valid(std::int64_t yyyymmdd);
/// Parses exactly "YYYY-MM-DD".
std::optional<std::int64_t> parse(std::string_view text);
std::string format(std::int64_t yyyymmdd);
std::int64_t add_days(std::int64_t yyyymmdd, int days);

} // namespace date

struct ColumnDef {
    std::string name;
    DataType dtype = DataType::Int64;
    bool nullable = false;

    bool operator==(const ColumnDef&) const = default;
};

struct ColumnRef {
    std::size_t ordinal;
    DataType dtype;
};

/// Ordered column list with pairwise distinct names.
class Schema {
public:
    Schema() = default;
    /// Throws PlanError on empty or duplicate names or non-storable types.
    explicit Schema(std::vector<ColumnDef> columns);

    const std::vector<ColumnDef>& columns() const { return columns_; }
    std::size_t size() const { return columns_.size(); }
    bool empty() const { return columns_.empty(); }
    const ColumnDef& operator[](std::size_t i) const { return columns_[i]; }

    std::optional<std::size_t> find(std::string_view name) const;
    /// Throws PlanError "unknown column <name>" listing the candidates.
    ColumnRef resolve(std::string_view name) const;

    std::vector<std::string> names() const;
    bool operator==(const Schema&) const = default;

private:
    std::vector<ColumnDef> columns_;
};

} // namespace flarelite
