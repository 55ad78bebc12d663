#pragma once

#include "flarelite/types.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flarelite {

/// One column of a ColumnTable. Int64/Date values live in `ints`, Float64 in
/// `floats`, Text in an offsets+arena pair (offsets has size()+1 entries,
/// starting at 0 and ending at arena.size()). Nullable columns carry a
/// bitmap where a set bit marks a NULL entry.
class Column {
public:
    explicit Column(DataType dtype, bool nullable = false);

    DataType dtype() const { return dtype_; }
    bool nullable() const { return nullable_; }
    std::size_t size() const { return size_; }

    std::span<const std::int64_t> ints() const { return ints_; }
    std::span<const double> floats() const { return floats_; }
    std::span<const std::uint64_t> offsets() const { return offsets_; }
    std::string_view arena() const { return arena_; }
    std::span<const std::uint8_t> null_bitmap() const { return nulls_; }

    bool is_null(std::size_t i) const { return nullable_ && ((nulls_[i >> 3] >> (i & 7)) & 1u); }
    std::int64_t int_at(std::size_t i) const { return ints_[i]; }
    double float_at(std::size_t i) const { return floats_[i]; }
    std::string_view text_at(std::size_t i) const {
        return std::string_view(arena_).substr(offsets_[i], offsets_[i + 1] - offsets_[i]);
    }
    Scalar get(std::size_t i) const;

    void reserve(std::size_t n);
    void append_int(std::int64_t v);
    void append_float(double v);
    void append_text(std::string_view v);
    /// Throws DataError when the column is not nullable.
    void append_null();
    /// Appends a scalar of the column's type (or NULL).
    void append(const Scalar& v);

    /// Bulk construction used by the FBC reader.
    static Column from_ints(DataType t, std::vector<std::int64_t> v);
    static Column from_floats(std::vector<double> v);
    static Column from_text(std::vector<std::uint64_t> offsets, std::string arena);
    void set_null_bitmap(std::vector<std::uint8_t> bits);

    bool operator==(const Column& other) const;

private:
    void push_valid_bit();

    DataType dtype_;
    bool nullable_;
    std::size_t size_ = 0;
    std::vector<std::int64_t> ints_;
    std::vector<double> floats_;
    std::vector<std::uint64_t> offsets_;
    std::string arena_;
    std::vector<std::uint8_t> nulls_;
};

/// Immutable-after-construction columnar table.
class ColumnTable {
public:
    ColumnTable() = default;
    /// Throws DataError when columns do not match the schema or differ in length.
    /// `row_count` is only needed for zero-column tables.
    ColumnTable(Schema schema, std::vector<Column> columns, std::optional<std::size_t> row_count = std::nullopt);
    static ColumnTable empty(const Schema& schema);

    const Schema& schema() const { return schema_; }
    std::size_t row_count() const { return row_count_; }
    std::size_t column_count() const { return columns_.size(); }
    const Column& column(std::size_t i) const { return columns_[i]; }
    const Column& column(std::string_view name) const;
    const std::vector<Column>& columns() const { return columns_; }

    std::vector<Scalar> row(std::size_t r) const;

    /// Keeps only the named columns, in the given order.
    ColumnTable project(const std::vector<std::string>& names) const;

    bool operator==(const ColumnTable& other) const;

private:
    Schema schema_;
    std::vector<Column> columns_;
    std::size_t row_count_ = 0;
};

using TablePtr = std::shared_ptr<const ColumnTable>;

/// Row-oriented builder for tests and generators.
class TableBuilder {
public:
    explicit TableBuilder(Schema schema);
    TableBuilder& add_row(std::vector<Scalar> values);
    ColumnTable finish();
    Column& column(std::size_t i) { return columns_[i]; }

private:
    Schema schema_;
    std::vector<Column> columns_;
};

/// Process-wide data access counters; used to verify deferred evaluation and
/// column pruning.
struct StorageCounters {
    std::atomic<std::uint64_t> bytes_read{0};
    std::atomic<std::uint64_t> payload_bytes_read{0};
    std::atomic<std::uint64_t> columns_read{0};
    std::atomic<std::uint64_t> rows_loaded{0};
};

StorageCounters& storage_counters();

} // namespace flarelite
