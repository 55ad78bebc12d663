#include "flarelite/column.hpp"

#include "flarelite/error.hpp"

#include <cstring>

namespace flarelite {

Column::Column(DataType dtype, bool nullable) : dtype_(dtype), nullable_(nullable) {
    if (dtype == DataType::Text) {
        offsets_.push_back(0);
    }
}

Scalar Column::get(std::size_t i) const {
    if (is_null(i)) {
        return std::monostate{};
    }
    switch (dtype_) {
    case DataType::Int64:
    case DataType::Date: return ints_[i];
    case DataType::Float64: return floats_[i];
    case DataType::Text: return std::string(text_at(i));
    case DataType::Bool: break;
    }
    return std::monostate{};
}

void Column::reserve(std::size_t n) {
    switch (dtype_) {
    case DataType::Int64:
    case DataType::Date: ints_.reserve(n); break;
    case DataType::Float64: floats_.reserve(n); break;
    case DataType::Text: offsets_.reserve(n + 1); break;
    case DataType::Bool: break;
    }
    if (nullable_) {
        nulls_.reserve((n + 7) / 8);
    }
}

void Column::push_valid_bit() {
    if (nullable_ && (size_ & 7) == 0) {
        nulls_.push_back(0);
    }
    ++size_;
}

void Column::append_int(std::int64_t v) {
    ints_.push_back(v);
    push_valid_bit();
}

void Column::append_float(double v) {
    floats_.push_back(v);
    push_valid_bit();
}

void Column::append_text(std::string_view v) {
    arena_.append(v);
    offsets_.push_back(arena_.size());
    push_valid_bit();
}

void Column::append_null() {
    if (!nullable_) {
        throw DataError("NULL appended to non-nullable column");
    }
    switch (dtype_) {
    case DataType::Int64:
    case DataType::Date: ints_.push_back(0); break;
    case DataType::Float64: floats_.push_back(0.0); break;
    case DataType::Text: offsets_.push_back(arena_.size()); break;
    case DataType::Bool: break;
    }
    if ((size_ & 7) == 0) {
        nulls_.push_back(0);
    }
    nulls_[size_ >> 3] |= static_cast<std::uint8_t>(1u << (size_ & 7));
    ++size_;
}

void Column::append(const Scalar& v) {
    if (flarelite::is_null(v)) {
        append_null();
        return;
    }
    switch (dtype_) {
    case DataType::Int64:
    case DataType::Date: append_int(std::get<std::int64_t>(v)); break;
    case DataType::Float64:
        if (auto* i = std::get_if<std::int64_t>(&v)) {
            append_float(static_cast<double>(*i));
        } else {
            append_float(std::get<double>(v));
        }
        break;
    case DataType::Text: append_text(std::get<std::string>(v)); break;
    case DataType::Bool: throw DataError("Bool values cannot be stored");
    }
}

Column Column::from_ints(DataType t, std::vector<std::int64_t> v) {
    Column c(t);
    c.size_ = v.size();
    c.ints_ = std::move(v);
    return c;
}

Column Column::from_floats(std::vector<double> v) {
    Column c(DataType::Float64);
    c.size_ = v.size();
    c.floats_ = std::move(v);
    return c;
}

Column Column::from_text(std::vector<std::uint64_t> offsets, std::string arena) {
    Column c(DataType::Text);
    c.size_ = offsets.empty() ? 0 : offsets.size() - 1;
    c.offsets_ = std::move(offsets);
    c.arena_ = std::move(arena);
    return c;
}

void Column::set_null_bitmap(std::vector<std::uint8_t> bits) {
    if (bits.size() != (size_ + 7) / 8) {
        throw DataError("null bitmap size mismatch");
    }
    nullable_ = true;
    nulls_ = std::move(bits);
}

bool Column::operator==(const Column& o) const {
    if (dtype_ != o.dtype_ || size_ != o.size_) {
        return false;
    }
    for (std::size_t i = 0; i < size_; ++i) {
        bool an = is_null(i);
        if (an != o.is_null(i)) {
            return false;
        }
        if (an) {
            continue;
        }
        switch (dtype_) {
        case DataType::Int64:
        case DataType::Date:
            if (ints_[i] != o.ints_[i]) return false;
            break;
        case DataType::Float64:
            if (std::memcmp(&floats_[i], &o.floats_[i], sizeof(double)) != 0) return false;
            break;
        case DataType::Text:
            if (text_at(i) != o.text_at(i)) return false;
            break;
        case DataType::Bool: break;
        }
    }
    return true;
}

ColumnTable::ColumnTable(Schema schema, std::vector<Column> columns, std::optional<std::size_t> row_count)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
    if (columns_.size() != schema_.size()) {
        throw DataError("table has " + std::to_string(columns_.size()) + " columns but schema has " +
                        std::to_string(schema_.size()));
    }
    row_count_ = columns_.empty() ? row_count.value_or(0) : columns_[0].size();
    if (row_count && *row_count != row_count_) {
        throw DataError("row count mismatch");
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        const auto& def = schema_[i];
        if (columns_[i].dtype() != def.dtype) {
            throw DataError("column " + def.name + " has type " + std::string(to_string(columns_[i].dtype())) +
                            " but schema declares " + std::string(to_string(def.dtype)));
        }
        if (columns_[i].size() != row_count_) {
            throw DataError("column " + def.name + " length mismatch");
        }
    }
}

ColumnTable ColumnTable::empty(const Schema& schema) {
    std::vector<Column> cols;
    for (const auto& c : schema.columns()) {
        cols.emplace_back(c.dtype, c.nullable);
    }
    return ColumnTable(schema, std::move(cols));
}

const Column& ColumnTable::column(std::string_view name) const {
    return columns_[schema_.resolve(name).ordinal];
}

std::vector<Scalar> ColumnTable::row(std::size_t r) const {
    std::vector<Scalar> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        out.push_back(c.get(r));
    }
    return out;
}

ColumnTable ColumnTable::project(const std::vector<std::string>& names) const {
    std::vector<ColumnDef> defs;
    std::vector<Column> cols;
    for (const auto& n : names) {
        auto ref = schema_.resolve(n);
        defs.push_back(schema_[ref.ordinal]);
        cols.push_back(columns_[ref.ordinal]);
    }
    return ColumnTable(Schema(std::move(defs)), std::move(cols), row_count_);
}

bool ColumnTable::operator==(const ColumnTable& o) const {
    return schema_ == o.schema_ && row_count_ == o.row_count_ && columns_ == o.columns_;
}

TableBuilder::TableBuilder(Schema schema) : schema_(std::move(schema)) {
    for (const auto& c : schema_.columns()) {
        columns_.emplace_back(c.dtype, c.nullable);
    }
}

TableBuilder& TableBuilder::add_row(std::vector<Scalar> values) {
    if (values.size() != columns_.size()) {
        throw DataError("row arity mismatch");
    }
    for (std::size_t i = 0; i < values.size(); ++i) {
        columns_[i].append(values[i]);
    }
    return *this;
}

ColumnTable TableBuilder::finish() {
    return ColumnTable(schema_, std::move(columns_));
}

StorageCounters& storage_counters() {
    static StorageCounters counters;
    return counters;
}

} // namespace flarelite
