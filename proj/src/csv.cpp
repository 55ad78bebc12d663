#include "flarelite/csv.hpp"

#include "flarelite/error.hpp"

#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

namespace flarelite {

namespace {

enum class FieldStatus { Ok, Malformed };

using FieldFn = FieldStatus (*)(std::string_view, Column&);

FieldStatus parse_int(std::string_view f, Column& col) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) {
        return FieldStatus::Malformed;
    }
    col.append_int(v);
    return FieldStatus::Ok;
}

FieldStatus parse_float(std::string_view f, Column& col) {
    double v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || p != f.data() + f.size()) {
        return FieldStatus::Malformed;
    }
    col.append_float(v);
    return FieldStatus::Ok;
}

FieldStatus parse_date(std::string_view f, Column& col) {
    auto v = date::parse(f);
    if (!v) {
        return FieldStatus::Malformed;
    }
    col.append_int(*v);
    return FieldStatus::Ok;
}

FieldStatus parse_text(std::string_view f, Column& col) {
    col.append_text(f);
    return FieldStatus::Ok;
}

struct FieldSlot {
    FieldFn parse;
    Column* column;
    bool nullable;
};

FieldFn parser_for(DataType t) {
    switch (t) {
    case DataType::Int64: return parse_int;
    case DataType::Float64: return parse_float;
    case DataType::Date: return parse_date;
    case DataType::Text: return parse_text;
    case DataType::Bool: break;
    }
    throw DataError("no CSV parser for type Bool");
}

[[noreturn]] void fail_field(std::size_t line, std::size_t ordinal, const Schema& schema, std::string_view field) {
    throw DataError("line " + std::to_string(line) + ", column " + std::to_string(ordinal) + " (" +
                    schema[ordinal].name + "): malformed " + std::string(to_string(schema[ordinal].dtype)) +
                    " field '" + std::string(field) + "'");
}

} // namespace

ColumnTable parse_csv(std::string_view text, const Schema& schema, const CsvOptions& opts) {
    if (opts.delimiter == '\n') {
        throw DataError("CSV delimiter must not be a newline");
    }
    std::vector<Column> columns;
    columns.reserve(schema.size());
    for (const auto& c : schema.columns()) {
        columns.emplace_back(c.dtype, c.nullable);
    }
    std::vector<FieldSlot> slots;
    slots.reserve(schema.size());
    for (std::size_t i = 0; i < schema.size(); ++i) {
        slots.push_back({parser_for(schema[i].dtype), &columns[i], schema[i].nullable});
    }
    const std::size_t arity = slots.size();
    const char delim = opts.delimiter;
    const std::string_view null_token = opts.null_token;

    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool skip_header = opts.has_header;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) {
            eol = text.size();
        }
        std::string_view line = text.substr(pos, eol - pos);
        pos = eol + 1;
        ++line_no;
        if (skip_header) {
            skip_header = false;
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::size_t field_start = 0;
        std::size_t k = 0;
        for (;;) {
            const void* hit = std::memchr(line.data() + field_start, delim, line.size() - field_start);
            std::size_t field_end =
                hit ? static_cast<std::size_t>(static_cast<const char*>(hit) - line.data()) : line.size();
            if (k >= arity) {
                throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                                " fields, got more");
            }
            std::string_view field = line.substr(field_start, field_end - field_start);
            const FieldSlot& slot = slots[k];
            if (field == null_token) {
                if (!slot.nullable) {
                    fail_field(line_no, k, schema, field);
                }
                slot.column->append_null();
            } else if (slot.parse(field, *slot.column) != FieldStatus::Ok) {
                fail_field(line_no, k, schema, field);
            }
            ++k;
            if (!hit) {
                break;
            }
            field_start = field_end + 1;
        }
        if (k != arity) {
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(arity) +
                            " fields, got " + std::to_string(k));
        }
    }
    std::size_t rows = columns.empty() ? 0 : columns[0].size();
    storage_counters().rows_loaded += rows;
    return ColumnTable(schema, std::move(columns));
}

ColumnTable load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError("cannot open " + path.string());
    }
    std::string buf;
    in.seekg(0, std::ios::end);
    buf.resize(static_cast<std::size_t>(in.tellg()));
    in.seekg(0);
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    storage_counters().bytes_read += buf.size();
    return parse_csv(buf, schema, opts);
}

std::string format_csv(const ColumnTable& table, const CsvOptions& opts) {
    std::string out;
    const auto& schema = table.schema();
    if (opts.has_header) {
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (c) out += opts.delimiter;
            out += schema[c].name;
        }
        out += '\n';
    }
    char buf[64];
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t c = 0; c < table.column_count(); ++c) {
            if (c) out += opts.delimiter;
            const Column& col = table.column(c);
            if (col.is_null(r)) {
                out += opts.null_token;
                continue;
            }
            switch (col.dtype()) {
            case DataType::Int64: {
                auto res = std::to_chars(buf, buf + sizeof(buf), col.int_at(r));
                out.append(buf, res.ptr);
                break;
            }
            case DataType::Float64: {
                auto res = std::to_chars(buf, buf + sizeof(buf), col.float_at(r));
                out.append(buf, res.ptr);
                break;
            }
            case DataType::Date: out += date::format(col.int_at(r)); break;
            case DataType::Text: out += col.text_at(r); break;
            case DataType::Bool: break;
            }
        }
        out += '\n';
    }
    return out;
}

void write_csv(const ColumnTable& table, const std::filesystem::path& path, const CsvOptions& opts) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    auto text = format_csv(table, opts);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

} // namespace flarelite
