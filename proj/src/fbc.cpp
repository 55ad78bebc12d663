#include "flarelite/fbc.hpp"

#include "flarelite/error.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

namespace flarelite {

static_assert(std::endian::native == std::endian::little, "FBC I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'F', 'B', 'C', '1'};

template <typename T>
void put(std::string& out, T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T take(const char*& p) {
    T v;
    std::memcpy(&v, p, sizeof(T));
    p += sizeof(T);
    return v;
}

std::uint8_t dtype_code(DataType t) {
    switch (t) {
    case DataType::Int64: return 0;
    case DataType::Float64: return 1;
    case DataType::Date: return 2;
    case DataType::Text: return 3;
    case DataType::Bool: break;
    }
    throw DataError("Bool columns cannot be written to FBC");
}

std::optional<DataType> dtype_from_code(std::uint8_t c) {
    switch (c) {
    case 0: return DataType::Int64;
    case 1: return DataType::Float64;
    case 2: return DataType::Date;
    case 3: return DataType::Text;
    default: return std::nullopt;
    }
}

std::uint64_t bitmap_len(std::uint64_t rows) { return (rows + 7) / 8; }

class CountingReader {
public:
    explicit CountingReader(const std::filesystem::path& path) : in_(path, std::ios::binary) {
        if (!in_) {
            throw DataError("cannot open " + path.string());
        }
        in_.seekg(0, std::ios::end);
        size_ = static_cast<std::uint64_t>(in_.tellg());
        in_.seekg(0);
    }

    std::uint64_t size() const { return size_; }

    bool read_at(std::uint64_t offset, void* dst, std::uint64_t n) {
        if (offset > size_ || n > size_ - offset) {
            return false;
        }
        in_.seekg(static_cast<std::streamoff>(offset));
        in_.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!in_) {
            return false;
        }
        bytes_ += n;
        return true;
    }

    std::uint64_t bytes() const { return bytes_; }

private:
    std::ifstream in_;
    std::uint64_t size_ = 0;
    std::uint64_t bytes_ = 0;
};

FbcDirectory parse_directory(CountingReader& r) {
    FbcDirectory dir;
    dir.file_size = r.size();
    char head[12];
    if (!r.read_at(0, head, sizeof(head)) || std::memcmp(head, kMagic, 4) != 0) {
        throw DataError("not an FBC file");
    }
    const char* p = head + 4;
    auto version = take<std::uint32_t>(p);
    auto count = take<std::uint32_t>(p);
    if (version != kFbcVersion) {
        throw DataError("not an FBC file (unsupported version " + std::to_string(version) + ")");
    }
    std::uint64_t off = sizeof(head);
    for (std::uint32_t i = 0; i < count; ++i) {
        std::uint16_t name_len = 0;
        if (!r.read_at(off, &name_len, 2)) {
            throw DataError("not an FBC file (truncated directory)");
        }
        off += 2;
        std::string entry(name_len + 2 + 3 * 8, '\0');
        if (!r.read_at(off, entry.data(), entry.size())) {
            throw DataError("not an FBC file (truncated directory)");
        }
        off += entry.size();
        const char* q = entry.data();
        FbcColumnInfo info;
        info.def.name.assign(q, name_len);
        q += name_len;
        auto code = take<std::uint8_t>(q);
        auto dt = dtype_from_code(code);
        if (!dt) {
            throw DataError("corrupt column " + info.def.name + " (bad dtype code)");
        }
        info.def.dtype = *dt;
        info.def.nullable = take<std::uint8_t>(q) != 0;
        info.row_count = take<std::uint64_t>(q);
        info.payload_offset = take<std::uint64_t>(q);
        info.payload_len = take<std::uint64_t>(q);
        dir.columns.push_back(std::move(info));
    }
    dir.header_bytes = off;
    return dir;
}

Column decode_column(const FbcColumnInfo& info, const std::string& payload) {
    const auto& name = info.def.name;
    const std::uint64_t rows = info.row_count;
    const std::uint64_t nulls = info.def.nullable ? bitmap_len(rows) : 0;
    const char* p = payload.data();
    auto corrupt = [&]() { return DataError("corrupt column " + name); };
    Column col(info.def.dtype);
    std::uint64_t used = 0;
    switch (info.def.dtype) {
    case DataType::Int64:
    case DataType::Date: {
        used = rows * 8;
        if (payload.size() != used + nulls) throw corrupt();
        std::vector<std::int64_t> v(rows);
        std::memcpy(v.data(), p, used);
        col = Column::from_ints(info.def.dtype, std::move(v));
        break;
    }
    case DataType::Float64: {
        used = rows * 8;
        if (payload.size() != used + nulls) throw corrupt();
        std::vector<double> v(rows);
        std::memcpy(v.data(), p, used);
        col = Column::from_floats(std::move(v));
        break;
    }
    case DataType::Text: {
        if (payload.size() < 8) throw corrupt();
        auto arena_len = take<std::uint64_t>(p);
        if (arena_len > payload.size() || payload.size() != 8 + arena_len + (rows + 1) * 8 + nulls) {
            throw corrupt();
        }
        std::string arena(p, arena_len);
        p += arena_len;
        std::vector<std::uint64_t> offsets(rows + 1);
        std::memcpy(offsets.data(), p, (rows + 1) * 8);
        if (offsets.front() != 0 || offsets.back() != arena_len ||
            !std::is_sorted(offsets.begin(), offsets.end())) {
            throw corrupt();
        }
        used = 8 + arena_len + (rows + 1) * 8;
        col = Column::from_text(std::move(offsets), std::move(arena));
        break;
    }
    case DataType::Bool: throw corrupt();
    }
    if (info.def.nullable) {
        std::vector<std::uint8_t> bits(nulls);
        std::memcpy(bits.data(), payload.data() + used, nulls);
        col.set_null_bitmap(std::move(bits));
    }
    return col;
}

} // namespace

Schema FbcDirectory::schema() const {
    std::vector<ColumnDef> defs;
    for (const auto& c : columns) {
        defs.push_back(c.def);
    }
    return Schema(std::move(defs));
}

const FbcColumnInfo& FbcDirectory::column(std::string_view name) const {
    for (const auto& c : columns) {
        if (c.def.name == name) {
            return c;
        }
    }
    throw DataError("unknown column " + std::string(name) + " in FBC file");
}

std::uint64_t fbc_payload_len(const Column& c) {
    std::uint64_t rows = c.size();
    std::uint64_t base = 0;
    if (c.dtype() == DataType::Text) {
        base = 8 + c.arena().size() + (rows + 1) * 8;
    } else {
        base = rows * 8;
    }
    return base + (c.nullable() ? bitmap_len(rows) : 0);
}

void write_fbc(const ColumnTable& table, const std::filesystem::path& path) {
    const auto& schema = table.schema();
    std::string header;
    header.append(kMagic, 4);
    put<std::uint32_t>(header, kFbcVersion);
    put<std::uint32_t>(header, static_cast<std::uint32_t>(schema.size()));
    std::uint64_t dir_size = 0;
    for (const auto& c : schema.columns()) {
        dir_size += 2 + c.name.size() + 2 + 3 * 8;
    }
    std::uint64_t offset = header.size() + dir_size;
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const auto& def = schema[i];
        const Column& col = table.column(i);
        if (def.name.size() > 0xFFFF) {
            throw DataError("column name too long: " + def.name);
        }
        auto len = fbc_payload_len(col);
        put<std::uint16_t>(header, static_cast<std::uint16_t>(def.name.size()));
        header += def.name;
        put<std::uint8_t>(header, dtype_code(def.dtype));
        put<std::uint8_t>(header, col.nullable() ? 1 : 0);
        put<std::uint64_t>(header, col.size());
        put<std::uint64_t>(header, offset);
        put<std::uint64_t>(header, len);
        offset += len;
    }

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw DataError("cannot write " + path.string());
    }
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    auto write_raw = [&](const void* p, std::size_t n) {
        out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
    };
    for (std::size_t i = 0; i < schema.size(); ++i) {
        const Column& col = table.column(i);
        switch (col.dtype()) {
        case DataType::Int64:
        case DataType::Date: write_raw(col.ints().data(), col.ints().size_bytes()); break;
        case DataType::Float64: write_raw(col.floats().data(), col.floats().size_bytes()); break;
        case DataType::Text: {
            std::uint64_t arena_len = col.arena().size();
            write_raw(&arena_len, 8);
            write_raw(col.arena().data(), arena_len);
            write_raw(col.offsets().data(), col.offsets().size_bytes());
            break;
        }
        case DataType::Bool: break;
        }
        if (col.nullable()) {
            write_raw(col.null_bitmap().data(), col.null_bitmap().size());
        }
    }
    if (!out) {
        throw DataError("write failed: " + path.string());
    }
}

FbcDirectory read_fbc_directory(const std::filesystem::path& path) {
    CountingReader reader(path);
    auto dir = parse_directory(reader);
    storage_counters().bytes_read += reader.bytes();
    return dir;
}

ColumnTable read_fbc(const std::filesystem::path& path, const std::optional<std::vector<std::string>>& projection,
                     FbcReadStats* stats) {
    CountingReader reader(path);
    auto dir = parse_directory(reader);
    const std::uint64_t header_bytes = reader.bytes();

    std::vector<const FbcColumnInfo*> wanted;
    if (projection) {
        for (const auto& name : *projection) {
            dir.column(name); // throws on unknown names
        }
        for (const auto& c : dir.columns) {
            if (std::find(projection->begin(), projection->end(), c.def.name) != projection->end()) {
                wanted.push_back(&c);
            }
        }
    } else {
        for (const auto& c : dir.columns) {
            wanted.push_back(&c);
        }
    }

    std::vector<ColumnDef> defs;
    std::vector<Column> columns;
    std::vector<std::string> names_read;
    for (const auto* info : wanted) {
        if (info->row_count != dir.row_count()) {
            throw DataError("corrupt column " + info->def.name + " (row count mismatch)");
        }
        std::string payload(info->payload_len, '\0');
        if (!reader.read_at(info->payload_offset, payload.data(), payload.size())) {
            throw DataError("corrupt column " + info->def.name);
        }
        columns.push_back(decode_column(*info, payload));
        defs.push_back(info->def);
        names_read.push_back(info->def.name);
    }

    auto& counters = storage_counters();
    counters.bytes_read += reader.bytes();
    counters.payload_bytes_read += reader.bytes() - header_bytes;
    counters.columns_read += wanted.size();
    counters.rows_loaded += dir.row_count();
    if (stats) {
        stats->header_bytes = header_bytes;
        stats->payload_bytes = reader.bytes() - header_bytes;
        stats->columns_read = std::move(names_read);
    }
    return ColumnTable(Schema(std::move(defs)), std::move(columns), dir.row_count());
}

} // namespace flarelite
