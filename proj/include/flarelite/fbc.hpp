#pragma once

// FBC: plain-encoded binary columnar file.
//
//   "FBC1" | u32 version=1 | u32 column_count
//   directory, per column:
//     u16 name_len | name | u8 dtype | u8 nullable | u64 row_count
//     | u64 payload_offset | u64 payload_len
//   payloads
//
// Numeric payload: row_count x 8 bytes. Text payload: u64 arena_len, arena
// bytes, (row_count+1) x u64 offsets. Nullable columns append ceil(rows/8)
// bitmap bytes. All integers little-endian.

#include "flarelite/column.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace flarelite {

inline constexpr std::uint32_t kFbcVersion = 1;

struct FbcColumnInfo {
    ColumnDef def;
    std::uint64_t row_count = 0;
    std::uint64_t payload_offset = 0;
    std::uint64_t payload_len = 0;
};

struct FbcDirectory {
    std::vector<FbcColumnInfo> columns;
    std::uint64_t header_bytes = 0; // magic + version + count + directory
    std::uint64_t file_size = 0;

    Schema schema() const;
    std::uint64_t row_count() const { return columns.empty() ? 0 : columns.front().row_count; }
    const FbcColumnInfo& column(std::string_view name) const;
};

struct FbcReadStats {
    std::uint64_t header_bytes = 0;
    std::uint64_t payload_bytes = 0;
    std::vector<std::string> columns_read;
};

void write_fbc(const ColumnTable& table, const std::filesystem::path& path);

/// Reads only the header and directory.
FbcDirectory read_fbc_directory(const std::filesystem::path& path);

/// Reads the projected columns (file order); nullopt reads every column.
/// Payload bytes of unprojected columns are never read.
ColumnTable read_fbc(const std::filesystem::path& path,
                     const std::optional<std::vector<std::string>>& projection = std::nullopt,
                     FbcReadStats* stats = nullptr);

/// Payload size the writer produces for a column.
std::uint64_t fbc_payload_len(const Column& column);

} // namespace flarelite
