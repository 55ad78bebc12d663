#pragma once

#include "flarelite/column.hpp"

#include <filesystem>
#include <string>
#include <string_view>

namespace flarelite {

struct CsvOptions {
    char delimiter = '|';
    bool has_header = false;
    /// Field text that denotes NULL in nullable columns. Dates are always "YYYY-MM-DD".
    std::string null_token;
};

/// Loads a delimiter-separated file. The per-column field parsers are chosen
/// once from the schema before the scan loop starts.
ColumnTable load_csv(const std::filesystem::path& path, const Schema& schema, const CsvOptions& opts = {});

/// Same as load_csv over an in-memory buffer.
ColumnTable parse_csv(std::string_view text, const Schema& schema, const CsvOptions& opts = {});

/// Writes `table` in the format load_csv reads back value-exactly.
void write_csv(const ColumnTable& table, const std::filesystem::path& path, const CsvOptions& opts = {});
std::string format_csv(const ColumnTable& table, const CsvOptions& opts = {});

} // namespace flarelite
