#pragma once

#include "flarelite/column.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace flarelite::testing {

/// A randomly generated well-formed delimited file plus its schema.
struct CsvCase {
    Schema schema;
    std::string text;
    char delimiter = '|';
};

CsvCase random_csv(std::uint64_t seed);

/// Straightforward field-splitting parser built on the C library conversions.
/// Returns rows of scalars; throws std::runtime_error on malformed input.
std::vector<std::vector<Scalar>> reference_parse(const std::string& text, const Schema& schema, char delimiter);

/// Empty string when equal, otherwise a description of the first mismatch.
std::string diff_rows(const ColumnTable& t, const std::vector<std::vector<Scalar>>& rows);

} // namespace flarelite::testing
