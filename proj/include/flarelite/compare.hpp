#pragma once

#include "flarelite/column.hpp"

#include <string>

namespace flarelite {

struct CompareOptions {
    double rel_tol = 1e-9;
    /// Differences below this are accepted regardless of magnitude (sums that
    /// cancel to near zero).
    double abs_floor = 1e-12;
    /// Compare row sequences instead of multisets.
    bool ordered = false;
};

struct CompareResult {
    bool equal = true;
    std::string message; // first difference when not equal
};

bool float_close(double a, double b, double rel_tol, double abs_floor);

/// Result equality: column names and types must match; rows are compared as
/// multisets (or sequences) with Float64 values within tolerance.
CompareResult compare_tables(const ColumnTable& a, const ColumnTable& b, const CompareOptions& opts = {});

std::string format_table(const ColumnTable& t, std::size_t max_rows = 50);

} // namespace flarelite
