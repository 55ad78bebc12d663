#pragma once

#include "flarelite/engine.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace flarelite::fuzz {

struct Instance {
    std::uint64_t seed = 0;
    std::map<std::string, ColumnTable> tables;
    PlanPtr plan;
    int threads = 1;
};

struct GenLimits {
    std::size_t max_rows = 1000;
    int max_depth = 5;
};

/// Random tables (named t0, t1, t2; columns prefixed with the table name)
/// and a random well-typed plan of depth <= max_depth over them.
Instance generate(std::uint64_t seed, const GenLimits& limits = {});

struct Outcome {
    bool agree = true;
    std::string detail;
    bool all_failed = false; // every engine raised the same error class
};

/// Runs volcano on the logical plan, the IR interpreter and the native
/// backend on the optimized plan, and compares results.
Outcome check(Session& session, const Instance& inst);

/// Shrinks a diverging instance (fewer rows, smaller plan) while it still
/// diverges.
Instance shrink(Session& session, Instance inst);

/// Writes plan, SQL (when printable) and tables as CSV under `dir`.
std::filesystem::path dump(const Instance& inst, const Outcome& outcome, const std::filesystem::path& dir);

/// Registers the instance's tables in a fresh catalog of `session`.
void install(Session& session, const Instance& inst);

} // namespace flarelite::fuzz
