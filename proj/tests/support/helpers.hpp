#pragma once

#include "flarelite/compare.hpp"
#include "flarelite/engine.hpp"

#include <filesystem>
#include <string>

namespace flarelite::testing {

/// Session over generated TPC-H data at scale factor 0.01, seed 42. Built once.
Session& tpch_session();
const std::map<std::string, ColumnTable>& tpch_tables();

/// Fresh, empty directory under the system temp dir.
std::filesystem::path scratch_dir(const std::string& name);

std::string read_text(const std::filesystem::path& p);
std::string golden(const std::string& name);

ColumnTable make_table(const Schema& schema, const std::vector<std::vector<Scalar>>& rows);

QueryResult run(Session& s, const PlanPtr& plan, Backend backend, int threads = 1);

/// Runs `command` through the shell and captures stdout and stderr.
struct Command {
    int exit_code = 0;
    std::string output;
};
Command shell(const std::string& command);

} // namespace flarelite::testing
