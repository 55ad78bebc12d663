#pragma once

#include "flarelite/catalog.hpp"
#include "flarelite/dataframe.hpp"
#include "flarelite/fbc.hpp"
#include "flarelite/kernel_ir.hpp"
#include "flarelite/native.hpp"
#include "flarelite/optimizer.hpp"
#include "flarelite/runtime.hpp"
#include "flarelite/udf.hpp"
#include "flarelite/volcano.hpp"

#include <map>
#include <memory>
#include <mutex>
#include <string>

namespace flarelite {

struct QueryOptions {
    Backend backend = Backend::Native;
    int threads = 1;
    std::vector<int> pin_cores;
    /// Native only: run the kernel in a child process.
    bool isolate = false;
    OptimizerOptions optimizer;
};

struct QueryTimings {
    double optimize_ms = 0;
    double emit_ms = 0;
    double toolchain_ms = 0;
    double load_ms = 0;
    double exec_ms = 0;
    double total_ms = 0;
    bool cache_hit = false;
};

struct QueryResult {
    ColumnTable table;
    QueryTimings timings;
    RunStats run;
    FbcReadStats io;
    std::string kernel_key; // empty for the interpreter
};

/// Catalog, UDFs and compiled-kernel cache for one user.
class Session {
public:
    Session();
    explicit Session(ToolchainConfig toolchain);

    Catalog& catalog() { return catalog_; }
    const Catalog& catalog() const { return catalog_; }
    UdfRegistry& udfs() { return udfs_; }
    const ToolchainConfig& toolchain() const { return toolchain_; }

    PlanPtr parse(std::string_view sql) const;
    DataFrame table(const std::string& name) const;

    QueryResult execute(const PlanPtr& plan, const QueryOptions& opts = {});
    QueryResult execute(const DataFrame& df, const QueryOptions& opts = {}) { return execute(df.plan(), opts); }
    QueryResult sql(std::string_view text, const QueryOptions& opts = {}) { return execute(parse(text), opts); }

    /// Reference result from the tuple-at-a-time interpreter.
    ColumnTable run_volcano(const PlanPtr& plan, const VolcanoOptions& opts = {}) const;

    PhysicalPlan physical(const PlanPtr& plan, const OptimizerOptions& opts = {}) const;
    KernelProgram compile(const PlanPtr& plan, const OptimizerOptions& opts = {}) const;
    std::string explain(const PlanPtr& plan) const;
    std::string generated_source(const PlanPtr& plan) const;

private:
    std::shared_ptr<CompiledKernel> kernel_for(const BuildResult& b);

    Catalog catalog_;
    UdfRegistry udfs_;
    ToolchainConfig toolchain_;
    std::mutex mu_;
    std::map<std::string, std::shared_ptr<CompiledKernel>> kernels_;
};

} // namespace flarelite
