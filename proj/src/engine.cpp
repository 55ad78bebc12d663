#include "flarelite/engine.hpp"

#include "flarelite/error.hpp"
#include "flarelite/sql.hpp"

#include <chrono>

namespace flarelite {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

} // namespace

Session::Session() : toolchain_(load_toolchain_config()) {}

Session::Session(ToolchainConfig toolchain) : toolchain_(std::move(toolchain)) { validate(toolchain_); }

PlanPtr Session::parse(std::string_view sql) const { return parse_sql(sql, catalog_, &udfs_); }

DataFrame Session::table(const std::string& name) const { return DataFrame::scan(catalog_, &udfs_, name); }

PhysicalPlan Session::physical(const PlanPtr& plan, const OptimizerOptions& opts) const {
    return optimize(inline_udfs(plan, udfs_), &udfs_, opts);
}

KernelProgram Session::compile(const PlanPtr& plan, const OptimizerOptions& opts) const {
    return compile_plan(physical(plan, opts));
}

std::string Session::explain(const PlanPtr& plan) const { return flarelite::explain(physical(plan)); }

std::string Session::generated_source(const PlanPtr& plan) const { return emit_source(compile(plan)); }

ColumnTable Session::run_volcano(const PlanPtr& plan, const VolcanoOptions& opts) const {
    return volcano_interpret(inline_udfs(plan, udfs_), catalog_, opts);
}

std::shared_ptr<CompiledKernel> Session::kernel_for(const BuildResult& b) {
    std::lock_guard lock(mu_);
    auto it = kernels_.find(b.key);
    if (it != kernels_.end()) return it->second;
    auto k = CompiledKernel::load(b.library);
    kernels_.emplace(b.key, k);
    return k;
}

QueryResult Session::execute(const PlanPtr& plan, const QueryOptions& opts) {
    QueryResult r;
    RunConfig rc;
    rc.threads = opts.threads;
    rc.pin_cores = opts.pin_cores;
    rc.backend = opts.backend;
    validate(rc);
    if (opts.isolate && opts.backend != Backend::Native) throw Error("isolation needs the native backend");
    if (opts.isolate && opts.threads != 1) throw Error("isolated execution is single-threaded");

    auto start = Clock::now();
    PhysicalPlan phys = physical(plan, opts.optimizer);
    KernelProgram prog = compile_plan(phys);
    r.timings.optimize_ms = ms_since(start);

    BuildResult built;
    if (opts.backend == Backend::Native) {
        auto t0 = Clock::now();
        std::string src = emit_source(prog);
        r.timings.emit_ms = ms_since(t0);
        built = build_library(src, toolchain_);
        r.timings.toolchain_ms = built.toolchain_ms;
        r.timings.cache_hit = built.cache_hit;
        r.kernel_key = built.key;
    }

    auto t1 = Clock::now();
    std::vector<TablePtr> inputs;
    for (const auto& in : prog.inputs) {
        FbcReadStats s;
        inputs.push_back(catalog_.load(in.table, in.schema.names(), &s));
        r.io.header_bytes += s.header_bytes;
        r.io.payload_bytes += s.payload_bytes;
        r.io.columns_read.insert(r.io.columns_read.end(), s.columns_read.begin(), s.columns_read.end());
    }
    r.timings.load_ms = ms_since(t1);

    auto t2 = Clock::now();
    if (opts.backend == Backend::Interpreter) {
        auto exec = make_interpreter(prog, inputs);
        r.table = drive(*exec, prog, rc, &r.run);
    } else if (opts.isolate) {
        r.table = run_isolated(built.library, prog, inputs);
    } else {
        auto exec = make_native_executor(kernel_for(built), prog, inputs);
        r.table = drive(*exec, prog, rc, &r.run);
    }
    r.timings.exec_ms = ms_since(t2);
    r.run.exec_ms = r.timings.exec_ms;
    r.timings.total_ms = ms_since(start);
    return r;
}

} // namespace flarelite
