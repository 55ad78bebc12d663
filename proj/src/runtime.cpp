#include "flarelite/runtime.hpp"

#include "flarelite/error.hpp"

#include <pthread.h>
#include <sched.h>

#include <chrono>
#include <cstdio>
#include <exception>
#include <set>
#include <thread>

namespace flarelite {

namespace {

bool pin_current_thread(int core) {
    cpu_set_t set;
    CPU_ZERO(&set);
    CPU_SET(core, &set);
    return pthread_setaffinity_np(pthread_self(), sizeof set, &set) == 0;
}

void run_parallel(KernelExecutor& exec, int loop, std::uint64_t rows, const RunConfig& cfg, ExecState& global,
                  std::vector<std::uint64_t>& counts, std::vector<std::string>& warnings) {
    auto t = static_cast<std::uint64_t>(cfg.threads);
    std::vector<std::unique_ptr<ExecState>> partials;
    std::vector<std::exception_ptr> errors(t);
    std::vector<char> pin_failed(t, 0);
    for (std::uint64_t i = 0; i < t; ++i) partials.push_back(exec.new_state());
    auto work = [&](std::uint64_t i) {
        try {
            if (!cfg.pin_cores.empty() && !pin_current_thread(cfg.pin_cores[i])) pin_failed[i] = 1;
            std::uint64_t begin = rows * i / t;
            std::uint64_t end = rows * (i + 1) / t;
            exec.run_body(loop, begin, end, *partials[i], global);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    };
    if (exec.concurrent()) {
        std::vector<std::thread> pool;
        for (std::uint64_t i = 0; i < t; ++i) pool.emplace_back(work, i);
        for (auto& th : pool) th.join();
    } else {
        for (std::uint64_t i = 0; i < t; ++i) {
            std::uint64_t begin = rows * i / t;
            std::uint64_t end = rows * (i + 1) / t;
            try {
                exec.run_body(loop, begin, end, *partials[i], global);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    }
    for (std::uint64_t i = 0; i < t; ++i) {
        if (pin_failed[i]) {
            warnings.push_back("could not pin thread " + std::to_string(i) + " to core " +
                               std::to_string(cfg.pin_cores[i]));
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    for (std::uint64_t i = 0; i < t; ++i) {
        exec.merge(global, *partials[i]);
        counts.push_back(rows * (i + 1) / t - rows * i / t);
    }
}

} // namespace

void validate(const RunConfig& cfg) {
    if (cfg.threads < 1) throw Error("thread count must be at least 1, got " + std::to_string(cfg.threads));
    if (cfg.pin_cores.empty()) return;
    if (cfg.pin_cores.size() != static_cast<std::size_t>(cfg.threads)) {
        throw Error("pinning needs exactly one core per thread: " + std::to_string(cfg.pin_cores.size()) +
                    " cores for " + std::to_string(cfg.threads) + " threads");
    }
    std::set<int> seen;
    for (int c : cfg.pin_cores) {
        if (c < 0 || c >= CPU_SETSIZE) throw Error("invalid core id " + std::to_string(c));
        if (!seen.insert(c).second) throw Error("core " + std::to_string(c) + " is pinned twice");
    }
}

ColumnTable drive(KernelExecutor& exec, const KernelProgram& prog, const RunConfig& cfg, RunStats* stats) {
    validate(cfg);
    auto start = std::chrono::steady_clock::now();
    RunStats local;
    RunStats& st = stats ? *stats : local;
    st.rows_per_thread.clear();
    auto global = exec.new_state();
    for (const auto& loop : prog.loops) {
        exec.seal(*global, loop.id);
        std::uint64_t rows = exec.source_rows(*global, loop.id);
        std::vector<std::uint64_t> counts;
        if (cfg.threads > 1 && loop_is_parallel(prog, loop)) {
            run_parallel(exec, loop.id, rows, cfg, *global, counts, st.warnings);
        } else {
            exec.run_body(loop.id, 0, rows, *global, *global);
            counts.push_back(rows);
        }
        st.rows_per_thread.push_back(std::move(counts));
        exec.epilogue(*global, loop.id);
    }
    ColumnTable out = exec.result(*global);
    st.exec_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    return out;
}

CostReport cost_report(const std::string& query, const std::string& system, const std::vector<int>& threads,
                       const std::vector<double>& ms, const std::string& baseline, double baseline_ms) {
    if (threads.size() != ms.size()) throw Error("cost report: thread counts and timings differ in length");
    CostReport r;
    r.query = query;
    r.system = system;
    r.baseline = baseline;
    r.baseline_ms = baseline_ms;
    double one = 0;
    for (std::size_t i = 0; i < threads.size(); ++i) {
        if (threads[i] == 1) one = ms[i];
    }
    if (one == 0 && !ms.empty()) one = ms.front();
    for (std::size_t i = 0; i < threads.size(); ++i) {
        r.rows.push_back({threads[i], ms[i], ms[i] > 0 ? one / ms[i] : 0});
        if (ms[i] < baseline_ms && (!r.cost || threads[i] < *r.cost)) r.cost = threads[i];
    }
    return r;
}

std::string format_cost_report(const CostReport& r) {
    char buf[160];
    std::string out = "COST " + r.query + ": " + r.system + " vs " + r.baseline;
    std::snprintf(buf, sizeof buf, " (%.3f ms)\n", r.baseline_ms);
    out += buf;
    for (const auto& row : r.rows) {
        std::snprintf(buf, sizeof buf, "  threads=%-3d %10.3f ms  speedup %.2fx\n", row.threads, row.ms, row.speedup);
        out += buf;
    }
    out += "  cost = " + (r.cost ? std::to_string(*r.cost) : std::string("infinity")) + "\n";
    if (!r.note.empty()) out += "  note: " + r.note + "\n";
    return out;
}

} // namespace flarelite
