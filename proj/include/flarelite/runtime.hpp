#pragma once

#include "flarelite/column.hpp"
#include "flarelite/kernel_ir.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace flarelite {

/// Opaque per-thread (or merged) execution state of one program instance.
struct ExecState {
    virtual ~ExecState() = default;
};

/// One bound program instance. The runtime drives loops through this
/// protocol; implementations are the IR interpreter and compiled kernels.
class KernelExecutor {
public:
    virtual ~KernelExecutor() = default;

    virtual std::unique_ptr<ExecState> new_state() = 0;
    /// Prepares the source of `loop` (sorts a sort buffer before it is read).
    virtual void seal(ExecState& global, int loop) = 0;
    virtual std::uint64_t source_rows(const ExecState& global, int loop) = 0;
    /// Runs the loop body over source rows [begin, end). Writes go to
    /// `partial`; join tables are read from `global`. The two may alias.
    virtual void run_body(int loop, std::uint64_t begin, std::uint64_t end, ExecState& partial,
                          const ExecState& global) = 0;
    /// Folds a partial into the global state (called in thread order).
    virtual void merge(ExecState& global, ExecState& partial) = 0;
    virtual void epilogue(ExecState& global, int loop) = 0;
    virtual ColumnTable result(ExecState& global) = 0;
    /// False when run_body must not be called from several threads at once.
    virtual bool concurrent() const = 0;
};

/// Reference executor: interprets the IR directly.
std::unique_ptr<KernelExecutor> make_interpreter(const KernelProgram& prog, std::vector<TablePtr> inputs);

/// Single-threaded interpretation of a whole program.
ColumnTable ir_interpret(const KernelProgram& prog, const std::vector<TablePtr>& inputs);

enum class Backend : std::uint8_t { Interpreter, Native };

struct RunConfig {
    int threads = 1;
    std::vector<int> pin_cores; // empty, or one distinct core id per thread
    Backend backend = Backend::Interpreter;
};

struct RunStats {
    /// Source rows handled by each thread, per loop.
    std::vector<std::vector<std::uint64_t>> rows_per_thread;
    std::vector<std::string> warnings;
    double exec_ms = 0;
};

/// Validates the thread and pinning configuration; throws Error.
void validate(const RunConfig& cfg);

/// Drives every loop of `prog`: parallel loops are split into `cfg.threads`
/// contiguous ranges with thread-local state merged in thread order; other
/// loops run on the calling thread.
ColumnTable drive(KernelExecutor& exec, const KernelProgram& prog, const RunConfig& cfg, RunStats* stats = nullptr);

struct CostRow {
    int threads = 1;
    double ms = 0;
    double speedup = 1; // versus this system's own 1-thread time
};

struct CostReport {
    std::string query;
    std::string system;
    std::string baseline;
    double baseline_ms = 0;
    std::vector<CostRow> rows;
    /// Smallest thread count whose time beats the baseline; nullopt is infinity.
    std::optional<int> cost;
    std::string note;
};

/// Builds a COST summary of `system` (times per thread count) against a
/// single-threaded baseline time.
CostReport cost_report(const std::string& query, const std::string& system, const std::vector<int>& threads,
                       const std::vector<double>& ms, const std::string& baseline, double baseline_ms);
std::string format_cost_report(const CostReport& r);

} // namespace flarelite
