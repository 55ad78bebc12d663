#pragma once

#include "flarelite/column.hpp"
#include "flarelite/kernel_ir.hpp"
#include "flarelite/runtime.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace flarelite {

/// Version of the descriptor block and of the kernel entry protocol.
inline constexpr std::uint32_t kKernelAbiVersion = 1;

/// Entry point exported by every generated library.
///   int64_t flk_entry(int32_t op, const void* desc, void* state, void* other,
///                     int32_t loop, uint64_t begin, uint64_t end)
using KernelEntry = std::int64_t (*)(std::int32_t, const void*, void*, void*, std::int32_t, std::uint64_t,
                                     std::uint64_t);
inline constexpr const char* kKernelEntrySymbol = "flk_entry";

enum KernelOp : std::int32_t {
    kOpNewState = 0,
    kOpFreeState = 1,
    kOpSeal = 2,
    kOpSourceRows = 3,
    kOpRun = 4,
    kOpMerge = 5,
    kOpEpilogue = 6,
    kOpResult = 7,
    kOpError = 8,
    kOpRunAll = 9,
    kOpMeta = 10,
};

/// Layout shared with generated code.
struct KernelCell {
    std::int64_t i;
    double f;
    const char* s;
    std::int64_t len;
    std::int64_t null;
};

struct KernelResult {
    const KernelCell* cells;
    std::uint64_t rows;
};

struct KernelMeta {
    std::uint32_t abi;
    std::uint32_t loops;
    std::uint32_t inputs;
    std::uint32_t outputs;
    std::uint32_t slots;
    std::uint32_t reserved;
    const std::int32_t* output_types;
    const std::int32_t* output_nullable;
};

/// Deterministic C source for a program. Equal programs give equal bytes.
std::string emit_source(const KernelProgram& prog);

/// Descriptor block: u32 version, u32 slot_count, then {u64 base, u64 len}
/// pairs. Per input: {0, row_count}; per column: values (Int64/Float64/Date
/// data, or Text offsets with len = rows + 1), then for Text {arena, bytes},
/// then for nullable columns {bitmap, bytes}.
std::vector<std::uint64_t> build_descriptor(const std::vector<std::vector<const Column*>>& inputs,
                                            const std::vector<std::uint64_t>& row_counts);
std::uint32_t descriptor_slot_count(const std::vector<Schema>& inputs);

struct ToolchainConfig {
    /// Must contain `{in}` and `{out}` exactly once each.
    std::string command = "cc -O2 -fPIC -shared -ffp-contract=off -o {out} {in}";
    std::filesystem::path work_dir; // empty: $FLARELITE_CACHE_DIR or <tmp>/flarelite-cache
    double timeout_seconds = 60;
};

/// Defaults, then the JSON config file (keys: command, work_dir,
/// timeout_seconds), then FLARELITE_CC / FLARELITE_CACHE_DIR.
ToolchainConfig load_toolchain_config(const std::optional<std::filesystem::path>& file = std::nullopt);
/// Throws ToolchainError when the placeholders are wrong.
void validate(const ToolchainConfig& cfg);
std::filesystem::path resolved_work_dir(const ToolchainConfig& cfg);

struct BuildResult {
    std::filesystem::path library;
    std::filesystem::path source; // dump of the compiled source
    std::string key;              // SHA-256 of source + command
    bool cache_hit = false;
    double toolchain_ms = 0;
};

/// Compiles `source` to a shared library, reusing a cached artifact keyed by
/// the content hash. Safe to call concurrently.
BuildResult build_library(const std::string& source, const ToolchainConfig& cfg);
/// Number of external toolchain processes started so far.
std::uint64_t toolchain_invocations();
std::string sha256_hex(const std::string& data);

/// A loaded library and its entry point.
class CompiledKernel {
public:
    static std::shared_ptr<CompiledKernel> load(const std::filesystem::path& library);
    ~CompiledKernel();
    CompiledKernel(const CompiledKernel&) = delete;
    CompiledKernel& operator=(const CompiledKernel&) = delete;

    KernelEntry entry() const { return entry_; }
    KernelMeta meta() const;
    const std::filesystem::path& path() const { return path_; }

private:
    CompiledKernel() = default;
    void* handle_ = nullptr;
    KernelEntry entry_ = nullptr;
    std::filesystem::path path_;
};

/// In-process executor over a loaded kernel; run_body may be called from
/// several threads on distinct partial states.
std::unique_ptr<KernelExecutor> make_native_executor(std::shared_ptr<CompiledKernel> kernel, const KernelProgram& prog,
                                                     std::vector<TablePtr> inputs);

/// Runs a kernel in a child process: inputs and the result travel as FBC
/// temp files. Single-threaded.
ColumnTable run_isolated(const std::filesystem::path& library, const KernelProgram& prog,
                         const std::vector<TablePtr>& inputs, const std::filesystem::path& runner = {});
/// Location of the runner executable ($FLARELITE_KERNEL_RUNNER overrides).
std::filesystem::path default_runner_path();

/// Converts kernel result cells to a table with the given schema.
ColumnTable cells_to_table(const Schema& schema, const KernelCell* cells, std::uint64_t rows);

struct CodegenTiming {
    double emit_ms = 0;
    double toolchain_ms = 0;
    bool cache_hit = false;
};

/// Emits and builds `prog`, returning both phase timings.
CodegenTiming measure_codegen(const KernelProgram& prog, const ToolchainConfig& cfg);

} // namespace flarelite
