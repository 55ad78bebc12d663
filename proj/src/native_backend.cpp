#include "flarelite/error.hpp"
#include "flarelite/fbc.hpp"
#include "flarelite/native.hpp"

#include <atomic>
#include <cstring>
#include <dlfcn.h>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace flarelite {

namespace fs = std::filesystem;

std::shared_ptr<CompiledKernel> CompiledKernel::load(const fs::path& library) {
    void* h = ::dlopen(library.c_str(), RTLD_NOW | RTLD_LOCAL);
    if (!h) {
        const char* e = ::dlerror();
        throw ToolchainError("cannot load " + library.string() + ": " + (e ? e : "unknown error"));
    }
    void* sym = ::dlsym(h, kKernelEntrySymbol);
    if (!sym) {
        ::dlclose(h);
        throw ToolchainError(library.string() + " does not export " + kKernelEntrySymbol);
    }
    std::shared_ptr<CompiledKernel> k(new CompiledKernel());
    k->handle_ = h;
    k->entry_ = reinterpret_cast<KernelEntry>(sym);
    k->path_ = library;
    KernelMeta m = k->meta();
    if (m.abi != kKernelAbiVersion) {
        throw ToolchainError(library.string() + " has kernel ABI " + std::to_string(m.abi) + ", expected " +
                             std::to_string(kKernelAbiVersion));
    }
    return k;
}

CompiledKernel::~CompiledKernel() {
    if (handle_) ::dlclose(handle_);
}

KernelMeta CompiledKernel::meta() const {
    KernelMeta m{};
    entry_(kOpMeta, nullptr, nullptr, &m, 0, 0, 0);
    return m;
}

ColumnTable cells_to_table(const Schema& schema, const KernelCell* cells, std::uint64_t rows) {
    std::vector<Column> cols;
    std::size_t w = schema.size();
    for (std::size_t c = 0; c < w; ++c) {
        const ColumnDef& def = schema[c];
        Column col(def.dtype, def.nullable);
        col.reserve(rows);
        for (std::uint64_t r = 0; r < rows; ++r) {
            const KernelCell& k = cells[r * w + c];
            if (k.null) {
                col.append_null();
                continue;
            }
            switch (def.dtype) {
            case DataType::Float64: col.append_float(k.f); break;
            case DataType::Text: col.append_text(std::string_view(k.s ? k.s : "", static_cast<std::size_t>(k.len))); break;
            default: col.append_int(k.i); break;
            }
        }
        cols.push_back(std::move(col));
    }
    return ColumnTable(schema, std::move(cols), static_cast<std::size_t>(rows));
}

namespace {

std::vector<std::vector<const Column*>> bind_inputs(const KernelProgram& prog, const std::vector<TablePtr>& inputs) {
    if (inputs.size() != prog.inputs.size()) {
        throw Error("program expects " + std::to_string(prog.inputs.size()) + " inputs, got " + std::to_string(inputs.size()));
    }
    std::vector<std::vector<const Column*>> out;
    for (std::size_t t = 0; t < prog.inputs.size(); ++t) {
        std::vector<const Column*> cols;
        for (const auto& c : prog.inputs[t].schema.columns()) {
            const Column& col = inputs[t]->column(c.name);
            if (col.dtype() != c.dtype) throw Error("input column " + c.name + " has the wrong type");
            if (col.nullable() != c.nullable) throw Error("input column " + c.name + " has the wrong nullability");
            cols.push_back(&col);
        }
        out.push_back(std::move(cols));
    }
    return out;
}

std::vector<std::uint64_t> row_counts(const std::vector<TablePtr>& inputs) {
    std::vector<std::uint64_t> out;
    for (const auto& t : inputs) out.push_back(t->row_count());
    return out;
}

struct NativeState : ExecState {
    NativeState(KernelEntry e, const void* d, void* p) : entry(e), desc(d), ptr(p) {}
    ~NativeState() override { entry(kOpFreeState, desc, ptr, nullptr, 0, 0, 0); }
    KernelEntry entry;
    const void* desc;
    void* ptr;
};

class NativeExecutor : public KernelExecutor {
public:
    NativeExecutor(std::shared_ptr<CompiledKernel> kernel, const KernelProgram& prog, std::vector<TablePtr> inputs)
        : kernel_(std::move(kernel)), prog_(prog), inputs_(std::move(inputs)) {
        desc_ = build_descriptor(bind_inputs(prog_, inputs_), row_counts(inputs_));
        KernelMeta m = kernel_->meta();
        auto slots = static_cast<std::uint32_t>(desc_[0] >> 32);
        if (m.slots != slots || m.inputs != prog_.inputs.size() || m.loops != prog_.loops.size() ||
            m.outputs != prog_.output.size()) {
            throw ToolchainError("kernel " + kernel_->path().string() + " does not match the program");
        }
        entry_ = kernel_->entry();
    }

    std::unique_ptr<ExecState> new_state() override {
        auto p = reinterpret_cast<void*>(static_cast<std::intptr_t>(entry_(kOpNewState, desc(), nullptr, nullptr, 0, 0, 0)));
        if (!p) throw ExecutionError("kernel could not allocate its state");
        return std::make_unique<NativeState>(entry_, desc(), p);
    }

    void seal(ExecState& g, int loop) override { call(kOpSeal, ptr(g), nullptr, loop); }

    std::uint64_t source_rows(const ExecState& g, int loop) override {
        return static_cast<std::uint64_t>(entry_(kOpSourceRows, desc(), ptr(g), nullptr, loop, 0, 0));
    }

    void run_body(int loop, std::uint64_t begin, std::uint64_t end, ExecState& partial, const ExecState& global) override {
        call(kOpRun, ptr(partial), ptr(global), loop, begin, end);
    }

    void merge(ExecState& g, ExecState& partial) override { call(kOpMerge, ptr(g), ptr(partial), 0); }

    void epilogue(ExecState& g, int loop) override { call(kOpEpilogue, ptr(g), nullptr, loop); }

    ColumnTable result(ExecState& g) override {
        KernelResult r{};
        call(kOpResult, ptr(g), &r, 0);
        return cells_to_table(prog_.output, r.cells, r.rows);
    }

    bool concurrent() const override { return true; }

private:
    const void* desc() const { return desc_.data(); }
    static void* ptr(const ExecState& s) { return static_cast<const NativeState&>(s).ptr; }

    void call(std::int32_t op, void* state, void* other, int loop, std::uint64_t begin = 0, std::uint64_t end = 0) {
        std::int64_t rc = entry_(op, desc(), state, other, loop, begin, end);
        if (rc == 0) return;
        char msg[256] = {};
        entry_(kOpError, desc(), state, msg, 0, 0, 0);
        throw ExecutionError(msg[0] ? msg : "kernel failed with code " + std::to_string(rc));
    }

    std::shared_ptr<CompiledKernel> kernel_;
    const KernelProgram& prog_;
    std::vector<TablePtr> inputs_;
    std::vector<std::uint64_t> desc_;
    KernelEntry entry_ = nullptr;
};

std::atomic<std::uint64_t> g_isolate_counter{0};

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

std::unique_ptr<KernelExecutor> make_native_executor(std::shared_ptr<CompiledKernel> kernel, const KernelProgram& prog,
                                                     std::vector<TablePtr> inputs) {
    return std::make_unique<NativeExecutor>(std::move(kernel), prog, std::move(inputs));
}

fs::path default_runner_path() {
    if (const char* p = std::getenv("FLARELITE_KERNEL_RUNNER"); p && *p) return p;
#ifdef FLARELITE_KERNEL_RUNNER_PATH
    return FLARELITE_KERNEL_RUNNER_PATH;
#else
    return "flarelite-kernel-runner";
#endif
}

ColumnTable run_isolated(const fs::path& library, const KernelProgram& prog, const std::vector<TablePtr>& inputs,
                         const fs::path& runner) {
    bind_inputs(prog, inputs);
    fs::path exe = runner.empty() ? default_runner_path() : runner;
    fs::path dir = fs::temp_directory_path() /
                   ("flarelite-isolate-" + std::to_string(::getpid()) + "-" + std::to_string(g_isolate_counter.fetch_add(1)));
    fs::create_directories(dir);
    struct Cleanup {
        fs::path d;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(d, ec);
        }
    } cleanup{dir};

    std::vector<std::string> args = {exe.string(), library.string(), (dir / "out.fbc").string()};
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        fs::path p = dir / ("in" + std::to_string(t) + ".fbc");
        write_fbc(inputs[t]->project(prog.inputs[t].schema.names()), p);
        args.push_back(p.string());
        args.push_back(std::to_string(inputs[t]->row_count()));
    }
    fs::path log = dir / "runner.log";
    pid_t pid = ::fork();
    if (pid < 0) throw ExecutionError("cannot start kernel runner");
    if (pid == 0) {
        int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            ::dup2(fd, 1);
            ::dup2(fd, 2);
            ::close(fd);
        }
        std::vector<char*> argv;
        for (auto& a : args) argv.push_back(a.data());
        argv.push_back(nullptr);
        ::execv(argv[0], argv.data());
        ::_exit(127);
    }
    int status = 0;
    ::waitpid(pid, &status, 0);
    std::string output = slurp(log);
    while (!output.empty() && output.back() == '\n') output.pop_back();
    if (!WIFEXITED(status)) {
        throw ExecutionError("kernel runner died with signal " + std::to_string(WTERMSIG(status)) +
                             (output.empty() ? "" : ": " + output));
    }
    int code = WEXITSTATUS(status);
    if (code == 127) throw ToolchainError("kernel runner not found: " + exe.string());
    if (code == 3) throw ExecutionError(output);
    if (code != 0) throw ExecutionError("kernel runner failed (exit " + std::to_string(code) + "): " + output);

    ColumnTable raw = read_fbc(dir / "out.fbc");
    if (raw.column_count() != prog.output.size()) throw ExecutionError("kernel runner returned the wrong column count");
    std::vector<Column> cols(raw.columns().begin(), raw.columns().end());
    for (std::size_t c = 0; c < cols.size(); ++c) {
        if (cols[c].dtype() != prog.output[c].dtype) throw ExecutionError("kernel runner returned the wrong column type");
    }
    std::size_t rows = raw.row_count();
    if (cols.empty()) {
        // The runner prints the row count on success.
        rows = static_cast<std::size_t>(std::stoull(output.empty() ? "0" : output));
    }
    return ColumnTable(prog.output, std::move(cols), rows);
}

} // namespace flarelite
