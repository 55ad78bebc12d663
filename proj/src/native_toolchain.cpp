#include "flarelite/error.hpp"
#include "flarelite/native.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <atomic>
#include <csignal>
#include <cstdlib>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

namespace flarelite {

namespace fs = std::filesystem;

namespace {

std::atomic<std::uint64_t> g_invocations{0};
std::atomic<std::uint64_t> g_temp_counter{0};

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + needle.size())) ++n;
    return n;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "'\\''";
        else out += c;
    }
    return out + "'";
}

std::string substitute(std::string cmd, const fs::path& in, const fs::path& out) {
    auto put = [&](const std::string& key, const fs::path& p) {
        auto pos = cmd.find(key);
        cmd.replace(pos, key.size(), shell_quote(p.string()));
    };
    put("{in}", in);
    put("{out}", out);
    return cmd;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, const std::string& data) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw ToolchainError("cannot write " + p.string());
    f << data;
    if (!f.flush()) throw ToolchainError("cannot write " + p.string());
}

fs::path temp_sibling(const fs::path& target) {
    return target.parent_path() / (target.filename().string() + ".tmp." + std::to_string(::getpid()) + "." +
                                   std::to_string(g_temp_counter.fetch_add(1)));
}

struct ProcessResult {
    int exit_code = 0;
    bool timed_out = false;
    std::string output;
};

ProcessResult run_shell(const std::string& command, const fs::path& log, double timeout_seconds) {
    g_invocations.fetch_add(1);
    pid_t pid = ::fork();
    if (pid < 0) throw ToolchainError("cannot start toolchain: fork failed");
    if (pid == 0) {
        ::setpgid(0, 0);
        int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        if (fd >= 0) {
            ::dup2(fd, 1);
            ::dup2(fd, 2);
            ::close(fd);
        }
        ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        ::_exit(127);
    }
    ::setpgid(pid, pid);
    ProcessResult r;
    auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_seconds);
    int status = 0;
    auto delay = std::chrono::microseconds(200);
    for (;;) {
        pid_t w = ::waitpid(pid, &status, WNOHANG);
        if (w == pid) break;
        if (w < 0) throw ToolchainError("cannot wait for toolchain process");
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            ::waitpid(pid, &status, 0);
            r.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(delay);
        delay = std::min(delay * 2, std::chrono::microseconds(20000));
    }
    if (!r.timed_out) r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    r.output = read_file(log);
    std::error_code ec;
    fs::remove(log, ec);
    return r;
}

} // namespace

ToolchainConfig load_toolchain_config(const std::optional<fs::path>& file) {
    ToolchainConfig cfg;
    if (file) {
        std::ifstream f(*file);
        if (!f) throw ToolchainError("cannot open toolchain config " + file->string());
        nlohmann::json j;
        try {
            f >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ToolchainError("bad toolchain config " + file->string() + ": " + e.what());
        }
        if (!j.is_object()) throw ToolchainError("bad toolchain config " + file->string() + ": expected an object");
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            try {
                if (k == "command") cfg.command = it->get<std::string>();
                else if (k == "work_dir") cfg.work_dir = it->get<std::string>();
                else if (k == "timeout_seconds") cfg.timeout_seconds = it->get<double>();
                else throw ToolchainError("bad toolchain config " + file->string() + ": unknown key '" + k + "'");
            } catch (const nlohmann::json::exception& e) {
                throw ToolchainError("bad toolchain config " + file->string() + ": key '" + k + "': " + e.what());
            }
        }
    }
    if (const char* cc = std::getenv("FLARELITE_CC"); cc && *cc) cfg.command = cc;
    if (const char* dir = std::getenv("FLARELITE_CACHE_DIR"); dir && *dir) cfg.work_dir = dir;
    validate(cfg);
    return cfg;
}

void validate(const ToolchainConfig& cfg) {
    for (const char* key : {"{in}", "{out}"}) {
        if (count_of(cfg.command, key) != 1) {
            throw ToolchainError(std::string("toolchain command must contain ") + key + " exactly once: " + cfg.command);
        }
    }
    if (!(cfg.timeout_seconds > 0)) throw ToolchainError("toolchain timeout must be positive");
}

fs::path resolved_work_dir(const ToolchainConfig& cfg) {
    if (!cfg.work_dir.empty()) return cfg.work_dir;
    if (const char* dir = std::getenv("FLARELITE_CACHE_DIR"); dir && *dir) return dir;
    return fs::temp_directory_path() / "flarelite-cache";
}

std::string sha256_hex(const std::string& data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::uint64_t toolchain_invocations() { return g_invocations.load(); }

BuildResult build_library(const std::string& source, const ToolchainConfig& cfg) {
    validate(cfg);
    fs::path dir = resolved_work_dir(cfg);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ToolchainError("cannot create work directory " + dir.string() + ": " + ec.message());

    BuildResult r;
    r.key = sha256_hex(source + "\n" + cfg.command);
    r.library = dir / (r.key + ".so");
    r.source = dir / (r.key + ".c");
    if (fs::exists(r.library)) {
        r.cache_hit = true;
        if (!fs::exists(r.source)) {
            fs::path tmp = temp_sibling(r.source);
            write_file(tmp, source);
            fs::rename(tmp, r.source);
        }
        return r;
    }

    fs::path src_tmp = temp_sibling(r.source);
    src_tmp.replace_extension(".c");
    write_file(src_tmp, source);
    fs::path lib_tmp = temp_sibling(r.library);
    lib_tmp.replace_extension(".so");
    auto t0 = std::chrono::steady_clock::now();
    ProcessResult pr = run_shell(substitute(cfg.command, src_tmp, lib_tmp), temp_sibling(dir / "build.log"),
                                 cfg.timeout_seconds);
    r.toolchain_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    fs::rename(src_tmp, r.source, ec);
    if (ec) r.source = src_tmp;

    if (pr.timed_out) {
        fs::remove(lib_tmp, ec);
        throw ToolchainError("toolchain timed out after " + std::to_string(cfg.timeout_seconds) + " s; source kept at " +
                             r.source.string());
    }
    if (pr.exit_code == 127) {
        fs::remove(lib_tmp, ec);
        throw ToolchainError("toolchain not found: '" + cfg.command + "' (" + pr.output + ")");
    }
    if (pr.exit_code != 0 || !fs::exists(lib_tmp)) {
        fs::remove(lib_tmp, ec);
        throw ToolchainError("toolchain failed with exit code " + std::to_string(pr.exit_code) + "; source kept at " +
                             r.source.string() + "\n" + pr.output);
    }
    fs::rename(lib_tmp, r.library);
    return r;
}

CodegenTiming measure_codegen(const KernelProgram& prog, const ToolchainConfig& cfg) {
    CodegenTiming t;
    auto t0 = std::chrono::steady_clock::now();
    std::string src = emit_source(prog);
    t.emit_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    BuildResult b = build_library(src, cfg);
    t.toolchain_ms = b.toolchain_ms;
    t.cache_hit = b.cache_hit;
    return t;
}

} // namespace flarelite
