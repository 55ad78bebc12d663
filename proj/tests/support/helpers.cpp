#include "helpers.hpp"

#include "flarelite/tpch.hpp"

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

namespace flarelite::testing {

namespace fs = std::filesystem;

const std::map<std::string, ColumnTable>& tpch_tables() {
    static const auto tables = tpch::generate({0.01, 42});
    return tables;
}

Session& tpch_session() {
    static Session* s = [] {
        auto* session = new Session();
        tpch::register_all(session->catalog(), tpch_tables());
        return session;
    }();
    return *s;
}

fs::path scratch_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("flarelite-test-" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string read_text(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::string golden(const std::string& name) { return read_text(fs::path(FLARELITE_GOLDEN_DIR) / name); }

ColumnTable make_table(const Schema& schema, const std::vector<std::vector<Scalar>>& rows) {
    TableBuilder b(schema);
    for (const auto& r : rows) b.add_row(r);
    return b.finish();
}

QueryResult run(Session& s, const PlanPtr& plan, Backend backend, int threads) {
    QueryOptions o;
    o.backend = backend;
    o.threads = threads;
    return s.execute(plan, o);
}

Command shell(const std::string& command) {
    Command c;
    FILE* p = ::popen((command + " 2>&1").c_str(), "r");
    if (!p) return {-1, "popen failed"};
    std::array<char, 4096> buf{};
    std::size_t n = 0;
    while ((n = std::fread(buf.data(), 1, buf.size(), p)) > 0) c.output.append(buf.data(), n);
    int status = ::pclose(p);
    c.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return c;
}

} // namespace flarelite::testing
