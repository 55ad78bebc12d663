#include "flarelite/compare.hpp"
#include "flarelite/csv.hpp"
#include "flarelite/engine.hpp"
#include "flarelite/error.hpp"
#include "flarelite/fbc.hpp"
#include "flarelite/tpch.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <unistd.h>

using namespace flarelite;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) { return std::chrono::duration<double, std::milli>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

std::vector<int> parse_int_list(const std::string& s, const std::string& what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            int v = std::stoi(item, &used);
            if (used != item.size()) throw std::invalid_argument(item);
            out.push_back(v);
        } catch (const std::exception&) {
            throw Error("bad " + what + " list '" + s + "': expected comma-separated integers");
        }
    }
    if (out.empty()) throw Error("empty " + what + " list");
    return out;
}

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

/// Registers every TPC-H table found in `dir`, preferring .fbc over .tbl.
void register_dir(Catalog& catalog, const fs::path& dir) {
    if (!fs::is_directory(dir)) throw Error("data directory " + dir.string() + " does not exist (run `flarelite gen` first)");
    int found = 0;
    for (const auto& name : tpch::table_names()) {
        fs::path fbc = dir / (name + ".fbc");
        fs::path tbl = dir / (name + ".tbl");
        if (fs::exists(fbc)) {
            catalog.register_fbc(name, fbc);
        } else if (fs::exists(tbl)) {
            catalog.register_table(name, load_csv(tbl, tpch::schema(name)));
        } else {
            continue;
        }
        ++found;
    }
    if (!found) throw Error("no TPC-H tables (.fbc or .tbl) in " + dir.string());
}

std::string read_sql_arg(const std::string& arg) {
    if (fs::is_regular_file(arg)) {
        std::ifstream f(arg);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }
    return arg;
}

Backend parse_backend(const std::string& s) {
    if (s == "interpreter") return Backend::Interpreter;
    if (s == "native") return Backend::Native;
    throw Error("unknown backend '" + s + "' (interpreter or native)");
}

ToolchainConfig toolchain_from(const std::string& config_file) {
    return load_toolchain_config(config_file.empty() ? std::nullopt : std::optional<fs::path>(config_file));
}

// ---- gen

struct GenArgs {
    double sf = 0.01;
    std::uint64_t seed = 42;
    std::string out = "tpch-data";
    std::string format = "csv";
};

int run_gen(const GenArgs& a) {
    if (!(a.sf > 0)) throw Error("scale factor must be positive");
    if (a.format != "csv" && a.format != "fbc") throw Error("unknown format '" + a.format + "' (csv or fbc)");
    auto t0 = Clock::now();
    auto tables = tpch::generate({a.sf, a.seed});
    fs::create_directories(a.out);
    tpch::write_tables(tables, a.out, a.format == "csv" ? tpch::FileFormat::Csv : tpch::FileFormat::Fbc);
    for (const auto& [name, t] : tables) std::cout << name << ": " << t.row_count() << " rows\n";
    std::cout << "wrote " << tables.size() << " tables to " << a.out << " in " << ms_since(t0) << " ms\n";
    return 0;
}

// ---- convert

struct ConvertArgs {
    std::string in_format = "csv";
    std::string out_format = "fbc";
    std::string src;
    std::string dst;
    std::string table;
};

int run_convert(const ConvertArgs& a) {
    if (a.in_format != "csv" || a.out_format != "fbc") throw Error("only --in csv --out fbc is supported");
    std::vector<std::pair<std::string, fs::path>> jobs;
    if (fs::is_directory(a.src)) {
        for (const auto& name : tpch::table_names()) {
            fs::path p = fs::path(a.src) / (name + ".tbl");
            if (fs::exists(p)) jobs.emplace_back(name, p);
        }
        if (jobs.empty()) throw Error("no .tbl files for TPC-H tables in " + a.src);
    } else {
        if (!fs::exists(a.src)) throw Error("input " + a.src + " does not exist");
        std::string name = a.table.empty() ? fs::path(a.src).stem().string() : a.table;
        jobs.emplace_back(name, a.src);
    }
    fs::path dst = a.dst.empty() ? (fs::is_directory(a.src) ? fs::path(a.src) : fs::path(a.src).parent_path()) : fs::path(a.dst);
    fs::create_directories(dst);
    for (const auto& [name, path] : jobs) {
        auto t0 = Clock::now();
        ColumnTable t = load_csv(path, tpch::schema(name));
        double load_ms = ms_since(t0);
        fs::path out = dst / (name + ".fbc");
        write_fbc(t, out);
        std::cout << name << ": " << t.row_count() << " rows, csv load " << load_ms << " ms, wrote " << out.string() << " ("
                  << fs::file_size(out) << " bytes)\n";
    }
    return 0;
}

// ---- query

struct QueryArgs {
    std::string sql;
    std::string query;
    std::string data = "tpch-data";
    std::string backend = "native";
    int threads = 1;
    std::string pin;
    std::string format = "table";
    bool isolate = false;
    bool explain = false;
    bool show_source = false;
    bool stats = false;
    std::string toolchain_config;
};

int run_query(const QueryArgs& a) {
    if (a.sql.empty() == a.query.empty()) throw Error("give exactly one of --sql or --query");
    if (a.format != "table" && a.format != "csv") throw Error("unknown format '" + a.format + "' (table or csv)");
    Session s(toolchain_from(a.toolchain_config));
    register_dir(s.catalog(), a.data);
    PlanPtr plan = a.sql.empty() ? tpch::build(tpch::find_query(a.query), s.catalog(), s.udfs()) : s.parse(read_sql_arg(a.sql));
    if (a.explain) {
        std::cout << s.explain(plan);
        return 0;
    }
    if (a.show_source) {
        std::cout << s.generated_source(plan);
        return 0;
    }
    QueryOptions o;
    o.backend = parse_backend(a.backend);
    o.threads = a.threads;
    if (!a.pin.empty()) o.pin_cores = parse_int_list(a.pin, "core");
    o.isolate = a.isolate;
    QueryResult r = s.execute(plan, o);
    if (a.format == "csv") {
        CsvOptions co;
        co.delimiter = ',';
        co.has_header = true;
        co.null_token = "NULL";
        std::cout << format_csv(r.table, co);
    } else {
        std::cout << format_table(r.table, 1000);
    }
    for (const auto& w : r.run.warnings) std::cerr << "warning: " << w << "\n";
    if (a.stats) {
        const auto& t = r.timings;
        std::cerr << "optimize " << t.optimize_ms << " ms, emit " << t.emit_ms << " ms, toolchain " << t.toolchain_ms << " ms"
                  << (t.cache_hit ? " (cached)" : "") << ", load " << t.load_ms << " ms, exec " << t.exec_ms << " ms\n";
        std::cerr << "payload bytes read " << r.io.payload_bytes << " from " << r.io.columns_read.size() << " columns\n";
    }
    return 0;
}

// ---- bench

struct BenchArgs {
    std::string suite = "tpch-mini";
    std::string threads = "1,2,4,8";
    int repeat = 5;
    std::string report = "bench.jsonl";
    std::string data;
    double sf = 0.01;
    std::uint64_t seed = 42;
    std::string queries;
    std::string modes = "hot,cold";
    bool skip_baseline = false;
    std::string toolchain_config;
};

class Reporter {
public:
    explicit Reporter(const fs::path& path) : out_(path) {
        if (!out_) throw Error("cannot write report " + path.string());
    }
    void write(json j) {
        out_ << j.dump() << "\n";
        out_.flush();
    }

private:
    std::ofstream out_;
};

int run_bench(const BenchArgs& a) {
    if (a.suite != "tpch-mini") throw Error("unknown suite '" + a.suite + "' (tpch-mini)");
    if (a.repeat < 5) throw Error("--repeat must be at least 5 (numbers are medians)");
    std::vector<int> threads = parse_int_list(a.threads, "thread");
    for (int t : threads) {
        if (t < 1) throw Error("thread counts must be positive");
    }
    if (std::find(threads.begin(), threads.end(), 1) == threads.end()) threads.insert(threads.begin(), 1);
    std::sort(threads.begin(), threads.end());
    threads.erase(std::unique(threads.begin(), threads.end()), threads.end());
    std::vector<std::string> modes = split(a.modes);
    for (const auto& m : modes) {
        if (m != "hot" && m != "cold") throw Error("unknown mode '" + m + "' (hot, cold)");
    }
    std::vector<const tpch::Query*> queries;
    if (a.queries.empty()) {
        for (const auto& q : tpch::suite()) queries.push_back(&q);
    } else {
        for (const auto& n : split(a.queries)) queries.push_back(&tpch::find_query(n));
    }

    ToolchainConfig tc = toolchain_from(a.toolchain_config);
    // A private cache so the first compilation of each kernel is measured.
    fs::path bench_dir = fs::temp_directory_path() / ("flarelite-bench-" + std::to_string(::getpid()));
    fs::create_directories(bench_dir);
    tc.work_dir = bench_dir / "cache";
    struct Cleanup {
        fs::path d;
        ~Cleanup() {
            std::error_code ec;
            fs::remove_all(d, ec);
        }
    } cleanup{bench_dir};

    // Tables: either from --data or generated in memory.
    auto t0 = Clock::now();
    std::map<std::string, ColumnTable> tables;
    std::string source;
    if (!a.data.empty()) {
        Catalog tmp;
        register_dir(tmp, a.data);
        for (const auto& name : tmp.table_names()) {
            tables.emplace(name, *tmp.load(name, tmp.lookup(name).schema.names()));
        }
        source = a.data;
    } else {
        tables = tpch::generate({a.sf, a.seed});
        source = "generated sf=" + std::to_string(a.sf) + " seed=" + std::to_string(a.seed);
    }
    double prep_ms = ms_since(t0);
    fs::path fbc_dir = bench_dir / "fbc";
    bool need_cold = std::find(modes.begin(), modes.end(), "cold") != modes.end();
    if (need_cold) tpch::write_tables(tables, fbc_dir, tpch::FileFormat::Fbc);

    Reporter rep(a.report);
    std::uint64_t lineitem_rows = tables.count("lineitem") ? tables.at("lineitem").row_count() : 0;
    rep.write({{"record", "run"},
               {"suite", a.suite},
               {"source", source},
               {"lineitem_rows", lineitem_rows},
               {"repeat", a.repeat},
               {"threads", threads},
               {"modes", modes},
               {"hardware_threads", std::thread::hardware_concurrency()},
               {"toolchain", tc.command}});

    Session hot(tc);
    tpch::register_all(hot.catalog(), tables);
    Session cold(tc);
    if (need_cold) {
        for (const auto& [name, t] : tables) cold.catalog().register_fbc(name, fbc_dir / (name + ".fbc"));
    }
    std::cout << "data: " << source << " (" << lineitem_rows << " lineitem rows, prepared in " << prep_ms << " ms)\n";

    for (const tpch::Query* q : queries) {
        PlanPtr plan = tpch::build(*q, hot.catalog(), hot.udfs());

        // Compilation, measured once with an empty cache.
        KernelProgram prog = hot.compile(plan);
        CodegenTiming cg = measure_codegen(prog, tc);
        rep.write({{"record", "codegen"},
                   {"query", q->name},
                   {"emit_ms", cg.emit_ms},
                   {"toolchain_ms", cg.toolchain_ms},
                   {"total_ms", cg.emit_ms + cg.toolchain_ms},
                   {"cache_hit", cg.cache_hit},
                   {"loops", prog.loops.size()}});

        for (const auto& mode : modes) {
            Session& s = mode == "hot" ? hot : cold;
            PlanPtr mplan = mode == "hot" ? plan : tpch::build(*q, s.catalog(), s.udfs());
            std::vector<double> native_ms;
            double load_median = 0;
            std::uint64_t payload = 0;
            for (int t : threads) {
                std::vector<double> exec, load;
                for (int r = 0; r < a.repeat; ++r) {
                    QueryOptions o;
                    o.threads = t;
                    QueryResult res = s.execute(mplan, o);
                    exec.push_back(res.timings.exec_ms);
                    load.push_back(res.timings.load_ms);
                    payload = res.io.payload_bytes;
                }
                double m = median(exec);
                native_ms.push_back(m);
                if (t == 1) load_median = median(load);
                rep.write({{"record", "exec"},
                           {"query", q->name},
                           {"mode", mode},
                           {"system", "native"},
                           {"threads", t},
                           {"exec_ms", m},
                           {"load_ms", median(load)},
                           {"speedup", native_ms.front() > 0 ? native_ms.front() / m : 0.0},
                           {"payload_bytes", payload}});
            }

            std::vector<double> ir;
            for (int r = 0; r < a.repeat; ++r) {
                QueryOptions o;
                o.backend = Backend::Interpreter;
                ir.push_back(s.execute(mplan, o).timings.exec_ms);
            }
            double ir_ms = median(ir);
            rep.write({{"record", "exec"},
                       {"query", q->name},
                       {"mode", mode},
                       {"system", "ir_interpreter"},
                       {"threads", 1},
                       {"exec_ms", ir_ms}});

            if (a.skip_baseline) continue;
            std::vector<double> vol;
            for (int r = 0; r < a.repeat; ++r) {
                auto v0 = Clock::now();
                s.run_volcano(mplan);
                vol.push_back(ms_since(v0));
            }
            double vol_ms = median(vol);
            rep.write({{"record", "exec"},
                       {"query", q->name},
                       {"mode", mode},
                       {"system", "volcano"},
                       {"threads", 1},
                       {"exec_ms", vol_ms},
                       {"includes_load", mode == "cold"}});

            // COST of native against the volcano baseline, and of the
            // single-threaded interpreter against 1-thread native.
            CostReport native_cost = cost_report(q->name, "native", threads, native_ms, "volcano", vol_ms);
            CostReport interp_cost = cost_report(q->name, "volcano", {1}, {vol_ms}, "native@1", native_ms.front());
            interp_cost.note = "the interpreter is single-threaded, so no larger thread count is modeled";
            for (const CostReport* c : {&native_cost, &interp_cost}) {
                json rows = json::array();
                for (const auto& row : c->rows) rows.push_back({{"threads", row.threads}, {"ms", row.ms}, {"speedup", row.speedup}});
                rep.write({{"record", "cost"},
                           {"query", q->name},
                           {"mode", mode},
                           {"system", c->system},
                           {"baseline", c->baseline},
                           {"baseline_ms", c->baseline_ms},
                           {"rows", rows},
                           {"cost", c->cost ? json(*c->cost) : json("infinity")},
                           {"note", c->note}});
                std::cout << "[" << mode << "] " << format_cost_report(*c);
            }
            rep.write({{"record", "summary"},
                       {"query", q->name},
                       {"mode", mode},
                       {"load_ms", load_median},
                       {"codegen_ms", cg.emit_ms},
                       {"toolchain_ms", cg.toolchain_ms},
                       {"native_ms", native_ms.front()},
                       {"interpreter_ms", vol_ms},
                       {"speedup_vs_interpreter", native_ms.front() > 0 ? vol_ms / native_ms.front() : 0.0},
                       {"cost", native_cost.cost ? json(*native_cost.cost) : json("infinity")},
                       {"interpreter_cost", interp_cost.cost ? json(*interp_cost.cost) : json("infinity")}});
        }
    }
    std::cout << "report written to " << a.report << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flarelite: compiled relational queries over columnar data"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* g = app.add_subcommand("gen", "Generate simplified TPC-H tables");
    g->add_option("--sf", gen.sf, "Scale factor")->capture_default_str();
    g->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
    g->add_option("--out", gen.out, "Output directory")->capture_default_str();
    g->add_option("--format", gen.format, "csv (.tbl) or fbc")->capture_default_str();

    ConvertArgs conv;
    auto* c = app.add_subcommand("convert", "Convert delimited text tables to FBC");
    c->add_option("--in", conv.in_format, "Input format")->capture_default_str();
    c->add_option("--out", conv.out_format, "Output format")->capture_default_str();
    c->add_option("--src", conv.src, "Input .tbl file or directory")->required();
    c->add_option("--dst", conv.dst, "Output directory (default: next to the input)");
    c->add_option("--table", conv.table, "TPC-H table name for a single file (default: file stem)");

    QueryArgs qa;
    auto* q = app.add_subcommand("query", "Run one query");
    q->add_option("--sql", qa.sql, "SQL text or a file containing it");
    q->add_option("--query", qa.query, "Suite query name (Q1, Q3, ...)");
    q->add_option("--data", qa.data, "Directory with .fbc or .tbl tables")->capture_default_str();
    q->add_option("--backend", qa.backend, "interpreter or native")->capture_default_str();
    q->add_option("--threads", qa.threads, "Worker threads")->capture_default_str();
    q->add_option("--pin", qa.pin, "Comma-separated core per thread");
    q->add_option("--format", qa.format, "table or csv")->capture_default_str();
    q->add_flag("--isolate", qa.isolate, "Run the native kernel in a child process");
    q->add_flag("--explain", qa.explain, "Print the optimized plan and exit");
    q->add_flag("--source", qa.show_source, "Print the generated C source and exit");
    q->add_flag("--stats", qa.stats, "Print timings and I/O to stderr");
    q->add_option("--toolchain-config", qa.toolchain_config, "JSON toolchain config");

    BenchArgs ba;
    auto* b = app.add_subcommand("bench", "Benchmark the query suite and write a JSON-lines report");
    b->add_option("--suite", ba.suite, "Query suite")->capture_default_str();
    b->add_option("--threads", ba.threads, "Thread counts")->capture_default_str();
    b->add_option("--repeat", ba.repeat, "Repeats per measurement (median, at least 5)")->capture_default_str();
    b->add_option("--report", ba.report, "Report path")->capture_default_str();
    b->add_option("--data", ba.data, "Directory with tables (default: generate)");
    b->add_option("--sf", ba.sf, "Scale factor when generating")->capture_default_str();
    b->add_option("--seed", ba.seed, "Seed when generating")->capture_default_str();
    b->add_option("--queries", ba.queries, "Comma-separated subset of the suite");
    b->add_option("--modes", ba.modes, "hot, cold or both")->capture_default_str();
    b->add_flag("--skip-baseline", ba.skip_baseline, "Do not run the volcano baseline");
    b->add_option("--toolchain-config", ba.toolchain_config, "JSON toolchain config");

    CLI11_PARSE(app, argc, argv);
    try {
        if (g->parsed()) return run_gen(gen);
        if (c->parsed()) return run_convert(conv);
        if (q->parsed()) return run_query(qa);
        if (b->parsed()) return run_bench(ba);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
