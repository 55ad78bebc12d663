#include "fuzz.hpp"

#include "flarelite/compare.hpp"
#include "flarelite/csv.hpp"
#include "flarelite/error.hpp"
#include "flarelite/sql.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace flarelite::fuzz {

namespace {

constexpr double kIntCeiling = 1e17;

struct Node {
    PlanPtr plan;
    double rows = 0;
    std::map<std::string, double> bound; // max |value| of Int64 columns
    std::set<std::string> tables;
    bool float_agg = false;
};

struct Typed {
    ExprPtr e;
    double bound = 0;
};

class Generator {
public:
    Generator(std::uint64_t seed, const GenLimits& limits) : rng_(seed), limits_(limits) {}

    std::map<std::string, ColumnTable> tables() {
        std::map<std::string, ColumnTable> out;
        for (int t = 0; t < 3; ++t) {
            std::string p = "t" + std::to_string(t);
            bool ni = coin(0.4), nf = coin(0.4), ns = coin(0.4);
            Schema s({{p + "_k", DataType::Int64, false},
                      {p + "_i", DataType::Int64, ni},
                      {p + "_f", DataType::Float64, nf},
                      {p + "_d", DataType::Date, false},
                      {p + "_s", DataType::Text, ns}});
            std::size_t rows = row_count();
            std::int64_t keys = uniform(1, 30);
            TableBuilder b(s);
            for (std::size_t r = 0; r < rows; ++r) {
                std::vector<Scalar> row;
                row.emplace_back(uniform(0, keys - 1));
                row.push_back(ni && coin(0.1) ? Scalar{} : Scalar{uniform(-1000, 1000)});
                row.push_back(nf && coin(0.1) ? Scalar{} : Scalar{float_value()});
                row.emplace_back(std::int64_t{19940000 + 10000 * uniform(0, 2) + 100 * uniform(1, 12) + uniform(1, 28)});
                static const char* const words[] = {"", "a", "ab", "abc", "b", "ba", "special x", "zz"};
                row.push_back(ns && coin(0.1) ? Scalar{} : Scalar{std::string(words[uniform(0, 7)])});
                b.add_row(std::move(row));
            }
            out.emplace(p, b.finish());
            schemas_[p] = s;
        }
        return out;
    }

    /// The root always has the requested depth; inner subtrees may stop early.
    Node plan(int depth, bool root = false) {
        if (depth <= 1 || (!root && coin(0.2))) return scan();
        switch (uniform(0, 6)) {
        case 0:
        case 1: return filter(plan(depth - 1));
        case 2: return project(plan(depth - 1));
        case 3: return join(depth);
        case 4: return aggregate(plan(depth - 1));
        case 5: return sort(plan(depth - 1));
        default: return depth >= 3 && coin(0.5) ? limit(sort(plan(depth - 2))) : limit(plan(depth - 1));
        }
    }

private:
    bool coin(double p) { return std::uniform_real_distribution<double>(0, 1)(rng_) < p; }
    std::int64_t uniform(std::int64_t lo, std::int64_t hi) { return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng_); }
    template <class T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(uniform(0, static_cast<std::int64_t>(v.size()) - 1))];
    }

    std::size_t row_count() {
        double r = std::uniform_real_distribution<double>(0, 1)(rng_);
        if (r < 0.08) return 0;
        if (r < 0.2) return static_cast<std::size_t>(uniform(1, 3));
        return static_cast<std::size_t>(uniform(1, static_cast<std::int64_t>(limits_.max_rows)));
    }

    double float_value() {
        double r = std::uniform_real_distribution<double>(0, 1)(rng_);
        if (r < 0.02) return -0.0;
        if (r < 0.03) return std::numeric_limits<double>::quiet_NaN();
        return static_cast<double>(uniform(-400, 400)) / 4.0;
    }

    std::string fresh(const char* prefix) { return prefix + std::to_string(counter_++); }

    std::vector<ColumnDef> columns_of(const Node& n, DataType t) const {
        std::vector<ColumnDef> out;
        for (const auto& c : n.plan->schema.columns()) {
            if (c.dtype == t) out.push_back(c);
        }
        return out;
    }

    double int_bound(const Node& n, const std::string& name) const {
        auto it = n.bound.find(name);
        return it == n.bound.end() ? 1000 : it->second;
    }

    Node scan() {
        std::string t = "t" + std::to_string(uniform(0, 2));
        const Schema& s = schemas_.at(t);
        std::vector<std::string> cols;
        for (const auto& c : s.columns()) {
            if (coin(0.7)) cols.push_back(c.name);
        }
        if (cols.empty()) cols.push_back(pick(s.names()));
        Node n;
        n.plan = plan::scan_columns(t, s, cols);
        n.rows = static_cast<double>(limits_.max_rows);
        for (const auto& c : n.plan->schema.columns()) {
            if (c.dtype == DataType::Int64) n.bound[c.name] = c.name.ends_with("_k") ? 30 : 1000;
        }
        n.tables.insert(t);
        return n;
    }

    Typed expr(const Node& n, DataType t, int depth) {
        if (coin(0.04) && t != DataType::Bool) return {lit_null(t), 0};
        bool leaf = depth <= 0 || coin(0.35);
        switch (t) {
        case DataType::Bool: {
            int choice = static_cast<int>(uniform(0, leaf ? 2 : 6));
            if (choice == 0) {
                auto texts = columns_of(n, DataType::Text);
                if (!texts.empty()) {
                    static const char* const prefixes[] = {"", "a", "ab", "b", "special", "z"};
                    return {starts_with(col(pick(texts).name), prefixes[uniform(0, 5)]), 0};
                }
            }
            if (choice <= 2) {
                static const DataType types[] = {DataType::Int64, DataType::Float64, DataType::Date, DataType::Text};
                DataType ct = types[uniform(0, 3)];
                return {cmp(static_cast<CmpOp>(uniform(0, 5)), expr(n, ct, depth - 1).e, expr(n, ct, depth - 1).e), 0};
            }
            if (choice == 3) {
                DataType ct = coin(0.5) ? DataType::Float64 : (coin(0.5) ? DataType::Int64 : DataType::Date);
                return {between(expr(n, ct, depth - 1).e, expr(n, ct, 0).e, expr(n, ct, 0).e), 0};
            }
            if (choice == 4) return {not_(expr(n, DataType::Bool, depth - 1).e), 0};
            if (choice == 5) return {and_(expr(n, DataType::Bool, depth - 1).e, expr(n, DataType::Bool, depth - 1).e), 0};
            return {or_(expr(n, DataType::Bool, depth - 1).e, expr(n, DataType::Bool, depth - 1).e), 0};
        }
        case DataType::Int64: {
            auto cols = columns_of(n, DataType::Int64);
            if (leaf || coin(0.2)) {
                if (!cols.empty() && coin(0.75)) {
                    const auto& c = pick(cols);
                    return {col(c.name), int_bound(n, c.name)};
                }
                std::int64_t v = uniform(-100, 100);
                return {lit_int(v), static_cast<double>(std::llabs(v))};
            }
            Typed a = expr(n, DataType::Int64, depth - 1), b = expr(n, DataType::Int64, depth - 1);
            auto op = static_cast<ArithOp>(uniform(0, 2));
            double bound = op == ArithOp::Mul ? a.bound * b.bound : a.bound + b.bound;
            if (bound > kIntCeiling) return a;
            return {arith(op, a.e, b.e), bound};
        }
        case DataType::Float64: {
            if (leaf) {
                auto cols = columns_of(n, DataType::Float64);
                if (!cols.empty() && coin(0.75)) return {col(pick(cols).name), 0};
                return {lit_float(static_cast<double>(uniform(-40, 40)) / 8.0), 0};
            }
            switch (uniform(0, 3)) {
            case 0: return {udf_call("if", {expr(n, DataType::Bool, depth - 1).e, expr(n, DataType::Float64, depth - 1).e,
                                            expr(n, DataType::Float64, depth - 1).e}),
                            0};
            case 1: {
                // Int64 operand: widened by the binder.
                Typed i = expr(n, DataType::Int64, depth - 1);
                return {arith(static_cast<ArithOp>(uniform(0, 3)), i.e, expr(n, DataType::Float64, depth - 1).e), 0};
            }
            case 2: return {arith(ArithOp::Div, expr(n, DataType::Int64, depth - 1).e, expr(n, DataType::Int64, depth - 1).e), 0};
            default:
                return {arith(static_cast<ArithOp>(uniform(0, 3)), expr(n, DataType::Float64, depth - 1).e,
                              expr(n, DataType::Float64, depth - 1).e),
                        0};
            }
        }
        case DataType::Date: {
            auto cols = columns_of(n, DataType::Date);
            if (!cols.empty() && coin(0.7)) return {col(pick(cols).name), 0};
            return {lit_date(19940000 + 10000 * uniform(0, 2) + 100 * uniform(1, 12) + uniform(1, 28)), 0};
        }
        case DataType::Text: {
            auto cols = columns_of(n, DataType::Text);
            if (!cols.empty() && coin(0.7)) return {col(pick(cols).name), 0};
            static const char* const words[] = {"", "a", "ab", "b", "special x", "zz"};
            return {lit_text(words[uniform(0, 5)]), 0};
        }
        }
        return {lit_int(0), 0};
    }

    Node filter(Node c) {
        Node n = c;
        n.plan = plan::filter(c.plan, expr(c, DataType::Bool, 3).e, &udfs_);
        return n;
    }

    Node project(Node c) {
        Node n = c;
        n.bound.clear();
        std::vector<NamedExpr> exprs;
        std::map<std::string, double> bounds;
        int count = static_cast<int>(uniform(1, 4));
        for (int i = 0; i < count; ++i) {
            if (coin(0.4)) {
                const auto& cd = pick(c.plan->schema.columns());
                if (std::none_of(exprs.begin(), exprs.end(), [&](const NamedExpr& e) { return e.name == cd.name; })) {
                    exprs.push_back({col(cd.name), cd.name});
                    if (cd.dtype == DataType::Int64) bounds[cd.name] = int_bound(c, cd.name);
                    continue;
                }
            }
            static const DataType types[] = {DataType::Int64, DataType::Float64, DataType::Date, DataType::Text};
            DataType t = types[uniform(0, 3)];
            Typed e = expr(c, t, 2);
            std::string name = fresh("x");
            exprs.push_back({e.e, name});
            if (t == DataType::Int64) bounds[name] = std::max(e.bound, 1.0);
        }
        n.plan = plan::project(c.plan, exprs, &udfs_);
        n.bound = bounds;
        return n;
    }

    Node join(int depth) {
        Node l = plan(depth - 1);
        Node r = plan(depth - 1);
        for (int attempt = 0; attempt < 4 && !disjoint(l, r); ++attempt) r = plan(depth - 1);
        if (!disjoint(l, r)) return filter(l);
        std::vector<JoinKey> keys;
        for (DataType t : {DataType::Int64, DataType::Date, DataType::Text, DataType::Float64}) {
            auto lc = columns_of(l, t), rc = columns_of(r, t);
            if (lc.empty() || rc.empty()) continue;
            if (keys.empty() || coin(0.25)) keys.push_back({col(pick(lc).name), col(pick(rc).name)});
        }
        if (keys.empty()) return filter(l);
        auto kind = static_cast<JoinKind>(uniform(0, 3));
        Node n;
        n.plan = plan::join(kind, l.plan, r.plan, keys, &udfs_);
        n.tables = l.tables;
        n.tables.insert(r.tables.begin(), r.tables.end());
        n.float_agg = l.float_agg || r.float_agg;
        bool widening = kind == JoinKind::Inner || kind == JoinKind::LeftOuter;
        n.rows = widening ? std::max(l.rows * r.rows, l.rows) : l.rows;
        n.bound = l.bound;
        if (widening) n.bound.insert(r.bound.begin(), r.bound.end());
        return n;
    }

    static bool disjoint(const Node& a, const Node& b) {
        return std::none_of(a.tables.begin(), a.tables.end(), [&](const std::string& t) { return b.tables.count(t) > 0; });
    }

    Node aggregate(Node c) {
        Node n;
        n.tables = c.tables;
        n.rows = c.rows;
        n.float_agg = c.float_agg;
        std::vector<NamedExpr> keys;
        int nkeys = static_cast<int>(uniform(0, 2));
        for (int i = 0; i < nkeys; ++i) {
            if (coin(0.7)) {
                const auto& cd = pick(c.plan->schema.columns());
                std::string name = fresh("g");
                keys.push_back({col(cd.name), name});
                if (cd.dtype == DataType::Int64) n.bound[name] = int_bound(c, cd.name);
            } else {
                Typed e = expr(c, DataType::Int64, 1);
                std::string name = fresh("g");
                keys.push_back({e.e, name});
                n.bound[name] = std::max(e.bound, 1.0);
            }
        }
        std::vector<AggSpec> aggs;
        int naggs = static_cast<int>(uniform(1, 3));
        for (int i = 0; i < naggs; ++i) {
            std::string name = fresh("a");
            auto fn = static_cast<AggFn>(uniform(0, 4));
            if (fn == AggFn::Count) {
                if (coin(0.5)) {
                    aggs.push_back({fn, nullptr, name});
                } else {
                    aggs.push_back({fn, col(pick(c.plan->schema.columns()).name), name});
                }
                n.bound[name] = c.rows;
                continue;
            }
            std::vector<DataType> types = {DataType::Int64, DataType::Float64};
            if (fn == AggFn::Min || fn == AggFn::Max) types.push_back(DataType::Date);
            DataType t = pick(types);
            Typed e = expr(c, t, 1);
            if (t == DataType::Int64 && fn == AggFn::Sum) {
                double b = std::max(e.bound, 1.0) * std::max(c.rows, 1.0);
                if (b > kIntCeiling) {
                    aggs.push_back({AggFn::Count, nullptr, name});
                    n.bound[name] = c.rows;
                    continue;
                }
                n.bound[name] = b;
            } else if (t == DataType::Int64) {
                n.bound[name] = std::max(e.bound, 1.0);
            }
            if (t == DataType::Float64 && (fn == AggFn::Sum || fn == AggFn::Avg)) n.float_agg = true;
            if (t == DataType::Int64 && fn == AggFn::Avg) n.float_agg = true;
            aggs.push_back({fn, e.e, name});
        }
        n.plan = plan::aggregate(c.plan, keys, aggs, &udfs_);
        return n;
    }

    Node sort(Node c) {
        Node n = c;
        std::vector<SortKey> keys;
        int nk = static_cast<int>(uniform(1, 2));
        for (int i = 0; i < nk; ++i) keys.push_back({pick(c.plan->schema.columns()).name, coin(0.5)});
        n.plan = plan::sort(c.plan, keys);
        return n;
    }

    Node limit(Node c) {
        Node n = c;
        n.plan = plan::limit(c.plan, uniform(0, 25));
        return n;
    }

    std::mt19937_64 rng_;
    GenLimits limits_;
    std::map<std::string, Schema> schemas_;
    UdfRegistry udfs_;
    int counter_ = 0;
};

ColumnTable take_rows(const ColumnTable& t, std::size_t begin, std::size_t end) {
    TableBuilder b(t.schema());
    for (std::size_t r = 0; r < t.row_count(); ++r) {
        if (r >= begin && r < end) continue;
        b.add_row(t.row(r));
    }
    return b.finish();
}

std::vector<PlanPtr> subtrees(const PlanPtr& p) {
    std::vector<PlanPtr> out;
    for (const auto& c : p->children) {
        out.push_back(c);
        for (auto& s : subtrees(c)) out.push_back(s);
    }
    return out;
}

struct Attempt {
    std::optional<ColumnTable> table;
    std::string error;
    bool execution_error = false;
};

template <class F>
Attempt attempt(F&& f) {
    Attempt a;
    try {
        a.table = f();
    } catch (const ExecutionError& e) {
        a.error = std::string("ExecutionError: ") + e.what();
        a.execution_error = true;
    } catch (const std::exception& e) {
        a.error = std::string("error: ") + e.what();
    }
    return a;
}

bool has_float_agg(const PlanPtr& p) {
    for (const auto& a : p->aggs) {
        if ((a.fn == AggFn::Sum || a.fn == AggFn::Avg) && a.arg && (a.arg->type == DataType::Float64 || a.fn == AggFn::Avg)) {
            return true;
        }
    }
    return std::any_of(p->children.begin(), p->children.end(), has_float_agg);
}

} // namespace

Instance generate(std::uint64_t seed, const GenLimits& limits) {
    Generator g(seed, limits);
    Instance inst;
    inst.seed = seed;
    inst.tables = g.tables();
    // Retry the rare shapes the binder rejects (e.g. duplicate output names).
    for (int i = 0;; ++i) {
        try {
            inst.plan = g.plan(1 + static_cast<int>(seed % static_cast<std::uint64_t>(limits.max_depth)), true).plan;
            break;
        } catch (const PlanError&) {
            if (i > 50) throw;
        }
    }
    std::mt19937_64 rng(seed ^ 0x5bd1e995u);
    inst.threads = has_float_agg(inst.plan) ? 1 : static_cast<int>(rng() % 4) + 1;
    return inst;
}

void install(Session& session, const Instance& inst) {
    for (const auto& name : session.catalog().table_names()) session.catalog().drop(name);
    for (const auto& [name, t] : inst.tables) session.catalog().register_table(name, t);
}

Outcome check(Session& session, const Instance& inst) {
    install(session, inst);
    Attempt vol = attempt([&] { return session.run_volcano(inst.plan); });
    Attempt ir = attempt([&] {
        QueryOptions o;
        o.backend = Backend::Interpreter;
        return session.execute(inst.plan, o).table;
    });
    Attempt nat = attempt([&] {
        QueryOptions o;
        o.threads = inst.threads;
        return session.execute(inst.plan, o).table;
    });
    Outcome out;
    const std::pair<const char*, const Attempt*> others[] = {{"ir_interpret", &ir}, {"native", &nat}};
    if (!vol.table) {
        out.agree = vol.execution_error && ir.execution_error && nat.execution_error;
        out.all_failed = out.agree;
        out.detail = "volcano: " + vol.error + "\nir_interpret: " + (ir.table ? "ok" : ir.error) +
                     "\nnative: " + (nat.table ? "ok" : nat.error);
        return out;
    }
    for (const auto& [name, a] : others) {
        if (!a->table) {
            out.agree = false;
            out.detail = std::string(name) + " failed where volcano succeeded: " + a->error;
            return out;
        }
        CompareResult c = compare_tables(*vol.table, *a->table);
        if (!c.equal) {
            out.agree = false;
            out.detail = std::string("volcano vs ") + name + ": " + c.message;
            return out;
        }
    }
    return out;
}

Instance shrink(Session& session, Instance inst) {
    int budget = 400;
    auto diverges = [&](const Instance& cand) {
        if (budget-- <= 0) return false;
        return !check(session, cand).agree;
    };
    bool progress = true;
    while (progress && budget > 0) {
        progress = false;
        for (const auto& sub : subtrees(inst.plan)) {
            Instance cand = inst;
            cand.plan = sub;
            if (diverges(cand)) {
                inst = std::move(cand);
                progress = true;
                break;
            }
        }
        for (auto& [name, table] : inst.tables) {
            for (std::size_t chunk = std::max<std::size_t>(table.row_count() / 2, 1); chunk >= 1 && table.row_count() > 0;) {
                bool removed = false;
                for (std::size_t begin = 0; begin < table.row_count(); begin += chunk) {
                    Instance cand = inst;
                    cand.tables.at(name) = take_rows(table, begin, begin + chunk);
                    if (diverges(cand)) {
                        inst = std::move(cand);
                        removed = progress = true;
                        break;
                    }
                }
                if (!removed) {
                    if (chunk == 1) break;
                    chunk /= 2;
                } else {
                    chunk = std::min(chunk, std::max<std::size_t>(inst.tables.at(name).row_count() / 2, 1));
                }
                if (budget <= 0) break;
            }
        }
    }
    install(session, inst);
    return inst;
}

std::filesystem::path dump(const Instance& inst, const Outcome& outcome, const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    fs::path d = dir / ("repro-" + std::to_string(inst.seed));
    fs::create_directories(d);
    std::ofstream info(d / "README.txt");
    info << "seed: " << inst.seed << "\nnative threads: " << inst.threads << "\n\n" << outcome.detail << "\n\nplan:\n"
         << plan_to_string(inst.plan) << "\n";
    try {
        info << "sql:\n" << print_sql(inst.plan) << "\n";
    } catch (const std::exception& e) {
        info << "sql: not expressible (" << e.what() << ")\n";
    }
    for (const auto& [name, t] : inst.tables) {
        info << "\ntable " << name << " (" << t.row_count() << " rows):";
        for (const auto& c : t.schema().columns()) {
            info << " " << c.name << ":" << to_string(c.dtype) << (c.nullable ? "?" : "");
        }
        CsvOptions o;
        o.has_header = true;
        o.null_token = "NULL";
        write_csv(t, d / (name + ".csv"), o);
    }
    info << "\n";
    return d;
}

} // namespace flarelite::fuzz
