#include "flarelite/volcano.hpp"

#include "flarelite/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>

namespace flarelite {

namespace {

using Row = std::vector<Scalar>;

// ---- expression evaluation -------------------------------------------------

double as_double(const Scalar& v) {
    if (auto* d = std::get_if<double>(&v)) return *d;
    return static_cast<double>(std::get<std::int64_t>(v));
}

bool as_bool(const Scalar& v) {
    auto* b = std::get_if<bool>(&v);
    return b && *b;
}

/// -1, 0, 1 for non-null values of the same type. Float64 uses IEEE order
/// except that callers needing a total order go through `total_compare`.
int compare_values(const Scalar& a, const Scalar& b) {
    if (auto* x = std::get_if<std::int64_t>(&a)) {
        auto y = std::get<std::int64_t>(b);
        return *x < y ? -1 : (*x > y ? 1 : 0);
    }
    if (auto* s = std::get_if<std::string>(&a)) {
        int c = s->compare(std::get<std::string>(b));
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    if (auto* x = std::get_if<bool>(&a)) return static_cast<int>(*x) - static_cast<int>(std::get<bool>(b));
    double x = std::get<double>(a);
    double y = std::get<double>(b);
    return x < y ? -1 : (x > y ? 1 : 0);
}

/// Total order: NaN above every other double, nulls handled by the caller.
int total_compare(const Scalar& a, const Scalar& b) {
    if (auto* x = std::get_if<double>(&a)) {
        double y = std::get<double>(b);
        bool xn = std::isnan(*x);
        bool yn = std::isnan(y);
        if (xn || yn) return xn == yn ? 0 : (xn ? 1 : -1);
    }
    return compare_values(a, b);
}

std::int64_t int_arith(ArithOp op, std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    bool bad = false;
    switch (op) {
    case ArithOp::Add: bad = __builtin_add_overflow(a, b, &r); break;
    case ArithOp::Sub: bad = __builtin_sub_overflow(a, b, &r); break;
    case ArithOp::Mul: bad = __builtin_mul_overflow(a, b, &r); break;
    case ArithOp::Div: throw ExecutionError("internal: integer division");
    }
    if (bad) throw ExecutionError("integer overflow in " + std::to_string(a) + " " + std::string(to_string(op)) + " " + std::to_string(b));
    return r;
}

Scalar eval(const Expr& e, const Schema& schema, const Row& row) {
    switch (e.kind) {
    case ExprKind::ColRef: {
        auto i = schema.find(e.name);
        if (!i) throw ExecutionError("oracle: column " + e.name + " not in input");
        return row[*i];
    }
    case ExprKind::Lit: return e.value;
    case ExprKind::Cast: {
        Scalar v = eval(*e.args[0], schema, row);
        if (is_null(v)) return v;
        return as_double(v);
    }
    case ExprKind::Arith: {
        Scalar a = eval(*e.args[0], schema, row);
        Scalar b = eval(*e.args[1], schema, row);
        if (is_null(a) || is_null(b)) return Scalar{};
        if (e.type == DataType::Float64) {
            double x = as_double(a), y = as_double(b);
            switch (e.arith_op()) {
            case ArithOp::Add: return x + y;
            case ArithOp::Sub: return x - y;
            case ArithOp::Mul: return x * y;
            case ArithOp::Div: return x / y;
            }
        }
        return int_arith(e.arith_op(), std::get<std::int64_t>(a), std::get<std::int64_t>(b));
    }
    case ExprKind::Cmp: {
        Scalar a = eval(*e.args[0], schema, row);
        Scalar b = eval(*e.args[1], schema, row);
        if (is_null(a) || is_null(b)) return false;
        if (std::holds_alternative<double>(a)) {
            double x = std::get<double>(a), y = std::get<double>(b);
            switch (e.cmp_op()) {
            case CmpOp::Eq: return x == y;
            case CmpOp::Ne: return x != y;
            case CmpOp::Lt: return x < y;
            case CmpOp::Le: return x <= y;
            case CmpOp::Gt: return x > y;
            case CmpOp::Ge: return x >= y;
            }
        }
        int c = compare_values(a, b);
        switch (e.cmp_op()) {
        case CmpOp::Eq: return c == 0;
        case CmpOp::Ne: return c != 0;
        case CmpOp::Lt: return c < 0;
        case CmpOp::Le: return c <= 0;
        case CmpOp::Gt: return c > 0;
        case CmpOp::Ge: return c >= 0;
        }
        return false;
    }
    case ExprKind::Bool: {
        bool a = as_bool(eval(*e.args[0], schema, row));
        if (e.bool_op() == BoolOp::Not) return !a;
        bool b = as_bool(eval(*e.args[1], schema, row));
        return e.bool_op() == BoolOp::And ? (a && b) : (a || b);
    }
    case ExprKind::Between: {
        Scalar x = eval(*e.args[0], schema, row);
        Scalar lo = eval(*e.args[1], schema, row);
        Scalar hi = eval(*e.args[2], schema, row);
        if (is_null(x)) return false;
        bool ge = false, le = false;
        if (std::holds_alternative<double>(x)) {
            ge = !is_null(lo) && std::get<double>(x) >= std::get<double>(lo);
            le = !is_null(hi) && std::get<double>(x) <= std::get<double>(hi);
        } else {
            ge = !is_null(lo) && compare_values(x, lo) >= 0;
            le = !is_null(hi) && compare_values(x, hi) <= 0;
        }
        return ge && le;
    }
    case ExprKind::StartsWith: {
        Scalar x = eval(*e.args[0], schema, row);
        if (is_null(x)) return false;
        const auto& s = std::get<std::string>(x);
        const auto& p = std::get<std::string>(e.value);
        return s.size() >= p.size() && std::equal(p.begin(), p.end(), s.begin());
    }
    case ExprKind::Cond: {
        Scalar c = eval(*e.args[0], schema, row);
        Scalar a = eval(*e.args[1], schema, row);
        Scalar b = eval(*e.args[2], schema, row);
        return as_bool(c) ? a : b;
    }
    case ExprKind::UdfCall: throw ExecutionError("oracle: UDF " + e.name + " must be inlined before evaluation");
    }
    throw ExecutionError("oracle: unknown expression kind");
}

// ---- keys ------------------------------------------------------------------

/// Comparable stand-in for a grouping or join key value. Float64 keys use
/// their normalized bit pattern so that -0 == 0 and all NaNs coincide.
struct KeyAtom {
    int tag = 0; // 0 null, 1 integral/bool, 2 float bits, 3 text
    std::int64_t i = 0;
    std::uint64_t bits = 0;
    std::string s;

    auto operator<=>(const KeyAtom&) const = default;
};

KeyAtom key_atom(const Scalar& v) {
    KeyAtom k;
    if (is_null(v)) return k;
    if (auto* i = std::get_if<std::int64_t>(&v)) {
        k.tag = 1;
        k.i = *i;
    } else if (auto* b = std::get_if<bool>(&v)) {
        k.tag = 1;
        k.i = *b;
    } else if (auto* d = std::get_if<double>(&v)) {
        k.tag = 2;
        double x = *d == 0.0 ? 0.0 : *d;
        if (std::isnan(x)) x = std::numeric_limits<double>::quiet_NaN();
        std::memcpy(&k.bits, &x, sizeof x);
    } else {
        k.tag = 3;
        k.s = std::get<std::string>(v);
    }
    return k;
}

using Key = std::vector<KeyAtom>;

bool has_null(const Key& k) {
    return std::any_of(k.begin(), k.end(), [](const KeyAtom& a) { return a.tag == 0; });
}

// ---- operators -------------------------------------------------------------

class Operator {
public:
    virtual ~Operator() = default;
    virtual bool next(Row& out) = 0;
};

using OpPtr = std::unique_ptr<Operator>;

OpPtr build(const PlanPtr& p, const Catalog& catalog, const VolcanoOptions& opts);

class ScanOp : public Operator {
public:
    ScanOp(const PlanNode& n, const Catalog& catalog) : width_(n.schema.size()) {
        std::vector<std::string> names = n.schema.names();
        table_ = catalog.load(n.table, names);
        for (const auto& name : names) cols_.push_back(&table_->column(name));
        rows_ = table_->row_count();
    }
    bool next(Row& out) override {
        if (pos_ >= rows_) return false;
        out.resize(width_);
        for (std::size_t c = 0; c < width_; ++c) out[c] = cols_[c]->get(pos_);
        ++pos_;
        return true;
    }

private:
    TablePtr table_;
    std::vector<const Column*> cols_;
    std::size_t width_;
    std::size_t rows_ = 0;
    std::size_t pos_ = 0;
};

class EmptyOp : public Operator {
public:
    bool next(Row&) override { return false; }
};

class FilterOp : public Operator {
public:
    FilterOp(const PlanNode& n, OpPtr child) : n_(n), child_(std::move(child)) {}
    bool next(Row& out) override {
        while (child_->next(out)) {
            if (as_bool(eval(*n_.predicate, n_.child()->schema, out))) return true;
        }
        return false;
    }

private:
    const PlanNode& n_;
    OpPtr child_;
};

class ProjectOp : public Operator {
public:
    ProjectOp(const PlanNode& n, OpPtr child) : n_(n), child_(std::move(child)) {}
    bool next(Row& out) override {
        if (!child_->next(in_)) return false;
        out.resize(n_.exprs.size());
        for (std::size_t i = 0; i < n_.exprs.size(); ++i) out[i] = eval(*n_.exprs[i].expr, n_.child()->schema, in_);
        return true;
    }

private:
    const PlanNode& n_;
    OpPtr child_;
    Row in_;
};

class LimitOp : public Operator {
public:
    LimitOp(const PlanNode& n, OpPtr child) : n_(n), child_(std::move(child)) {}
    bool next(Row& out) override {
        if (seen_ >= n_.limit) return false;
        if (!child_->next(out)) return false;
        ++seen_;
        return true;
    }

private:
    const PlanNode& n_;
    OpPtr child_;
    std::int64_t seen_ = 0;
};

class JoinOp : public Operator {
public:
    JoinOp(const PlanNode& n, OpPtr left, OpPtr right, bool nested) : n_(n), left_(std::move(left)), nested_(nested) {
        Row r;
        while (right->next(r)) {
            Key k = key_of(r, false);
            if (!nested_ && has_null(k)) continue;
            std::size_t idx = right_rows_.size();
            right_rows_.push_back(r);
            right_keys_.push_back(k);
            if (!nested_) index_[k].push_back(idx);
        }
    }

    bool next(Row& out) override {
        for (;;) {
            if (pending_pos_ < pending_.size()) {
                std::size_t m = pending_[pending_pos_++];
                out = current_;
                out.insert(out.end(), right_rows_[m].begin(), right_rows_[m].end());
                return true;
            }
            if (!left_->next(current_)) return false;
            Key k = key_of(current_, true);
            pending_.clear();
            pending_pos_ = 0;
            if (!has_null(k)) {
                if (nested_) {
                    for (std::size_t j = 0; j < right_keys_.size(); ++j) {
                        if (!has_null(right_keys_[j]) && right_keys_[j] == k) pending_.push_back(j);
                    }
                } else if (auto it = index_.find(k); it != index_.end()) {
                    pending_ = it->second;
                }
            }
            switch (n_.join_kind) {
            case JoinKind::Inner: break;
            case JoinKind::LeftOuter:
                if (pending_.empty()) {
                    out = current_;
                    out.resize(n_.schema.size());
                    return true;
                }
                break;
            case JoinKind::LeftSemi:
                if (!pending_.empty()) {
                    pending_.clear();
                    out = current_;
                    return true;
                }
                break;
            case JoinKind::LeftAnti:
                if (pending_.empty()) {
                    out = current_;
                    return true;
                }
                pending_.clear();
                break;
            }
        }
    }

private:
    Key key_of(const Row& r, bool left) const {
        Key k;
        const Schema& s = n_.child(left ? 0 : 1)->schema;
        for (const auto& jk : n_.keys) k.push_back(key_atom(eval(*(left ? jk.left : jk.right), s, r)));
        return k;
    }

    const PlanNode& n_;
    OpPtr left_;
    bool nested_;
    std::vector<Row> right_rows_;
    std::vector<Key> right_keys_;
    std::map<Key, std::vector<std::size_t>> index_;
    Row current_;
    std::vector<std::size_t> pending_;
    std::size_t pending_pos_ = 0;
};

struct AggAcc {
    bool any = false;
    std::int64_t count = 0;
    std::int64_t isum = 0;
    double fsum = 0;
    Scalar best;
};

void accumulate(const AggSpec& a, AggAcc& acc, const Scalar& v) {
    if (!a.arg) {
        ++acc.count;
        return;
    }
    if (is_null(v)) return;
    ++acc.count;
    switch (a.fn) {
    case AggFn::Count: break;
    case AggFn::Sum:
    case AggFn::Avg:
        if (auto* i = std::get_if<std::int64_t>(&v)) {
            if (__builtin_add_overflow(acc.isum, *i, &acc.isum)) throw ExecutionError("integer overflow in SUM");
        } else {
            acc.fsum += std::get<double>(v);
        }
        break;
    case AggFn::Min:
        if (!acc.any || total_compare(v, acc.best) < 0) acc.best = v;
        break;
    case AggFn::Max:
        if (!acc.any || total_compare(v, acc.best) > 0) acc.best = v;
        break;
    }
    acc.any = true;
}

Scalar finish(const AggSpec& a, const AggAcc& acc) {
    if (a.fn == AggFn::Count) return acc.count;
    if (!acc.any) return Scalar{};
    bool is_float = a.arg->type == DataType::Float64;
    switch (a.fn) {
    case AggFn::Sum: return is_float ? Scalar{acc.fsum} : Scalar{acc.isum};
    case AggFn::Avg: return (is_float ? acc.fsum : static_cast<double>(acc.isum)) / static_cast<double>(acc.count);
    default: return acc.best;
    }
}

class AggregateOp : public Operator {
public:
    AggregateOp(const PlanNode& n, OpPtr child) {
        const Schema& in = n.child()->schema;
        std::map<Key, std::size_t> groups;
        std::vector<Row> keys;
        std::vector<std::vector<AggAcc>> accs;
        bool grouped = !n.exprs.empty();
        if (!grouped) {
            keys.emplace_back();
            accs.emplace_back(n.aggs.size());
        }
        Row r;
        while (child->next(r)) {
            std::size_t g = 0;
            if (grouped) {
                Row kv;
                Key k;
                for (const auto& ke : n.exprs) {
                    kv.push_back(eval(*ke.expr, in, r));
                    k.push_back(key_atom(kv.back()));
                }
                auto [it, fresh] = groups.emplace(std::move(k), keys.size());
                if (fresh) {
                    keys.push_back(std::move(kv));
                    accs.emplace_back(n.aggs.size());
                }
                g = it->second;
            }
            for (std::size_t a = 0; a < n.aggs.size(); ++a) {
                Scalar v = n.aggs[a].arg ? eval(*n.aggs[a].arg, in, r) : Scalar{};
                accumulate(n.aggs[a], accs[g][a], v);
            }
        }
        for (std::size_t g = 0; g < keys.size(); ++g) {
            Row out = keys[g];
            for (std::size_t a = 0; a < n.aggs.size(); ++a) out.push_back(finish(n.aggs[a], accs[g][a]));
            rows_.push_back(std::move(out));
        }
    }
    bool next(Row& out) override {
        if (pos_ >= rows_.size()) return false;
        out = rows_[pos_++];
        return true;
    }

private:
    std::vector<Row> rows_;
    std::size_t pos_ = 0;
};

class SortOp : public Operator {
public:
    SortOp(const PlanNode& n, OpPtr child) {
        Row r;
        while (child->next(r)) rows_.push_back(r);
        std::vector<std::pair<std::size_t, bool>> keys;
        for (const auto& k : n.sort_keys) keys.emplace_back(*n.schema.find(k.column), k.ascending);
        std::stable_sort(rows_.begin(), rows_.end(), [&](const Row& a, const Row& b) {
            for (auto [c, asc] : keys) {
                bool an = is_null(a[c]), bn = is_null(b[c]);
                if (an || bn) {
                    if (an == bn) continue;
                    return asc ? an : bn;
                }
                int d = total_compare(a[c], b[c]);
                if (d != 0) return asc ? d < 0 : d > 0;
            }
            return false;
        });
    }
    bool next(Row& out) override {
        if (pos_ >= rows_.size()) return false;
        out = rows_[pos_++];
        return true;
    }

private:
    std::vector<Row> rows_;
    std::size_t pos_ = 0;
};

OpPtr build(const PlanPtr& p, const Catalog& catalog, const VolcanoOptions& opts) {
    const PlanNode& n = *p;
    switch (n.kind) {
    case PlanKind::Scan: return std::make_unique<ScanOp>(n, catalog);
    case PlanKind::Empty: return std::make_unique<EmptyOp>();
    case PlanKind::Filter: return std::make_unique<FilterOp>(n, build(n.child(), catalog, opts));
    case PlanKind::Project: return std::make_unique<ProjectOp>(n, build(n.child(), catalog, opts));
    case PlanKind::Limit: return std::make_unique<LimitOp>(n, build(n.child(), catalog, opts));
    case PlanKind::Join:
        return std::make_unique<JoinOp>(n, build(n.child(0), catalog, opts), build(n.child(1), catalog, opts),
                                        opts.nested_loop_join);
    case PlanKind::Aggregate: return std::make_unique<AggregateOp>(n, build(n.child(), catalog, opts));
    case PlanKind::Sort: return std::make_unique<SortOp>(n, build(n.child(), catalog, opts));
    }
    throw ExecutionError("oracle: unknown plan node");
}

} // namespace

ColumnTable volcano_interpret(const PlanPtr& plan, const Catalog& catalog, const VolcanoOptions& opts) {
    OpPtr root = build(plan, catalog, opts);
    TableBuilder out(plan->schema);
    std::size_t rows = 0;
    Row r;
    while (root->next(r)) {
        out.add_row(r);
        ++rows;
    }
    ColumnTable t = out.finish();
    if (plan->schema.empty()) return ColumnTable(plan->schema, {}, rows);
    return t;
}

} // namespace flarelite
