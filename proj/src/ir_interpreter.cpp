#include "flarelite/error.hpp"
#include "flarelite/runtime.hpp"

#include "hashing.hpp"

#include <algorithm>
#include <numeric>

namespace flarelite {

namespace {

struct Cell {
    std::int64_t i = 0;
    double f = 0;
    std::string_view s;
    bool null = false;
};

Cell null_cell() {
    Cell c;
    c.null = true;
    return c;
}

struct AggState {
    std::int64_t i = 0;
    double f = 0;
    std::int64_t n = 0; // rows counted (COUNT) or non-null inputs seen
};

bool float_less(double a, double b) { return !std::isnan(a) && (std::isnan(b) || a < b); }

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw ExecutionError("integer overflow in SUM");
    return r;
}

void agg_update(const AccDecl& d, AggState& st, const Cell* arg) {
    if (!d.has_arg) {
        ++st.n;
        return;
    }
    if (arg->null) return;
    bool is_float = d.type == DataType::Float64;
    switch (d.fn) {
    case AggFn::Count: break;
    case AggFn::Sum:
        if (is_float) {
            st.f += arg->f;
        } else {
            st.i = checked_add(st.i, arg->i);
        }
        break;
    case AggFn::Min:
    case AggFn::Max: {
        if (st.n == 0) {
            st.i = arg->i;
            st.f = arg->f;
            break;
        }
        bool less = is_float ? float_less(arg->f, st.f) : arg->i < st.i;
        bool greater = is_float ? float_less(st.f, arg->f) : arg->i > st.i;
        if ((d.fn == AggFn::Min && less) || (d.fn == AggFn::Max && greater)) {
            st.i = arg->i;
            st.f = arg->f;
        }
        break;
    }
    case AggFn::Avg: throw ExecutionError("internal: AVG must be rewritten before execution");
    }
    ++st.n;
}

void agg_merge(const AccDecl& d, AggState& into, const AggState& from) {
    if (from.n == 0) return;
    if (!d.has_arg || d.fn == AggFn::Count) {
        into.n += from.n;
        return;
    }
    if (d.fn == AggFn::Sum) {
        if (d.type == DataType::Float64) {
            into.f += from.f;
        } else {
            into.i = checked_add(into.i, from.i);
        }
        into.n += from.n;
        return;
    }
    Cell c;
    c.i = from.i;
    c.f = from.f;
    std::int64_t n = into.n;
    agg_update(d, into, &c);
    into.n = n + from.n;
}

Cell agg_read(const AccDecl& d, const AggState& st) {
    Cell c;
    if (d.fn == AggFn::Count) {
        c.i = st.n;
        return c;
    }
    if (st.n == 0) return null_cell();
    c.i = st.i;
    c.f = st.f;
    return c;
}

std::uint64_t hash_cell(const Cell& c, DataType t) {
    if (c.null) return hashing::kNullHash;
    switch (t) {
    case DataType::Float64: return hashing::float_key_bits(c.f);
    case DataType::Text: return hashing::fnv1a(c.s);
    default: return static_cast<std::uint64_t>(c.i);
    }
}

bool key_equal(const Cell& a, const Cell& b, DataType t) {
    if (a.null || b.null) return a.null && b.null;
    switch (t) {
    case DataType::Float64: return hashing::float_key_bits(a.f) == hashing::float_key_bits(b.f);
    case DataType::Text: return a.s == b.s;
    default: return a.i == b.i;
    }
}

/// Open-addressing table (linear probing, power-of-two capacity, 70% load)
/// with entries kept in insertion order. Join duplicates chain via `next`.
class RowTable {
public:
    RowTable(const HashTableDecl& decl) : decl_(&decl), nk_(decl.key_types.size()) {
        np_ = decl.purpose == TablePurpose::JoinBuild ? decl.payload_types.size() : 0;
        na_ = decl.aggs.size();
        slots_.assign(std::size_t{1} << bits_, -1);
    }

    std::size_t size() const { return hashes_.size(); }
    const Cell& key(std::size_t e, std::size_t k) const { return keys_[e * nk_ + k]; }
    const Cell& payload(std::size_t e, std::size_t k) const { return payload_[e * np_ + k]; }
    AggState& agg(std::size_t e, std::size_t a) { return aggs_[e * na_ + a]; }
    const AggState& agg(std::size_t e, std::size_t a) const { return aggs_[e * na_ + a]; }
    int next(int e) const { return next_[static_cast<std::size_t>(e)]; }

    std::uint64_t hash(const Cell* keys) const {
        std::uint64_t h = 0;
        for (std::size_t k = 0; k < nk_; ++k) h = hashing::combine(h, hash_cell(keys[k], decl_->key_types[k]));
        return h;
    }

    /// Head entry with equal keys, or -1.
    int find(const Cell* keys, std::uint64_t h) const {
        std::size_t mask = slots_.size() - 1;
        for (std::size_t s = hashing::slot_of(h, bits_);; s = (s + 1) & mask) {
            int e = slots_[s];
            if (e < 0) return -1;
            if (hashes_[static_cast<std::size_t>(e)] == h && keys_equal(static_cast<std::size_t>(e), keys)) return e;
        }
    }

    void insert_join(const Cell* keys, const Cell* payload) {
        std::uint64_t h = hash(keys);
        int head = find(keys, h);
        int e = append(keys, h);
        payload_.insert(payload_.end(), payload, payload + np_);
        if (head >= 0) {
            next_[static_cast<std::size_t>(tail_[static_cast<std::size_t>(head)])] = e;
            tail_[static_cast<std::size_t>(head)] = e;
        } else {
            place(e);
        }
    }

    int upsert_group(const Cell* keys) {
        std::uint64_t h = hash(keys);
        int e = find(keys, h);
        if (e >= 0) return e;
        e = append(keys, h);
        aggs_.resize(aggs_.size() + na_);
        place(e);
        return e;
    }

    void merge_from(const RowTable& other) {
        for (std::size_t e = 0; e < other.size(); ++e) {
            int g = upsert_group(&other.keys_[e * nk_]);
            for (std::size_t a = 0; a < na_; ++a) agg_merge(decl_->aggs[a], agg(static_cast<std::size_t>(g), a), other.agg(e, a));
        }
    }

private:
    bool keys_equal(std::size_t e, const Cell* keys) const {
        for (std::size_t k = 0; k < nk_; ++k) {
            if (!key_equal(keys_[e * nk_ + k], keys[k], decl_->key_types[k])) return false;
        }
        return true;
    }

    int append(const Cell* keys, std::uint64_t h) {
        int e = static_cast<int>(hashes_.size());
        keys_.insert(keys_.end(), keys, keys + nk_);
        hashes_.push_back(h);
        next_.push_back(-1);
        tail_.push_back(e);
        return e;
    }

    void place(int e) {
        ++heads_;
        if (heads_ * 10 > slots_.size() * 7) {
            ++bits_;
            slots_.assign(std::size_t{1} << bits_, -1);
            for (int h : head_list_) put(h);
        }
        head_list_.push_back(e);
        put(e);
    }

    void put(int e) {
        std::size_t mask = slots_.size() - 1;
        std::size_t s = hashing::slot_of(hashes_[static_cast<std::size_t>(e)], bits_);
        while (slots_[s] >= 0) s = (s + 1) & mask;
        slots_[s] = e;
    }

    const HashTableDecl* decl_;
    std::size_t nk_, np_ = 0, na_ = 0;
    int bits_ = 4;
    std::size_t heads_ = 0;
    std::vector<int> slots_;
    std::vector<int> head_list_;
    std::vector<Cell> keys_;
    std::vector<Cell> payload_;
    std::vector<AggState> aggs_;
    std::vector<std::uint64_t> hashes_;
    std::vector<int> next_;
    std::vector<int> tail_;
};

struct SortBuffer {
    std::size_t width = 0;
    std::vector<Cell> cells;
    std::size_t rows() const { return width ? cells.size() / width : row_count; }
    std::size_t row_count = 0; // zero-width buffers
};

struct InterpState : ExecState {
    std::vector<AggState> accs;
    std::vector<RowTable> tables;
    std::vector<SortBuffer> sorts;
    std::vector<std::int64_t> limit_counts;
    std::vector<Cell> out;
    std::size_t out_rows = 0;
};

int compare_for_sort(const Cell& a, const Cell& b, DataType t) {
    switch (t) {
    case DataType::Float64:
        if (float_less(a.f, b.f)) return -1;
        if (float_less(b.f, a.f)) return 1;
        return 0;
    case DataType::Text: {
        int c = a.s.compare(b.s);
        return c < 0 ? -1 : (c > 0 ? 1 : 0);
    }
    default: return a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
    }
}

class Interpreter : public KernelExecutor {
public:
    Interpreter(const KernelProgram& prog, std::vector<TablePtr> inputs) : prog_(prog), inputs_(std::move(inputs)) {
        if (inputs_.size() != prog_.inputs.size()) throw Error("program expects " + std::to_string(prog_.inputs.size()) + " inputs");
        for (std::size_t t = 0; t < prog_.inputs.size(); ++t) {
            std::vector<const Column*> cols;
            for (const auto& c : prog_.inputs[t].schema.columns()) {
                const Column& col = inputs_[t]->column(c.name);
                if (col.dtype() != c.dtype) throw Error("input column " + c.name + " has the wrong type");
                cols.push_back(&col);
            }
            columns_.push_back(std::move(cols));
        }
    }

    std::unique_ptr<ExecState> new_state() override {
        auto s = std::make_unique<InterpState>();
        s->accs.resize(prog_.accumulators.size());
        for (const auto& h : prog_.hash_tables) s->tables.emplace_back(h);
        for (const auto& d : prog_.sorts) {
            SortBuffer b;
            b.width = d.columns.size();
            s->sorts.push_back(b);
        }
        s->limit_counts.assign(prog_.limits.size(), 0);
        return s;
    }

    void seal(ExecState& g, int loop) override {
        const auto& l = prog_.loops[static_cast<std::size_t>(loop)];
        if (l.source != SourceKind::SortBuffer) return;
        auto& st = static_cast<InterpState&>(g);
        auto& buf = st.sorts[static_cast<std::size_t>(l.source_id)];
        const auto& decl = prog_.sorts[static_cast<std::size_t>(l.source_id)];
        if (buf.width == 0) return;
        std::vector<std::size_t> idx(buf.rows());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
            for (std::size_t k = 0; k < decl.key_columns.size(); ++k) {
                auto c = static_cast<std::size_t>(decl.key_columns[k]);
                const Cell& a = buf.cells[x * buf.width + c];
                const Cell& b = buf.cells[y * buf.width + c];
                bool asc = decl.ascending[k];
                if (a.null != b.null) return asc ? a.null : b.null;
                if (a.null) continue;
                int r = compare_for_sort(a, b, decl.columns[c].dtype);
                if (r != 0) return asc ? r < 0 : r > 0;
            }
            return false;
        });
        std::vector<Cell> sorted;
        sorted.reserve(buf.cells.size());
        for (auto i : idx) sorted.insert(sorted.end(), buf.cells.begin() + static_cast<std::ptrdiff_t>(i * buf.width),
                                         buf.cells.begin() + static_cast<std::ptrdiff_t>((i + 1) * buf.width));
        buf.cells = std::move(sorted);
    }

    std::uint64_t source_rows(const ExecState& g, int loop) override {
        const auto& l = prog_.loops[static_cast<std::size_t>(loop)];
        const auto& st = static_cast<const InterpState&>(g);
        switch (l.source) {
        case SourceKind::Table: return inputs_[static_cast<std::size_t>(l.source_id)]->row_count();
        case SourceKind::Empty: return 0;
        case SourceKind::GroupTable: return st.tables[static_cast<std::size_t>(l.source_id)].size();
        case SourceKind::SortBuffer: return st.sorts[static_cast<std::size_t>(l.source_id)].rows();
        }
        return 0;
    }

    void run_body(int loop, std::uint64_t begin, std::uint64_t end, ExecState& partial,
                  const ExecState& global) override {
        Frame f{static_cast<InterpState&>(partial), static_cast<const InterpState&>(global),
                std::vector<Cell>(static_cast<std::size_t>(prog_.value_count)), 0};
        const auto& body = prog_.loops[static_cast<std::size_t>(loop)].body;
        for (std::uint64_t r = begin; r < end; ++r) {
            f.row = static_cast<std::size_t>(r);
            exec(body, 0, f);
        }
    }

    void merge(ExecState& g, ExecState& p) override {
        auto& into = static_cast<InterpState&>(g);
        auto& from = static_cast<InterpState&>(p);
        for (std::size_t a = 0; a < into.accs.size(); ++a) agg_merge(prog_.accumulators[a], into.accs[a], from.accs[a]);
        for (std::size_t h = 0; h < into.tables.size(); ++h) {
            if (prog_.hash_tables[h].purpose == TablePurpose::GroupBy) into.tables[h].merge_from(from.tables[h]);
        }
        for (std::size_t s = 0; s < into.sorts.size(); ++s) {
            into.sorts[s].cells.insert(into.sorts[s].cells.end(), from.sorts[s].cells.begin(), from.sorts[s].cells.end());
        }
        into.out.insert(into.out.end(), from.out.begin(), from.out.end());
        into.out_rows += from.out_rows;
    }

    void epilogue(ExecState& g, int loop) override {
        auto& st = static_cast<InterpState&>(g);
        for (const auto& seg : prog_.loops[static_cast<std::size_t>(loop)].epilogue) {
            Frame f{st, st, std::vector<Cell>(static_cast<std::size_t>(prog_.value_count)), 0};
            exec(seg, 0, f);
        }
    }

    ColumnTable result(ExecState& g) override {
        auto& st = static_cast<InterpState&>(g);
        std::vector<Column> cols;
        const auto& schema = prog_.output;
        std::size_t w = schema.size();
        for (std::size_t c = 0; c < w; ++c) {
            Column col(schema[c].dtype, schema[c].nullable);
            col.reserve(st.out_rows);
            for (std::size_t r = 0; r < st.out_rows; ++r) {
                const Cell& v = st.out[r * w + c];
                if (v.null) {
                    col.append_null();
                    continue;
                }
                switch (schema[c].dtype) {
                case DataType::Float64: col.append_float(v.f); break;
                case DataType::Text: col.append_text(v.s); break;
                default: col.append_int(v.i); break;
                }
            }
            cols.push_back(std::move(col));
        }
        return ColumnTable(schema, std::move(cols), st.out_rows);
    }

    bool concurrent() const override { return false; }

private:
    struct Frame {
        InterpState& out;
        const InterpState& global;
        std::vector<Cell> vals;
        std::size_t row;
    };

    Cell load(int input, int column, std::size_t row) const {
        const Column& c = *columns_[static_cast<std::size_t>(input)][static_cast<std::size_t>(column)];
        Cell v;
        if (c.is_null(row)) return null_cell();
        switch (c.dtype()) {
        case DataType::Float64: v.f = c.float_at(row); break;
        case DataType::Text: v.s = c.text_at(row); break;
        default: v.i = c.int_at(row); break;
        }
        return v;
    }

    static Cell const_cell(const Stmt& s) {
        Cell v;
        if (is_null(s.value)) return null_cell();
        if (auto* i = std::get_if<std::int64_t>(&s.value)) {
            v.i = *i;
            v.f = static_cast<double>(*i);
        }
        if (auto* d = std::get_if<double>(&s.value)) v.f = *d;
        if (auto* b = std::get_if<bool>(&s.value)) v.i = *b;
        if (auto* t = std::get_if<std::string>(&s.value)) v.s = *t;
        return v;
    }

    static Cell arith(const Stmt& s, const Cell& a, const Cell& b) {
        if (a.null || b.null) return null_cell();
        Cell r;
        auto op = static_cast<ArithOp>(s.index);
        if (s.type == DataType::Float64) {
            switch (op) {
            case ArithOp::Add: r.f = a.f + b.f; break;
            case ArithOp::Sub: r.f = a.f - b.f; break;
            case ArithOp::Mul: r.f = a.f * b.f; break;
            case ArithOp::Div: r.f = a.f / b.f; break;
            }
            return r;
        }
        bool overflow = false;
        switch (op) {
        case ArithOp::Add: overflow = __builtin_add_overflow(a.i, b.i, &r.i); break;
        case ArithOp::Sub: overflow = __builtin_sub_overflow(a.i, b.i, &r.i); break;
        case ArithOp::Mul: overflow = __builtin_mul_overflow(a.i, b.i, &r.i); break;
        case ArithOp::Div: throw ExecutionError("internal: integer division");
        }
        if (overflow) {
            throw ExecutionError("integer overflow evaluating " + std::to_string(a.i) + " " +
                                 std::string(to_string(op)) + " " + std::to_string(b.i));
        }
        return r;
    }

    static bool compare(const Cell& a, const Cell& b, DataType t, CmpOp op) {
        if (a.null || b.null) return false;
        if (t == DataType::Float64) {
            switch (op) {
            case CmpOp::Eq: return a.f == b.f;
            case CmpOp::Ne: return a.f != b.f;
            case CmpOp::Lt: return a.f < b.f;
            case CmpOp::Le: return a.f <= b.f;
            case CmpOp::Gt: return a.f > b.f;
            case CmpOp::Ge: return a.f >= b.f;
            }
        }
        int c = 0;
        if (t == DataType::Text) {
            int r = a.s.compare(b.s);
            c = r < 0 ? -1 : (r > 0 ? 1 : 0);
        } else {
            c = a.i < b.i ? -1 : (a.i > b.i ? 1 : 0);
        }
        switch (op) {
        case CmpOp::Eq: return c == 0;
        case CmpOp::Ne: return c != 0;
        case CmpOp::Lt: return c < 0;
        case CmpOp::Le: return c <= 0;
        case CmpOp::Gt: return c > 0;
        case CmpOp::Ge: return c >= 0;
        }
        return false;
    }

    void exec(const StmtList& list, std::size_t pos, Frame& f) const {
        auto& v = f.vals;
        auto arg = [&](const Stmt& s, std::size_t i) -> const Cell& { return v[static_cast<std::size_t>(s.args[i])]; };
        for (std::size_t i = pos; i < list.size(); ++i) {
            const Stmt& s = list[i];
            Cell* res = s.result >= 0 ? &v[static_cast<std::size_t>(s.result)] : nullptr;
            switch (s.op) {
            case IrOp::Const: *res = const_cell(s); break;
            case IrOp::Load: *res = load(s.target, s.index, f.row); break;
            case IrOp::Cast: {
                const Cell& a = arg(s, 0);
                if (a.null) {
                    *res = null_cell();
                } else {
                    Cell c;
                    c.f = static_cast<double>(a.i);
                    *res = c;
                }
                break;
            }
            case IrOp::Arith: *res = arith(s, arg(s, 0), arg(s, 1)); break;
            case IrOp::Cmp: {
                Cell c;
                c.i = compare(arg(s, 0), arg(s, 1), operand_type(s), static_cast<CmpOp>(s.index));
                *res = c;
                break;
            }
            case IrOp::And: {
                Cell c;
                c.i = truthy(arg(s, 0)) && truthy(arg(s, 1));
                *res = c;
                break;
            }
            case IrOp::Or: {
                Cell c;
                c.i = truthy(arg(s, 0)) || truthy(arg(s, 1));
                *res = c;
                break;
            }
            case IrOp::Not: {
                Cell c;
                c.i = !truthy(arg(s, 0));
                *res = c;
                break;
            }
            case IrOp::StartsWith: {
                const Cell& a = arg(s, 0);
                const auto& p = std::get<std::string>(s.value);
                Cell c;
                c.i = !a.null && a.s.substr(0, p.size()) == p;
                *res = c;
                break;
            }
            case IrOp::Select: *res = truthy(arg(s, 0)) ? arg(s, 1) : arg(s, 2); break;
            case IrOp::Guard:
                if (!truthy(arg(s, 0))) return;
                break;
            case IrOp::HashInsert: {
                auto& t = f.out.tables[static_cast<std::size_t>(s.target)];
                std::size_t nk = prog_.hash_tables[static_cast<std::size_t>(s.target)].key_types.size();
                std::vector<Cell> row(s.args.size());
                for (std::size_t k = 0; k < s.args.size(); ++k) row[k] = arg(s, k);
                bool has_null = std::any_of(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(nk),
                                            [](const Cell& c) { return c.null; });
                if (!has_null) t.insert_join(row.data(), row.data() + nk);
                break;
            }
            case IrOp::HashProbe: {
                const auto& t = f.global.tables[static_cast<std::size_t>(s.target)];
                std::vector<Cell> keys(s.args.size());
                bool has_null = false;
                for (std::size_t k = 0; k < s.args.size(); ++k) {
                    keys[k] = arg(s, k);
                    has_null = has_null || keys[k].null;
                }
                int head = has_null ? -1 : t.find(keys.data(), t.hash(keys.data()));
                auto kind = static_cast<JoinKind>(s.index);
                switch (kind) {
                case JoinKind::Inner:
                case JoinKind::LeftOuter:
                    if (head < 0) {
                        if (kind == JoinKind::LeftOuter) {
                            if (res) *res = Cell{-1, 0, {}, false};
                            exec(list, i + 1, f);
                        }
                        return;
                    }
                    for (int m = head; m >= 0; m = t.next(m)) {
                        if (res) *res = Cell{m, 0, {}, false};
                        exec(list, i + 1, f);
                    }
                    return;
                case JoinKind::LeftSemi:
                    if (head < 0) return;
                    if (res) *res = Cell{head, 0, {}, false};
                    break;
                case JoinKind::LeftAnti:
                    if (head >= 0) return;
                    if (res) *res = Cell{-1, 0, {}, false};
                    break;
                }
                break;
            }
            case IrOp::ProbeRead: {
                std::int64_t m = arg(s, 0).i;
                const auto& t = f.global.tables[static_cast<std::size_t>(s.target)];
                *res = m < 0 ? null_cell() : t.payload(static_cast<std::size_t>(m), static_cast<std::size_t>(s.index));
                break;
            }
            case IrOp::GroupUpsert: {
                auto& t = f.out.tables[static_cast<std::size_t>(s.target)];
                std::vector<Cell> keys(s.args.size());
                for (std::size_t k = 0; k < s.args.size(); ++k) keys[k] = arg(s, k);
                Cell c;
                c.i = t.upsert_group(keys.data());
                *res = c;
                break;
            }
            case IrOp::GroupUpdate: {
                auto& t = f.out.tables[static_cast<std::size_t>(s.target)];
                const auto& d = prog_.hash_tables[static_cast<std::size_t>(s.target)].aggs[static_cast<std::size_t>(s.index)];
                agg_update(d, t.agg(static_cast<std::size_t>(arg(s, 0).i), static_cast<std::size_t>(s.index)),
                           s.args.size() > 1 ? &arg(s, 1) : nullptr);
                break;
            }
            case IrOp::AggUpdate:
                agg_update(prog_.accumulators[static_cast<std::size_t>(s.target)],
                           f.out.accs[static_cast<std::size_t>(s.target)], s.args.empty() ? nullptr : &arg(s, 0));
                break;
            case IrOp::AccRead:
                *res = agg_read(prog_.accumulators[static_cast<std::size_t>(s.target)],
                                f.global.accs[static_cast<std::size_t>(s.target)]);
                break;
            case IrOp::GroupKeyRead:
                *res = f.global.tables[static_cast<std::size_t>(s.target)].key(f.row, static_cast<std::size_t>(s.index));
                break;
            case IrOp::GroupAggRead: {
                const auto& d = prog_.hash_tables[static_cast<std::size_t>(s.target)].aggs[static_cast<std::size_t>(s.index)];
                *res = agg_read(d, f.global.tables[static_cast<std::size_t>(s.target)].agg(f.row, static_cast<std::size_t>(s.index)));
                break;
            }
            case IrOp::SortAppend: {
                auto& b = f.out.sorts[static_cast<std::size_t>(s.target)];
                for (std::size_t k = 0; k < s.args.size(); ++k) b.cells.push_back(arg(s, k));
                if (b.width == 0) ++b.row_count;
                break;
            }
            case IrOp::BufferRead: {
                const auto& b = f.global.sorts[static_cast<std::size_t>(s.target)];
                *res = b.cells[f.row * b.width + static_cast<std::size_t>(s.index)];
                break;
            }
            case IrOp::LimitGuard: {
                auto& n = f.out.limit_counts[static_cast<std::size_t>(s.target)];
                if (n >= prog_.limits[static_cast<std::size_t>(s.target)]) return;
                ++n;
                break;
            }
            case IrOp::Emit:
                for (std::size_t k = 0; k < s.args.size(); ++k) f.out.out.push_back(arg(s, k));
                ++f.out.out_rows;
                break;
            }
        }
    }

    static bool truthy(const Cell& c) { return !c.null && c.i != 0; }

    DataType operand_type(const Stmt& s) const { return value_types_.at(static_cast<std::size_t>(s.args[0])); }

public:
    void index_types() {
        value_types_.assign(static_cast<std::size_t>(prog_.value_count), DataType::Bool);
        auto scan = [&](const StmtList& l) {
            for (const auto& s : l) {
                if (s.result >= 0) value_types_[static_cast<std::size_t>(s.result)] = s.type;
            }
        };
        for (const auto& loop : prog_.loops) {
            scan(loop.body);
            for (const auto& seg : loop.epilogue) scan(seg);
        }
    }

private:
    KernelProgram prog_;
    std::vector<TablePtr> inputs_;
    std::vector<std::vector<const Column*>> columns_;
    std::vector<DataType> value_types_;
};

} // namespace

std::unique_ptr<KernelExecutor> make_interpreter(const KernelProgram& prog, std::vector<TablePtr> inputs) {
    auto in = std::make_unique<Interpreter>(prog, std::move(inputs));
    in->index_types();
    return in;
}

ColumnTable ir_interpret(const KernelProgram& prog, const std::vector<TablePtr>& inputs) {
    auto in = make_interpreter(prog, inputs);
    return drive(*in, prog, RunConfig{});
}

} // namespace flarelite
