#include "flarelite/error.hpp"
#include "flarelite/native.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

namespace flarelite {

namespace {

const char* const kPrelude = R"FLK(#include <math.h>
#include <stdint.h>
#include <stdlib.h>
#include <string.h>

typedef struct { uint64_t base; uint64_t len; } flk_slot;
typedef struct { uint32_t version; uint32_t slot_count; flk_slot s[]; } flk_desc;
typedef struct { const char* p; int64_t len; } flk_str;
typedef struct { int64_t i; double f; const char* s; int64_t len; int64_t null; } flk_cell;
typedef struct { int64_t n; int64_t i; double f; } flk_agg;
typedef struct { int fn; int type; int has_arg; } flk_aggdecl;
typedef struct { int nk; int np; int na; const int* ktypes; const flk_aggdecl* aggs; } flk_tabledecl;
typedef struct { int w; int nkeys; const int* cols; const int* types; const int* asc; } flk_sortdecl;
typedef struct { const flk_cell* cells; uint64_t rows; } flk_result;
typedef struct {
    uint32_t abi, loops, inputs, outputs, slots, reserved;
    const int32_t* output_types;
    const int32_t* output_nullable;
} flk_meta;

enum { FLK_SUM = 0, FLK_COUNT = 1, FLK_AVG = 2, FLK_MIN = 3, FLK_MAX = 4 };
enum { FLK_INT = 0, FLK_FLOAT = 1, FLK_DATE = 2, FLK_TEXT = 3, FLK_BOOL = 4 };

typedef struct {
    const flk_tabledecl* d;
    int64_t n, cap;
    flk_cell* keys;
    flk_cell* pay;
    flk_agg* ag;
    uint64_t* hash;
    int64_t* next;
    int64_t* tail; /* last chain entry for heads, -1 otherwise */
    int64_t* slots;
    int bits;
    int64_t heads;
} flk_table;

typedef struct { int w; int64_t rows, cap; flk_cell* cells; } flk_buf;

static void* flk_grow(void* p, size_t bytes) {
    void* q = realloc(p, bytes ? bytes : 1);
    if (!q) abort();
    return q;
}

static inline flk_cell flk_ci(int64_t v, int null) { flk_cell c = {v, 0.0, 0, 0, null}; return c; }
static inline flk_cell flk_cf(double v, int null) { flk_cell c = {0, v, 0, 0, null}; return c; }
static inline flk_cell flk_cs(flk_str v, int null) { flk_cell c = {0, 0.0, v.p, v.len, null}; return c; }
static inline flk_str flk_s(const flk_cell* c) { flk_str s = {c->s, c->len}; return s; }

static inline int flk_str_eq(flk_str a, flk_str b) { return a.len == b.len && (a.len == 0 || memcmp(a.p, b.p, (size_t)a.len) == 0); }
static inline int flk_str_cmp(flk_str a, flk_str b) {
    int64_t n = a.len < b.len ? a.len : b.len;
    int c = n ? memcmp(a.p, b.p, (size_t)n) : 0;
    if (c) return c < 0 ? -1 : 1;
    return a.len < b.len ? -1 : (a.len > b.len ? 1 : 0);
}
static inline int flk_starts(flk_str a, const char* p, int64_t n) { return a.len >= n && (n == 0 || memcmp(a.p, p, (size_t)n) == 0); }
/* NaN sorts above every other value. */
static inline int flk_fless(double a, double b) { return !isnan(a) && (isnan(b) || a < b); }

static inline uint64_t flk_fbits(double d) {
    uint64_t b;
    if (d == 0.0) d = 0.0;
    if (isnan(d)) return 0x7ff8000000000000ULL;
    memcpy(&b, &d, sizeof b);
    return b;
}
static inline uint64_t flk_fnv(const char* p, int64_t n) {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (int64_t i = 0; i < n; ++i) { h ^= (unsigned char)p[i]; h *= 0x100000001b3ULL; }
    return h;
}
static inline uint64_t flk_hash_cell(const flk_cell* c, int t) {
    if (c->null) return 0x2545F4914F6CDD1DULL;
    if (t == FLK_FLOAT) return flk_fbits(c->f);
    if (t == FLK_TEXT) return flk_fnv(c->s, c->len);
    return (uint64_t)c->i;
}
static inline uint64_t flk_combine(uint64_t h, uint64_t u) { h = (h ^ u) * 0x9E3779B97F4A7C15ULL; return h ^ (h >> 29); }
static inline int flk_cell_eq(const flk_cell* a, const flk_cell* b, int t) {
    if (a->null || b->null) return a->null && b->null;
    if (t == FLK_FLOAT) return flk_fbits(a->f) == flk_fbits(b->f);
    if (t == FLK_TEXT) return flk_str_eq(flk_s(a), flk_s(b));
    return a->i == b->i;
}

static void flk_table_init(flk_table* t, const flk_tabledecl* d) {
    memset(t, 0, sizeof *t);
    t->d = d;
    t->bits = 4;
    t->slots = (int64_t*)flk_grow(0, sizeof(int64_t) << t->bits);
    memset(t->slots, 0xff, sizeof(int64_t) << t->bits);
}
static void flk_table_free(flk_table* t) {
    free(t->keys); free(t->pay); free(t->ag); free(t->hash); free(t->next); free(t->tail); free(t->slots);
}
static inline uint64_t flk_table_hash(const flk_table* t, const flk_cell* k) {
    uint64_t h = 0;
    for (int i = 0; i < t->d->nk; ++i) h = flk_combine(h, flk_hash_cell(&k[i], t->d->ktypes[i]));
    return h;
}
static inline size_t flk_slot_of(uint64_t h, int bits) { return (size_t)((h * 0x9E3779B97F4A7C15ULL) >> (64 - bits)); }
static inline int64_t flk_table_find(const flk_table* t, const flk_cell* k, uint64_t h) {
    size_t mask = ((size_t)1 << t->bits) - 1;
    for (size_t s = flk_slot_of(h, t->bits);; s = (s + 1) & mask) {
        int64_t e = t->slots[s];
        if (e < 0) return -1;
        if (t->hash[e] == h) {
            const flk_cell* ek = &t->keys[e * t->d->nk];
            int eq = 1;
            for (int i = 0; eq && i < t->d->nk; ++i) eq = flk_cell_eq(&ek[i], &k[i], t->d->ktypes[i]);
            if (eq) return e;
        }
    }
}
static void flk_table_put(flk_table* t, int64_t e) {
    size_t mask = ((size_t)1 << t->bits) - 1;
    size_t s = flk_slot_of(t->hash[e], t->bits);
    while (t->slots[s] >= 0) s = (s + 1) & mask;
    t->slots[s] = e;
}
static void flk_table_place(flk_table* t, int64_t e) {
    t->heads++;
    if (t->heads * 10 > ((int64_t)7 << t->bits)) {
        t->bits++;
        t->slots = (int64_t*)flk_grow(t->slots, sizeof(int64_t) << t->bits);
        memset(t->slots, 0xff, sizeof(int64_t) << t->bits);
        for (int64_t i = 0; i < t->n; ++i) if (i != e && t->tail[i] >= 0) flk_table_put(t, i);
    }
    flk_table_put(t, e);
}
static int64_t flk_table_append(flk_table* t, const flk_cell* k, uint64_t h) {
    const flk_tabledecl* d = t->d;
    if (t->n == t->cap) {
        t->cap = t->cap ? t->cap * 2 : 16;
        t->keys = (flk_cell*)flk_grow(t->keys, sizeof(flk_cell) * (size_t)(t->cap * d->nk));
        t->pay = (flk_cell*)flk_grow(t->pay, sizeof(flk_cell) * (size_t)(t->cap * d->np));
        t->ag = (flk_agg*)flk_grow(t->ag, sizeof(flk_agg) * (size_t)(t->cap * d->na));
        t->hash = (uint64_t*)flk_grow(t->hash, sizeof(uint64_t) * (size_t)t->cap);
        t->next = (int64_t*)flk_grow(t->next, sizeof(int64_t) * (size_t)t->cap);
        t->tail = (int64_t*)flk_grow(t->tail, sizeof(int64_t) * (size_t)t->cap);
    }
    int64_t e = t->n++;
    memcpy(&t->keys[e * d->nk], k, sizeof(flk_cell) * (size_t)d->nk);
    if (d->na) memset(&t->ag[e * d->na], 0, sizeof(flk_agg) * (size_t)d->na);
    t->hash[e] = h;
    t->next[e] = -1;
    t->tail[e] = e;
    return e;
}
/* Join build: rows with a null key never match and are dropped. */
static void flk_join_insert(flk_table* t, const flk_cell* row) {
    const flk_tabledecl* d = t->d;
    for (int i = 0; i < d->nk; ++i) if (row[i].null) return;
    uint64_t h = flk_table_hash(t, row);
    int64_t head = flk_table_find(t, row, h);
    int64_t e = flk_table_append(t, row, h);
    if (d->np) memcpy(&t->pay[e * d->np], row + d->nk, sizeof(flk_cell) * (size_t)d->np);
    if (head >= 0) {
        t->tail[e] = -1;
        t->next[t->tail[head]] = e;
        t->tail[head] = e;
    } else {
        flk_table_place(t, e);
    }
}
static inline int64_t flk_join_probe(const flk_table* t, const flk_cell* k) {
    for (int i = 0; i < t->d->nk; ++i) if (k[i].null) return -1;
    if (t->n == 0) return -1;
    return flk_table_find(t, k, flk_table_hash(t, k));
}
static inline int64_t flk_group_upsert(flk_table* t, const flk_cell* k) {
    uint64_t h = flk_table_hash(t, k);
    int64_t e = flk_table_find(t, k, h);
    if (e >= 0) return e;
    e = flk_table_append(t, k, h);
    flk_table_place(t, e);
    return e;
}

static inline flk_cell* flk_buf_push(flk_buf* b) {
    if (b->rows == b->cap) {
        b->cap = b->cap ? b->cap * 2 : 64;
        b->cells = (flk_cell*)flk_grow(b->cells, sizeof(flk_cell) * (size_t)(b->cap * b->w));
    }
    return &b->cells[b->rows++ * b->w];
}
static void flk_buf_append(flk_buf* into, const flk_buf* from) {
    if (!from->rows) return;
    if (into->rows + from->rows > into->cap) {
        into->cap = into->rows + from->rows;
        into->cells = (flk_cell*)flk_grow(into->cells, sizeof(flk_cell) * (size_t)(into->cap * into->w));
    }
    memcpy(&into->cells[into->rows * into->w], from->cells, sizeof(flk_cell) * (size_t)(from->rows * from->w));
    into->rows += from->rows;
}

static int flk_sort_cmp(const flk_sortdecl* d, const flk_cell* a, const flk_cell* b) {
    for (int k = 0; k < d->nkeys; ++k) {
        const flk_cell* x = &a[d->cols[k]];
        const flk_cell* y = &b[d->cols[k]];
        int asc = d->asc[k], c = 0;
        if (x->null || y->null) {
            if (x->null && y->null) continue;
            c = x->null ? -1 : 1; /* nulls first ascending, last descending */
            return asc ? c : -c;
        }
        if (d->types[k] == FLK_FLOAT) c = flk_fless(x->f, y->f) ? -1 : (flk_fless(y->f, x->f) ? 1 : 0);
        else if (d->types[k] == FLK_TEXT) c = flk_str_cmp(flk_s(x), flk_s(y));
        else c = x->i < y->i ? -1 : (x->i > y->i ? 1 : 0);
        if (c) return asc ? c : -c;
    }
    return 0;
}
/* Stable merge sort of row indices. */
static void flk_sort(flk_buf* b, const flk_sortdecl* d) {
    int64_t n = b->rows, w = b->w;
    if (n < 2) return;
    int64_t* idx = (int64_t*)flk_grow(0, sizeof(int64_t) * (size_t)n);
    int64_t* tmp = (int64_t*)flk_grow(0, sizeof(int64_t) * (size_t)n);
    for (int64_t i = 0; i < n; ++i) idx[i] = i;
    for (int64_t width = 1; width < n; width *= 2) {
        for (int64_t lo = 0; lo < n; lo += 2 * width) {
            int64_t mid = lo + width < n ? lo + width : n, hi = lo + 2 * width < n ? lo + 2 * width : n;
            int64_t i = lo, j = mid, o = lo;
            while (i < mid && j < hi) {
                if (flk_sort_cmp(d, &b->cells[idx[j] * w], &b->cells[idx[i] * w]) < 0) tmp[o++] = idx[j++];
                else tmp[o++] = idx[i++];
            }
            while (i < mid) tmp[o++] = idx[i++];
            while (j < hi) tmp[o++] = idx[j++];
        }
        int64_t* s = idx; idx = tmp; tmp = s;
    }
    flk_cell* out = (flk_cell*)flk_grow(0, sizeof(flk_cell) * (size_t)(n * w));
    for (int64_t i = 0; i < n; ++i) memcpy(&out[i * w], &b->cells[idx[i] * w], sizeof(flk_cell) * (size_t)w);
    free(b->cells);
    b->cells = out;
    b->cap = n;
    free(idx);
    free(tmp);
}

/* Returns nonzero on Int64 overflow. */
static int flk_agg_merge(const flk_aggdecl* d, flk_agg* into, const flk_agg* from) {
    if (from->n == 0) return 0;
    if (!d->has_arg || d->fn == FLK_COUNT) { into->n += from->n; return 0; }
    if (d->fn == FLK_SUM) {
        if (d->type == FLK_FLOAT) into->f += from->f;
        else if (__builtin_add_overflow(into->i, from->i, &into->i)) return 1;
    } else if (into->n == 0) {
        into->i = from->i;
        into->f = from->f;
    } else if (d->type == FLK_FLOAT) {
        if (d->fn == FLK_MIN ? flk_fless(from->f, into->f) : flk_fless(into->f, from->f)) into->f = from->f;
    } else {
        if (d->fn == FLK_MIN ? from->i < into->i : from->i > into->i) into->i = from->i;
    }
    into->n += from->n;
    return 0;
}
static int flk_table_merge(flk_table* into, const flk_table* from) {
    const flk_tabledecl* d = into->d;
    for (int64_t e = 0; e < from->n; ++e) {
        int64_t g = flk_group_upsert(into, &from->keys[e * d->nk]);
        for (int a = 0; a < d->na; ++a)
            if (flk_agg_merge(&d->aggs[a], &into->ag[g * d->na + a], &from->ag[e * d->na + a])) return 1;
    }
    return 0;
}

#define FLK_FAIL(st, text) do { (st)->err = 1; strncpy((st)->msg, (text), sizeof (st)->msg - 1); return 1; } while (0)
)FLK";

std::string c_type(DataType t) {
    switch (t) {
    case DataType::Float64: return "double";
    case DataType::Text: return "flk_str";
    case DataType::Bool: return "int";
    default: return "int64_t";
    }
}

int type_code(DataType t) { return static_cast<int>(t); }

std::string c_double(double d) {
    if (std::isnan(d)) return "NAN";
    if (std::isinf(d)) return d > 0 ? "INFINITY" : "(-INFINITY)";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%a", d);
    return buf;
}

std::string c_int(std::int64_t v) {
    if (v == INT64_MIN) return "(-9223372036854775807LL - 1)";
    return std::to_string(v) + "LL";
}

std::string c_string(const std::string& s) {
    std::string out = "\"";
    for (unsigned char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
            out += static_cast<char>(c);
        } else if (c >= 0x20 && c < 0x7f && c != '?') {
            out += static_cast<char>(c);
        } else {
            char buf[8];
            std::snprintf(buf, sizeof buf, "\\%03o", c);
            out += buf;
        }
    }
    return out + "\"";
}

const char* c_cmp(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "==";
    case CmpOp::Ne: return "!=";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "==";
}

struct SlotLayout {
    std::vector<int> row_slot;                 // per input
    std::vector<std::vector<int>> data, arena, nulls; // per input, per column (-1 if absent)
    int count = 0;
};

SlotLayout layout_of(const std::vector<InputDecl>& inputs) {
    SlotLayout l;
    for (const auto& in : inputs) {
        l.row_slot.push_back(l.count++);
        std::vector<int> d, a, n;
        for (const auto& c : in.schema.columns()) {
            d.push_back(l.count++);
            a.push_back(c.dtype == DataType::Text ? l.count++ : -1);
            n.push_back(c.nullable ? l.count++ : -1);
        }
        l.data.push_back(std::move(d));
        l.arena.push_back(std::move(a));
        l.nulls.push_back(std::move(n));
    }
    return l;
}

class Emitter {
public:
    explicit Emitter(const KernelProgram& p) : prog_(p), slots_(layout_of(p.inputs)) {
        auto scan = [&](const StmtList& l) {
            for (const auto& s : l) {
                if (s.result >= 0) info_[s.result] = {s.type, s.nullable};
            }
        };
        for (const auto& loop : prog_.loops) {
            scan(loop.body);
            for (const auto& seg : loop.epilogue) scan(seg);
        }
    }

    std::string run() {
        out_ = kPrelude;
        declarations();
        for (const auto& loop : prog_.loops) {
            body_function(loop);
            for (std::size_t e = 0; e < loop.epilogue.size(); ++e) epilogue_function(loop, e);
        }
        dispatch();
        return out_;
    }

private:
    struct ValueInfo {
        DataType type;
        bool nullable;
    };

    static std::size_t at_least_one(std::size_t n) { return n ? n : 1; }

    void line(const std::string& s) { out_ += std::string(static_cast<std::size_t>(indent_) * 4, ' ') + s + "\n"; }

    std::string v(ValueId id) const { return "v" + std::to_string(id); }
    std::string n(ValueId id) const { return info_.at(id).nullable ? "n" + std::to_string(id) : "0"; }
    DataType type(ValueId id) const { return info_.at(id).type; }
    std::string truth(ValueId id) const {
        return info_.at(id).nullable ? "(!n" + std::to_string(id) + " && " + v(id) + ")" : v(id);
    }
    std::string cell(ValueId id) const {
        switch (type(id)) {
        case DataType::Float64: return "flk_cf(" + v(id) + ", " + n(id) + ")";
        case DataType::Text: return "flk_cs(" + v(id) + ", " + n(id) + ")";
        default: return "flk_ci(" + v(id) + ", " + n(id) + ")";
        }
    }
    /// Declares `result` from a cell expression (pointer to flk_cell).
    void from_cell(const Stmt& s, const std::string& ptr, const std::string& extra_null = "") {
        std::string c = "c" + std::to_string(s.result);
        line("const flk_cell* " + c + " = " + ptr + ";");
        std::string value;
        switch (s.type) {
        case DataType::Float64: value = c + "->f"; break;
        case DataType::Text: value = "flk_s(" + c + ")"; break;
        default: value = c + "->i"; break;
        }
        line(c_type(s.type) + " " + v(s.result) + " = " + value + ";");
        if (s.nullable) line("int n" + std::to_string(s.result) + " = " + extra_null + c + "->null != 0;");
    }

    void declarations() {
        const auto& p = prog_;
        out_ += "\n/* program */\n";
        out_ += "#define FLK_NACC " + std::to_string(at_least_one(p.accumulators.size())) + "\n";
        out_ += "#define FLK_NTAB " + std::to_string(at_least_one(p.hash_tables.size())) + "\n";
        out_ += "#define FLK_NSORT " + std::to_string(at_least_one(p.sorts.size())) + "\n";
        out_ += "#define FLK_NLIM " + std::to_string(at_least_one(p.limits.size())) + "\n";
        out_ += "#define FLK_NOUT " + std::to_string(p.output.size()) + "\n";
        out_ += "#define FLK_NSLOTS " + std::to_string(slots_.count) + "\n\n";
        auto aggdecl = [](const AccDecl& a) {
            return "{" + std::to_string(static_cast<int>(a.fn)) + ", " + std::to_string(type_code(a.type)) + ", " +
                   std::to_string(a.has_arg ? 1 : 0) + "}";
        };
        std::string accs;
        for (const auto& a : p.accumulators) accs += (accs.empty() ? "" : ", ") + aggdecl(a);
        out_ += "static const flk_aggdecl flk_accdecls[FLK_NACC] = {" + (accs.empty() ? "{0, 0, 0}" : accs) + "};\n";
        std::string tabs;
        for (std::size_t h = 0; h < p.hash_tables.size(); ++h) {
            const auto& t = p.hash_tables[h];
            std::string keys, aggs;
            for (auto k : t.key_types) keys += (keys.empty() ? "" : ", ") + std::to_string(type_code(k));
            for (const auto& a : t.aggs) aggs += (aggs.empty() ? "" : ", ") + aggdecl(a);
            out_ += "static const int flk_h" + std::to_string(h) + "_keys[] = {" + (keys.empty() ? "0" : keys) + "};\n";
            out_ += "static const flk_aggdecl flk_h" + std::to_string(h) + "_aggs[] = {" +
                    (aggs.empty() ? "{0, 0, 0}" : aggs) + "};\n";
            std::size_t np = t.purpose == TablePurpose::JoinBuild ? t.payload_types.size() : 0;
            tabs += (tabs.empty() ? "" : ", ") + std::string("{") + std::to_string(t.key_types.size()) + ", " +
                    std::to_string(np) + ", " + std::to_string(t.aggs.size()) + ", flk_h" + std::to_string(h) +
                    "_keys, flk_h" + std::to_string(h) + "_aggs}";
        }
        out_ += "static const flk_tabledecl flk_tabdecls[FLK_NTAB] = {" + (tabs.empty() ? "{0, 0, 0, 0, 0}" : tabs) + "};\n";
        std::string sorts;
        for (std::size_t s = 0; s < p.sorts.size(); ++s) {
            const auto& d = p.sorts[s];
            std::string cols, types, asc;
            for (std::size_t k = 0; k < d.key_columns.size(); ++k) {
                cols += (k ? ", " : "") + std::to_string(d.key_columns[k]);
                types += (k ? ", " : "") + std::to_string(type_code(d.columns[static_cast<std::size_t>(d.key_columns[k])].dtype));
                asc += (k ? ", " : "") + std::string(d.ascending[k] ? "1" : "0");
            }
            std::string id = std::to_string(s);
            out_ += "static const int flk_s" + id + "_cols[] = {" + (cols.empty() ? "0" : cols) + "};\n";
            out_ += "static const int flk_s" + id + "_types[] = {" + (types.empty() ? "0" : types) + "};\n";
            out_ += "static const int flk_s" + id + "_asc[] = {" + (asc.empty() ? "0" : asc) + "};\n";
            sorts += (sorts.empty() ? "" : ", ") + std::string("{") + std::to_string(d.columns.size()) + ", " +
                     std::to_string(d.key_columns.size()) + ", flk_s" + id + "_cols, flk_s" + id + "_types, flk_s" + id + "_asc}";
        }
        out_ += "static const flk_sortdecl flk_sortdecls[FLK_NSORT] = {" + (sorts.empty() ? "{0, 0, 0, 0, 0}" : sorts) + "};\n";
        std::string lims;
        for (auto l : p.limits) lims += (lims.empty() ? "" : ", ") + c_int(l);
        out_ += "static const int64_t flk_limits[FLK_NLIM] = {" + (lims.empty() ? "0" : lims) + "};\n";
        std::string ot, on;
        for (const auto& c : p.output.columns()) {
            ot += (ot.empty() ? "" : ", ") + std::to_string(type_code(c.dtype));
            on += (on.empty() ? "" : ", ") + std::string(c.nullable ? "1" : "0");
        }
        out_ += "static const int32_t flk_out_types[] = {" + (ot.empty() ? "0" : ot) + "};\n";
        out_ += "static const int32_t flk_out_nullable[] = {" + (on.empty() ? "0" : on) + "};\n\n";
        out_ += "typedef struct {\n    flk_agg acc[FLK_NACC];\n    flk_table tab[FLK_NTAB];\n    flk_buf sort[FLK_NSORT];\n"
                "    int64_t lim[FLK_NLIM];\n    flk_buf out;\n    int err;\n    char msg[256];\n} flk_state;\n";
    }

    void column_pointers(const StmtList& list) {
        std::set<std::pair<int, int>> used;
        for (const auto& s : list) {
            if (s.op == IrOp::Load) used.insert({s.target, s.index});
        }
        for (auto [t, c] : used) {
            auto ti = static_cast<std::size_t>(t);
            auto ci = static_cast<std::size_t>(c);
            std::string base = "t" + std::to_string(t) + "c" + std::to_string(c);
            DataType dt = prog_.inputs[ti].schema[ci].dtype;
            std::string slot = "d->s[" + std::to_string(slots_.data[ti][ci]) + "].base";
            if (dt == DataType::Text) {
                line("const uint64_t* " + base + " = (const uint64_t*)(uintptr_t)" + slot + ";");
                line("const char* " + base + "a = (const char*)(uintptr_t)d->s[" + std::to_string(slots_.arena[ti][ci]) + "].base;");
            } else {
                line("const " + c_type(dt) + "* " + base + " = (const " + c_type(dt) + "*)(uintptr_t)" + slot + ";");
            }
            if (slots_.nulls[ti][ci] >= 0) {
                line("const uint8_t* " + base + "n = (const uint8_t*)(uintptr_t)d->s[" +
                     std::to_string(slots_.nulls[ti][ci]) + "].base;");
            }
        }
    }

    void body_function(const KernelLoop& loop) {
        std::string id = std::to_string(loop.id);
        out_ += "\nstatic int flk_loop_" + id +
                "(const flk_desc* d, flk_state* st, const flk_state* g, uint64_t begin, uint64_t end) {\n";
        indent_ = 1;
        line("(void)d; (void)g;");
        column_pointers(loop.body);
        line("for (uint64_t row = begin; row < end; ++row) {");
        indent_ = 2;
        statements(loop.body);
        indent_ = 1;
        line("}");
        line("return 0;");
        out_ += "}\n";
    }

    void epilogue_function(const KernelLoop& loop, std::size_t seg) {
        out_ += "\nstatic int flk_epi_" + std::to_string(loop.id) + "_" + std::to_string(seg) +
                "(const flk_desc* d, flk_state* st, const flk_state* g) {\n";
        indent_ = 1;
        line("(void)d; (void)g;");
        line("do {");
        indent_ = 2;
        statements(loop.epilogue[seg]);
        indent_ = 1;
        line("} while (0);");
        line("return 0;");
        out_ += "}\n";
    }

    void statements(const StmtList& list) {
        int opened = 0;
        for (const auto& s : list) opened += statement(s);
        for (int i = 0; i < opened; ++i) {
            --indent_;
            line("}");
        }
    }

    std::string cell_array(const std::string& name, const std::vector<ValueId>& args) {
        std::string init;
        for (auto a : args) init += (init.empty() ? "" : ", ") + cell(a);
        line("flk_cell " + name + "[" + std::to_string(at_least_one(args.size())) + "] = {" +
             (init.empty() ? "{0, 0.0, 0, 0, 0}" : init) + "};");
        return name;
    }

    void declare(const Stmt& s, const std::string& value, const std::string& null_expr = "") {
        line(c_type(s.type) + " " + v(s.result) + " = " + value + ";");
        if (s.nullable) line("int n" + std::to_string(s.result) + " = " + (null_expr.empty() ? "0" : null_expr) + ";");
    }

    void agg_update(const AccDecl& d, const std::string& acc, const Stmt& s, const ValueId* arg) {
        if (!d.has_arg) {
            line(acc + "->n++;");
            return;
        }
        std::string x = v(*arg);
        bool guarded = info_.at(*arg).nullable;
        if (guarded) {
            line("if (!" + n(*arg) + ") {");
            ++indent_;
        }
        bool is_float = d.type == DataType::Float64;
        switch (d.fn) {
        case AggFn::Count: break;
        case AggFn::Sum:
            if (is_float) {
                line(acc + "->f += " + x + ";");
            } else {
                line("if (__builtin_add_overflow(" + acc + "->i, " + x + ", &" + acc + "->i)) FLK_FAIL(st, \"integer overflow in SUM\");");
            }
            break;
        case AggFn::Min:
        case AggFn::Max: {
            std::string better;
            if (is_float) {
                better = d.fn == AggFn::Min ? "flk_fless(" + x + ", " + acc + "->f)" : "flk_fless(" + acc + "->f, " + x + ")";
            } else {
                better = x + (d.fn == AggFn::Min ? " < " : " > ") + acc + "->i";
            }
            line("if (" + acc + "->n == 0 || " + better + ") " + acc + (is_float ? "->f = " : "->i = ") + x + ";");
            break;
        }
        case AggFn::Avg: throw Error("internal: AVG must be rewritten before code generation");
        }
        line(acc + "->n++;");
        if (guarded) {
            --indent_;
            line("}");
        }
        (void)s;
    }

    void agg_read(const Stmt& s, const AccDecl& d, const std::string& acc) {
        if (d.fn == AggFn::Count) {
            declare(s, acc + ".n");
            return;
        }
        std::string value = d.type == DataType::Float64 ? acc + ".f" : acc + ".i";
        declare(s, value, acc + ".n == 0");
    }

    /// Emits one statement; returns 1 when it opened a block closed at the end of the list.
    int statement(const Stmt& s) {
        const auto& a = s.args;
        std::string r = s.result >= 0 ? std::to_string(s.result) : "";
        switch (s.op) {
        case IrOp::Const: {
            if (is_null(s.value)) {
                line(c_type(s.type) + " " + v(s.result) + (s.type == DataType::Text ? " = {0, 0};" : " = 0;"));
                if (s.nullable) line("int n" + r + " = 1;");
                return 0;
            }
            std::string value;
            if (auto* i = std::get_if<std::int64_t>(&s.value)) {
                value = s.type == DataType::Float64 ? c_double(static_cast<double>(*i)) : c_int(*i);
            } else if (auto* f = std::get_if<double>(&s.value)) {
                value = c_double(*f);
            } else if (auto* b = std::get_if<bool>(&s.value)) {
                value = *b ? "1" : "0";
            } else {
                const auto& t = std::get<std::string>(s.value);
                value = "{" + c_string(t) + ", " + std::to_string(t.size()) + "}";
            }
            line("const " + c_type(s.type) + " " + v(s.result) + " = " + value + ";");
            if (s.nullable) line("const int n" + r + " = 0;");
            return 0;
        }
        case IrOp::Load: {
            auto ti = static_cast<std::size_t>(s.target);
            auto ci = static_cast<std::size_t>(s.index);
            std::string base = "t" + std::to_string(s.target) + "c" + std::to_string(s.index);
            if (s.type == DataType::Text) {
                line("flk_str " + v(s.result) + " = {" + base + "a + " + base + "[row], (int64_t)(" + base + "[row + 1] - " +
                     base + "[row])};");
            } else {
                line(c_type(s.type) + " " + v(s.result) + " = " + base + "[row];");
            }
            if (s.nullable) {
                if (slots_.nulls[ti][ci] >= 0) {
                    line("int n" + r + " = (" + base + "n[row >> 3] >> (row & 7)) & 1;");
                } else {
                    line("int n" + r + " = 0;");
                }
            }
            return 0;
        }
        case IrOp::Cast: declare(s, "(double)" + v(a[0]), n(a[0])); return 0;
        case IrOp::Arith: {
            auto op = static_cast<ArithOp>(s.index);
            std::string null_expr = s.nullable ? n(a[0]) + " || " + n(a[1]) : "";
            if (s.type == DataType::Float64) {
                const char* sym = op == ArithOp::Add ? " + " : op == ArithOp::Sub ? " - " : op == ArithOp::Mul ? " * " : " / ";
                declare(s, v(a[0]) + sym + v(a[1]), null_expr);
                return 0;
            }
            const char* fn = op == ArithOp::Add ? "__builtin_add_overflow" : op == ArithOp::Sub ? "__builtin_sub_overflow"
                                                                                             : "__builtin_mul_overflow";
            if (op == ArithOp::Div) throw Error("internal: integer division in kernel");
            declare(s, "0", null_expr);
            std::string guard = s.nullable ? "!n" + r + " && " : "";
            line("if (" + guard + fn + "(" + v(a[0]) + ", " + v(a[1]) + ", &" + v(s.result) +
                 ")) FLK_FAIL(st, \"integer overflow in " + std::string(to_string(op)) + "\");");
            return 0;
        }
        case IrOp::Cmp: {
            auto op = static_cast<CmpOp>(s.index);
            std::string test;
            if (type(a[0]) == DataType::Text) {
                if (op == CmpOp::Eq || op == CmpOp::Ne) {
                    test = std::string(op == CmpOp::Ne ? "!" : "") + "flk_str_eq(" + v(a[0]) + ", " + v(a[1]) + ")";
                } else {
                    test = "flk_str_cmp(" + v(a[0]) + ", " + v(a[1]) + ") " + c_cmp(op) + " 0";
                }
            } else {
                test = v(a[0]) + " " + c_cmp(op) + " " + v(a[1]);
            }
            bool nullable = info_.at(a[0]).nullable || info_.at(a[1]).nullable;
            if (nullable) test = "!(" + n(a[0]) + " || " + n(a[1]) + ") && (" + test + ")";
            declare(s, "(" + test + ")");
            return 0;
        }
        case IrOp::And: declare(s, "(" + truth(a[0]) + " && " + truth(a[1]) + ")"); return 0;
        case IrOp::Or: declare(s, "(" + truth(a[0]) + " || " + truth(a[1]) + ")"); return 0;
        case IrOp::Not: declare(s, "!" + truth(a[0])); return 0;
        case IrOp::StartsWith: {
            const auto& p = std::get<std::string>(s.value);
            std::string test = "flk_starts(" + v(a[0]) + ", " + c_string(p) + ", " + std::to_string(p.size()) + ")";
            if (info_.at(a[0]).nullable) test = "!" + n(a[0]) + " && " + test;
            declare(s, "(" + test + ")");
            return 0;
        }
        case IrOp::Select: {
            std::string c = truth(a[0]);
            declare(s, c + " ? " + v(a[1]) + " : " + v(a[2]), s.nullable ? c + " ? " + n(a[1]) + " : " + n(a[2]) : "");
            return 0;
        }
        case IrOp::Guard: line("if (!" + truth(a[0]) + ") continue;"); return 0;
        case IrOp::HashInsert: {
            line("{");
            ++indent_;
            cell_array("row_", a);
            line("flk_join_insert(&st->tab[" + std::to_string(s.target) + "], row_);");
            --indent_;
            line("}");
            return 0;
        }
        case IrOp::HashProbe: {
            std::string key = cell_array("pk" + r, a);
            std::string tab = "g->tab[" + std::to_string(s.target) + "]";
            std::string head = "h" + r;
            line("int64_t " + head + " = flk_join_probe(&" + tab + ", " + key + ");");
            switch (static_cast<JoinKind>(s.index)) {
            case JoinKind::Inner:
                line("for (int64_t " + v(s.result) + " = " + head + "; " + v(s.result) + " >= 0; " + v(s.result) + " = " +
                     tab + ".next[" + v(s.result) + "]) {");
                ++indent_;
                return 1;
            case JoinKind::LeftOuter:
                line("for (int64_t " + v(s.result) + " = " + head + ", go" + r + " = 1; go" + r + "; " + v(s.result) + " = " +
                     v(s.result) + " >= 0 ? " + tab + ".next[" + v(s.result) + "] : -1, go" + r + " = " + v(s.result) + " >= 0) {");
                ++indent_;
                return 1;
            case JoinKind::LeftSemi:
                line("if (" + head + " < 0) continue;");
                line("int64_t " + v(s.result) + " = " + head + ";");
                line("(void)" + v(s.result) + ";");
                return 0;
            case JoinKind::LeftAnti:
                line("if (" + head + " >= 0) continue;");
                line("int64_t " + v(s.result) + " = -1;");
                line("(void)" + v(s.result) + ";");
                return 0;
            }
            return 0;
        }
        case IrOp::ProbeRead: {
            std::string tab = "g->tab[" + std::to_string(s.target) + "]";
            std::size_t np = prog_.hash_tables[static_cast<std::size_t>(s.target)].payload_types.size();
            std::string m = v(a[0]);
            std::string c = "c" + r;
            line("static const flk_cell nullcell" + r + " = {0, 0.0, 0, 0, 1};");
            from_cell(s, m + " >= 0 ? &" + tab + ".pay[" + m + " * " + std::to_string(np) + " + " +
                             std::to_string(s.index) + "] : &nullcell" + r);
            return 0;
        }
        case IrOp::GroupUpsert: {
            std::string key = cell_array("gk" + r, a);
            line("int64_t " + v(s.result) + " = flk_group_upsert(&st->tab[" + std::to_string(s.target) + "], " + key + ");");
            return 0;
        }
        case IrOp::GroupUpdate: {
            const auto& t = prog_.hash_tables[static_cast<std::size_t>(s.target)];
            std::string acc = "ga" + std::to_string(update_counter_++);
            line("{");
            ++indent_;
            line("flk_agg* " + acc + " = &st->tab[" + std::to_string(s.target) + "].ag[" + v(a[0]) + " * " +
                 std::to_string(t.aggs.size()) + " + " + std::to_string(s.index) + "];");
            agg_update(t.aggs[static_cast<std::size_t>(s.index)], acc, s, a.size() > 1 ? &a[1] : nullptr);
            --indent_;
            line("}");
            return 0;
        }
        case IrOp::AggUpdate: {
            const auto& d = prog_.accumulators[static_cast<std::size_t>(s.target)];
            std::string acc = "(&st->acc[" + std::to_string(s.target) + "])";
            agg_update(d, acc, s, a.empty() ? nullptr : &a[0]);
            return 0;
        }
        case IrOp::AccRead:
            agg_read(s, prog_.accumulators[static_cast<std::size_t>(s.target)], "g->acc[" + std::to_string(s.target) + "]");
            return 0;
        case IrOp::GroupKeyRead: {
            std::size_t nk = prog_.hash_tables[static_cast<std::size_t>(s.target)].key_types.size();
            from_cell(s, "&g->tab[" + std::to_string(s.target) + "].keys[row * " + std::to_string(nk) + " + " +
                             std::to_string(s.index) + "]");
            return 0;
        }
        case IrOp::GroupAggRead: {
            const auto& t = prog_.hash_tables[static_cast<std::size_t>(s.target)];
            agg_read(s, t.aggs[static_cast<std::size_t>(s.index)],
                     "g->tab[" + std::to_string(s.target) + "].ag[row * " + std::to_string(t.aggs.size()) + " + " +
                         std::to_string(s.index) + "]");
            return 0;
        }
        case IrOp::SortAppend: {
            line("{");
            ++indent_;
            line("flk_cell* o_ = flk_buf_push(&st->sort[" + std::to_string(s.target) + "]);");
            for (std::size_t k = 0; k < a.size(); ++k) line("o_[" + std::to_string(k) + "] = " + cell(a[k]) + ";");
            --indent_;
            line("}");
            return 0;
        }
        case IrOp::BufferRead: {
            std::size_t w = prog_.sorts[static_cast<std::size_t>(s.target)].columns.size();
            from_cell(s, "&g->sort[" + std::to_string(s.target) + "].cells[row * " + std::to_string(w) + " + " +
                             std::to_string(s.index) + "]");
            return 0;
        }
        case IrOp::LimitGuard:
            line("if (st->lim[" + std::to_string(s.target) + "] >= flk_limits[" + std::to_string(s.target) + "]) continue;");
            line("st->lim[" + std::to_string(s.target) + "]++;");
            return 0;
        case IrOp::Emit: {
            line("{");
            ++indent_;
            line("flk_cell* o_ = flk_buf_push(&st->out);");
            for (std::size_t k = 0; k < a.size(); ++k) line("o_[" + std::to_string(k) + "] = " + cell(a[k]) + ";");
            --indent_;
            line("}");
            return 0;
        }
        }
        throw Error("internal: unknown IR op in code generation");
    }

    void dispatch() {
        const auto& p = prog_;
        out_ += "\nstatic flk_state* flk_new(void) {\n";
        out_ += "    flk_state* s = (flk_state*)calloc(1, sizeof(flk_state));\n    if (!s) abort();\n";
        for (std::size_t h = 0; h < p.hash_tables.size(); ++h) {
            out_ += "    flk_table_init(&s->tab[" + std::to_string(h) + "], &flk_tabdecls[" + std::to_string(h) + "]);\n";
        }
        for (std::size_t k = 0; k < p.sorts.size(); ++k) {
            out_ += "    s->sort[" + std::to_string(k) + "].w = " + std::to_string(p.sorts[k].columns.size()) + ";\n";
        }
        out_ += "    s->out.w = FLK_NOUT;\n    return s;\n}\n";
        out_ += "\nstatic void flk_free(flk_state* s) {\n";
        for (std::size_t h = 0; h < p.hash_tables.size(); ++h) out_ += "    flk_table_free(&s->tab[" + std::to_string(h) + "]);\n";
        for (std::size_t k = 0; k < p.sorts.size(); ++k) out_ += "    free(s->sort[" + std::to_string(k) + "].cells);\n";
        out_ += "    free(s->out.cells);\n    free(s);\n}\n";

        out_ += "\nstatic int flk_merge(flk_state* g, const flk_state* p) {\n";
        for (std::size_t k = 0; k < p.accumulators.size(); ++k) {
            out_ += "    if (flk_agg_merge(&flk_accdecls[" + std::to_string(k) + "], &g->acc[" + std::to_string(k) + "], &p->acc[" +
                    std::to_string(k) + "])) FLK_FAIL(g, \"integer overflow in SUM\");\n";
        }
        for (std::size_t h = 0; h < p.hash_tables.size(); ++h) {
            if (p.hash_tables[h].purpose != TablePurpose::GroupBy) continue;
            out_ += "    if (flk_table_merge(&g->tab[" + std::to_string(h) + "], &p->tab[" + std::to_string(h) +
                    "])) FLK_FAIL(g, \"integer overflow in SUM\");\n";
        }
        for (std::size_t k = 0; k < p.sorts.size(); ++k) {
            out_ += "    flk_buf_append(&g->sort[" + std::to_string(k) + "], &p->sort[" + std::to_string(k) + "]);\n";
        }
        out_ += "    flk_buf_append(&g->out, &p->out);\n    return 0;\n}\n";

        out_ += "\nstatic int flk_run(const flk_desc* d, flk_state* st, const flk_state* g, int loop, uint64_t b, uint64_t e) {\n";
        out_ += "    switch (loop) {\n";
        for (const auto& l : p.loops) {
            out_ += "    case " + std::to_string(l.id) + ": return flk_loop_" + std::to_string(l.id) + "(d, st, g, b, e);\n";
        }
        out_ += "    }\n    return 0;\n}\n";

        out_ += "\nstatic int flk_epilogue(const flk_desc* d, flk_state* st, int loop) {\n    switch (loop) {\n";
        for (const auto& l : p.loops) {
            if (l.epilogue.empty()) continue;
            out_ += "    case " + std::to_string(l.id) + ":\n";
            for (std::size_t e = 0; e < l.epilogue.size(); ++e) {
                out_ += "        if (flk_epi_" + std::to_string(l.id) + "_" + std::to_string(e) + "(d, st, st)) return 1;\n";
            }
            out_ += "        return 0;\n";
        }
        out_ += "    }\n    return 0;\n}\n";

        out_ += "\nstatic uint64_t flk_source_rows(const flk_desc* d, const flk_state* g, int loop) {\n    switch (loop) {\n";
        for (const auto& l : p.loops) {
            std::string src;
            switch (l.source) {
            case SourceKind::Table: src = "d->s[" + std::to_string(slots_.row_slot[static_cast<std::size_t>(l.source_id)]) + "].len"; break;
            case SourceKind::Empty: src = "0"; break;
            case SourceKind::GroupTable: src = "(uint64_t)g->tab[" + std::to_string(l.source_id) + "].n"; break;
            case SourceKind::SortBuffer: src = "(uint64_t)g->sort[" + std::to_string(l.source_id) + "].rows"; break;
            }
            out_ += "    case " + std::to_string(l.id) + ": return " + src + ";\n";
        }
        out_ += "    }\n    return 0;\n}\n";

        out_ += "\nstatic void flk_seal(flk_state* g, int loop) {\n    switch (loop) {\n";
        for (const auto& l : p.loops) {
            if (l.source != SourceKind::SortBuffer) continue;
            out_ += "    case " + std::to_string(l.id) + ": flk_sort(&g->sort[" + std::to_string(l.source_id) +
                    "], &flk_sortdecls[" + std::to_string(l.source_id) + "]); break;\n";
        }
        out_ += "    default: break;\n    }\n}\n";

        out_ += "\n__attribute__((visibility(\"default\")))\n";
        out_ += "int64_t flk_entry(int32_t op, const void* desc, void* state, void* other, int32_t loop, uint64_t begin, uint64_t end) {\n";
        out_ += "    const flk_desc* d = (const flk_desc*)desc;\n";
        out_ += "    flk_state* st = (flk_state*)state;\n";
        out_ += "    if (d && (d->version != 1 || d->slot_count != FLK_NSLOTS)) {\n";
        out_ += "        if (st) { st->err = 2; strcpy(st->msg, \"descriptor block does not match the kernel\"); }\n";
        out_ += "        return -2;\n    }\n";
        out_ += "    switch (op) {\n";
        out_ += "    case 0: return (int64_t)(intptr_t)flk_new();\n";
        out_ += "    case 1: flk_free(st); return 0;\n";
        out_ += "    case 2: flk_seal(st, loop); return 0;\n";
        out_ += "    case 3: return (int64_t)flk_source_rows(d, st, loop);\n";
        out_ += "    case 4: return flk_run(d, st, (const flk_state*)other, loop, begin, end) ? -1 : 0;\n";
        out_ += "    case 5: return flk_merge(st, (const flk_state*)other) ? -1 : 0;\n";
        out_ += "    case 6: return flk_epilogue(d, st, loop) ? -1 : 0;\n";
        out_ += "    case 7: { flk_result* r = (flk_result*)other; r->cells = st->out.cells; r->rows = (uint64_t)st->out.rows; return 0; }\n";
        out_ += "    case 8: strcpy((char*)other, st->msg); return st->err;\n";
        out_ += "    case 9:\n";
        out_ += "        for (int l = 0; l < " + std::to_string(p.loops.size()) + "; ++l) {\n";
        out_ += "            flk_seal(st, l);\n";
        out_ += "            if (flk_run(d, st, st, l, 0, flk_source_rows(d, st, l))) return -1;\n";
        out_ += "            if (flk_epilogue(d, st, l)) return -1;\n";
        out_ += "        }\n        return 0;\n";
        out_ += "    case 10: {\n        flk_meta* m = (flk_meta*)other;\n";
        out_ += "        m->abi = 1; m->loops = " + std::to_string(p.loops.size()) + "; m->inputs = " +
                std::to_string(p.inputs.size()) + "; m->outputs = FLK_NOUT; m->slots = FLK_NSLOTS; m->reserved = 0;\n";
        out_ += "        m->output_types = flk_out_types; m->output_nullable = flk_out_nullable;\n        return 0;\n    }\n";
        out_ += "    }\n    (void)begin; (void)end;\n    return -3;\n}\n";
    }

    const KernelProgram& prog_;
    SlotLayout slots_;
    std::map<ValueId, ValueInfo> info_;
    std::string out_;
    int indent_ = 0;
    int update_counter_ = 0;
};

} // namespace

std::string emit_source(const KernelProgram& prog) { return Emitter(prog).run(); }

std::uint32_t descriptor_slot_count(const std::vector<Schema>& inputs) {
    std::vector<InputDecl> decls;
    for (const auto& s : inputs) decls.push_back({"", s});
    return static_cast<std::uint32_t>(layout_of(decls).count);
}

std::vector<std::uint64_t> build_descriptor(const std::vector<std::vector<const Column*>>& inputs,
                                            const std::vector<std::uint64_t>& row_counts) {
    std::vector<std::uint64_t> pairs;
    auto add = [&](const void* base, std::uint64_t len) {
        pairs.push_back(static_cast<std::uint64_t>(reinterpret_cast<std::uintptr_t>(base)));
        pairs.push_back(len);
    };
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        add(nullptr, row_counts.at(t));
        for (const Column* c : inputs[t]) {
            switch (c->dtype()) {
            case DataType::Float64: add(c->floats().data(), c->size()); break;
            case DataType::Text:
                add(c->offsets().data(), c->offsets().size());
                add(c->arena().data(), c->arena().size());
                break;
            default: add(c->ints().data(), c->size()); break;
            }
            if (c->nullable()) add(c->null_bitmap().data(), c->null_bitmap().size());
        }
    }
    std::vector<std::uint64_t> block(1 + pairs.size());
    auto count = static_cast<std::uint32_t>(pairs.size() / 2);
    block[0] = static_cast<std::uint64_t>(kKernelAbiVersion) | (static_cast<std::uint64_t>(count) << 32);
    std::copy(pairs.begin(), pairs.end(), block.begin() + 1);
    return block;
}

} // namespace flarelite
