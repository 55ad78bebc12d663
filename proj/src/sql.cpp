#include "flarelite/sql.hpp"

#include "flarelite/catalog.hpp"
#include "flarelite/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <functional>
#include <map>
#include <optional>
#include <set>

namespace flarelite {

namespace {

// Aggregate calls are carried through the unbound tree as UdfCall nodes with
// a '$'-prefixed name, which no identifier can spell.
constexpr char kAggPrefix = '$';

enum class Tok { Ident, Number, String, Symbol, End };

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::size_t offset = 0;
};

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

const std::set<std::string>& keywords() {
    static const std::set<std::string> k = {
        "select", "from", "where", "group", "by",  "order", "limit", "as",   "and",  "or",    "not",
        "between", "like", "join", "inner", "left", "outer", "semi",  "anti", "on",   "asc",  "desc",
        "date",    "true", "false",
    };
    return k;
}

std::vector<Token> lex(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char c = static_cast<unsigned char>(s[i]);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && i + 1 < s.size() && s[i + 1] == '-') {
            while (i < s.size() && s[i] != '\n') ++i;
            continue;
        }
        Token t;
        t.offset = i;
        if (std::isalpha(c) || c == '_') {
            std::size_t j = i;
            while (j < s.size() && (std::isalnum(static_cast<unsigned char>(s[j])) || s[j] == '_')) ++j;
            t.kind = Tok::Ident;
            t.text = s.substr(i, j - i);
            i = j;
        } else if (std::isdigit(c)) {
            std::size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            if (j + 1 < s.size() && s[j] == '.' && std::isdigit(static_cast<unsigned char>(s[j + 1]))) {
                ++j;
                while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j]))) ++j;
            }
            if (j < s.size() && (s[j] == 'e' || s[j] == 'E')) {
                std::size_t k = j + 1;
                if (k < s.size() && (s[k] == '+' || s[k] == '-')) ++k;
                if (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) {
                    while (k < s.size() && std::isdigit(static_cast<unsigned char>(s[k]))) ++k;
                    j = k;
                }
            }
            t.kind = Tok::Number;
            t.text = s.substr(i, j - i);
            i = j;
        } else if (c == '\'') {
            std::string v;
            std::size_t j = i + 1;
            for (;;) {
                if (j >= s.size()) throw ParseError("unterminated string literal", i);
                if (s[j] == '\'') {
                    if (j + 1 < s.size() && s[j + 1] == '\'') {
                        v += '\'';
                        j += 2;
                        continue;
                    }
                    ++j;
                    break;
                }
                v += s[j++];
            }
            t.kind = Tok::String;
            t.text = std::move(v);
            i = j;
        } else {
            static const char* two[] = {"<=", ">=", "<>", "!="};
            t.kind = Tok::Symbol;
            for (const char* op : two) {
                if (s.substr(i, 2) == op) t.text = op;
            }
            if (t.text.empty()) {
                if (std::string_view("=<>+-*/(),.;").find(static_cast<char>(c)) == std::string_view::npos) {
                    throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'", i);
                }
                t.text = std::string(1, static_cast<char>(c));
            }
            i += t.text.size();
        }
        out.push_back(std::move(t));
    }
    out.push_back({Tok::End, "", s.size()});
    return out;
}

struct SelectItem {
    ExprPtr expr; // nullptr for '*'
    std::string alias;
};

struct FromItem {
    std::string table;
    bool comma = true;
    JoinKind kind = JoinKind::Inner;
    ExprPtr on;
};

struct OrderItem {
    ExprPtr expr;
    std::optional<std::int64_t> ordinal;
    bool ascending = true;
};

struct Query {
    std::vector<SelectItem> items;
    std::vector<FromItem> from;
    ExprPtr where;
    std::vector<ExprPtr> group_by;
    std::vector<OrderItem> order_by;
    std::optional<std::int64_t> limit;
};

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(lex(text)) {}

    Query parse_query() {
        Query q;
        expect_kw("select");
        do {
            q.items.push_back(parse_item());
        } while (accept_sym(","));
        expect_kw("from");
        q.from.push_back({parse_table_name(), true, JoinKind::Inner, nullptr});
        parse_from_tail(q);
        if (accept_kw("where")) q.where = parse_expr();
        if (accept_kw("group")) {
            expect_kw("by");
            do {
                q.group_by.push_back(parse_expr());
            } while (accept_sym(","));
        }
        if (accept_kw("order")) {
            expect_kw("by");
            do {
                OrderItem o;
                if (peek().kind == Tok::Number && is_terminator(peek(1))) {
                    o.ordinal = parse_int_token(next());
                } else {
                    o.expr = parse_expr();
                }
                if (accept_kw("desc")) {
                    o.ascending = false;
                } else {
                    accept_kw("asc");
                }
                q.order_by.push_back(std::move(o));
            } while (accept_sym(","));
        }
        if (accept_kw("limit")) {
            if (peek().kind != Tok::Number) fail("expected integer after LIMIT");
            q.limit = parse_int_token(next());
        }
        accept_sym(";");
        if (peek().kind != Tok::End) fail("unexpected token '" + peek().text + "'");
        return q;
    }

private:
    const Token& peek(std::size_t k = 0) const { return toks_[std::min(pos_ + k, toks_.size() - 1)]; }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        if (peek().kind == Tok::End) throw ParseError("unexpected end of input", peek().offset);
        throw ParseError(msg, peek().offset);
    }

    bool is_kw(const Token& t, std::string_view kw) const { return t.kind == Tok::Ident && lower(t.text) == kw; }
    bool accept_kw(std::string_view kw) {
        if (is_kw(peek(), kw)) {
            next();
            return true;
        }
        return false;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) fail("expected " + lower(kw) + ", found '" + peek().text + "'");
    }
    bool accept_sym(std::string_view s) {
        if (peek().kind == Tok::Symbol && peek().text == s) {
            next();
            return true;
        }
        return false;
    }
    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail("expected '" + std::string(s) + "', found '" + peek().text + "'");
    }
    bool is_terminator(const Token& t) const {
        return t.kind == Tok::End || (t.kind == Tok::Symbol && (t.text == "," || t.text == ";")) ||
               is_kw(t, "asc") || is_kw(t, "desc") || is_kw(t, "limit");
    }

    std::string parse_ident() {
        const Token& t = peek();
        if (t.kind != Tok::Ident || keywords().count(lower(t.text))) {
            fail("expected identifier, found '" + t.text + "'");
        }
        return next().text;
    }

    std::int64_t parse_int_token(const Token& t, bool negative = false) {
        std::string s = (negative ? "-" : "") + t.text;
        std::int64_t v = 0;
        auto r = std::from_chars(s.data(), s.data() + s.size(), v);
        if (r.ec != std::errc() || r.ptr != s.data() + s.size()) {
            throw ParseError("invalid integer literal " + s, t.offset);
        }
        return v;
    }

    SelectItem parse_item() {
        SelectItem it;
        if (accept_sym("*")) return it;
        it.expr = parse_expr();
        if (accept_kw("as")) {
            it.alias = parse_ident();
        } else if (peek().kind == Tok::Ident && !keywords().count(lower(peek().text))) {
            it.alias = parse_ident();
        }
        return it;
    }

    std::string parse_table_name() {
        std::string name = parse_ident();
        // Optional alias; qualifiers are ignored when resolving columns.
        if (accept_kw("as") || (peek().kind == Tok::Ident && !keywords().count(lower(peek().text)))) {
            parse_ident();
        }
        return name;
    }

    void parse_from_tail(Query& q) {
        for (;;) {
            if (accept_sym(",")) {
                q.from.push_back({parse_table_name(), true, JoinKind::Inner, nullptr});
                continue;
            }
            FromItem f;
            f.comma = false;
            if (accept_kw("join")) {
                f.kind = JoinKind::Inner;
            } else if (accept_kw("inner")) {
                expect_kw("join");
            } else if (accept_kw("left")) {
                if (accept_kw("semi")) {
                    f.kind = JoinKind::LeftSemi;
                } else if (accept_kw("anti")) {
                    f.kind = JoinKind::LeftAnti;
                } else {
                    accept_kw("outer");
                    f.kind = JoinKind::LeftOuter;
                }
                expect_kw("join");
            } else {
                return;
            }
            f.table = parse_table_name();
            expect_kw("on");
            f.on = parse_expr();
            q.from.push_back(std::move(f));
        }
    }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        auto e = parse_and();
        while (accept_kw("or")) e = or_(e, parse_and());
        return e;
    }

    ExprPtr parse_and() {
        auto e = parse_not();
        while (accept_kw("and")) e = and_(e, parse_not());
        return e;
    }

    ExprPtr parse_not() {
        if (accept_kw("not")) return not_(parse_not());
        return parse_predicate();
    }

    ExprPtr parse_predicate() {
        auto e = parse_additive();
        const Token& t = peek();
        if (t.kind == Tok::Symbol) {
            static const std::pair<const char*, CmpOp> ops[] = {
                {"=", CmpOp::Eq}, {"<>", CmpOp::Ne}, {"!=", CmpOp::Ne}, {"<", CmpOp::Lt},
                {"<=", CmpOp::Le}, {">", CmpOp::Gt}, {">=", CmpOp::Ge},
            };
            for (const auto& [sym, op] : ops) {
                if (t.text == sym) {
                    next();
                    return cmp(op, e, parse_additive());
                }
            }
        }
        bool negate = false;
        if (is_kw(t, "not") && (is_kw(peek(1), "between") || is_kw(peek(1), "like"))) {
            next();
            negate = true;
        }
        ExprPtr out;
        if (accept_kw("between")) {
            auto lo = parse_additive();
            expect_kw("and");
            out = between(e, lo, parse_additive());
        } else if (accept_kw("like")) {
            const Token& p = peek();
            if (p.kind != Tok::String) fail("expected pattern string after LIKE");
            std::string pat = p.text;
            if (pat.empty() || pat.back() != '%' ||
                pat.substr(0, pat.size() - 1).find_first_of("%_") != std::string::npos) {
                throw ParseError("only prefix patterns of the form 'abc%' are supported in LIKE", p.offset);
            }
            next();
            pat.pop_back();
            out = starts_with(e, pat);
        } else {
            return e;
        }
        return negate ? not_(out) : out;
    }

    ExprPtr parse_additive() {
        auto e = parse_multiplicative();
        for (;;) {
            if (accept_sym("+")) {
                e = arith(ArithOp::Add, e, parse_multiplicative());
            } else if (accept_sym("-")) {
                e = arith(ArithOp::Sub, e, parse_multiplicative());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_multiplicative() {
        auto e = parse_unary();
        for (;;) {
            if (accept_sym("*")) {
                e = arith(ArithOp::Mul, e, parse_unary());
            } else if (accept_sym("/")) {
                e = arith(ArithOp::Div, e, parse_unary());
            } else {
                return e;
            }
        }
    }

    ExprPtr parse_unary() {
        if (accept_sym("-")) {
            if (peek().kind == Tok::Number) return parse_number(true);
            return arith(ArithOp::Sub, lit_int(0), parse_unary());
        }
        return parse_primary();
    }

    ExprPtr parse_number(bool negative) {
        const Token& t = next();
        if (t.text.find_first_of(".eE") == std::string::npos) {
            return lit_int(parse_int_token(t, negative));
        }
        double v = 0;
        auto r = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (r.ec != std::errc()) throw ParseError("invalid numeric literal " + t.text, t.offset);
        return lit_float(negative ? -v : v);
    }

    ExprPtr parse_primary() {
        const Token& t = peek();
        if (t.kind == Tok::Number) return parse_number(false);
        if (t.kind == Tok::String) return lit_text(next().text);
        if (accept_sym("(")) {
            auto e = parse_expr();
            expect_sym(")");
            return e;
        }
        if (t.kind != Tok::Ident) fail("expected expression, found '" + t.text + "'");
        std::string word = lower(t.text);
        if (word == "true" || word == "false") {
            next();
            return lit_bool(word == "true");
        }
        if (word == "date") {
            next();
            const Token& s = peek();
            if (s.kind != Tok::String) fail("expected 'YYYY-MM-DD' after DATE");
            auto d = date::parse(s.text);
            if (!d) throw ParseError("invalid date literal '" + s.text + "'", s.offset);
            next();
            return lit_date(*d);
        }
        std::string name = parse_ident();
        if (accept_sym("(")) return parse_call(name);
        if (accept_sym(".")) name = parse_ident(); // qualified reference; qualifier dropped
        return col(name);
    }

    ExprPtr parse_call(const std::string& name) {
        std::string fn = lower(name);
        static const std::set<std::string> aggs = {"sum", "count", "avg", "min", "max"};
        if (aggs.count(fn)) {
            if (fn == "count" && accept_sym("*")) {
                expect_sym(")");
                return udf_call(kAggPrefix + fn, {});
            }
            auto arg = parse_expr();
            expect_sym(")");
            return udf_call(kAggPrefix + fn, {arg});
        }
        std::vector<ExprPtr> args;
        if (!accept_sym(")")) {
            do {
                args.push_back(parse_expr());
            } while (accept_sym(","));
            expect_sym(")");
        }
        if (fn == "starts_with") {
            if (args.size() != 2 || args[1]->kind != ExprKind::Lit || args[1]->type != DataType::Text) {
                fail("starts_with expects a column and a string literal");
            }
            return starts_with(args[0], std::get<std::string>(args[1]->value));
        }
        return udf_call(name, std::move(args));
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

// ---------------------------------------------------------------------------
// Planning

bool is_agg_call(const ExprPtr& e) {
    return e->kind == ExprKind::UdfCall && !e->name.empty() && e->name[0] == kAggPrefix;
}

bool contains_agg(const ExprPtr& e) {
    if (is_agg_call(e)) return true;
    return std::any_of(e->args.begin(), e->args.end(), contains_agg);
}

AggFn agg_fn(const std::string& name) {
    std::string_view n(name);
    n.remove_prefix(1);
    if (n == "sum") return AggFn::Sum;
    if (n == "count") return AggFn::Count;
    if (n == "avg") return AggFn::Avg;
    if (n == "min") return AggFn::Min;
    return AggFn::Max;
}

bool subset_of(const std::set<std::string>& cols, const Schema& s) {
    return std::all_of(cols.begin(), cols.end(), [&](const std::string& c) { return s.find(c).has_value(); });
}

/// Orients an equality conjunct as (left-side expr, right-side expr).
std::optional<JoinKey> as_join_key(const ExprPtr& c, const Schema& left, const Schema& right) {
    if (c->kind != ExprKind::Cmp || c->cmp_op() != CmpOp::Eq) return std::nullopt;
    auto a = referenced_columns(c->args[0]);
    auto b = referenced_columns(c->args[1]);
    if (a.empty() || b.empty()) return std::nullopt;
    if (subset_of(a, left) && subset_of(b, right)) return JoinKey{c->args[0], c->args[1]};
    if (subset_of(b, left) && subset_of(a, right)) return JoinKey{c->args[1], c->args[0]};
    return std::nullopt;
}

void reject_agg(const ExprPtr& e, std::string_view clause) {
    if (e && contains_agg(e)) throw PlanError("aggregate functions are not allowed in " + std::string(clause));
}

PlanPtr plan_from(const Query& q, const Catalog& catalog, const UdfResolver* udfs) {
    PlanPtr cur = plan::scan(catalog, q.from[0].table);
    std::vector<ExprPtr> conjuncts = split_conjuncts(q.where);
    std::vector<bool> used(conjuncts.size(), false);
    bool any_comma = false;
    for (std::size_t i = 1; i < q.from.size(); ++i) {
        const auto& f = q.from[i];
        PlanPtr right = plan::scan(catalog, f.table);
        std::vector<JoinKey> keys;
        if (f.comma) {
            any_comma = true;
            for (std::size_t c = 0; c < conjuncts.size(); ++c) {
                if (used[c]) continue;
                if (auto k = as_join_key(conjuncts[c], cur->schema, right->schema)) {
                    keys.push_back(*k);
                    used[c] = true;
                }
            }
            if (keys.empty()) {
                throw PlanError("no equality predicate joins " + f.table + " to the preceding tables");
            }
        } else {
            reject_agg(f.on, "ON");
            std::vector<ExprPtr> right_preds;
            for (const auto& c : split_conjuncts(f.on)) {
                if (auto k = as_join_key(c, cur->schema, right->schema)) {
                    keys.push_back(*k);
                } else if (subset_of(referenced_columns(c), right->schema)) {
                    right_preds.push_back(c);
                } else {
                    throw PlanError("ON clause of join with " + f.table +
                                    " may only contain equi-keys and predicates on " + f.table + ": " +
                                    expr_to_sql(c));
                }
            }
            if (keys.empty()) throw PlanError("join with " + f.table + " has no equality key");
            if (!right_preds.empty()) right = plan::filter(right, make_conjunction(right_preds), udfs);
        }
        cur = plan::join(f.comma ? JoinKind::Inner : f.kind, cur, right, keys, udfs);
    }
    reject_agg(q.where, "WHERE");
    ExprPtr residual = q.where;
    if (any_comma) {
        std::vector<ExprPtr> rest;
        for (std::size_t c = 0; c < conjuncts.size(); ++c) {
            if (!used[c]) rest.push_back(conjuncts[c]);
        }
        residual = make_conjunction(rest);
    }
    if (residual) cur = plan::filter(cur, residual, udfs);
    return cur;
}

std::string item_name(const SelectItem& it, std::size_t i) {
    if (!it.alias.empty()) return it.alias;
    if (it.expr->kind == ExprKind::ColRef) return it.expr->name;
    return "_c" + std::to_string(i);
}

PlanPtr plan_query(const Query& q, const Catalog& catalog, const UdfResolver* udfs) {
    PlanPtr cur = plan_from(q, catalog, udfs);

    bool has_agg = !q.group_by.empty();
    for (const auto& it : q.items) {
        has_agg = has_agg || (it.expr && contains_agg(it.expr));
    }

    // Select-list expressions as written, with their output names.
    std::vector<NamedExpr> items;
    for (std::size_t i = 0; i < q.items.size(); ++i) {
        const auto& it = q.items[i];
        if (!it.expr) {
            if (has_agg) throw PlanError("SELECT * cannot be combined with aggregation");
            for (const auto& c : cur->schema.columns()) items.push_back({col(c.name), c.name});
            continue;
        }
        items.push_back({it.expr, item_name(it, i)});
    }

    if (has_agg) {
        std::vector<NamedExpr> keys;
        for (std::size_t i = 0; i < q.group_by.size(); ++i) {
            const auto& g = q.group_by[i];
            reject_agg(g, "GROUP BY");
            keys.push_back({g, g->kind == ExprKind::ColRef ? g->name : "_k" + std::to_string(i)});
        }
        std::vector<AggSpec> aggs;
        std::vector<ExprPtr> agg_src; // unbound call nodes, parallel to aggs
        std::function<ExprPtr(const ExprPtr&, const NamedExpr&)> rewrite = [&](const ExprPtr& e,
                                                                               const NamedExpr& item) -> ExprPtr {
            if (is_agg_call(e)) {
                for (const auto& a : e->args) reject_agg(a, "aggregate arguments");
                for (std::size_t j = 0; j < aggs.size(); ++j) {
                    if (expr_equal(agg_src[j], e)) return col(aggs[j].name);
                }
                AggSpec spec;
                spec.fn = agg_fn(e->name);
                if (e->args.size() > 1) throw PlanError(std::string(to_string(spec.fn)) + " takes one argument");
                if (e->args.empty() && spec.fn != AggFn::Count) {
                    throw PlanError(std::string(to_string(spec.fn)) + " requires an argument");
                }
                spec.arg = e->args.empty() ? nullptr : e->args[0];
                spec.name = (e == item.expr) ? item.name : "_a" + std::to_string(aggs.size());
                aggs.push_back(spec);
                agg_src.push_back(e);
                return col(spec.name);
            }
            for (const auto& k : keys) {
                if (expr_equal(k.expr, e)) return col(k.name);
            }
            if (e->args.empty()) return e;
            auto copy = std::make_shared<Expr>(*e);
            for (auto& a : copy->args) a = rewrite(a, item);
            return copy;
        };
        std::vector<NamedExpr> outer;
        for (const auto& it : items) outer.push_back({rewrite(it.expr, it), it.name});

        cur = plan::aggregate(cur, keys, aggs, udfs);
        bool identity = outer.size() == cur->schema.size();
        for (std::size_t i = 0; identity && i < outer.size(); ++i) {
            identity = outer[i].expr->kind == ExprKind::ColRef && outer[i].expr->name == cur->schema[i].name &&
                       outer[i].name == cur->schema[i].name;
        }
        if (!identity) {
            try {
                cur = plan::project(cur, outer, udfs);
            } catch (const PlanError& e) {
                throw PlanError(std::string(e.what()) + " (select items must be aggregates or GROUP BY keys)");
            }
        }
    } else {
        cur = plan::project(cur, items, udfs);
    }

    if (!q.order_by.empty()) {
        std::vector<SortKey> keys;
        for (const auto& o : q.order_by) {
            std::string name;
            if (o.ordinal) {
                if (*o.ordinal < 1 || static_cast<std::size_t>(*o.ordinal) > cur->schema.size()) {
                    throw PlanError("ORDER BY position " + std::to_string(*o.ordinal) + " is out of range");
                }
                name = cur->schema[static_cast<std::size_t>(*o.ordinal - 1)].name;
            } else if (o.expr->kind == ExprKind::ColRef && cur->schema.find(o.expr->name)) {
                name = o.expr->name;
            } else {
                for (const auto& it : items) {
                    if (expr_equal(it.expr, o.expr)) {
                        name = it.name;
                        break;
                    }
                }
                if (name.empty()) {
                    throw PlanError("ORDER BY expression " + expr_to_sql(o.expr) + " is not in the select list");
                }
            }
            keys.push_back({name, o.ascending});
        }
        cur = plan::sort(cur, keys);
    }
    if (q.limit) cur = plan::limit(cur, *q.limit);
    return cur;
}

// ---------------------------------------------------------------------------
// Printing

std::string operand(const ExprPtr& e) {
    auto s = expr_to_sql(e);
    bool atomic = e->kind == ExprKind::ColRef || e->kind == ExprKind::Lit || e->kind == ExprKind::UdfCall ||
                  e->kind == ExprKind::StartsWith || e->kind == ExprKind::Cond;
    if (e->kind == ExprKind::Cast) return operand(e->args[0]);
    return atomic ? s : "(" + s + ")";
}

std::string print_from(const PlanPtr& p) {
    if (p->kind == PlanKind::Scan) return p->table;
    if (p->kind != PlanKind::Join) throw PlanError("plan is not expressible in SQL: " + describe_node(*p));
    std::string out = print_from(p->child(0));
    switch (p->join_kind) {
    case JoinKind::Inner: out += " JOIN "; break;
    case JoinKind::LeftOuter: out += " LEFT OUTER JOIN "; break;
    case JoinKind::LeftSemi: out += " LEFT SEMI JOIN "; break;
    case JoinKind::LeftAnti: out += " LEFT ANTI JOIN "; break;
    }
    const PlanPtr& right = p->child(1);
    ExprPtr right_pred;
    if (right->kind == PlanKind::Filter && right->child()->kind == PlanKind::Scan) {
        out += right->child()->table;
        right_pred = right->predicate;
    } else if (right->kind == PlanKind::Scan) {
        out += right->table;
    } else {
        throw PlanError("plan is not expressible in SQL: join input " + describe_node(*right));
    }
    out += " ON ";
    for (std::size_t i = 0; i < p->keys.size(); ++i) {
        if (i) out += " AND ";
        out += operand(p->keys[i].left) + " = " + operand(p->keys[i].right);
    }
    if (right_pred) out += " AND " + operand(right_pred);
    return out;
}

ExprPtr agg_call_expr(const AggSpec& a) {
    auto e = std::make_shared<Expr>();
    e->kind = ExprKind::UdfCall;
    e->name = std::string(to_string(a.fn));
    e->args.push_back(a.arg ? a.arg : col("*"));
    return e;
}

std::string select_item(const ExprPtr& e, const std::string& name) {
    if (e->kind == ExprKind::ColRef && e->name == name) return name;
    return expr_to_sql(e) + " AS " + name;
}

} // namespace

PlanPtr parse_sql(std::string_view text, const Catalog& catalog, const UdfResolver* udfs) {
    Parser p(text);
    return plan_query(p.parse_query(), catalog, udfs);
}

std::string print_sql(const PlanPtr& plan) {
    PlanPtr node = plan;
    std::optional<std::int64_t> limit;
    const PlanNode* sort = nullptr;
    const PlanNode* proj = nullptr;
    const PlanNode* agg = nullptr;
    if (node->kind == PlanKind::Limit) {
        limit = node->limit;
        node = node->child();
    }
    if (node->kind == PlanKind::Sort) {
        sort = node.get();
        node = node->child();
    }
    if (node->kind == PlanKind::Project) {
        proj = node.get();
        node = node->child();
    }
    if (node->kind == PlanKind::Aggregate) {
        agg = node.get();
        node = node->child();
    }
    if (!proj && !agg) throw PlanError("plan is not expressible in SQL: missing projection");
    ExprPtr where;
    if (node->kind == PlanKind::Filter) {
        where = node->predicate;
        node = node->child();
    }

    std::vector<std::string> items;
    if (agg) {
        std::map<std::string, ExprPtr> mapping;
        for (const auto& k : agg->exprs) mapping[k.name] = k.expr;
        for (const auto& a : agg->aggs) mapping[a.name] = agg_call_expr(a);
        if (proj) {
            for (const auto& ne : proj->exprs) items.push_back(select_item(substitute(ne.expr, mapping), ne.name));
        } else {
            for (const auto& c : agg->schema.columns()) items.push_back(select_item(mapping.at(c.name), c.name));
        }
    } else {
        for (const auto& ne : proj->exprs) items.push_back(select_item(ne.expr, ne.name));
    }

    std::string out = "SELECT ";
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    out += " FROM " + print_from(node);
    if (where) out += " WHERE " + expr_to_sql(where);
    if (agg && !agg->exprs.empty()) {
        out += " GROUP BY ";
        for (std::size_t i = 0; i < agg->exprs.size(); ++i) {
            if (i) out += ", ";
            out += expr_to_sql(agg->exprs[i].expr);
        }
    }
    if (sort) {
        out += " ORDER BY ";
        for (std::size_t i = 0; i < sort->sort_keys.size(); ++i) {
            if (i) out += ", ";
            out += sort->sort_keys[i].column + (sort->sort_keys[i].ascending ? " ASC" : " DESC");
        }
    }
    if (limit) out += " LIMIT " + std::to_string(*limit);
    return out;
}

} // namespace flarelite
