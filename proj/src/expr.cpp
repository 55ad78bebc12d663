#include "flarelite/expr.hpp"

#include "flarelite/error.hpp"

#include <charconv>
#include <cstring>

namespace flarelite {

std::string_view to_string(ArithOp op) {
    switch (op) {
    case ArithOp::Add: return "+";
    case ArithOp::Sub: return "-";
    case ArithOp::Mul: return "*";
    case ArithOp::Div: return "/";
    }
    return "?";
}

std::string_view to_string(CmpOp op) {
    switch (op) {
    case CmpOp::Eq: return "=";
    case CmpOp::Ne: return "<>";
    case CmpOp::Lt: return "<";
    case CmpOp::Le: return "<=";
    case CmpOp::Gt: return ">";
    case CmpOp::Ge: return ">=";
    }
    return "?";
}

namespace {

std::shared_ptr<Expr> node(ExprKind kind, std::vector<ExprPtr> args = {}) {
    auto e = std::make_shared<Expr>();
    e->kind = kind;
    e->args = std::move(args);
    return e;
}

ExprPtr make_lit(Scalar v, DataType t) {
    auto e = node(ExprKind::Lit);
    e->bound = true;
    e->type = t;
    e->nullable = is_null(v);
    e->value = std::move(v);
    return e;
}

void require_bound(const ExprPtr& e) {
    if (!e || !e->bound) {
        throw PlanError("internal: operand is not bound");
    }
}

std::string type_name(DataType t) { return std::string(to_string(t)); }

/// Common type of two comparable operands, or nullopt.
std::optional<DataType> common_type(DataType a, DataType b) {
    if (a == b && a != DataType::Bool) {
        return a;
    }
    if (is_numeric(a) && is_numeric(b)) {
        return DataType::Float64;
    }
    return std::nullopt;
}

} // namespace

ExprPtr col(std::string name) {
    auto e = node(ExprKind::ColRef);
    e->name = std::move(name);
    return e;
}

ExprPtr lit_int(std::int64_t v) { return make_lit(v, DataType::Int64); }
ExprPtr lit_float(double v) { return make_lit(v, DataType::Float64); }
ExprPtr lit_date(std::int64_t v) {
    if (!date::valid(v)) {
        throw PlanError("invalid date literal " + std::to_string(v));
    }
    return make_lit(v, DataType::Date);
}
ExprPtr lit_text(std::string v) { return make_lit(std::move(v), DataType::Text); }
ExprPtr lit_bool(bool v) { return make_lit(v, DataType::Bool); }
ExprPtr lit_null(DataType t) { return make_lit(std::monostate{}, t); }

ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r) {
    auto e = node(ExprKind::Arith, {std::move(l), std::move(r)});
    e->op = static_cast<std::uint8_t>(op);
    return e;
}

ExprPtr cmp(CmpOp op, ExprPtr l, ExprPtr r) {
    auto e = node(ExprKind::Cmp, {std::move(l), std::move(r)});
    e->op = static_cast<std::uint8_t>(op);
    return e;
}

ExprPtr and_(ExprPtr l, ExprPtr r) {
    auto e = node(ExprKind::Bool, {std::move(l), std::move(r)});
    e->op = static_cast<std::uint8_t>(BoolOp::And);
    return e;
}

ExprPtr or_(ExprPtr l, ExprPtr r) {
    auto e = node(ExprKind::Bool, {std::move(l), std::move(r)});
    e->op = static_cast<std::uint8_t>(BoolOp::Or);
    return e;
}

ExprPtr not_(ExprPtr a) {
    auto e = node(ExprKind::Bool, {std::move(a)});
    e->op = static_cast<std::uint8_t>(BoolOp::Not);
    return e;
}

ExprPtr between(ExprPtr x, ExprPtr lo, ExprPtr hi) {
    return node(ExprKind::Between, {std::move(x), std::move(lo), std::move(hi)});
}

ExprPtr starts_with(ExprPtr x, std::string prefix) {
    auto e = node(ExprKind::StartsWith, {std::move(x)});
    e->value = std::move(prefix);
    return e;
}

ExprPtr udf_call(std::string name, std::vector<ExprPtr> args) {
    auto e = node(ExprKind::UdfCall, std::move(args));
    e->name = std::move(name);
    return e;
}

ExprPtr cond(ExprPtr c, ExprPtr a, ExprPtr b) { return node(ExprKind::Cond, {std::move(c), std::move(a), std::move(b)}); }

namespace typed {

ExprPtr coerce(ExprPtr e, DataType target) {
    require_bound(e);
    if (e->type == target) {
        return e;
    }
    if (e->type == DataType::Int64 && target == DataType::Float64) {
        auto c = node(ExprKind::Cast, {e});
        c->bound = true;
        c->type = DataType::Float64;
        c->nullable = e->nullable;
        return c;
    }
    throw PlanError("cannot convert " + type_name(e->type) + " to " + type_name(target) + " in " +
                    expr_to_sql(e));
}

ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r) {
    require_bound(l);
    require_bound(r);
    if (!is_numeric(l->type) || !is_numeric(r->type)) {
        throw PlanError("arithmetic '" + std::string(to_string(op)) + "' requires numeric operands, got " +
                        type_name(l->type) + " and " + type_name(r->type));
    }
    DataType t = (op == ArithOp::Div || l->type == DataType::Float64 || r->type == DataType::Float64)
                     ? DataType::Float64
                     : DataType::Int64;
    auto e = node(ExprKind::Arith, {coerce(l, t), coerce(r, t)});
    e->op = static_cast<std::uint8_t>(op);
    e->bound = true;
    e->type = t;
    e->nullable = l->nullable || r->nullable;
    return e;
}

ExprPtr cmp(CmpOp op, ExprPtr l, ExprPtr r) {
    require_bound(l);
    require_bound(r);
    auto t = common_type(l->type, r->type);
    if (!t) {
        throw PlanError("type mismatch in comparison: " + type_name(l->type) + " " + std::string(to_string(op)) +
                        " " + type_name(r->type));
    }
    auto e = node(ExprKind::Cmp, {coerce(l, *t), coerce(r, *t)});
    e->op = static_cast<std::uint8_t>(op);
    e->bound = true;
    e->type = DataType::Bool;
    return e;
}

ExprPtr logic(BoolOp op, std::vector<ExprPtr> args) {
    std::size_t want = op == BoolOp::Not ? 1 : 2;
    if (args.size() != want) {
        throw PlanError("boolean operator arity mismatch");
    }
    for (const auto& a : args) {
        require_bound(a);
        if (a->type != DataType::Bool) {
            throw PlanError("boolean operator requires Bool operands, got " + type_name(a->type));
        }
    }
    auto e = node(ExprKind::Bool, std::move(args));
    e->op = static_cast<std::uint8_t>(op);
    e->bound = true;
    e->type = DataType::Bool;
    return e;
}

ExprPtr between(ExprPtr x, ExprPtr lo, ExprPtr hi) {
    require_bound(x);
    require_bound(lo);
    require_bound(hi);
    auto t1 = common_type(x->type, lo->type);
    auto t2 = common_type(x->type, hi->type);
    if (!t1 || !t2) {
        throw PlanError("type mismatch in BETWEEN: " + type_name(x->type) + " between " + type_name(lo->type) +
                        " and " + type_name(hi->type));
    }
    DataType t = (*t1 == DataType::Float64 || *t2 == DataType::Float64) ? DataType::Float64 : *t1;
    auto e = node(ExprKind::Between, {coerce(x, t), coerce(lo, t), coerce(hi, t)});
    e->bound = true;
    e->type = DataType::Bool;
    return e;
}

ExprPtr starts_with(ExprPtr x, std::string prefix) {
    require_bound(x);
    if (x->type != DataType::Text) {
        throw PlanError("starts_with requires Text, got " + type_name(x->type));
    }
    auto e = node(ExprKind::StartsWith, {std::move(x)});
    e->value = std::move(prefix);
    e->bound = true;
    e->type = DataType::Bool;
    return e;
}

ExprPtr cond(ExprPtr c, ExprPtr a, ExprPtr b) {
    require_bound(c);
    require_bound(a);
    require_bound(b);
    if (c->type != DataType::Bool) {
        throw PlanError("conditional requires a Bool condition, got " + type_name(c->type));
    }
    DataType t = a->type;
    if (a->type != b->type) {
        auto ct = common_type(a->type, b->type);
        if (!ct) {
            throw PlanError("conditional branches have incompatible types " + type_name(a->type) + " and " +
                            type_name(b->type));
        }
        t = *ct;
    }
    auto e = node(ExprKind::Cond, {std::move(c), coerce(a, t), coerce(b, t)});
    e->bound = true;
    e->type = t;
    e->nullable = a->nullable || b->nullable;
    return e;
}

ExprPtr udf_call(const UdfSignature& sig, std::string name, std::vector<ExprPtr> args) {
    if (args.size() != sig.params.size()) {
        throw PlanError("UDF " + name + " expects " + std::to_string(sig.params.size()) + " arguments, got " +
                        std::to_string(args.size()));
    }
    bool nullable = false;
    for (std::size_t i = 0; i < args.size(); ++i) {
        require_bound(args[i]);
        if (args[i]->type != sig.params[i] &&
            !(args[i]->type == DataType::Int64 && sig.params[i] == DataType::Float64)) {
            throw PlanError("UDF " + name + " argument " + std::to_string(i) + ": expected " +
                            type_name(sig.params[i]) + ", got " + type_name(args[i]->type));
        }
        args[i] = coerce(args[i], sig.params[i]);
        nullable = nullable || args[i]->nullable;
    }
    auto e = node(ExprKind::UdfCall, std::move(args));
    e->name = std::move(name);
    e->bound = true;
    e->type = sig.result;
    e->nullable = nullable;
    return e;
}

} // namespace typed

ExprPtr bind(const ExprPtr& e, const Schema& input, const UdfResolver* udfs) {
    switch (e->kind) {
    case ExprKind::ColRef: {
        auto ref = input.resolve(e->name);
        auto out = node(ExprKind::ColRef);
        out->name = e->name;
        out->bound = true;
        out->type = ref.dtype;
        out->nullable = input[ref.ordinal].nullable;
        return out;
    }
    case ExprKind::Lit: return e;
    case ExprKind::Cast: return typed::coerce(bind(e->args[0], input, udfs), e->type);
    default: break;
    }
    std::vector<ExprPtr> args;
    args.reserve(e->args.size());
    for (const auto& a : e->args) {
        args.push_back(bind(a, input, udfs));
    }
    switch (e->kind) {
    case ExprKind::Arith: return typed::arith(e->arith_op(), args[0], args[1]);
    case ExprKind::Cmp: return typed::cmp(e->cmp_op(), args[0], args[1]);
    case ExprKind::Bool: return typed::logic(e->bool_op(), std::move(args));
    case ExprKind::Between: return typed::between(args[0], args[1], args[2]);
    case ExprKind::StartsWith: return typed::starts_with(args[0], std::get<std::string>(e->value));
    case ExprKind::Cond: return typed::cond(args[0], args[1], args[2]);
    case ExprKind::UdfCall: {
        const UdfSignature* sig = udfs ? udfs->find_signature(e->name) : nullptr;
        if (!sig) {
            throw PlanError("unknown UDF " + e->name);
        }
        return typed::udf_call(*sig, e->name, std::move(args));
    }
    default: break;
    }
    throw PlanError("internal: unexpected expression kind");
}

bool expr_equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) {
        return true;
    }
    if (!a || !b) {
        return false;
    }
    if (a->kind != b->kind || a->bound != b->bound || a->type != b->type || a->nullable != b->nullable ||
        a->op != b->op || a->name != b->name || a->args.size() != b->args.size()) {
        return false;
    }
    if (a->value.index() != b->value.index()) {
        return false;
    }
    if (auto* x = std::get_if<double>(&a->value)) {
        double y = std::get<double>(b->value);
        if (std::memcmp(x, &y, sizeof(double)) != 0) {
            return false;
        }
    } else if (a->value != b->value) {
        return false;
    }
    for (std::size_t i = 0; i < a->args.size(); ++i) {
        if (!expr_equal(a->args[i], b->args[i])) {
            return false;
        }
    }
    return true;
}

namespace {
void collect_columns(const ExprPtr& e, std::set<std::string>& out) {
    if (e->kind == ExprKind::ColRef) {
        out.insert(e->name);
    }
    for (const auto& a : e->args) {
        collect_columns(a, out);
    }
}
} // namespace

std::set<std::string> referenced_columns(const ExprPtr& e) {
    std::set<std::string> out;
    if (e) {
        collect_columns(e, out);
    }
    return out;
}

bool contains_udf_call(const ExprPtr& e) {
    if (e->kind == ExprKind::UdfCall) {
        return true;
    }
    for (const auto& a : e->args) {
        if (contains_udf_call(a)) {
            return true;
        }
    }
    return false;
}

bool is_literal(const ExprPtr& e) { return e->kind == ExprKind::Lit; }

ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& mapping) {
    if (e->kind == ExprKind::ColRef) {
        auto it = mapping.find(e->name);
        return it == mapping.end() ? e : it->second;
    }
    if (e->args.empty()) {
        return e;
    }
    auto copy = std::make_shared<Expr>(*e);
    for (auto& a : copy->args) {
        a = substitute(a, mapping);
    }
    return copy;
}

std::vector<ExprPtr> split_conjuncts(const ExprPtr& e) {
    std::vector<ExprPtr> out;
    if (!e) {
        return out;
    }
    if (e->kind == ExprKind::Bool && e->bool_op() == BoolOp::And) {
        for (const auto& a : e->args) {
            auto sub = split_conjuncts(a);
            out.insert(out.end(), sub.begin(), sub.end());
        }
    } else {
        out.push_back(e);
    }
    return out;
}

ExprPtr make_conjunction(std::span<const ExprPtr> conjuncts) {
    ExprPtr acc;
    for (const auto& c : conjuncts) {
        if (!acc) {
            acc = c;
        } else if (acc->bound && c->bound) {
            acc = typed::logic(BoolOp::And, {acc, c});
        } else {
            acc = and_(acc, c);
        }
    }
    return acc;
}

namespace {

bool lit_bool_value(const ExprPtr& e, bool& out) {
    if (e->kind != ExprKind::Lit || e->type != DataType::Bool || is_null(e->value)) {
        return false;
    }
    out = std::get<bool>(e->value);
    return true;
}

int compare_scalars(const Scalar& a, const Scalar& b) {
    if (auto* x = std::get_if<std::int64_t>(&a)) {
        auto y = std::get<std::int64_t>(b);
        return *x < y ? -1 : (*x > y ? 1 : 0);
    }
    if (auto* x = std::get_if<double>(&a)) {
        auto y = std::get<double>(b);
        return *x < y ? -1 : (*x > y ? 1 : (*x == y ? 0 : 2)); // 2: unordered (NaN)
    }
    const auto& x = std::get<std::string>(a);
    const auto& y = std::get<std::string>(b);
    int c = x.compare(y);
    return c < 0 ? -1 : (c > 0 ? 1 : 0);
}

bool cmp_holds(CmpOp op, int c) {
    if (c == 2) {
        return op == CmpOp::Ne;
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

/// Evaluates a node whose arguments are all literals.
std::optional<Scalar> eval_literal_node(const Expr& e) {
    auto arg = [&](std::size_t i) -> const Scalar& { return e.args[i]->value; };
    switch (e.kind) {
    case ExprKind::Cast:
        if (is_null(arg(0))) return Scalar{};
        return Scalar{static_cast<double>(std::get<std::int64_t>(arg(0)))};
    case ExprKind::Arith: {
        if (is_null(arg(0)) || is_null(arg(1))) return Scalar{};
        if (e.type == DataType::Int64) {
            auto a = std::get<std::int64_t>(arg(0));
            auto b = std::get<std::int64_t>(arg(1));
            std::int64_t r = 0;
            bool overflow = false;
            switch (e.arith_op()) {
            case ArithOp::Add: overflow = __builtin_add_overflow(a, b, &r); break;
            case ArithOp::Sub: overflow = __builtin_sub_overflow(a, b, &r); break;
            case ArithOp::Mul: overflow = __builtin_mul_overflow(a, b, &r); break;
            case ArithOp::Div: return std::nullopt;
            }
            if (overflow) return std::nullopt;
            return Scalar{r};
        }
        double a = std::get<double>(arg(0));
        double b = std::get<double>(arg(1));
        switch (e.arith_op()) {
        case ArithOp::Add: return Scalar{a + b};
        case ArithOp::Sub: return Scalar{a - b};
        case ArithOp::Mul: return Scalar{a * b};
        case ArithOp::Div: return Scalar{a / b};
        }
        return std::nullopt;
    }
    case ExprKind::Cmp:
        if (is_null(arg(0)) || is_null(arg(1))) return Scalar{false};
        return Scalar{cmp_holds(e.cmp_op(), compare_scalars(arg(0), arg(1)))};
    case ExprKind::Bool:
        if (e.bool_op() == BoolOp::Not) return Scalar{!std::get<bool>(arg(0))};
        if (e.bool_op() == BoolOp::And) return Scalar{std::get<bool>(arg(0)) && std::get<bool>(arg(1))};
        return Scalar{std::get<bool>(arg(0)) || std::get<bool>(arg(1))};
    case ExprKind::Between:
        if (is_null(arg(0)) || is_null(arg(1)) || is_null(arg(2))) return Scalar{false};
        return Scalar{cmp_holds(CmpOp::Ge, compare_scalars(arg(0), arg(1))) &&
                      cmp_holds(CmpOp::Le, compare_scalars(arg(0), arg(2)))};
    case ExprKind::StartsWith: {
        if (is_null(arg(0))) return Scalar{false};
        const auto& s = std::get<std::string>(arg(0));
        const auto& p = std::get<std::string>(e.value);
        return Scalar{s.compare(0, p.size(), p) == 0 && s.size() >= p.size()};
    }
    case ExprKind::Cond: return std::get<bool>(arg(0)) ? arg(1) : arg(2);
    default: return std::nullopt;
    }
}

} // namespace

ExprPtr fold_constants(const ExprPtr& e) {
    if (e->args.empty() || e->kind == ExprKind::UdfCall) {
        if (e->kind == ExprKind::UdfCall) {
            auto copy = std::make_shared<Expr>(*e);
            for (auto& a : copy->args) a = fold_constants(a);
            return copy;
        }
        return e;
    }
    auto copy = std::make_shared<Expr>(*e);
    bool all_lit = true;
    for (auto& a : copy->args) {
        a = fold_constants(a);
        all_lit = all_lit && is_literal(a);
    }
    if (copy->kind == ExprKind::Bool && copy->bool_op() != BoolOp::Not) {
        bool v = false;
        bool is_and = copy->bool_op() == BoolOp::And;
        for (std::size_t i = 0; i < 2; ++i) {
            if (lit_bool_value(copy->args[i], v)) {
                if (v == !is_and) {
                    return lit_bool(v); // absorbing element
                }
                return copy->args[1 - i]; // identity element
            }
        }
    }
    if (all_lit && copy->bound) {
        if (auto v = eval_literal_node(*copy)) {
            return make_lit(std::move(*v), copy->type);
        }
    }
    return copy;
}

std::string literal_to_sql(const Scalar& v, DataType t) {
    if (is_null(v)) {
        return "NULL";
    }
    switch (t) {
    case DataType::Int64: return std::to_string(std::get<std::int64_t>(v));
    case DataType::Float64: {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof(buf), std::get<double>(v));
        std::string s(buf, r.ptr);
        if (s.find_first_of(".eEn") == std::string::npos) {
            s += ".0";
        }
        return s;
    }
    case DataType::Date: return "date '" + date::format(std::get<std::int64_t>(v)) + "'";
    case DataType::Text: {
        std::string out = "'";
        for (char c : std::get<std::string>(v)) {
            out += c;
            if (c == '\'') out += '\'';
        }
        return out + "'";
    }
    case DataType::Bool: return std::get<bool>(v) ? "true" : "false";
    }
    return "?";
}

namespace {

std::string render(const ExprPtr& e, bool nested) {
    auto sub = [](const ExprPtr& a) { return render(a, true); };
    auto wrap = [&](std::string s) { return nested ? "(" + s + ")" : s; };
    switch (e->kind) {
    case ExprKind::ColRef: return e->name;
    case ExprKind::Lit: return literal_to_sql(e->value, e->type);
    case ExprKind::Cast: return render(e->args[0], nested);
    case ExprKind::Arith:
        return wrap(sub(e->args[0]) + " " + std::string(to_string(e->arith_op())) + " " + sub(e->args[1]));
    case ExprKind::Cmp:
        return wrap(sub(e->args[0]) + " " + std::string(to_string(e->cmp_op())) + " " + sub(e->args[1]));
    case ExprKind::Bool:
        if (e->bool_op() == BoolOp::Not) return wrap("NOT " + sub(e->args[0]));
        return wrap(sub(e->args[0]) + (e->bool_op() == BoolOp::And ? " AND " : " OR ") + sub(e->args[1]));
    case ExprKind::Between:
        return wrap(sub(e->args[0]) + " BETWEEN " + sub(e->args[1]) + " AND " + sub(e->args[2]));
    case ExprKind::StartsWith:
        return "starts_with(" + render(e->args[0], false) + ", " +
               literal_to_sql(e->value, DataType::Text) + ")";
    case ExprKind::UdfCall:
    case ExprKind::Cond: {
        std::string s = e->kind == ExprKind::Cond ? "if(" : e->name + "(";
        for (std::size_t i = 0; i < e->args.size(); ++i) {
            if (i) s += ", ";
            s += render(e->args[i], false);
        }
        return s + ")";
    }
    }
    return "?";
}

} // namespace

std::string expr_to_sql(const ExprPtr& e) {
    return render(e, false);
}

} // namespace flarelite
