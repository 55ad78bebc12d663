#include "flarelite/udf.hpp"

#include "flarelite/error.hpp"

#include <cctype>

namespace flarelite {

StagedValue::StagedValue(ExprPtr e) : expr_(std::move(e)) {
    if (!expr_ || !expr_->bound) {
        throw PlanError("staged values must wrap bound expressions");
    }
}
StagedValue::StagedValue(int v) : expr_(lit_int(v)) {}
StagedValue::StagedValue(std::int64_t v) : expr_(lit_int(v)) {}
StagedValue::StagedValue(double v) : expr_(lit_float(v)) {}

StagedValue operator+(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::arith(ArithOp::Add, a.expr(), b.expr())); }
StagedValue operator-(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::arith(ArithOp::Sub, a.expr(), b.expr())); }
StagedValue operator*(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::arith(ArithOp::Mul, a.expr(), b.expr())); }
StagedValue operator/(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::arith(ArithOp::Div, a.expr(), b.expr())); }
StagedValue operator-(const StagedValue& a) { return StagedValue(0) - a; }
StagedValue operator==(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Eq, a.expr(), b.expr())); }
StagedValue operator!=(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Ne, a.expr(), b.expr())); }
StagedValue operator<(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Lt, a.expr(), b.expr())); }
StagedValue operator<=(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Le, a.expr(), b.expr())); }
StagedValue operator>(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Gt, a.expr(), b.expr())); }
StagedValue operator>=(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::cmp(CmpOp::Ge, a.expr(), b.expr())); }
StagedValue operator&&(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::logic(BoolOp::And, {a.expr(), b.expr()})); }
StagedValue operator||(const StagedValue& a, const StagedValue& b) { return StagedValue(typed::logic(BoolOp::Or, {a.expr(), b.expr()})); }
StagedValue operator!(const StagedValue& a) { return StagedValue(typed::logic(BoolOp::Not, {a.expr()})); }

StagedValue if_(const StagedValue& c, const StagedValue& a, const StagedValue& b) {
    return StagedValue(typed::cond(c.expr(), a.expr(), b.expr()));
}

StagedValue starts_with(const StagedValue& s, std::string prefix) {
    return StagedValue(typed::starts_with(s.expr(), std::move(prefix)));
}

namespace {

bool valid_name(const std::string& n) {
    if (n.empty() || !(std::isalpha(static_cast<unsigned char>(n[0])) || n[0] == '_')) return false;
    for (char c : n) {
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_') return false;
    }
    return true;
}

bool reserved(std::string n) {
    for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return n == "sum" || n == "count" || n == "avg" || n == "min" || n == "max" || n == "starts_with";
}

std::vector<StagedValue> placeholders(const std::vector<DataType>& params) {
    std::vector<StagedValue> out;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto e = std::make_shared<Expr>();
        e->kind = ExprKind::ColRef;
        e->name = "$arg" + std::to_string(i);
        e->bound = true;
        e->type = params[i];
        out.emplace_back(ExprPtr(e));
    }
    return out;
}

} // namespace

UdfRegistry::UdfRegistry() {
    UdfDef def;
    def.name = "if";
    def.params = {DataType::Bool, DataType::Float64, DataType::Float64};
    def.result = DataType::Float64;
    def.builder = [](std::span<const StagedValue> a) { return if_(a[0], a[1], a[2]); };
    register_udf(std::move(def));
}

void UdfRegistry::register_udf(UdfDef def, bool replace) {
    if (!valid_name(def.name) || reserved(def.name)) {
        throw PlanError("invalid UDF name '" + def.name + "'");
    }
    if (def.aggregate) {
        throw PlanError("UDF " + def.name + ": aggregate UDFs are not supported");
    }
    if (!def.deterministic) {
        throw PlanError("UDF " + def.name + ": only deterministic UDFs can be registered");
    }
    if (!def.builder) {
        throw PlanError("UDF " + def.name + " has no builder");
    }
    if (!replace && udfs_.count(def.name)) {
        throw PlanError("UDF " + def.name + " is already registered");
    }
    if (!is_storable(def.result)) {
        throw PlanError("UDF " + def.name + " must return a storable type");
    }
    // Stage the body twice over placeholders: checks the declared result
    // type and that the builder produces the same shape each time.
    auto args = placeholders(def.params);
    ExprPtr first;
    ExprPtr second;
    try {
        first = def.builder(args).expr();
        second = def.builder(args).expr();
    } catch (const PlanError& e) {
        throw PlanError("UDF " + def.name + ": " + e.what());
    }
    if (first->type != def.result) {
        throw PlanError("UDF " + def.name + " declares result " + std::string(to_string(def.result)) +
                        " but its body has type " + std::string(to_string(first->type)));
    }
    if (!expr_equal(first, second)) {
        throw PlanError("UDF " + def.name + ": builder is not pure");
    }
    Entry entry{std::move(def), {}};
    entry.sig.params = entry.def.params;
    entry.sig.result = entry.def.result;
    std::string name = entry.def.name;
    udfs_.insert_or_assign(std::move(name), std::move(entry));
}

const UdfSignature* UdfRegistry::find_signature(std::string_view name) const {
    auto it = udfs_.find(name);
    return it == udfs_.end() ? nullptr : &it->second.sig;
}

const UdfDef* UdfRegistry::find(std::string_view name) const {
    auto it = udfs_.find(name);
    return it == udfs_.end() ? nullptr : &it->second.def;
}

std::vector<std::string> UdfRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& [n, _] : udfs_) out.push_back(n);
    return out;
}

ExprPtr inline_udfs(const ExprPtr& e, const UdfRegistry& registry) {
    if (!e || (e->args.empty() && e->kind != ExprKind::UdfCall)) {
        return e;
    }
    std::vector<ExprPtr> args;
    bool changed = false;
    for (const auto& a : e->args) {
        args.push_back(inline_udfs(a, registry));
        changed = changed || args.back() != a;
    }
    if (e->kind == ExprKind::UdfCall) {
        const UdfDef* def = registry.find(e->name);
        if (!def) {
            throw PlanError("unknown UDF " + e->name);
        }
        std::vector<StagedValue> staged;
        for (std::size_t i = 0; i < args.size(); ++i) {
            staged.emplace_back(typed::coerce(args[i], def->params.at(i)));
        }
        ExprPtr body = def->builder(staged).expr();
        if (body->type != e->type) {
            throw PlanError("UDF " + e->name + " produced " + std::string(to_string(body->type)) + ", expected " +
                            std::string(to_string(e->type)));
        }
        return inline_udfs(body, registry);
    }
    if (!changed) {
        return e;
    }
    auto copy = std::make_shared<Expr>(*e);
    copy->args = std::move(args);
    return copy;
}

PlanPtr inline_udfs(const PlanPtr& p, const UdfRegistry& registry) {
    std::vector<PlanPtr> children;
    for (const auto& c : p->children) {
        children.push_back(inline_udfs(c, registry));
    }
    auto n = std::make_shared<PlanNode>(*p);
    n->children = std::move(children);
    if (n->predicate) n->predicate = inline_udfs(n->predicate, registry);
    for (auto& e : n->exprs) e.expr = inline_udfs(e.expr, registry);
    for (auto& k : n->keys) {
        k.left = inline_udfs(k.left, registry);
        k.right = inline_udfs(k.right, registry);
    }
    for (auto& a : n->aggs) {
        if (a.arg) a.arg = inline_udfs(a.arg, registry);
    }
    return n;
}

} // namespace flarelite
