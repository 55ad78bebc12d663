#include "flarelite/plan.hpp"

#include "flarelite/catalog.hpp"
#include "flarelite/error.hpp"

#include <algorithm>

namespace flarelite {

std::string_view to_string(PlanKind k) {
    switch (k) {
    case PlanKind::Scan: return "Scan";
    case PlanKind::Filter: return "Filter";
    case PlanKind::Project: return "Project";
    case PlanKind::Join: return "Join";
    case PlanKind::Aggregate: return "Aggregate";
    case PlanKind::Sort: return "Sort";
    case PlanKind::Limit: return "Limit";
    case PlanKind::Empty: return "Empty";
    }
    return "?";
}

std::string_view to_string(JoinKind k) {
    switch (k) {
    case JoinKind::Inner: return "inner";
    case JoinKind::LeftOuter: return "left_outer";
    case JoinKind::LeftSemi: return "left_semi";
    case JoinKind::LeftAnti: return "left_anti";
    }
    return "?";
}

std::string_view to_string(AggFn f) {
    switch (f) {
    case AggFn::Sum: return "SUM";
    case AggFn::Count: return "COUNT";
    case AggFn::Avg: return "AVG";
    case AggFn::Min: return "MIN";
    case AggFn::Max: return "MAX";
    }
    return "?";
}

namespace {

Schema make_schema(std::vector<ColumnDef> defs, std::string_view what) {
    try {
        return Schema(std::move(defs));
    } catch (const PlanError& e) {
        throw PlanError(std::string(what) + ": " + e.what());
    }
}

void require_storable(const ExprPtr& e, std::string_view what) {
    if (!is_storable(e->type)) {
        throw PlanError(std::string(what) + " cannot produce a Bool column: " + expr_to_sql(e));
    }
}

Schema project_schema(const std::vector<NamedExpr>& exprs) {
    std::vector<ColumnDef> defs;
    for (const auto& ne : exprs) {
        require_storable(ne.expr, "projection");
        defs.push_back({ne.name, ne.expr->type, ne.expr->nullable});
    }
    return make_schema(std::move(defs), "projection");
}

Schema join_schema(JoinKind kind, const Schema& left, const Schema& right) {
    if (kind == JoinKind::LeftSemi || kind == JoinKind::LeftAnti) {
        return left;
    }
    std::vector<ColumnDef> defs = left.columns();
    for (auto c : right.columns()) {
        if (kind == JoinKind::LeftOuter) {
            c.nullable = true;
        }
        if (left.find(c.name)) {
            throw PlanError("ambiguous column " + c.name + " in join output");
        }
        defs.push_back(c);
    }
    return Schema(std::move(defs));
}

DataType agg_result_type(const AggSpec& a) {
    switch (a.fn) {
    case AggFn::Count: return DataType::Int64;
    case AggFn::Avg: return DataType::Float64;
    default: return a.arg->type;
    }
}

Schema aggregate_schema(const std::vector<NamedExpr>& keys, const std::vector<AggSpec>& aggs) {
    std::vector<ColumnDef> defs;
    for (const auto& k : keys) {
        require_storable(k.expr, "group key");
        defs.push_back({k.name, k.expr->type, k.expr->nullable});
    }
    for (const auto& a : aggs) {
        defs.push_back({a.name, agg_result_type(a), a.fn != AggFn::Count});
    }
    return make_schema(std::move(defs), "aggregate");
}

std::shared_ptr<PlanNode> make(PlanKind kind, std::vector<PlanPtr> children) {
    auto n = std::make_shared<PlanNode>();
    n->kind = kind;
    n->children = std::move(children);
    return n;
}

} // namespace

namespace plan {

PlanPtr scan(const Catalog& catalog, const std::string& table) {
    const auto& entry = catalog.lookup(table);
    return scan_columns(table, entry.schema, entry.schema.names());
}

PlanPtr scan_columns(const std::string& table, const Schema& table_schema, const std::vector<std::string>& columns) {
    auto n = make(PlanKind::Scan, {});
    n->table = table;
    std::vector<ColumnDef> defs;
    for (const auto& c : table_schema.columns()) {
        if (std::find(columns.begin(), columns.end(), c.name) != columns.end()) {
            defs.push_back(c);
            n->columns.push_back(c.name);
        }
    }
    for (const auto& c : columns) {
        table_schema.resolve(c);
    }
    n->schema = Schema(std::move(defs));
    return n;
}

PlanPtr filter(PlanPtr child, const ExprPtr& predicate, const UdfResolver* udfs) {
    auto pred = bind(predicate, child->schema, udfs);
    if (pred->type != DataType::Bool) {
        throw PlanError("filter predicate must be Bool, got " + std::string(to_string(pred->type)));
    }
    auto n = make(PlanKind::Filter, {child});
    n->schema = child->schema;
    n->predicate = std::move(pred);
    return n;
}

PlanPtr project(PlanPtr child, const std::vector<NamedExpr>& exprs, const UdfResolver* udfs) {
    auto n = make(PlanKind::Project, {child});
    for (const auto& ne : exprs) {
        n->exprs.push_back({bind(ne.expr, child->schema, udfs), ne.name});
    }
    n->schema = project_schema(n->exprs);
    return n;
}

PlanPtr join(JoinKind kind, PlanPtr left, PlanPtr right, const std::vector<JoinKey>& keys, const UdfResolver* udfs) {
    if (keys.empty()) {
        throw PlanError("join requires at least one equi-key");
    }
    auto n = make(PlanKind::Join, {left, right});
    n->join_kind = kind;
    for (const auto& k : keys) {
        auto l = bind(k.left, left->schema, udfs);
        auto r = bind(k.right, right->schema, udfs);
        if (l->type != r->type || !is_storable(l->type)) {
            throw PlanError("join key type mismatch: " + expr_to_sql(l) + " (" + std::string(to_string(l->type)) +
                            ") = " + expr_to_sql(r) + " (" + std::string(to_string(r->type)) + ")");
        }
        n->keys.push_back({std::move(l), std::move(r)});
    }
    n->schema = join_schema(kind, left->schema, right->schema);
    return n;
}

PlanPtr aggregate(PlanPtr child, const std::vector<NamedExpr>& group_keys, const std::vector<AggSpec>& aggs,
                  const UdfResolver* udfs) {
    auto n = make(PlanKind::Aggregate, {child});
    for (const auto& k : group_keys) {
        n->exprs.push_back({bind(k.expr, child->schema, udfs), k.name});
    }
    for (const auto& a : aggs) {
        AggSpec spec{a.fn, nullptr, a.name};
        if (a.arg) {
            spec.arg = bind(a.arg, child->schema, udfs);
            DataType t = spec.arg->type;
            bool ok = true;
            switch (a.fn) {
            case AggFn::Sum:
            case AggFn::Avg: ok = is_numeric(t); break;
            case AggFn::Min:
            case AggFn::Max: ok = is_numeric(t) || t == DataType::Date; break;
            case AggFn::Count: ok = is_storable(t); break;
            }
            if (!ok) {
                throw PlanError(std::string(to_string(a.fn)) + " does not accept " + std::string(to_string(t)) +
                                " argument " + expr_to_sql(spec.arg));
            }
        } else if (a.fn != AggFn::Count) {
            throw PlanError(std::string(to_string(a.fn)) + " requires an argument");
        }
        n->aggs.push_back(std::move(spec));
    }
    n->schema = aggregate_schema(n->exprs, n->aggs);
    return n;
}

PlanPtr sort(PlanPtr child, const std::vector<SortKey>& keys) {
    for (const auto& k : keys) {
        child->schema.resolve(k.column);
    }
    auto n = make(PlanKind::Sort, {child});
    n->schema = child->schema;
    n->sort_keys = keys;
    return n;
}

PlanPtr limit(PlanPtr child, std::int64_t count) {
    if (count < 0) {
        throw PlanError("LIMIT must be non-negative");
    }
    auto n = make(PlanKind::Limit, {child});
    n->schema = child->schema;
    n->limit = count;
    return n;
}

PlanPtr empty(const Schema& schema) {
    auto n = make(PlanKind::Empty, {});
    n->schema = schema;
    return n;
}

PlanPtr with_children(const PlanNode& node, std::vector<PlanPtr> children) {
    auto n = std::make_shared<PlanNode>(node);
    n->children = std::move(children);
    switch (n->kind) {
    case PlanKind::Filter:
    case PlanKind::Sort:
    case PlanKind::Limit: n->schema = n->children[0]->schema; break;
    case PlanKind::Project: n->schema = project_schema(n->exprs); break;
    case PlanKind::Join: n->schema = join_schema(n->join_kind, n->children[0]->schema, n->children[1]->schema); break;
    case PlanKind::Aggregate: n->schema = aggregate_schema(n->exprs, n->aggs); break;
    case PlanKind::Scan:
    case PlanKind::Empty: break;
    }
    return n;
}

} // namespace plan

bool plan_equal(const PlanPtr& a, const PlanPtr& b) {
    if (a == b) return true;
    if (!a || !b) return false;
    if (a->kind != b->kind || !(a->schema == b->schema) || a->children.size() != b->children.size() ||
        a->table != b->table || a->columns != b->columns || a->join_kind != b->join_kind || a->limit != b->limit ||
        a->exprs.size() != b->exprs.size() || a->keys.size() != b->keys.size() || a->aggs.size() != b->aggs.size() ||
        a->sort_keys.size() != b->sort_keys.size()) {
        return false;
    }
    if (!expr_equal(a->predicate, b->predicate)) return false;
    for (std::size_t i = 0; i < a->exprs.size(); ++i) {
        if (a->exprs[i].name != b->exprs[i].name || !expr_equal(a->exprs[i].expr, b->exprs[i].expr)) return false;
    }
    for (std::size_t i = 0; i < a->keys.size(); ++i) {
        if (!expr_equal(a->keys[i].left, b->keys[i].left) || !expr_equal(a->keys[i].right, b->keys[i].right)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a->aggs.size(); ++i) {
        if (a->aggs[i].fn != b->aggs[i].fn || a->aggs[i].name != b->aggs[i].name ||
            !expr_equal(a->aggs[i].arg, b->aggs[i].arg)) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a->sort_keys.size(); ++i) {
        if (a->sort_keys[i].column != b->sort_keys[i].column ||
            a->sort_keys[i].ascending != b->sort_keys[i].ascending) {
            return false;
        }
    }
    for (std::size_t i = 0; i < a->children.size(); ++i) {
        if (!plan_equal(a->children[i], b->children[i])) return false;
    }
    return true;
}

namespace {

std::string join_list(const std::vector<std::string>& items) {
    std::string s;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) s += ", ";
        s += items[i];
    }
    return s;
}

std::string agg_to_string(const AggSpec& a) {
    return std::string(to_string(a.fn)) + "(" + (a.arg ? expr_to_sql(a.arg) : "*") + ") AS " + a.name;
}

} // namespace

std::string describe_node(const PlanNode& n) {
    std::vector<std::string> items;
    switch (n.kind) {
    case PlanKind::Scan: return "Scan " + n.table + " [" + join_list(n.columns) + "]";
    case PlanKind::Filter: return "Filter " + expr_to_sql(n.predicate);
    case PlanKind::Project:
        for (const auto& e : n.exprs) {
            auto s = expr_to_sql(e.expr);
            items.push_back(s == e.name ? s : s + " AS " + e.name);
        }
        return "Project [" + join_list(items) + "]";
    case PlanKind::Join:
        for (const auto& k : n.keys) {
            items.push_back(expr_to_sql(k.left) + " = " + expr_to_sql(k.right));
        }
        return "Join " + std::string(to_string(n.join_kind)) + " [" + join_list(items) + "]";
    case PlanKind::Aggregate: {
        for (const auto& e : n.exprs) {
            auto s = expr_to_sql(e.expr);
            items.push_back(s == e.name ? s : s + " AS " + e.name);
        }
        std::vector<std::string> aggs;
        for (const auto& a : n.aggs) {
            aggs.push_back(agg_to_string(a));
        }
        return "Aggregate keys=[" + join_list(items) + "] aggs=[" + join_list(aggs) + "]";
    }
    case PlanKind::Sort:
        for (const auto& k : n.sort_keys) {
            items.push_back(k.column + (k.ascending ? " ASC" : " DESC"));
        }
        return "Sort [" + join_list(items) + "]";
    case PlanKind::Limit: return "Limit " + std::to_string(n.limit);
    case PlanKind::Empty: return "Empty [" + join_list(n.schema.names()) + "]";
    }
    return "?";
}

namespace {
void dump(const PlanPtr& p, int depth, std::string& out) {
    out += std::string(static_cast<std::size_t>(depth) * 2, ' ') + describe_node(*p) + "\n";
    for (const auto& c : p->children) {
        dump(c, depth + 1, out);
    }
}
} // namespace

std::string plan_to_string(const PlanPtr& p) {
    std::string out;
    dump(p, 0, out);
    return out;
}

std::size_t plan_depth(const PlanPtr& p) {
    std::size_t d = 0;
    for (const auto& c : p->children) {
        d = std::max(d, plan_depth(c));
    }
    return d + 1;
}

} // namespace flarelite
