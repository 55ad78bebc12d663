#include "flarelite/optimizer.hpp"

#include "flarelite/error.hpp"
#include "flarelite/udf.hpp"

#include <algorithm>

namespace flarelite {

std::size_t PhysicalPlan::breaker_count() const {
    return static_cast<std::size_t>(
        std::count_if(info.begin(), info.end(), [](const auto& kv) { return kv.second.breaker; }));
}

namespace {

using Names = std::set<std::string>;

Names names_of(const Schema& s) {
    auto v = s.names();
    return Names(v.begin(), v.end());
}

bool subset(const Names& a, const Names& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

void add_columns(Names& out, const ExprPtr& e) {
    if (!e) return;
    auto cols = referenced_columns(e);
    out.insert(cols.begin(), cols.end());
}

PlanPtr make_filter(PlanPtr child, ExprPtr pred) {
    auto n = std::make_shared<PlanNode>();
    n->kind = PlanKind::Filter;
    n->schema = child->schema;
    n->predicate = std::move(pred);
    n->children = {std::move(child)};
    return n;
}

// ---------------------------------------------------------------------------
// Constant folding

enum class Truth { Unknown, True, False };

Truth literal_truth(const ExprPtr& e) {
    if (e->kind != ExprKind::Lit) return Truth::Unknown;
    if (is_null(e->value)) return Truth::False;
    return std::get<bool>(e->value) ? Truth::True : Truth::False;
}

PlanPtr fold(const PlanPtr& p) {
    std::vector<PlanPtr> children;
    for (const auto& c : p->children) children.push_back(fold(c));
    auto n = std::make_shared<PlanNode>(*p);
    if (n->predicate) n->predicate = fold_constants(n->predicate);
    for (auto& e : n->exprs) e.expr = fold_constants(e.expr);
    for (auto& k : n->keys) {
        k.left = fold_constants(k.left);
        k.right = fold_constants(k.right);
    }
    for (auto& a : n->aggs) {
        if (a.arg) a.arg = fold_constants(a.arg);
    }
    auto is_empty = [&](std::size_t i) { return children[i]->kind == PlanKind::Empty; };
    PlanPtr rebuilt = plan::with_children(*n, children);
    switch (p->kind) {
    case PlanKind::Filter:
        switch (literal_truth(n->predicate)) {
        case Truth::True: return children[0];
        case Truth::False: return plan::empty(rebuilt->schema);
        case Truth::Unknown: break;
        }
        if (is_empty(0)) return plan::empty(rebuilt->schema);
        break;
    case PlanKind::Project:
    case PlanKind::Sort:
        if (is_empty(0)) return plan::empty(rebuilt->schema);
        break;
    case PlanKind::Limit:
        if (is_empty(0) || n->limit == 0) return plan::empty(rebuilt->schema);
        break;
    case PlanKind::Aggregate:
        if (is_empty(0) && !n->exprs.empty()) return plan::empty(rebuilt->schema);
        break;
    case PlanKind::Join:
        if (is_empty(0)) return plan::empty(rebuilt->schema);
        if (is_empty(1)) {
            switch (n->join_kind) {
            case JoinKind::Inner:
            case JoinKind::LeftSemi: return plan::empty(rebuilt->schema);
            case JoinKind::LeftAnti: return children[0];
            case JoinKind::LeftOuter: break;
            }
        }
        break;
    default: break;
    }
    return rebuilt;
}

// ---------------------------------------------------------------------------
// Predicate pushdown

PlanPtr push_filter(const ExprPtr& pred, const PlanPtr& child);

PlanPtr push_down(const PlanPtr& p) {
    std::vector<PlanPtr> children;
    for (const auto& c : p->children) children.push_back(push_down(c));
    if (p->kind == PlanKind::Filter) return push_filter(p->predicate, children[0]);
    return plan::with_children(*p, children);
}

PlanPtr push_filter(const ExprPtr& pred, const PlanPtr& child) {
    switch (child->kind) {
    case PlanKind::Filter: {
        auto conj = split_conjuncts(child->predicate);
        auto outer = split_conjuncts(pred);
        conj.insert(conj.end(), outer.begin(), outer.end());
        return push_filter(make_conjunction(conj), child->child());
    }
    case PlanKind::Project: {
        std::map<std::string, ExprPtr> mapping;
        for (const auto& e : child->exprs) mapping[e.name] = e.expr;
        return plan::with_children(*child, {push_filter(substitute(pred, mapping), child->child())});
    }
    case PlanKind::Sort: return plan::with_children(*child, {push_filter(pred, child->child())});
    case PlanKind::Join: {
        Names left = names_of(child->child(0)->schema);
        Names right = names_of(child->child(1)->schema);
        std::vector<ExprPtr> lp, rp, keep;
        for (const auto& c : split_conjuncts(pred)) {
            auto cols = referenced_columns(c);
            if (subset(cols, left)) {
                lp.push_back(c);
            } else if (child->join_kind == JoinKind::Inner && subset(cols, right)) {
                rp.push_back(c);
            } else {
                keep.push_back(c);
            }
        }
        PlanPtr l = lp.empty() ? child->child(0) : push_filter(make_conjunction(lp), child->child(0));
        PlanPtr r = rp.empty() ? child->child(1) : push_filter(make_conjunction(rp), child->child(1));
        PlanPtr j = plan::with_children(*child, {l, r});
        return keep.empty() ? j : make_filter(j, make_conjunction(keep));
    }
    default: return make_filter(child, pred);
    }
}

// ---------------------------------------------------------------------------
// Column pruning

PlanPtr prune(const PlanPtr& p, const Names& req) {
    switch (p->kind) {
    case PlanKind::Scan: {
        auto n = std::make_shared<PlanNode>(*p);
        n->columns.clear();
        std::vector<ColumnDef> defs;
        for (const auto& c : p->schema.columns()) {
            if (req.count(c.name)) {
                n->columns.push_back(c.name);
                defs.push_back(c);
            }
        }
        n->schema = Schema(std::move(defs));
        return n;
    }
    case PlanKind::Empty: return p;
    case PlanKind::Filter: {
        Names r = req;
        add_columns(r, p->predicate);
        return plan::with_children(*p, {prune(p->child(), r)});
    }
    case PlanKind::Project: {
        auto n = std::make_shared<PlanNode>(*p);
        n->exprs.clear();
        Names r;
        for (const auto& e : p->exprs) {
            if (req.count(e.name)) {
                n->exprs.push_back(e);
                add_columns(r, e.expr);
            }
        }
        PlanPtr child = prune(p->child(), r);
        if (n->exprs.empty()) return child;
        bool identity = n->exprs.size() == child->schema.size();
        for (std::size_t i = 0; identity && i < n->exprs.size(); ++i) {
            const auto& e = n->exprs[i];
            identity = e.expr->kind == ExprKind::ColRef && e.expr->name == e.name && child->schema[i].name == e.name;
        }
        if (identity) return child;
        return plan::with_children(*n, {child});
    }
    case PlanKind::Join: {
        Names left = names_of(p->child(0)->schema);
        Names lr, rr;
        for (const auto& c : req) {
            if (left.count(c)) {
                lr.insert(c);
            } else if (p->join_kind == JoinKind::Inner || p->join_kind == JoinKind::LeftOuter) {
                rr.insert(c);
            }
        }
        for (const auto& k : p->keys) {
            add_columns(lr, k.left);
            add_columns(rr, k.right);
        }
        return plan::with_children(*p, {prune(p->child(0), lr), prune(p->child(1), rr)});
    }
    case PlanKind::Aggregate: {
        auto n = std::make_shared<PlanNode>(*p);
        n->aggs.clear();
        for (const auto& a : p->aggs) {
            if (req.count(a.name)) n->aggs.push_back(a);
        }
        if (n->aggs.empty() && n->exprs.empty() && !p->aggs.empty()) n->aggs.push_back(p->aggs[0]);
        Names r;
        for (const auto& k : n->exprs) add_columns(r, k.expr);
        for (const auto& a : n->aggs) add_columns(r, a.arg);
        return plan::with_children(*n, {prune(p->child(), r)});
    }
    case PlanKind::Sort: {
        Names r = req;
        for (const auto& k : p->sort_keys) r.insert(k.column);
        return plan::with_children(*p, {prune(p->child(), r)});
    }
    case PlanKind::Limit: return plan::with_children(*p, {prune(p->child(), req)});
    }
    return p;
}

// ---------------------------------------------------------------------------
// Annotation

struct Annotator {
    PhysicalPlan& out;

    void required(const PlanPtr& p, const Names& req) {
        auto& info = out.info[p.get()];
        for (const auto& c : p->schema.columns()) {
            if (req.count(c.name)) info.required.push_back(c.name);
        }
        switch (p->kind) {
        case PlanKind::Scan:
        case PlanKind::Empty: return;
        case PlanKind::Filter: {
            Names r = req;
            add_columns(r, p->predicate);
            required(p->child(), r);
            return;
        }
        case PlanKind::Project: {
            Names r;
            for (const auto& e : p->exprs) {
                if (req.count(e.name)) add_columns(r, e.expr);
            }
            required(p->child(), r);
            return;
        }
        case PlanKind::Join: {
            Names left = names_of(p->child(0)->schema);
            Names right = names_of(p->child(1)->schema);
            Names lr, rr;
            for (const auto& c : req) {
                if (left.count(c)) lr.insert(c);
                if (right.count(c) && (p->join_kind == JoinKind::Inner || p->join_kind == JoinKind::LeftOuter)) {
                    rr.insert(c);
                }
            }
            for (const auto& k : p->keys) {
                add_columns(lr, k.left);
                add_columns(rr, k.right);
            }
            required(p->child(0), lr);
            required(p->child(1), rr);
            return;
        }
        case PlanKind::Aggregate: {
            Names r;
            for (const auto& k : p->exprs) add_columns(r, k.expr);
            for (const auto& a : p->aggs) add_columns(r, a.arg);
            required(p->child(), r);
            return;
        }
        case PlanKind::Sort: {
            Names r = req;
            for (const auto& k : p->sort_keys) r.insert(k.column);
            required(p->child(), r);
            return;
        }
        case PlanKind::Limit: required(p->child(), req); return;
        }
    }

    int open(const PlanNode* source) {
        Pipeline pl;
        pl.id = static_cast<int>(out.pipelines.size());
        pl.source = source;
        out.pipelines.push_back(pl);
        return pl.id;
    }

    void place(const PlanNode* n, int id) {
        out.info[n].pipeline = id;
        out.pipelines[static_cast<std::size_t>(id)].nodes.push_back(n);
    }

    int assign(const PlanPtr& p) {
        const PlanNode* n = p.get();
        auto& info = out.info[n];
        switch (p->kind) {
        case PlanKind::Scan:
        case PlanKind::Empty: {
            int id = open(n);
            place(n, id);
            return id;
        }
        case PlanKind::Filter:
        case PlanKind::Project:
        case PlanKind::Limit: {
            int id = assign(p->child());
            place(n, id);
            return id;
        }
        case PlanKind::Join: {
            int build = assign(p->child(1));
            out.pipelines[static_cast<std::size_t>(build)].sink = n;
            int probe = assign(p->child(0));
            out.pipelines[static_cast<std::size_t>(probe)].depends_on.push_back(build);
            auto& ji = out.info[n];
            ji.breaker = true;
            ji.strategy = "hash_join";
            ji.build_pipeline = build;
            place(n, probe);
            return probe;
        }
        case PlanKind::Aggregate:
        case PlanKind::Sort: {
            int id = assign(p->child());
            place(n, id);
            if (p->kind == PlanKind::Aggregate && p->exprs.empty()) return id;
            out.pipelines[static_cast<std::size_t>(id)].sink = n;
            int next = open(n);
            out.pipelines[static_cast<std::size_t>(next)].depends_on.push_back(id);
            auto& bi = out.info[n];
            bi.breaker = true;
            bi.output_pipeline = next;
            return next;
        }
        }
        (void)info;
        throw PlanError("internal: unknown plan node");
    }
};

void collect_scans(const PlanNode* n, std::set<std::pair<std::string, std::string>>& out) {
    if (n->kind == PlanKind::Scan) {
        for (const auto& c : n->columns) out.emplace(n->table, c);
    }
    for (const auto& c : n->children) collect_scans(c.get(), out);
}

void explain_node(const PhysicalPlan& pp, const PlanPtr& p, int depth, std::string& out) {
    const auto& info = pp.at(p.get());
    std::string line(static_cast<std::size_t>(depth) * 2, ' ');
    line += describe_node(*p) + "  (pipeline " + std::to_string(info.pipeline);
    if (p->kind == PlanKind::Join) {
        line += ", " + info.strategy + ", breaker: build in pipeline " + std::to_string(info.build_pipeline);
    } else if (info.breaker) {
        line += ", breaker: output to pipeline " + std::to_string(info.output_pipeline);
    }
    out += line + ")\n";
    for (const auto& c : p->children) explain_node(pp, c, depth + 1, out);
}

} // namespace

PlanPtr rewrite_avg(const PlanPtr& p) {
    std::vector<PlanPtr> children;
    for (const auto& c : p->children) children.push_back(rewrite_avg(c));
    bool has_avg = p->kind == PlanKind::Aggregate &&
                   std::any_of(p->aggs.begin(), p->aggs.end(), [](const AggSpec& a) { return a.fn == AggFn::Avg; });
    if (!has_avg) return plan::with_children(*p, children);

    auto n = std::make_shared<PlanNode>(*p);
    n->aggs.clear();
    auto find_or_add = [&](AggFn fn, const ExprPtr& arg, const std::string& name) {
        for (const auto& a : p->aggs) {
            if (a.fn == fn && expr_equal(a.arg, arg)) return a.name;
        }
        for (const auto& a : n->aggs) {
            if (a.fn == fn && expr_equal(a.arg, arg)) return a.name;
        }
        n->aggs.push_back({fn, arg, name});
        return name;
    };
    for (const auto& a : p->aggs) {
        if (a.fn != AggFn::Avg) n->aggs.push_back(a);
    }
    std::vector<NamedExpr> outputs;
    for (const auto& k : p->exprs) outputs.push_back({col(k.name), k.name});
    for (const auto& a : p->aggs) {
        if (a.fn == AggFn::Avg) {
            auto s = find_or_add(AggFn::Sum, a.arg, "__sum_" + a.name);
            auto c = find_or_add(AggFn::Count, a.arg, "__cnt_" + a.name);
            outputs.push_back({arith(ArithOp::Div, col(s), col(c)), a.name});
        } else {
            outputs.push_back({col(a.name), a.name});
        }
    }
    auto agg = plan::with_children(*n, children);
    return plan::project(agg, outputs);
}

PhysicalPlan optimize(const PlanPtr& plan, const UdfRegistry* udfs, const OptimizerOptions& opts) {
    PlanPtr p = plan;
    if (udfs) p = inline_udfs(p, *udfs);
    if (opts.fold) p = fold(p);
    p = rewrite_avg(p);
    if (opts.pushdown) {
        for (int i = 0; i < 32; ++i) {
            PlanPtr next = push_down(p);
            bool done = plan_equal(next, p);
            p = next;
            if (done) break;
        }
    }
    if (opts.fold) p = fold(p);
    if (opts.prune) {
        auto root_names = p->schema.names();
        p = prune(p, Names(root_names.begin(), root_names.end()));
    }

    PhysicalPlan out;
    out.root = p;
    Annotator a{out};
    auto root_names = p->schema.names();
    a.required(p, Names(root_names.begin(), root_names.end()));
    a.assign(p);
    for (auto& pl : out.pipelines) {
        if (!pl.sink) pl.sink = p.get();
    }
    return out;
}

std::set<std::pair<std::string, std::string>> required_columns(const PhysicalPlan& plan, const PlanNode* node) {
    std::set<std::pair<std::string, std::string>> out;
    collect_scans(node ? node : plan.root.get(), out);
    return out;
}

std::string explain(const PhysicalPlan& plan) {
    std::string out;
    explain_node(plan, plan.root, 0, out);
    return out;
}

} // namespace flarelite
