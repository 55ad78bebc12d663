#include "flarelite/kernel_ir.hpp"

#include "flarelite/error.hpp"

#include <functional>
#include <map>
#include <set>

namespace flarelite {

std::string_view to_string(IrOp op) {
    switch (op) {
    case IrOp::Const: return "const";
    case IrOp::Load: return "load";
    case IrOp::Cast: return "cast";
    case IrOp::Arith: return "arith";
    case IrOp::Cmp: return "cmp";
    case IrOp::And: return "and";
    case IrOp::Or: return "or";
    case IrOp::Not: return "not";
    case IrOp::StartsWith: return "starts_with";
    case IrOp::Select: return "select";
    case IrOp::Guard: return "guard";
    case IrOp::HashInsert: return "hash_insert";
    case IrOp::HashProbe: return "hash_probe";
    case IrOp::ProbeRead: return "probe_read";
    case IrOp::GroupUpsert: return "group_upsert";
    case IrOp::GroupUpdate: return "group_update";
    case IrOp::AggUpdate: return "acc_update";
    case IrOp::AccRead: return "acc_read";
    case IrOp::GroupKeyRead: return "group_key";
    case IrOp::GroupAggRead: return "group_agg";
    case IrOp::SortAppend: return "sort_append";
    case IrOp::BufferRead: return "buffer_read";
    case IrOp::LimitGuard: return "limit_guard";
    case IrOp::Emit: return "emit";
    }
    return "?";
}

bool is_pure(IrOp op) {
    switch (op) {
    case IrOp::Const:
    case IrOp::Load:
    case IrOp::Cast:
    case IrOp::Arith:
    case IrOp::Cmp:
    case IrOp::And:
    case IrOp::Or:
    case IrOp::Not:
    case IrOp::StartsWith:
    case IrOp::Select:
    case IrOp::ProbeRead:
    case IrOp::AccRead:
    case IrOp::GroupKeyRead:
    case IrOp::GroupAggRead:
    case IrOp::BufferRead: return true;
    default: return false;
    }
}

bool opens_scope(IrOp op) { return op == IrOp::Guard || op == IrOp::HashProbe || op == IrOp::LimitGuard; }

namespace {

class Compiler {
public:
    explicit Compiler(const PhysicalPlan& pp) : pp_(pp) {}

    KernelProgram run() {
        prog_.output = pp_.root->schema;
        produce(pp_.root, [&](const Env& env) {
            Stmt s;
            s.op = IrOp::Emit;
            for (const auto& c : prog_.output.columns()) s.args.push_back(lookup(env, c.name));
            emit(std::move(s));
        });
        return std::move(prog_);
    }

private:
    using Env = std::map<std::string, ValueId>;
    using Consumer = std::function<void(const Env&)>;

    StmtList& list() {
        auto& loop = prog_.loops[static_cast<std::size_t>(loop_)];
        return segment_ < 0 ? loop.body : loop.epilogue[static_cast<std::size_t>(segment_)];
    }

    ValueId emit(Stmt s, bool has_result = false) {
        if (has_result) {
            s.result = prog_.value_count++;
            types_.push_back({s.type, s.nullable});
        }
        list().push_back(s);
        return s.result;
    }

    ValueId value(IrOp op, DataType t, bool nullable, std::vector<ValueId> args, int target = -1, int index = 0,
                  Scalar v = {}) {
        Stmt s;
        s.op = op;
        s.type = t;
        s.nullable = nullable;
        s.args = std::move(args);
        s.target = target;
        s.index = index;
        s.value = std::move(v);
        return emit(std::move(s), true);
    }

    void effect(IrOp op, std::vector<ValueId> args, int target = -1, int index = 0) {
        Stmt s;
        s.op = op;
        s.args = std::move(args);
        s.target = target;
        s.index = index;
        emit(std::move(s));
    }

    void open_loop(SourceKind kind, int source_id) {
        KernelLoop l;
        l.id = static_cast<int>(prog_.loops.size());
        l.source = kind;
        l.source_id = source_id;
        prog_.loops.push_back(std::move(l));
        loop_ = static_cast<int>(prog_.loops.size()) - 1;
        segment_ = -1;
    }

    bool nullable(ValueId v) const { return types_[static_cast<std::size_t>(v)].second; }

    static ValueId lookup(const Env& env, const std::string& name) {
        auto it = env.find(name);
        if (it == env.end()) throw Error("internal: column " + name + " is not available in the kernel");
        return it->second;
    }

    ValueId expr(const ExprPtr& e, const Env& env) {
        switch (e->kind) {
        case ExprKind::ColRef: return lookup(env, e->name);
        case ExprKind::Lit: return value(IrOp::Const, e->type, is_null(e->value), {}, -1, 0, e->value);
        case ExprKind::Cast: {
            auto a = expr(e->args[0], env);
            return value(IrOp::Cast, DataType::Float64, nullable(a), {a});
        }
        case ExprKind::Arith: {
            auto a = expr(e->args[0], env);
            auto b = expr(e->args[1], env);
            return value(IrOp::Arith, e->type, nullable(a) || nullable(b), {a, b}, -1, e->op);
        }
        case ExprKind::Cmp: {
            auto a = expr(e->args[0], env);
            auto b = expr(e->args[1], env);
            return value(IrOp::Cmp, DataType::Bool, false, {a, b}, -1, e->op);
        }
        case ExprKind::Bool: {
            auto a = expr(e->args[0], env);
            if (e->bool_op() == BoolOp::Not) return value(IrOp::Not, DataType::Bool, false, {a});
            auto b = expr(e->args[1], env);
            return value(e->bool_op() == BoolOp::And ? IrOp::And : IrOp::Or, DataType::Bool, false, {a, b});
        }
        case ExprKind::Between: {
            auto x = expr(e->args[0], env);
            auto lo = expr(e->args[1], env);
            auto hi = expr(e->args[2], env);
            auto ge = value(IrOp::Cmp, DataType::Bool, false, {x, lo}, -1, static_cast<int>(CmpOp::Ge));
            auto le = value(IrOp::Cmp, DataType::Bool, false, {x, hi}, -1, static_cast<int>(CmpOp::Le));
            return value(IrOp::And, DataType::Bool, false, {ge, le});
        }
        case ExprKind::StartsWith: {
            auto x = expr(e->args[0], env);
            return value(IrOp::StartsWith, DataType::Bool, false, {x}, -1, 0, e->value);
        }
        case ExprKind::Cond: {
            auto c = expr(e->args[0], env);
            auto a = expr(e->args[1], env);
            auto b = expr(e->args[2], env);
            return value(IrOp::Select, e->type, nullable(a) || nullable(b), {c, a, b});
        }
        case ExprKind::UdfCall: throw Error("internal: UDF " + e->name + " was not inlined before compilation");
        }
        throw Error("internal: unexpected expression");
    }

    void produce(const PlanPtr& p, const Consumer& k) {
        const NodeInfo& info = pp_.at(p.get());
        switch (p->kind) {
        case PlanKind::Scan: {
            int input = static_cast<int>(prog_.inputs.size());
            prog_.inputs.push_back({p->table, p->schema});
            open_loop(SourceKind::Table, input);
            Env env;
            for (std::size_t i = 0; i < p->schema.size(); ++i) {
                const auto& c = p->schema[i];
                env[c.name] = value(IrOp::Load, c.dtype, c.nullable, {}, input, static_cast<int>(i));
            }
            k(env);
            return;
        }
        case PlanKind::Empty: {
            open_loop(SourceKind::Empty, -1);
            Env env;
            for (const auto& c : p->schema.columns()) {
                env[c.name] = value(IrOp::Const, c.dtype, true, {}, -1, 0, Scalar{});
            }
            k(env);
            return;
        }
        case PlanKind::Filter:
            produce(p->child(), [&](const Env& env) {
                effect(IrOp::Guard, {expr(p->predicate, env)});
                k(env);
            });
            return;
        case PlanKind::Project:
            produce(p->child(), [&](const Env& env) {
                Env out;
                for (const auto& ne : p->exprs) out[ne.name] = expr(ne.expr, env);
                k(out);
            });
            return;
        case PlanKind::Limit: {
            int id = static_cast<int>(prog_.limits.size());
            prog_.limits.push_back(p->limit);
            produce(p->child(), [&](const Env& env) {
                effect(IrOp::LimitGuard, {}, id);
                k(env);
            });
            return;
        }
        case PlanKind::Join: produce_join(p, info, k); return;
        case PlanKind::Aggregate:
            if (p->exprs.empty()) {
                produce_scalar_agg(p, k);
            } else {
                produce_group_agg(p, k);
            }
            return;
        case PlanKind::Sort: produce_sort(p, info, k); return;
        }
    }

    void produce_join(const PlanPtr& p, const NodeInfo& info, const Consumer& k) {
        const Schema& right = p->child(1)->schema;
        bool outer = p->join_kind == JoinKind::LeftOuter;
        bool carries_payload = p->join_kind == JoinKind::Inner || outer;
        std::vector<std::string> payload;
        if (carries_payload) {
            std::set<std::string> req(info.required.begin(), info.required.end());
            for (const auto& c : right.columns()) {
                if (req.count(c.name)) payload.push_back(c.name);
            }
        }
        HashTableDecl decl;
        decl.purpose = TablePurpose::JoinBuild;
        decl.multiplicity = Multiplicity::Multi;
        for (const auto& key : p->keys) decl.key_types.push_back(key.left->type);
        for (const auto& name : payload) {
            const auto& c = right[*right.find(name)];
            decl.payload_types.push_back(c.dtype);
            decl.payload_nullable.push_back(c.nullable || outer);
        }
        int h = static_cast<int>(prog_.hash_tables.size());
        prog_.hash_tables.push_back(decl);

        produce(p->child(1), [&](const Env& env) {
            std::vector<ValueId> args;
            for (const auto& key : p->keys) args.push_back(expr(key.right, env));
            for (const auto& name : payload) args.push_back(lookup(env, name));
            effect(IrOp::HashInsert, std::move(args), h);
        });
        produce(p->child(0), [&](const Env& env) {
            std::vector<ValueId> keys;
            for (const auto& key : p->keys) keys.push_back(expr(key.left, env));
            ValueId m = value(IrOp::HashProbe, DataType::Int64, false, std::move(keys), h,
                              static_cast<int>(p->join_kind));
            Env out = env;
            for (std::size_t i = 0; i < payload.size(); ++i) {
                out[payload[i]] = value(IrOp::ProbeRead, decl.payload_types[i], decl.payload_nullable[i], {m}, h,
                                        static_cast<int>(i));
            }
            k(out);
        });
    }

    static AccDecl acc_decl(const AggSpec& a) {
        AccDecl d;
        d.fn = a.fn;
        d.has_arg = a.arg != nullptr;
        d.type = a.fn == AggFn::Count ? DataType::Int64 : a.arg->type;
        return d;
    }

    void produce_scalar_agg(const PlanPtr& p, const Consumer& k) {
        std::vector<int> accs;
        for (const auto& a : p->aggs) {
            accs.push_back(static_cast<int>(prog_.accumulators.size()));
            prog_.accumulators.push_back(acc_decl(a));
        }
        produce(p->child(), [&](const Env& env) {
            for (std::size_t i = 0; i < p->aggs.size(); ++i) {
                std::vector<ValueId> args;
                if (p->aggs[i].arg) args.push_back(expr(p->aggs[i].arg, env));
                effect(IrOp::AggUpdate, std::move(args), accs[i]);
            }
        });
        // The accumulated row is consumed once, after the loop's rows are merged.
        auto& loop = prog_.loops[static_cast<std::size_t>(loop_)];
        loop.epilogue.emplace_back();
        segment_ = static_cast<int>(loop.epilogue.size()) - 1;
        Env env;
        for (std::size_t i = 0; i < p->aggs.size(); ++i) {
            const auto& c = p->schema[i];
            env[c.name] = value(IrOp::AccRead, c.dtype, c.nullable, {}, accs[i]);
        }
        k(env);
    }

    void produce_group_agg(const PlanPtr& p, const Consumer& k) {
        HashTableDecl decl;
        decl.purpose = TablePurpose::GroupBy;
        decl.multiplicity = Multiplicity::Unique;
        for (const auto& key : p->exprs) decl.key_types.push_back(key.expr->type);
        for (const auto& a : p->aggs) {
            decl.aggs.push_back(acc_decl(a));
            decl.payload_types.push_back(a.fn == AggFn::Count ? DataType::Int64 : a.arg->type);
            decl.payload_nullable.push_back(a.fn != AggFn::Count);
        }
        int h = static_cast<int>(prog_.hash_tables.size());
        prog_.hash_tables.push_back(decl);
        produce(p->child(), [&](const Env& env) {
            std::vector<ValueId> keys;
            for (const auto& key : p->exprs) keys.push_back(expr(key.expr, env));
            ValueId entry = value(IrOp::GroupUpsert, DataType::Int64, false, std::move(keys), h);
            for (std::size_t i = 0; i < p->aggs.size(); ++i) {
                std::vector<ValueId> args{entry};
                if (p->aggs[i].arg) args.push_back(expr(p->aggs[i].arg, env));
                effect(IrOp::GroupUpdate, std::move(args), h, static_cast<int>(i));
            }
        });
        open_loop(SourceKind::GroupTable, h);
        Env env;
        for (std::size_t i = 0; i < p->exprs.size(); ++i) {
            const auto& c = p->schema[i];
            env[c.name] = value(IrOp::GroupKeyRead, c.dtype, c.nullable, {}, h, static_cast<int>(i));
        }
        for (std::size_t i = 0; i < p->aggs.size(); ++i) {
            const auto& c = p->schema[p->exprs.size() + i];
            env[c.name] = value(IrOp::GroupAggRead, c.dtype, c.nullable, {}, h, static_cast<int>(i));
        }
        k(env);
    }

    void produce_sort(const PlanPtr& p, const NodeInfo& info, const Consumer& k) {
        std::set<std::string> keep(info.required.begin(), info.required.end());
        for (const auto& key : p->sort_keys) keep.insert(key.column);
        SortDecl decl;
        for (const auto& c : p->schema.columns()) {
            if (keep.count(c.name)) decl.columns.push_back(c);
        }
        for (const auto& key : p->sort_keys) {
            for (std::size_t i = 0; i < decl.columns.size(); ++i) {
                if (decl.columns[i].name == key.column) decl.key_columns.push_back(static_cast<int>(i));
            }
            decl.ascending.push_back(key.ascending);
        }
        int s = static_cast<int>(prog_.sorts.size());
        prog_.sorts.push_back(decl);
        produce(p->child(), [&](const Env& env) {
            std::vector<ValueId> row;
            for (const auto& c : decl.columns) row.push_back(lookup(env, c.name));
            effect(IrOp::SortAppend, std::move(row), s);
        });
        open_loop(SourceKind::SortBuffer, s);
        Env env;
        for (std::size_t i = 0; i < decl.columns.size(); ++i) {
            const auto& c = decl.columns[i];
            env[c.name] = value(IrOp::BufferRead, c.dtype, c.nullable, {}, s, static_cast<int>(i));
        }
        k(env);
    }

    const PhysicalPlan& pp_;
    KernelProgram prog_;
    std::vector<std::pair<DataType, bool>> types_;
    int loop_ = -1;
    int segment_ = -1;
};

std::string value_name(ValueId v) { return "%" + std::to_string(v); }

std::string type_suffix(DataType t, bool nullable) {
    return std::string(to_string(t)) + (nullable ? "?" : "");
}

void print_list(const StmtList& list, const std::string& indent, std::string& out) {
    for (const auto& s : list) {
        std::string line = indent;
        if (s.result >= 0) line += value_name(s.result) + " = ";
        line += std::string(to_string(s.op));
        switch (s.op) {
        case IrOp::Const: line += " " + literal_to_sql(s.value, s.type); break;
        case IrOp::Load: line += " t" + std::to_string(s.target) + "." + std::to_string(s.index); break;
        case IrOp::Arith: line += " " + std::string(to_string(static_cast<ArithOp>(s.index))); break;
        case IrOp::Cmp: line += " " + std::string(to_string(static_cast<CmpOp>(s.index))); break;
        case IrOp::StartsWith: line += " " + literal_to_sql(s.value, DataType::Text); break;
        case IrOp::HashInsert:
        case IrOp::GroupUpsert: line += " h" + std::to_string(s.target); break;
        case IrOp::HashProbe:
            line += " h" + std::to_string(s.target) + " " +
                    std::string(to_string(static_cast<JoinKind>(s.index)));
            break;
        case IrOp::ProbeRead:
        case IrOp::GroupUpdate:
        case IrOp::GroupKeyRead:
        case IrOp::GroupAggRead: line += " h" + std::to_string(s.target) + "." + std::to_string(s.index); break;
        case IrOp::AggUpdate:
        case IrOp::AccRead: line += " a" + std::to_string(s.target); break;
        case IrOp::SortAppend: line += " s" + std::to_string(s.target); break;
        case IrOp::BufferRead: line += " s" + std::to_string(s.target) + "." + std::to_string(s.index); break;
        case IrOp::LimitGuard: line += " l" + std::to_string(s.target); break;
        default: break;
        }
        for (std::size_t i = 0; i < s.args.size(); ++i) line += (i ? ", " : " ") + value_name(s.args[i]);
        if (s.result >= 0) line += " : " + type_suffix(s.type, s.nullable);
        out += line + "\n";
    }
}

std::string source_name(const KernelLoop& l) {
    switch (l.source) {
    case SourceKind::Table: return "t" + std::to_string(l.source_id);
    case SourceKind::Empty: return "nothing";
    case SourceKind::GroupTable: return "groups h" + std::to_string(l.source_id);
    case SourceKind::SortBuffer: return "sorted s" + std::to_string(l.source_id);
    }
    return "?";
}

} // namespace

KernelProgram compile_plan_raw(const PhysicalPlan& plan) {
    KernelProgram prog = Compiler(plan).run();
    validate(prog);
    return prog;
}

KernelProgram compile_plan(const PhysicalPlan& plan) {
    KernelProgram prog = compile_plan_raw(plan);
    eliminate_common_subexpressions(prog);
    eliminate_dead_code(prog);
    validate(prog);
    return prog;
}

void validate(const KernelProgram& prog) {
    std::set<int> filled_groups, filled_sorts, filled_joins;
    auto check_target = [](int t, std::size_t n, const char* what) {
        if (t < 0 || static_cast<std::size_t>(t) >= n) {
            throw Error(std::string("invalid IR: ") + what + " reference out of range");
        }
    };
    for (const auto& loop : prog.loops) {
        switch (loop.source) {
        case SourceKind::Table: check_target(loop.source_id, prog.inputs.size(), "input"); break;
        case SourceKind::GroupTable:
            if (!filled_groups.count(loop.source_id)) throw Error("invalid IR: group table read before it is built");
            break;
        case SourceKind::SortBuffer:
            if (!filled_sorts.count(loop.source_id)) throw Error("invalid IR: sort buffer read before it is filled");
            break;
        case SourceKind::Empty: break;
        }
        auto check_list = [&](const StmtList& list) {
            std::set<ValueId> defined;
            for (const auto& s : list) {
                for (auto a : s.args) {
                    if (!defined.count(a)) {
                        throw Error("invalid IR: loop " + std::to_string(loop.id) + " uses " + value_name(a) +
                                    " before its definition");
                    }
                }
                switch (s.op) {
                case IrOp::Load: check_target(s.target, prog.inputs.size(), "input"); break;
                case IrOp::HashInsert:
                    check_target(s.target, prog.hash_tables.size(), "hash table");
                    filled_joins.insert(s.target);
                    break;
                case IrOp::HashProbe:
                    check_target(s.target, prog.hash_tables.size(), "hash table");
                    if (!filled_joins.count(s.target)) throw Error("invalid IR: probe precedes build");
                    break;
                case IrOp::GroupUpsert:
                    check_target(s.target, prog.hash_tables.size(), "hash table");
                    filled_groups.insert(s.target);
                    break;
                case IrOp::AggUpdate:
                case IrOp::AccRead: check_target(s.target, prog.accumulators.size(), "accumulator"); break;
                case IrOp::SortAppend:
                    check_target(s.target, prog.sorts.size(), "sort buffer");
                    filled_sorts.insert(s.target);
                    break;
                case IrOp::LimitGuard: check_target(s.target, prog.limits.size(), "limit"); break;
                default: break;
                }
                if (s.result >= 0) defined.insert(s.result);
            }
        };
        check_list(loop.body);
        for (const auto& seg : loop.epilogue) check_list(seg);
    }
}

std::string print_ir(const KernelProgram& prog) {
    std::string out = "program\n";
    for (std::size_t i = 0; i < prog.inputs.size(); ++i) {
        out += "  input t" + std::to_string(i) + " " + prog.inputs[i].table + " [";
        const auto& cols = prog.inputs[i].schema.columns();
        for (std::size_t c = 0; c < cols.size(); ++c) {
            out += (c ? ", " : "") + cols[c].name + ":" + type_suffix(cols[c].dtype, cols[c].nullable);
        }
        out += "]\n";
    }
    for (std::size_t i = 0; i < prog.accumulators.size(); ++i) {
        const auto& a = prog.accumulators[i];
        out += "  acc a" + std::to_string(i) + " " + std::string(to_string(a.fn)) +
               (a.has_arg ? "" : "(*)") + " " + std::string(to_string(a.type)) + "\n";
    }
    for (std::size_t i = 0; i < prog.hash_tables.size(); ++i) {
        const auto& h = prog.hash_tables[i];
        out += "  hash h" + std::to_string(i) + (h.purpose == TablePurpose::JoinBuild ? " join" : " group") +
               (h.multiplicity == Multiplicity::Multi ? " multi" : " unique") + " keys=[";
        for (std::size_t k = 0; k < h.key_types.size(); ++k) out += (k ? ", " : "") + std::string(to_string(h.key_types[k]));
        out += "] payload=[";
        for (std::size_t k = 0; k < h.payload_types.size(); ++k) {
            std::string item = type_suffix(h.payload_types[k], h.payload_nullable[k]);
            if (h.purpose == TablePurpose::GroupBy) item = std::string(to_string(h.aggs[k].fn)) + " " + item;
            out += (k ? ", " : "") + item;
        }
        out += "]\n";
    }
    for (std::size_t i = 0; i < prog.sorts.size(); ++i) {
        const auto& s = prog.sorts[i];
        out += "  sort s" + std::to_string(i) + " [";
        for (std::size_t c = 0; c < s.columns.size(); ++c) {
            out += (c ? ", " : "") + s.columns[c].name + ":" + type_suffix(s.columns[c].dtype, s.columns[c].nullable);
        }
        out += "] by [";
        for (std::size_t k = 0; k < s.key_columns.size(); ++k) {
            out += (k ? ", " : "") + std::to_string(s.key_columns[k]) + (s.ascending[k] ? " asc" : " desc");
        }
        out += "]\n";
    }
    for (std::size_t i = 0; i < prog.limits.size(); ++i) {
        out += "  limit l" + std::to_string(i) + " " + std::to_string(prog.limits[i]) + "\n";
    }
    out += "  output [";
    for (std::size_t c = 0; c < prog.output.size(); ++c) {
        out += (c ? ", " : "") + prog.output[c].name + ":" + type_suffix(prog.output[c].dtype, prog.output[c].nullable);
    }
    out += "]\n";
    for (const auto& loop : prog.loops) {
        out += "loop L" + std::to_string(loop.id) + " over " + source_name(loop) + "\n";
        print_list(loop.body, "  ", out);
        for (const auto& seg : loop.epilogue) {
            out += "  epilogue\n";
            print_list(seg, "    ", out);
        }
    }
    return out;
}

std::size_t count_ops(const KernelProgram& prog, IrOp op) {
    std::size_t n = 0;
    auto count = [&](const StmtList& l) {
        for (const auto& s : l) n += s.op == op;
    };
    for (const auto& loop : prog.loops) {
        count(loop.body);
        for (const auto& seg : loop.epilogue) count(seg);
    }
    return n;
}

bool loop_is_parallel(const KernelProgram&, const KernelLoop& loop) {
    if (loop.source != SourceKind::Table) return false;
    for (const auto& s : loop.body) {
        if (s.op == IrOp::LimitGuard || s.op == IrOp::HashInsert) return false;
    }
    return true;
}

} // namespace flarelite
