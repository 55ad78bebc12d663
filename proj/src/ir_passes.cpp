#include "flarelite/kernel_ir.hpp"

#include <cstring>
#include <map>
#include <tuple>
#include <unordered_map>

namespace flarelite {

namespace {

std::string value_key(const Stmt& s) {
    if (is_null(s.value)) return "null";
    if (auto* d = std::get_if<double>(&s.value)) {
        std::uint64_t bits = 0;
        std::memcpy(&bits, d, sizeof bits);
        return "f" + std::to_string(bits);
    }
    return literal_to_sql(s.value, s.type == DataType::Bool && s.op == IrOp::StartsWith ? DataType::Text : s.type);
}

template <typename F>
void for_each_list(KernelProgram& prog, F&& f) {
    for (auto& loop : prog.loops) {
        f(loop.body);
        for (auto& seg : loop.epilogue) f(seg);
    }
}

} // namespace

void eliminate_common_subexpressions(KernelProgram& prog) {
    std::unordered_map<ValueId, ValueId> replace;
    auto resolve = [&](ValueId v) {
        auto it = replace.find(v);
        return it == replace.end() ? v : it->second;
    };
    using Key = std::tuple<IrOp, DataType, bool, std::vector<ValueId>, int, int, std::string>;
    for_each_list(prog, [&](StmtList& list) {
        std::map<Key, ValueId> seen;
        StmtList out;
        out.reserve(list.size());
        for (auto& s : list) {
            for (auto& a : s.args) a = resolve(a);
            if (is_pure(s.op) && s.result >= 0) {
                Key key{s.op, s.type, s.nullable, s.args, s.target, s.index, value_key(s)};
                auto [it, inserted] = seen.emplace(key, s.result);
                if (!inserted) {
                    replace[s.result] = it->second;
                    continue;
                }
            }
            out.push_back(std::move(s));
        }
        list = std::move(out);
    });
}

void eliminate_dead_code(KernelProgram& prog) {
    std::unordered_map<ValueId, int> uses;
    for_each_list(prog, [&](StmtList& list) {
        for (const auto& s : list) {
            for (auto a : s.args) ++uses[a];
        }
    });
    for_each_list(prog, [&](StmtList& list) {
        std::vector<bool> dead(list.size(), false);
        for (std::size_t i = list.size(); i-- > 0;) {
            const auto& s = list[i];
            if (is_pure(s.op) && s.result >= 0 && uses[s.result] == 0) {
                dead[i] = true;
                for (auto a : s.args) --uses[a];
            }
        }
        StmtList out;
        for (std::size_t i = 0; i < list.size(); ++i) {
            if (!dead[i]) out.push_back(std::move(list[i]));
        }
        list = std::move(out);
    });
}

} // namespace flarelite
