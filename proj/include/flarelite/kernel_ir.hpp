#pragma once

#include "flarelite/optimizer.hpp"
#include "flarelite/plan.hpp"

#include <string>
#include <vector>

namespace flarelite {

enum class IrOp : std::uint8_t {
    Const,
    Load,         // target=input, index=column
    Cast,         // Int64 -> Float64
    Arith,        // index=ArithOp
    Cmp,          // index=CmpOp
    And,
    Or,
    Not,
    StartsWith,   // value=prefix
    Select,       // cond ? a : b
    Guard,        // rest of the list runs only when args[0] is true
    HashInsert,   // target=table, args=keys..., payload...
    HashProbe,    // target=table, index=JoinKind, args=keys; rest of the list runs per match
    ProbeRead,    // target=table, index=payload column, args={match}
    GroupUpsert,  // target=table, args=keys; result is the entry
    GroupUpdate,  // target=table, index=aggregate, args={entry[, value]}
    AggUpdate,    // target=accumulator, args={[value]}
    AccRead,      // target=accumulator
    GroupKeyRead, // target=table, index=key
    GroupAggRead, // target=table, index=aggregate
    SortAppend,   // target=buffer, args=row
    BufferRead,   // target=buffer, index=column
    LimitGuard,   // target=limit; rest of the list runs for the first n arrivals
    Emit,         // args=output row
};

std::string_view to_string(IrOp op);
/// True for statements without side effects (candidates for CSE and DCE).
bool is_pure(IrOp op);
/// True for statements that scope the remainder of their list.
bool opens_scope(IrOp op);

using ValueId = int;

struct Stmt {
    IrOp op = IrOp::Const;
    ValueId result = -1;
    DataType type = DataType::Bool;
    bool nullable = false;
    std::vector<ValueId> args;
    int target = -1;
    int index = 0;
    Scalar value;
};

using StmtList = std::vector<Stmt>;

enum class SourceKind : std::uint8_t { Table, Empty, GroupTable, SortBuffer };

struct KernelLoop {
    int id = 0;
    SourceKind source = SourceKind::Table;
    int source_id = -1;
    StmtList body;                  // once per source row
    std::vector<StmtList> epilogue; // once each, after all rows, on merged state
};

struct InputDecl {
    std::string table;
    Schema schema; // columns read by this scan
};

struct AccDecl {
    AggFn fn = AggFn::Count;
    DataType type = DataType::Int64; // value type (argument type; Int64 for COUNT)
    bool has_arg = false;
};

enum class Multiplicity : std::uint8_t { Unique, Multi };
enum class TablePurpose : std::uint8_t { JoinBuild, GroupBy };

struct HashTableDecl {
    std::vector<DataType> key_types;
    std::vector<DataType> payload_types;  // join payload or aggregate result types
    std::vector<bool> payload_nullable;
    Multiplicity multiplicity = Multiplicity::Multi;
    TablePurpose purpose = TablePurpose::JoinBuild;
    std::vector<AccDecl> aggs; // GroupBy only
};

struct SortDecl {
    std::vector<ColumnDef> columns;
    std::vector<int> key_columns;
    std::vector<bool> ascending;
};

struct KernelProgram {
    std::vector<InputDecl> inputs;
    std::vector<AccDecl> accumulators;
    std::vector<HashTableDecl> hash_tables;
    std::vector<SortDecl> sorts;
    std::vector<std::int64_t> limits;
    Schema output;
    std::vector<KernelLoop> loops;
    int value_count = 0;
};

/// Lowers an optimized plan via produce/consume: one loop per pipeline,
/// then runs CSE and DCE.
KernelProgram compile_plan(const PhysicalPlan& plan);
/// Lowering without the cleanup passes.
KernelProgram compile_plan_raw(const PhysicalPlan& plan);

/// Common-subexpression elimination followed by dead-code elimination.
void eliminate_common_subexpressions(KernelProgram& prog);
void eliminate_dead_code(KernelProgram& prog);

/// Checks operand dominance and declaration references; throws Error.
void validate(const KernelProgram& prog);

/// Deterministic textual form.
std::string print_ir(const KernelProgram& prog);

/// Statement count by opcode over all loops (body and epilogue).
std::size_t count_ops(const KernelProgram& prog, IrOp op);

/// True when `loop` may be split over contiguous source ranges.
bool loop_is_parallel(const KernelProgram& prog, const KernelLoop& loop);

} // namespace flarelite
