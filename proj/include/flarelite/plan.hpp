#pragma once

#include "flarelite/expr.hpp"
#include "flarelite/types.hpp"

#include <memory>
#include <string>
#include <vector>

namespace flarelite {

class Catalog;

enum class PlanKind : std::uint8_t { Scan, Filter, Project, Join, Aggregate, Sort, Limit, Empty };
enum class JoinKind : std::uint8_t { Inner, LeftOuter, LeftSemi, LeftAnti };
enum class AggFn : std::uint8_t { Sum, Count, Avg, Min, Max };

std::string_view to_string(PlanKind k);
std::string_view to_string(JoinKind k);
std::string_view to_string(AggFn f);

struct NamedExpr {
    ExprPtr expr;
    std::string name;
};

struct JoinKey {
    ExprPtr left;
    ExprPtr right;
};

struct AggSpec {
    AggFn fn = AggFn::Count;
    ExprPtr arg; // nullptr means COUNT(*)
    std::string name;
};

struct SortKey {
    std::string column;
    bool ascending = true;
};

struct PlanNode;
using PlanPtr = std::shared_ptr<const PlanNode>;

/// Logical operator tree. Every node carries its output schema; expressions
/// are bound against the child output (Join keys against each side).
struct PlanNode {
    PlanKind kind = PlanKind::Scan;
    Schema schema;
    std::vector<PlanPtr> children;

    std::string table;                  // Scan
    std::vector<std::string> columns;   // Scan: columns read, in table order
    ExprPtr predicate;                  // Filter
    std::vector<NamedExpr> exprs;       // Project; Aggregate group keys
    JoinKind join_kind = JoinKind::Inner;
    std::vector<JoinKey> keys;          // Join
    std::vector<AggSpec> aggs;          // Aggregate
    std::vector<SortKey> sort_keys;     // Sort
    std::int64_t limit = 0;             // Limit

    const PlanPtr& child(std::size_t i = 0) const { return children.at(i); }
};

/// Type-checked plan constructors. All throw PlanError.
namespace plan {

PlanPtr scan(const Catalog& catalog, const std::string& table);
/// Scan restricted to `columns` (reordered to table order).
PlanPtr scan_columns(const std::string& table, const Schema& table_schema, const std::vector<std::string>& columns);
PlanPtr filter(PlanPtr child, const ExprPtr& predicate, const UdfResolver* udfs = nullptr);
PlanPtr project(PlanPtr child, const std::vector<NamedExpr>& exprs, const UdfResolver* udfs = nullptr);
PlanPtr join(JoinKind kind, PlanPtr left, PlanPtr right, const std::vector<JoinKey>& keys,
             const UdfResolver* udfs = nullptr);
PlanPtr aggregate(PlanPtr child, const std::vector<NamedExpr>& group_keys, const std::vector<AggSpec>& aggs,
                  const UdfResolver* udfs = nullptr);
PlanPtr sort(PlanPtr child, const std::vector<SortKey>& keys);
PlanPtr limit(PlanPtr child, std::int64_t n);
PlanPtr empty(const Schema& schema);

/// Copy of `node` with new children; expressions are kept as-is, the output
/// schema is recomputed.
PlanPtr with_children(const PlanNode& node, std::vector<PlanPtr> children);

} // namespace plan

bool plan_equal(const PlanPtr& a, const PlanPtr& b);

/// Indented one-node-per-line dump of a logical plan.
std::string plan_to_string(const PlanPtr& p);
/// Single-line description of one node (no children).
std::string describe_node(const PlanNode& n);

std::size_t plan_depth(const PlanPtr& p);

} // namespace flarelite
