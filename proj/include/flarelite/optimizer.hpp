#pragma once

#include "flarelite/plan.hpp"

#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace flarelite {

class UdfRegistry;

/// Per-node physical annotations.
struct NodeInfo {
    int pipeline = -1;
    /// Hash build (Join), grouped Aggregate, or Sort.
    bool breaker = false;
    /// Pipeline that consumes a grouped Aggregate's or Sort's materialized output.
    int output_pipeline = -1;
    /// Join only: pipeline that builds the hash table from the right input.
    int build_pipeline = -1;
    std::string strategy; // "hash_join" on joins
    /// Output columns of this node that are used above it.
    std::vector<std::string> required;
};

struct Pipeline {
    int id = 0;
    const PlanNode* source = nullptr; // Scan, Empty, or breaker whose output is read
    const PlanNode* sink = nullptr;   // breaker fed by this pipeline, or the root
    std::vector<const PlanNode*> nodes;
    std::vector<int> depends_on;
};

/// Optimized logical tree plus the annotations consumed by code generation.
struct PhysicalPlan {
    PlanPtr root;
    std::map<const PlanNode*, NodeInfo> info;
    std::vector<Pipeline> pipelines; // in dependency order

    const NodeInfo& at(const PlanNode* n) const { return info.at(n); }
    std::size_t breaker_count() const;
};

struct OptimizerOptions {
    bool fold = true;
    bool pushdown = true;
    bool prune = true;
};

/// Inlines UDFs, folds constants, rewrites AVG, pushes filters down, prunes
/// columns and computes pipelines. Never reorders joins.
PhysicalPlan optimize(const PlanPtr& plan, const UdfRegistry* udfs = nullptr, const OptimizerOptions& opts = {});

/// Rewrites AVG into SUM/COUNT plus a projection (also applied by optimize).
PlanPtr rewrite_avg(const PlanPtr& plan);

/// (table, column) pairs read by the scans below `node` (root by default).
std::set<std::pair<std::string, std::string>> required_columns(const PhysicalPlan& plan,
                                                                const PlanNode* node = nullptr);

/// One node per line, children indented, annotated with pipeline ids and
/// breaker marks.
std::string explain(const PhysicalPlan& plan);

} // namespace flarelite
