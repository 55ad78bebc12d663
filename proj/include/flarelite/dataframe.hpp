#pragma once

#include "flarelite/plan.hpp"

#include <string>
#include <vector>

namespace flarelite {

class Catalog;
class UdfRegistry;

/// Deferred relational handle. Every method only extends the recorded plan;
/// nothing is read or computed until the handle is executed by a Session.
class DataFrame {
public:
    DataFrame(const Catalog& catalog, const UdfRegistry* udfs, PlanPtr plan);

    static DataFrame scan(const Catalog& catalog, const UdfRegistry* udfs, const std::string& table);

    DataFrame filter(const ExprPtr& predicate) const;
    DataFrame select(const std::vector<NamedExpr>& exprs) const;
    DataFrame select(const std::vector<std::string>& columns) const;
    DataFrame join(const DataFrame& right, const std::vector<JoinKey>& keys, JoinKind kind = JoinKind::Inner) const;
    DataFrame group_agg(const std::vector<NamedExpr>& keys, const std::vector<AggSpec>& aggs) const;
    DataFrame sort(const std::vector<SortKey>& keys) const;
    DataFrame limit(std::int64_t n) const;

    const PlanPtr& plan() const { return plan_; }
    const Schema& schema() const { return plan_->schema; }
    const Catalog& catalog() const { return *catalog_; }
    const UdfRegistry* udfs() const { return udfs_; }

private:
    DataFrame with(PlanPtr p) const { return DataFrame(*catalog_, udfs_, std::move(p)); }

    const Catalog* catalog_;
    const UdfRegistry* udfs_;
    PlanPtr plan_;
};

/// Optimized plan dump with pipeline ids and breaker marks.
std::string explain(const DataFrame& df);

} // namespace flarelite
