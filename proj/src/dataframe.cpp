#include "flarelite/dataframe.hpp"

#include "flarelite/catalog.hpp"
#include "flarelite/error.hpp"
#include "flarelite/optimizer.hpp"
#include "flarelite/udf.hpp"

namespace flarelite {

DataFrame::DataFrame(const Catalog& catalog, const UdfRegistry* udfs, PlanPtr plan)
    : catalog_(&catalog), udfs_(udfs), plan_(std::move(plan)) {}

DataFrame DataFrame::scan(const Catalog& catalog, const UdfRegistry* udfs, const std::string& table) {
    return DataFrame(catalog, udfs, plan::scan(catalog, table));
}

DataFrame DataFrame::filter(const ExprPtr& predicate) const { return with(plan::filter(plan_, predicate, udfs_)); }

DataFrame DataFrame::select(const std::vector<NamedExpr>& exprs) const {
    return with(plan::project(plan_, exprs, udfs_));
}

DataFrame DataFrame::select(const std::vector<std::string>& columns) const {
    std::vector<NamedExpr> exprs;
    for (const auto& c : columns) exprs.push_back({col(c), c});
    return select(exprs);
}

DataFrame DataFrame::join(const DataFrame& right, const std::vector<JoinKey>& keys, JoinKind kind) const {
    if (right.catalog_ != catalog_) {
        throw PlanError("cannot join handles from different catalogs");
    }
    return with(plan::join(kind, plan_, right.plan_, keys, udfs_));
}

DataFrame DataFrame::group_agg(const std::vector<NamedExpr>& keys, const std::vector<AggSpec>& aggs) const {
    return with(plan::aggregate(plan_, keys, aggs, udfs_));
}

DataFrame DataFrame::sort(const std::vector<SortKey>& keys) const { return with(plan::sort(plan_, keys)); }

DataFrame DataFrame::limit(std::int64_t n) const { return with(plan::limit(plan_, n)); }

std::string explain(const DataFrame& df) { return explain(optimize(df.plan(), df.udfs())); }

} // namespace flarelite
