#pragma once

#include "flarelite/catalog.hpp"
#include "flarelite/plan.hpp"

namespace flarelite {

struct VolcanoOptions {
    /// Evaluate joins by rescanning the materialized right input per left row.
    bool nested_loop_join = false;
};

/// Tuple-at-a-time pull interpreter over a logical plan. Slow on purpose;
/// used as the reference result and the interpreted baseline. UDF calls
/// must be inlined beforehand.
ColumnTable volcano_interpret(const PlanPtr& plan, const Catalog& catalog, const VolcanoOptions& opts = {});

} // namespace flarelite
