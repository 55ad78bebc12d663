#pragma once

#include "flarelite/plan.hpp"

#include <string>
#include <string_view>

namespace flarelite {

class Catalog;

/// Parses the supported SELECT subset into a type-checked logical plan.
/// Syntax errors raise ParseError; name and type errors raise PlanError.
///
/// Grammar summary:
///   SELECT item[, ...] FROM table [, table ...]
///     | FROM table {[INNER | LEFT [OUTER] | LEFT SEMI | LEFT ANTI] JOIN table ON cond}
///   [WHERE cond] [GROUP BY expr[, ...]] [ORDER BY (name | ordinal) [ASC|DESC][, ...]] [LIMIT n]
///
/// Comma joins take their equi-keys from WHERE equalities and are built
/// left-deep in textual order. `x LIKE 'p%'` is accepted as a prefix test.
PlanPtr parse_sql(std::string_view text, const Catalog& catalog, const UdfResolver* udfs = nullptr);

/// Renders a plan of the shape produced by parse_sql back to SQL text.
/// Throws PlanError for plans outside the grammar.
std::string print_sql(const PlanPtr& plan);

} // namespace flarelite
