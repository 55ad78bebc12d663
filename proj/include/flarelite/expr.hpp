#pragma once

#include "flarelite/types.hpp"

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace flarelite {

enum class ExprKind : std::uint8_t {
    ColRef,
    Lit,
    Arith,
    Cmp,
    Bool,
    Between,
    StartsWith,
    UdfCall,
    Cond, // produced only by staged builders
    Cast, // Int64 -> Float64 widening inserted by the binder
};

enum class ArithOp : std::uint8_t { Add, Sub, Mul, Div };
enum class CmpOp : std::uint8_t { Eq, Ne, Lt, Le, Gt, Ge };
enum class BoolOp : std::uint8_t { And, Or, Not };

std::string_view to_string(ArithOp op);
std::string_view to_string(CmpOp op);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

/// Scalar expression tree. Nodes are immutable; a node is "bound" once its
/// type is known. Literals are bound on construction, column references
/// after resolution against an input schema.
struct Expr {
    ExprKind kind = ExprKind::Lit;
    bool bound = false;
    DataType type = DataType::Int64;
    bool nullable = false;
    std::uint8_t op = 0;
    std::string name;  // ColRef column, UdfCall function
    Scalar value;      // Lit value, StartsWith prefix
    std::vector<ExprPtr> args;

    ArithOp arith_op() const { return static_cast<ArithOp>(op); }
    CmpOp cmp_op() const { return static_cast<CmpOp>(op); }
    BoolOp bool_op() const { return static_cast<BoolOp>(op); }
};

// Unbound builders.
ExprPtr col(std::string name);
ExprPtr lit_int(std::int64_t v);
ExprPtr lit_float(double v);
ExprPtr lit_date(std::int64_t yyyymmdd);
ExprPtr lit_text(std::string v);
ExprPtr lit_bool(bool v);
ExprPtr lit_null(DataType t);
ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r);
ExprPtr cmp(CmpOp op, ExprPtr l, ExprPtr r);
ExprPtr and_(ExprPtr l, ExprPtr r);
ExprPtr or_(ExprPtr l, ExprPtr r);
ExprPtr not_(ExprPtr e);
ExprPtr between(ExprPtr e, ExprPtr lo, ExprPtr hi);
ExprPtr starts_with(ExprPtr e, std::string prefix);
ExprPtr udf_call(std::string name, std::vector<ExprPtr> args);
ExprPtr cond(ExprPtr c, ExprPtr a, ExprPtr b);

/// Signature lookup used while binding UdfCall nodes.
struct UdfSignature {
    std::vector<DataType> params;
    DataType result = DataType::Int64;
};

class UdfResolver {
public:
    virtual ~UdfResolver() = default;
    virtual const UdfSignature* find_signature(std::string_view name) const = 0;
};

/// Resolves column references against `input` and type-checks bottom-up,
/// inserting Int64->Float64 casts where operands mix. Throws PlanError.
ExprPtr bind(const ExprPtr& e, const Schema& input, const UdfResolver* udfs);

/// Type-checked constructors over already-bound operands (used by the binder
/// and by staged builders).
namespace typed {
ExprPtr arith(ArithOp op, ExprPtr l, ExprPtr r);
ExprPtr cmp(CmpOp op, ExprPtr l, ExprPtr r);
ExprPtr logic(BoolOp op, std::vector<ExprPtr> args);
ExprPtr between(ExprPtr e, ExprPtr lo, ExprPtr hi);
ExprPtr starts_with(ExprPtr e, std::string prefix);
ExprPtr cond(ExprPtr c, ExprPtr a, ExprPtr b);
ExprPtr udf_call(const UdfSignature& sig, std::string name, std::vector<ExprPtr> args);
/// Widens Int64 to Float64; identity when types already match.
ExprPtr coerce(ExprPtr e, DataType target);
} // namespace typed

bool expr_equal(const ExprPtr& a, const ExprPtr& b);
std::set<std::string> referenced_columns(const ExprPtr& e);
bool contains_udf_call(const ExprPtr& e);
bool is_literal(const ExprPtr& e);

/// Replaces ColRef(name) by the mapped expression.
ExprPtr substitute(const ExprPtr& e, const std::map<std::string, ExprPtr>& mapping);

/// Flattens nested ANDs into conjuncts (left to right).
std::vector<ExprPtr> split_conjuncts(const ExprPtr& e);
/// Left-deep AND of the conjuncts; nullptr for an empty list.
ExprPtr make_conjunction(std::span<const ExprPtr> conjuncts);

/// Evaluates literal-only subtrees. Sub-expressions whose evaluation would
/// raise (Int64 overflow) are left in place.
ExprPtr fold_constants(const ExprPtr& e);

/// SQL-style rendering; parseable by the SQL front end for grammar nodes.
std::string expr_to_sql(const ExprPtr& e);
std::string literal_to_sql(const Scalar& v, DataType t);

} // namespace flarelite
