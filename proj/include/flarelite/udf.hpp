#pragma once

#include "flarelite/expr.hpp"
#include "flarelite/plan.hpp"

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace flarelite {

/// Handle to a staged expression. Operators build expression nodes; nothing
/// is evaluated.
class StagedValue {
public:
    explicit StagedValue(ExprPtr e);
    StagedValue(int v);
    StagedValue(std::int64_t v);
    StagedValue(double v);

    const ExprPtr& expr() const { return expr_; }
    DataType type() const { return expr_->type; }

private:
    ExprPtr expr_;
};

StagedValue operator+(const StagedValue& a, const StagedValue& b);
StagedValue operator-(const StagedValue& a, const StagedValue& b);
StagedValue operator*(const StagedValue& a, const StagedValue& b);
StagedValue operator/(const StagedValue& a, const StagedValue& b);
StagedValue operator-(const StagedValue& a);
StagedValue operator==(const StagedValue& a, const StagedValue& b);
StagedValue operator!=(const StagedValue& a, const StagedValue& b);
StagedValue operator<(const StagedValue& a, const StagedValue& b);
StagedValue operator<=(const StagedValue& a, const StagedValue& b);
StagedValue operator>(const StagedValue& a, const StagedValue& b);
StagedValue operator>=(const StagedValue& a, const StagedValue& b);
StagedValue operator&&(const StagedValue& a, const StagedValue& b);
StagedValue operator||(const StagedValue& a, const StagedValue& b);
StagedValue operator!(const StagedValue& a);

/// Staged conditional: `c ? a : b`.
StagedValue if_(const StagedValue& c, const StagedValue& a, const StagedValue& b);
StagedValue starts_with(const StagedValue& s, std::string prefix);

using UdfBuilder = std::function<StagedValue(std::span<const StagedValue>)>;

struct UdfDef {
    std::string name;
    std::vector<DataType> params;
    DataType result = DataType::Float64;
    UdfBuilder builder;
    bool deterministic = true;
    bool aggregate = false;
};

/// Registry of staged scalar UDFs. Comes with the built-in
/// `if(Bool, Float64, Float64) -> Float64`.
class UdfRegistry : public UdfResolver {
public:
    UdfRegistry();

    /// Throws PlanError for duplicate names (unless `replace`), aggregate or
    /// non-deterministic definitions, and builders whose result type or shape
    /// does not match the declaration.
    void register_udf(UdfDef def, bool replace = false);

    const UdfSignature* find_signature(std::string_view name) const override;
    const UdfDef* find(std::string_view name) const;
    std::vector<std::string> names() const;

private:
    struct Entry {
        UdfDef def;
        UdfSignature sig;
    };
    std::map<std::string, Entry, std::less<>> udfs_;
};

/// Replaces every bound UdfCall with the expression its builder stages.
ExprPtr inline_udfs(const ExprPtr& e, const UdfRegistry& registry);
PlanPtr inline_udfs(const PlanPtr& p, const UdfRegistry& registry);

} // namespace flarelite
