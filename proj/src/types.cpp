#include "flarelite/types.hpp"

#include "flarelite/error.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <unordered_set>

namespace flarelite {

std::string_view to_string(DataType t) {
    switch (t) {
    case DataType::Int64: return "Int64";
    case DataType::Float64: return "Float64";
    case DataType::Date: return "Date";
    case DataType::Text: return "Text";
    case DataType::Bool: return "Bool";
    }
    return "?";
}

std::string scalar_to_string(const Scalar& s, DataType t) {
    if (is_null(s)) {
        return "NULL";
    }
    if (auto* i = std::get_if<std::int64_t>(&s)) {
        return t == DataType::Date ? date::format(*i) : std::to_string(*i);
    }
    if (auto* d = std::get_if<double>(&s)) {
        char buf[64];
        auto r = std::to_chars(buf, buf + sizeof(buf), *d);
        return std::string(buf, r.ptr);
    }
    if (auto* b = std::get_if<bool>(&s)) {
        return *b ? "true" : "false";
    }
    return std::get<std::string>(s);
}

namespace date {

bool valid(std::int64_t v) {
    using namespace std::chrono;
    if (v < 0) {
        return false;
    }
    auto d = v % 100;
    auto m = (v / 100) % 100;
    auto y = v / 10000;
    if (d < 1 || d > 31 || m < 1 || m > 12 || y > 9999) {
        return false;
    }
    return year_month_day{year{static_cast<int>(y)}, month{static_cast<unsigned>(m)},
                          day{static_cast<unsigned>(d)}}
        .ok();
}

std::optional<std::int64_t> parse(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') {
        return std::nullopt;
    }
    auto digits = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
        int v = 0;
        for (std::size_t i = pos; i < pos + len; ++i) {
            if (s[i] < '0' || s[i] > '9') {
                return std::nullopt;
            }
            v = v * 10 + (s[i] - '0');
        }
        return v;
    };
    auto y = digits(0, 4);
    auto m = digits(5, 2);
    auto d = digits(8, 2);
    if (!y || !m || !d) {
        return std::nullopt;
    }
    std::int64_t v = std::int64_t{*y} * 10000 + *m * 100 + *d;
    if (!valid(v)) {
        return std::nullopt;
    }
    return v;
}

std::string format(std::int64_t v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04lld-%02lld-%02lld", static_cast<long long>(v / 10000),
                  static_cast<long long>((v / 100) % 100), static_cast<long long>(v % 100));
    return buf;
}

std::int64_t add_days(std::int64_t v, int n) {
    using namespace std::chrono;
    year_month_day ymd{year{static_cast<int>(v / 10000)}, month{static_cast<unsigned>((v / 100) % 100)},
                       day{static_cast<unsigned>(v % 100)}};
    year_month_day out{sys_days{ymd} + days{n}};
    return std::int64_t{static_cast<int>(out.year())} * 10000 + static_cast<unsigned>(out.month()) * 100 +
           static_cast<unsigned>(out.day());
}

} // namespace date

Schema::Schema(std::vector<ColumnDef> columns) : columns_(std::move(columns)) {
    std::unordered_set<std::string_view> seen;
    for (const auto& c : columns_) {
        if (c.name.empty()) {
            throw PlanError("column name must not be empty");
        }
        if (!is_storable(c.dtype)) {
            throw PlanError("column " + c.name + " has non-storable type Bool");
        }
        if (!seen.insert(c.name).second) {
            throw PlanError("duplicate column " + c.name);
        }
    }
}

std::optional<std::size_t> Schema::find(std::string_view name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) {
            return i;
        }
    }
    return std::nullopt;
}

ColumnRef Schema::resolve(std::string_view name) const {
    if (auto i = find(name)) {
        return {*i, columns_[*i].dtype};
    }
    std::string msg = "unknown column " + std::string(name) + " (candidates:";
    for (const auto& c : columns_) {
        msg += " " + c.name;
    }
    msg += ")";
    throw PlanError(msg);
}

std::vector<std::string> Schema::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) {
        out.push_back(c.name);
    }
    return out;
}

} // namespace flarelite
