#include "helpers.hpp"

#include "flarelite/error.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

using namespace flarelite;
namespace ft = flarelite::testing;

namespace {

const double kNaN = std::numeric_limits<double>::quiet_NaN();

Session& session() {
    static Session* s = [] {
        auto* session = new Session();
        Schema t({{"g", DataType::Text, true}, {"i", DataType::Int64, true}, {"f", DataType::Float64}});
        session->catalog().register_table(
            "t", ft::make_table(t, {{std::string("x"), std::int64_t{1}, 2.0},
                                    {std::string("y"), std::monostate{}, -0.0},
                                    {std::monostate{}, std::int64_t{3}, kNaN},
                                    {std::string("x"), std::int64_t{-4}, 0.0},
                                    {std::string("y"), std::int64_t{5}, -1.5},
                                    {std::monostate{}, std::monostate{}, 7.25}}));
        Schema u({{"uk", DataType::Int64, true}, {"uv", DataType::Text}});
        session->catalog().register_table("u", ft::make_table(u, {{std::int64_t{1}, std::string("one")},
                                                                  {std::monostate{}, std::string("null")},
                                                                  {std::int64_t{3}, std::string("three")}}));
        return session;
    }();
    return *s;
}

/// Runs all engines (native at 1 and 3 threads) and requires agreement;
/// returns the reference result.
ColumnTable agreed(const std::string& sql, bool ordered = false) {
    auto& s = session();
    PlanPtr p = s.parse(sql);
    ColumnTable ref = s.run_volcano(p);
    CompareOptions o;
    o.ordered = ordered;
    for (Backend b : {Backend::Interpreter, Backend::Native}) {
        for (int threads : {1, 3}) {
            auto r = s.execute(p, {.backend = b, .threads = threads});
            auto c = compare_tables(ref, r.table, o);
            EXPECT_TRUE(c.equal) << sql << " backend " << static_cast<int>(b) << " threads " << threads << ": "
                                 << c.message;
        }
    }
    return ref;
}

} // namespace

TEST(Semantics, NullComparisonsFilterOut) {
    auto t = agreed("select i from t where i > 0");
    EXPECT_EQ(t.row_count(), 3u);
    // A comparison with NULL is false, so its negation keeps the NULL rows.
    EXPECT_EQ(agreed("select i from t where not (i > 0)").row_count(), 3u);
}

TEST(Semantics, NullArithmeticPropagates) {
    auto t = agreed("select i + 1 as j from t");
    std::size_t nulls = 0;
    for (std::size_t r = 0; r < t.row_count(); ++r) nulls += t.column(0).is_null(r);
    EXPECT_EQ(nulls, 2u);
}

TEST(Semantics, AggregatesSkipNulls) {
    auto t = agreed("select count(*) as n, count(i) as ni, sum(i) as s, min(i) as lo, max(i) as hi, avg(i) as a from t");
    EXPECT_EQ(t.column(0).int_at(0), 6);
    EXPECT_EQ(t.column(1).int_at(0), 4);
    EXPECT_EQ(t.column(2).int_at(0), 5);
    EXPECT_EQ(t.column(3).int_at(0), -4);
    EXPECT_EQ(t.column(4).int_at(0), 5);
    EXPECT_DOUBLE_EQ(t.column(5).float_at(0), 1.25);
}

TEST(Semantics, NullGroupKeyIsAGroup) {
    auto t = agreed("select g, count(*) as n from t group by g");
    EXPECT_EQ(t.row_count(), 3u);
}

TEST(Semantics, NanIsGreatest) {
    auto t = agreed("select max(f) as hi, min(f) as lo from t");
    EXPECT_TRUE(std::isnan(t.column(0).float_at(0)));
    EXPECT_EQ(t.column(1).float_at(0), -1.5);
    auto sorted = agreed("select f from t order by f desc", true);
    EXPECT_TRUE(std::isnan(sorted.column(0).float_at(0)));
}

TEST(Semantics, NanFailsComparisons) {
    EXPECT_EQ(agreed("select f from t where f > 1.0").row_count(), 2u);
    EXPECT_EQ(agreed("select f from t where f between -10.0 and 100.0").row_count(), 5u);
}

TEST(Semantics, NegativeZeroGroupsWithZero) {
    auto t = agreed("select f, count(*) as n from t where f = 0.0 group by f");
    ASSERT_EQ(t.row_count(), 1u);
    EXPECT_EQ(t.column(1).int_at(0), 2);
}

TEST(Semantics, DivisionIsFloat) {
    auto t = agreed("select i / 2 as h from t where i = 3");
    EXPECT_EQ(t.schema()[0].dtype, DataType::Float64);
    EXPECT_EQ(t.column(0).float_at(0), 1.5);
}

TEST(Semantics, NullJoinKeysNeverMatch) {
    EXPECT_EQ(agreed("select i, uv from t join u on i = uk").row_count(), 2u);
    auto anti = agreed("select i from t left anti join u on i = uk");
    EXPECT_EQ(anti.row_count(), 4u);
    auto outer = agreed("select i, uv from t left join u on i = uk");
    EXPECT_EQ(outer.row_count(), 6u);
}

TEST(Semantics, TextOrdering) {
    auto t = agreed("select uv from u order by uv desc", true);
    ASSERT_EQ(t.row_count(), 3u);
    EXPECT_EQ(t.column(0).text_at(0), "three");
    EXPECT_EQ(t.column(0).text_at(2), "null");
}

TEST(Semantics, PrefixMatch) {
    EXPECT_EQ(agreed("select uv from u where uv like 't%'").row_count(), 1u);
    EXPECT_EQ(agreed("select uv from u where uv like '%'").row_count(), 3u);
}

TEST(Semantics, SortIsStable) {
    auto t = agreed("select g, i from t order by g", true);
    EXPECT_EQ(t.row_count(), 6u);
}

TEST(Semantics, IntegerOverflowIsAnError) {
    auto& s = session();
    PlanPtr p = s.parse("select i * 4611686018427387904 as big from t");
    EXPECT_THROW(s.run_volcano(p), ExecutionError);
    EXPECT_THROW(s.execute(p, {.backend = Backend::Interpreter}), ExecutionError);
    EXPECT_THROW(s.execute(p, {.backend = Backend::Native}), ExecutionError);
}
