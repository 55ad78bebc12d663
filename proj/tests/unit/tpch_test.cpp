#include "helpers.hpp"

#include "flarelite/error.hpp"
#include "flarelite/tpch.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace flarelite;
namespace ft = flarelite::testing;

TEST(Tpch, LineitemCountNearSixtyThousand) {
    auto n = ft::tpch_tables().at("lineitem").row_count();
    EXPECT_NEAR(static_cast<double>(n), 60000.0, 1200.0);
    EXPECT_EQ(tpch::expected_rows("lineitem", 0.01), 60000u);
}

TEST(Tpch, FixedTables) {
    EXPECT_EQ(ft::tpch_tables().at("nation").row_count(), 25u);
    EXPECT_EQ(ft::tpch_tables().at("region").row_count(), 5u);
    EXPECT_EQ(ft::tpch_tables().at("orders").row_count(), 15000u);
    EXPECT_EQ(ft::tpch_tables().at("customer").row_count(), 1500u);
    EXPECT_EQ(ft::tpch_tables().at("part").row_count(), 2000u);
    EXPECT_EQ(ft::tpch_tables().at("partsupp").row_count(), 8000u);
    EXPECT_EQ(ft::tpch_tables().at("supplier").row_count(), 100u);
}

TEST(Tpch, SchemasMatchTables) {
    for (const auto& name : tpch::table_names()) EXPECT_EQ(ft::tpch_tables().at(name).schema(), tpch::schema(name)) << name;
}

TEST(Tpch, SameSeedSameFiles) {
    auto a = ft::scratch_dir("tpch-a");
    auto b = ft::scratch_dir("tpch-b");
    tpch::write_tables(tpch::generate({0.002, 42}), a, tpch::FileFormat::Csv);
    tpch::write_tables(tpch::generate({0.002, 42}), b, tpch::FileFormat::Csv);
    for (const auto& name : tpch::table_names())
        EXPECT_EQ(ft::read_text(a / (name + ".tbl")), ft::read_text(b / (name + ".tbl"))) << name;
    auto c = ft::scratch_dir("tpch-c");
    tpch::write_tables(tpch::generate({0.002, 43}), c, tpch::FileFormat::Csv);
    EXPECT_NE(ft::read_text(a / "lineitem.tbl"), ft::read_text(c / "lineitem.tbl"));
}

TEST(Tpch, ValueDomains) {
    const auto& li = ft::tpch_tables().at("lineitem");
    std::set<std::int64_t> orderkeys;
    const auto& ok = ft::tpch_tables().at("orders").column("o_orderkey");
    for (std::size_t i = 0; i < ok.size(); ++i) EXPECT_TRUE(orderkeys.insert(ok.int_at(i)).second);
    for (std::size_t r = 0; r < li.row_count(); ++r) {
        double q = li.column("l_quantity").float_at(r);
        double d = li.column("l_discount").float_at(r);
        double tax = li.column("l_tax").float_at(r);
        auto ship = li.column("l_shipdate").int_at(r);
        auto rf = li.column("l_returnflag").text_at(r);
        auto ls = li.column("l_linestatus").text_at(r);
        ASSERT_TRUE(q >= 1 && q <= 50 && q == std::floor(q)) << r;
        ASSERT_TRUE(d >= 0 && d <= 0.10) << r;
        ASSERT_TRUE(tax >= 0 && tax <= 0.08) << r;
        ASSERT_TRUE(date::valid(ship) && ship >= 19920101 && ship <= 19981231) << ship;
        ASSERT_TRUE(rf == "R" || rf == "A" || rf == "N") << rf;
        ASSERT_TRUE(ls == "O" || ls == "F") << ls;
        ASSERT_TRUE(orderkeys.count(li.column("l_orderkey").int_at(r))) << r;
    }
}

TEST(Tpch, SuiteHasEightQueries) {
    std::vector<std::string> names;
    for (const auto& q : tpch::suite()) names.push_back(q.name);
    EXPECT_EQ(names, (std::vector<std::string>{"Q1", "Q3", "Q4", "Q6", "Q12", "Q13", "Q14", "Q19"}));
    EXPECT_THROW(tpch::find_query("Q99"), Error);
}

TEST(Tpch, SuiteQueriesReturnRows) {
    auto& s = ft::tpch_session();
    for (const auto& q : tpch::suite()) {
        auto r = s.execute(tpch::build(q, s.catalog(), s.udfs()));
        EXPECT_GT(r.table.row_count(), 0u) << q.name;
    }
}
