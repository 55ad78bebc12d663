#include "helpers.hpp"

#include "flarelite/error.hpp"
#include "flarelite/tpch.hpp"

#include <gtest/gtest.h>

using namespace flarelite;
using flarelite::testing::make_table;

TEST(Schema, ResolvesLineitemDiscount) {
    Schema s = tpch::schema("lineitem");
    ASSERT_EQ(s.size(), 16u);
    ColumnRef r = s.resolve("l_discount");
    EXPECT_EQ(r.ordinal, 6u);
    EXPECT_EQ(r.dtype, DataType::Float64);
}

TEST(Schema, ResolveSingleColumn) {
    Schema s({{"a", DataType::Text}});
    EXPECT_EQ(s.resolve("a").ordinal, 0u);
    EXPECT_EQ(s.resolve("a").dtype, DataType::Text);
}

TEST(Schema, UnknownColumnNamesItAndCandidates) {
    Schema s({{"a", DataType::Int64}});
    try {
        s.resolve("b");
        FAIL() << "expected PlanError";
    } catch (const PlanError& e) {
        std::string msg = e.what();
        EXPECT_NE(msg.find("unknown column b"), std::string::npos) << msg;
        EXPECT_NE(msg.find("a"), std::string::npos) << msg;
    }
}

TEST(Schema, RejectsDuplicateNames) {
    EXPECT_THROW(Schema({{"a", DataType::Int64}, {"a", DataType::Float64}}), PlanError);
}

TEST(Schema, RejectsBoolColumns) { EXPECT_THROW(Schema({{"b", DataType::Bool}}), PlanError); }

TEST(Catalog, RegisterLineitemAndScan) {
    Catalog c;
    auto tables = tpch::generate({0.001, 7});
    c.register_table("lineitem", tpch::schema("lineitem"),
                     std::make_shared<ColumnTable>(tables.at("lineitem")));
    PlanPtr p = plan::scan(c, "lineitem");
    EXPECT_EQ(p->kind, PlanKind::Scan);
    EXPECT_EQ(p->schema.size(), 16u);
    EXPECT_EQ(c.lookup("lineitem").row_count, tables.at("lineitem").row_count());
}

TEST(Catalog, EmptyTableScansZeroRows) {
    Session s;
    Schema schema({{"a", DataType::Int64}});
    s.catalog().register_table("t", ColumnTable::empty(schema));
    auto v = s.run_volcano(plan::scan(s.catalog(), "t"));
    EXPECT_EQ(v.row_count(), 0u);
    auto n = s.execute(plan::scan(s.catalog(), "t"), {.backend = Backend::Interpreter});
    EXPECT_EQ(n.table.row_count(), 0u);
}

TEST(Catalog, SchemaMismatchNamesColumn) {
    Catalog c;
    Schema declared({{"a", DataType::Int64}, {"b", DataType::Float64}});
    auto t = make_table(Schema({{"a", DataType::Int64}, {"b", DataType::Int64}}), {{std::int64_t{1}, std::int64_t{2}}});
    try {
        c.register_table("t", declared, std::make_shared<ColumnTable>(t));
        FAIL() << "expected PlanError";
    } catch (const PlanError& e) {
        EXPECT_NE(std::string(e.what()).find("b"), std::string::npos) << e.what();
    }
    auto narrow = make_table(Schema({{"a", DataType::Int64}}), {{std::int64_t{1}}});
    EXPECT_THROW(c.register_table("t", declared, std::make_shared<ColumnTable>(narrow)), PlanError);
}

TEST(Catalog, ReRegistrationReplaces) {
    Catalog c;
    Schema s({{"a", DataType::Int64}});
    c.register_table("t", make_table(s, {{std::int64_t{1}}}));
    c.register_table("t", make_table(s, {{std::int64_t{1}}, {std::int64_t{2}}}));
    EXPECT_EQ(c.lookup("t").row_count, 2u);
    EXPECT_EQ(c.table_names().size(), 1u);
}

TEST(Catalog, UnknownTable) {
    Catalog c;
    EXPECT_FALSE(c.contains("nope"));
    EXPECT_THROW(c.lookup("nope"), PlanError);
    EXPECT_THROW(plan::scan(c, "nope"), PlanError);
}

TEST(Catalog, DropRemoves) {
    Catalog c;
    c.register_table("t", ColumnTable::empty(Schema({{"a", DataType::Int64}})));
    c.drop("t");
    EXPECT_FALSE(c.contains("t"));
}
