#include "helpers.hpp"

#include "flarelite/tpch.hpp"

#include <gtest/gtest.h>

using namespace flarelite;
namespace ft = flarelite::testing;

namespace {

PlanPtr q6(Session& s) { return tpch::build(tpch::find_query("Q6"), s.catalog(), s.udfs()); }

const PlanNode* find_kind(const PlanPtr& p, PlanKind k) {
    if (p->kind == k) return p.get();
    for (const auto& c : p->children)
        if (auto* n = find_kind(c, k)) return n;
    return nullptr;
}

} // namespace

TEST(Optimizer, Q6IsOnePipeline) {
    auto& s = ft::tpch_session();
    auto phys = s.physical(q6(s));
    ASSERT_EQ(phys.pipelines.size(), 1u);
    EXPECT_EQ(phys.breaker_count(), 0u);
    EXPECT_EQ(phys.pipelines[0].source->kind, PlanKind::Scan);
    EXPECT_EQ(phys.pipelines[0].nodes.size(), 3u);
}

TEST(Optimizer, SingleJoinIsTwoPipelines) {
    auto& s = ft::tpch_session();
    auto phys = s.physical(s.parse(tpch::kJoinSql));
    ASSERT_EQ(phys.pipelines.size(), 2u);
    EXPECT_EQ(phys.breaker_count(), 1u);
    const PlanNode* join = find_kind(phys.root, PlanKind::Join);
    ASSERT_NE(join, nullptr);
    const NodeInfo& info = phys.at(join);
    EXPECT_EQ(info.strategy, "hash_join");
    EXPECT_EQ(info.build_pipeline, 0);
    EXPECT_EQ(info.pipeline, 1);
    EXPECT_EQ(phys.pipelines[0].source->table, "orders");
    EXPECT_EQ(phys.pipelines[1].source->table, "lineitem");
    EXPECT_EQ(phys.pipelines[1].depends_on, std::vector<int>{0});
}

TEST(Optimizer, TrueFilterFoldsAway) {
    auto& s = ft::tpch_session();
    PlanPtr scan = plan::scan(s.catalog(), "nation");
    PlanPtr f = plan::filter(scan, cmp(CmpOp::Eq, lit_int(1), lit_int(1)));
    auto phys = s.physical(f);
    EXPECT_TRUE(plan_equal(phys.root, s.physical(scan).root));
    EXPECT_EQ(phys.root->kind, PlanKind::Scan);
}

TEST(Optimizer, FalseFilterBecomesEmpty) {
    auto& s = ft::tpch_session();
    PlanPtr f = plan::filter(plan::scan(s.catalog(), "nation"), cmp(CmpOp::Gt, lit_int(1), lit_int(2)));
    auto phys = s.physical(f);
    EXPECT_EQ(phys.root->kind, PlanKind::Empty);
    EXPECT_EQ(s.execute(f, {.backend = Backend::Interpreter}).table.row_count(), 0u);
}

TEST(Optimizer, Q6ReadsFourColumns) {
    auto& s = ft::tpch_session();
    auto cols = required_columns(s.physical(q6(s)));
    std::set<std::pair<std::string, std::string>> want{{"lineitem", "l_shipdate"},
                                                      {"lineitem", "l_discount"},
                                                      {"lineitem", "l_quantity"},
                                                      {"lineitem", "l_extendedprice"}};
    EXPECT_EQ(cols, want);
}

TEST(Optimizer, SelectStarReadsEverything) {
    auto& s = ft::tpch_session();
    auto cols = required_columns(s.physical(s.parse("select * from lineitem")));
    EXPECT_EQ(cols.size(), 16u);
}

TEST(Optimizer, CountStarReadsNoValueColumns) {
    auto& s = ft::tpch_session();
    PlanPtr p = s.parse("select count(*) as n from lineitem");
    auto phys = s.physical(p);
    EXPECT_TRUE(required_columns(phys).empty());
    auto native = s.execute(p, {.backend = Backend::Native});
    ASSERT_EQ(native.table.row_count(), 1u);
    EXPECT_EQ(native.table.column(0).int_at(0), static_cast<std::int64_t>(ft::tpch_tables().at("lineitem").row_count()));

    OptimizerOptions no_prune;
    no_prune.prune = false;
    EXPECT_EQ(required_columns(s.physical(p, no_prune)).size(), 16u);
    auto full = s.execute(p, {.backend = Backend::Interpreter, .optimizer = no_prune});
    EXPECT_TRUE(compare_tables(native.table, full.table).equal);
}

TEST(Optimizer, FiltersArePushedBelowJoins) {
    auto& s = ft::tpch_session();
    PlanPtr p = s.parse("select l_orderkey from lineitem join orders on l_orderkey = o_orderkey "
                        "where o_orderdate < date '1995-01-01' and l_quantity > 40");
    auto phys = s.physical(p);
    const PlanNode* join = find_kind(phys.root, PlanKind::Join);
    ASSERT_NE(join, nullptr);
    EXPECT_EQ(join->child(0)->kind, PlanKind::Filter);
    EXPECT_EQ(join->child(1)->kind, PlanKind::Filter);
    EXPECT_TRUE(compare_tables(s.run_volcano(p), s.execute(p, {.backend = Backend::Interpreter}).table).equal);
}

TEST(Optimizer, JoinOrderIsKept) {
    auto& s = ft::tpch_session();
    PlanPtr p = s.parse("select n_name, r_name from region join nation on r_regionkey = n_regionkey");
    auto phys = s.physical(p);
    const PlanNode* join = find_kind(phys.root, PlanKind::Join);
    ASSERT_NE(join, nullptr);
    EXPECT_EQ(find_kind(join->children[0], PlanKind::Scan)->table, "region");
    EXPECT_EQ(find_kind(join->children[1], PlanKind::Scan)->table, "nation");
}

TEST(Optimizer, GroupedAggregateIsBreaker) {
    auto& s = ft::tpch_session();
    auto phys = s.physical(s.parse(tpch::find_query("Q1").sql));
    const PlanNode* agg = find_kind(phys.root, PlanKind::Aggregate);
    ASSERT_NE(agg, nullptr);
    EXPECT_TRUE(phys.at(agg).breaker);
    EXPECT_GE(phys.pipelines.size(), 2u);
}

TEST(Optimizer, AvgIsRewritten) {
    auto& s = ft::tpch_session();
    PlanPtr p = s.parse("select avg(l_quantity) as a from lineitem");
    PlanPtr r = rewrite_avg(p);
    const PlanNode* agg = find_kind(r, PlanKind::Aggregate);
    ASSERT_NE(agg, nullptr);
    for (const auto& a : agg->aggs) EXPECT_NE(a.fn, AggFn::Avg);
    EXPECT_EQ(r->schema, p->schema);
}
