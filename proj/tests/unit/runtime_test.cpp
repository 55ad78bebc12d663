#include "helpers.hpp"
#include "oracles.hpp"

#include "flarelite/error.hpp"
#include "flarelite/tpch.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include <numeric>

using namespace flarelite;
namespace ft = flarelite::testing;

namespace {

PlanPtr query(Session& s, const char* name) { return tpch::build(tpch::find_query(name), s.catalog(), s.udfs()); }

} // namespace

TEST(Runtime, ValidateRejectsBadConfigs) {
    RunConfig c;
    c.threads = 0;
    EXPECT_THROW(validate(c), Error);
    c.threads = 2;
    c.pin_cores = {0};
    EXPECT_THROW(validate(c), Error);
    c.pin_cores = {0, 0};
    EXPECT_THROW(validate(c), Error);
    c.pin_cores = {0, -1};
    EXPECT_THROW(validate(c), Error);
    c.pin_cores = {0, 1};
    EXPECT_NO_THROW(validate(c));
}

TEST(Runtime, UnavailableCoreWarnsAndRuns) {
    auto& s = ft::tpch_session();
    QueryOptions o;
    o.threads = 2;
    o.pin_cores = {0, 1000};
    auto r = s.execute(query(s, "Q6"), o);
    EXPECT_FALSE(r.run.warnings.empty());
    auto base = s.execute(query(s, "Q6"));
    EXPECT_TRUE(compare_tables(r.table, base.table).equal);
}

TEST(Runtime, Q6InvariantAcrossThreadCounts) {
    auto& s = ft::tpch_session();
    double want = ft::q6_from_table(ft::tpch_tables().at("lineitem"));
    for (Backend b : {Backend::Native, Backend::Interpreter}) {
        for (int t : {1, 2, 4, 8}) {
            auto r = s.execute(query(s, "Q6"), {.backend = b, .threads = t});
            ASSERT_EQ(r.table.row_count(), 1u);
            EXPECT_TRUE(float_close(r.table.column(0).float_at(0), want, 1e-9, 0))
                << "threads " << t << ": " << r.table.column(0).float_at(0) << " vs " << want;
        }
    }
}

TEST(Runtime, SameThreadCountIsBitStable) {
    auto& s = ft::tpch_session();
    for (int t : {1, 3}) {
        auto a = s.execute(query(s, "Q6"), {.threads = t}).table.column(0).float_at(0);
        auto b = s.execute(query(s, "Q6"), {.threads = t}).table.column(0).float_at(0);
        EXPECT_EQ(std::memcmp(&a, &b, sizeof a), 0);
    }
}

TEST(Runtime, OneThreadMatchesUnpartitionedRun) {
    auto& s = ft::tpch_session();
    for (const char* name : {"Q1", "Q3", "Q6"}) {
        KernelProgram prog = s.compile(query(s, name));
        std::vector<TablePtr> in;
        for (const auto& d : prog.inputs) in.push_back(s.catalog().load(d.table, d.schema.names()));
        ColumnTable whole = ir_interpret(prog, in);
        auto driven = s.execute(query(s, name), {.backend = Backend::Interpreter, .threads = 1}).table;
        EXPECT_TRUE(compare_tables(whole, driven, {.rel_tol = 0, .abs_floor = 0, .ordered = true}).equal) << name;
    }
}

TEST(Runtime, GroupCountsMatchBruteForceAcrossThreads) {
    auto& s = ft::tpch_session();
    auto want = ft::q1_counts(ft::tpch_tables().at("lineitem"), 19980902);
    PlanPtr p = s.parse("select l_returnflag, l_linestatus, count(*) as n from lineitem "
                        "where l_shipdate <= date '1998-09-02' group by l_returnflag, l_linestatus");
    for (int t : {1, 2, 3, 7}) {
        auto r = s.execute(p, {.threads = t}).table;
        std::map<std::pair<std::string, std::string>, std::int64_t> got;
        for (std::size_t i = 0; i < r.row_count(); ++i)
            got[{std::string(r.column(0).text_at(i)), std::string(r.column(1).text_at(i))}] = r.column(2).int_at(i);
        EXPECT_EQ(got, want) << "threads " << t;
    }
}

TEST(Runtime, PartitionsCoverEveryRow) {
    auto& s = ft::tpch_session();
    const auto rows = ft::tpch_tables().at("lineitem").row_count();
    for (int t : {1, 3, 4, 8}) {
        auto r = s.execute(query(s, "Q6"), {.threads = t});
        ASSERT_EQ(r.run.rows_per_thread.size(), 1u);
        const auto& per = r.run.rows_per_thread[0];
        EXPECT_EQ(per.size(), static_cast<std::size_t>(t));
        EXPECT_EQ(std::accumulate(per.begin(), per.end(), std::uint64_t{0}), rows);
        auto [lo, hi] = std::minmax_element(per.begin(), per.end());
        EXPECT_LE(*hi - *lo, 1u);
    }
}

TEST(Runtime, JoinAndSortAcrossThreads) {
    auto& s = ft::tpch_session();
    for (const char* name : {"Q3", "Q4", "Q12", "Q13"}) {
        auto base = s.execute(query(s, name)).table;
        for (int t : {2, 7}) {
            auto r = s.execute(query(s, name), {.threads = t}).table;
            bool ordered = tpch::find_query(name).ordered;
            auto cmp = compare_tables(base, r, {.ordered = ordered});
            EXPECT_TRUE(cmp.equal) << name << " threads " << t << ": " << cmp.message;
        }
    }
}

TEST(Cost, SingleThreadListGivesOneRow) {
    auto r = cost_report("Q6", "native", {1}, {10.0}, "volcano", 100.0);
    ASSERT_EQ(r.rows.size(), 1u);
    EXPECT_EQ(r.rows[0].speedup, 1.0);
    EXPECT_EQ(r.cost, 1);
    std::string text = format_cost_report(r);
    EXPECT_NE(text.find("1.00x"), std::string::npos) << text;
    EXPECT_NE(text.find("cost = 1"), std::string::npos) << text;
}

TEST(Cost, NeverBeatingBaselineIsInfinity) {
    auto r = cost_report("Q6", "volcano", {1}, {500.0}, "native@1", 5.0);
    EXPECT_FALSE(r.cost.has_value());
    EXPECT_NE(format_cost_report(r).find("cost = infinity"), std::string::npos);
}

TEST(Cost, PicksSmallestWinningThreadCount) {
    auto r = cost_report("Q1", "native", {1, 2, 4}, {30.0, 16.0, 9.0}, "baseline", 20.0);
    EXPECT_EQ(r.cost, 2);
    EXPECT_DOUBLE_EQ(r.rows[2].speedup, 30.0 / 9.0);
    EXPECT_THROW(cost_report("Q1", "native", {1, 2}, {1.0}, "b", 1.0), Error);
}
