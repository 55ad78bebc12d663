#include "helpers.hpp"

#include "flarelite/error.hpp"
#include "flarelite/tpch.hpp"

#include <gtest/gtest.h>

using namespace flarelite;
namespace ft = flarelite::testing;

namespace {

UdfDef unary(std::string name, DataType t, std::function<StagedValue(const StagedValue&)> f) {
    UdfDef d;
    d.name = std::move(name);
    d.params = {t};
    d.result = t;
    d.builder = [f](std::span<const StagedValue> a) { return f(a[0]); };
    return d;
}

Session& udf_session() {
    static Session* s = [] {
        auto* session = new Session();
        tpch::register_all(session->catalog(), {{"partsupp", ft::tpch_tables().at("partsupp")},
                                                {"lineitem", ft::tpch_tables().at("lineitem")}});
        auto& u = session->udfs();
        u.register_udf(unary("sqr", DataType::Int64, [](const StagedValue& y) { return y * y; }));
        u.register_udf(unary("id", DataType::Int64, [](const StagedValue& y) { return y; }));
        u.register_udf(unary("inc", DataType::Int64, [](const StagedValue& y) { return y + 1; }));
        u.register_udf(unary("fsqr", DataType::Float64, [](const StagedValue& y) { return y * y; }));
        return session;
    }();
    return *s;
}

} // namespace

TEST(Udf, SqrEqualsManualSubstitution) {
    auto& s = udf_session();
    PlanPtr with = s.parse("select ps_availqty from partsupp where sqr(ps_availqty) > 100");
    PlanPtr manual = s.parse("select ps_availqty from partsupp where ps_availqty * ps_availqty > 100");
    auto a = s.execute(with).table;
    auto b = s.run_volcano(manual);
    EXPECT_TRUE(compare_tables(a, b).equal);
    EXPECT_GT(a.row_count(), 0u);
    EXPECT_EQ(print_ir(s.compile(with)), print_ir(s.compile(manual)));
    EXPECT_EQ(s.generated_source(with), s.generated_source(manual));
}

TEST(Udf, InlinedPlanHasNoCalls) {
    auto& s = udf_session();
    PlanPtr with = s.parse("select sqr(ps_availqty) as q from partsupp where sqr(ps_availqty) > 100");
    ASSERT_TRUE(contains_udf_call(with->child()->predicate));
    PlanPtr inlined = inline_udfs(with, s.udfs());
    EXPECT_FALSE(contains_udf_call(inlined->child()->predicate));
    EXPECT_FALSE(contains_udf_call(inlined->exprs[0].expr));
}

TEST(Udf, IdentityDisappears) {
    auto& s = udf_session();
    PlanPtr with = s.parse("select id(ps_partkey) as k from partsupp where id(ps_suppkey) < 10");
    PlanPtr plain = s.parse("select ps_partkey as k from partsupp where ps_suppkey < 10");
    EXPECT_EQ(print_ir(s.compile(with)), print_ir(s.compile(plain)));
}

TEST(Udf, UnknownUdfIsPlanError) {
    auto& s = udf_session();
    try {
        s.parse("select foo(ps_partkey) as x from partsupp");
        FAIL();
    } catch (const PlanError& e) {
        EXPECT_NE(std::string(e.what()).find("unknown UDF foo"), std::string::npos) << e.what();
    }
}

TEST(Udf, ConstantCallFoldsToFalse) {
    auto& s = udf_session();
    PlanPtr p = s.parse("select ps_partkey from partsupp where sqr(3) > 100");
    auto phys = s.physical(p);
    EXPECT_EQ(phys.root->kind, PlanKind::Empty);
    EXPECT_EQ(s.execute(p).table.row_count(), 0u);
    PlanPtr t = s.parse("select ps_partkey from partsupp where sqr(11) > 100");
    EXPECT_EQ(s.physical(t).root->kind, PlanKind::Scan);
}

TEST(Udf, RepeatedCallIsOneSubtree) {
    auto& s = udf_session();
    PlanPtr p = s.parse("select sqr(ps_availqty) as a, sqr(ps_availqty) + 1 as b from partsupp");
    KernelProgram prog = s.compile(p);
    EXPECT_EQ(count_ops(prog, IrOp::Arith), 2u) << print_ir(prog);
}

TEST(Udf, NestedCallsInlineFully) {
    auto& s = udf_session();
    PlanPtr nested = s.parse("select sqr(inc(ps_availqty)) as v from partsupp");
    PlanPtr manual = s.parse("select (ps_availqty + 1) * (ps_availqty + 1) as v from partsupp");
    EXPECT_TRUE(compare_tables(s.execute(nested).table, s.run_volcano(manual)).equal);
    EXPECT_EQ(print_ir(s.compile(nested)), print_ir(s.compile(manual)));
    PlanPtr deep = s.parse("select inc(inc(inc(ps_availqty))) as v from partsupp");
    EXPECT_FALSE(contains_udf_call(inline_udfs(deep, s.udfs())->exprs[0].expr));
}

TEST(Udf, IfBuiltinStagesConditional) {
    auto& s = udf_session();
    PlanPtr p = s.parse("select sum(if(l_quantity > 25, l_extendedprice, 0.0)) as big from lineitem");
    double want = 0;
    const auto& li = ft::tpch_tables().at("lineitem");
    for (std::size_t r = 0; r < li.row_count(); ++r)
        if (li.column("l_quantity").float_at(r) > 25) want += li.column("l_extendedprice").float_at(r);
    auto got = s.execute(p).table;
    EXPECT_TRUE(float_close(got.column(0).float_at(0), want, 1e-9, 0));
    EXPECT_TRUE(compare_tables(got, s.run_volcano(p)).equal);
}

TEST(Udf, FloatUdfOverIntArgumentWidens) {
    auto& s = udf_session();
    PlanPtr p = s.parse("select fsqr(ps_availqty) as v from partsupp");
    EXPECT_EQ(p->schema[0].dtype, DataType::Float64);
    EXPECT_TRUE(compare_tables(s.execute(p).table, s.run_volcano(p)).equal);
}

TEST(Udf, RegistrationChecks) {
    UdfRegistry r;
    EXPECT_NE(r.find_signature("if"), nullptr);
    r.register_udf(unary("twice", DataType::Int64, [](const StagedValue& y) { return y + y; }));
    EXPECT_THROW(r.register_udf(unary("twice", DataType::Int64, [](const StagedValue& y) { return y; })), PlanError);
    EXPECT_NO_THROW(r.register_udf(unary("twice", DataType::Int64, [](const StagedValue& y) { return y; }), true));
    UdfDef wrong = unary("half", DataType::Int64, [](const StagedValue& y) { return y / 2; });
    EXPECT_THROW(r.register_udf(wrong), PlanError);
    UdfDef agg = unary("agg", DataType::Int64, [](const StagedValue& y) { return y; });
    agg.aggregate = true;
    EXPECT_THROW(r.register_udf(agg), PlanError);
    UdfDef rnd = unary("rnd", DataType::Int64, [](const StagedValue& y) { return y; });
    rnd.deterministic = false;
    EXPECT_THROW(r.register_udf(rnd), PlanError);
}

TEST(Udf, WrongArgumentTypeIsPlanError) {
    auto& s = udf_session();
    EXPECT_THROW(s.parse("select sqr(ps_comment) as x from partsupp"), PlanError);
    EXPECT_THROW(s.parse("select sqr(ps_partkey, ps_suppkey) as x from partsupp"), PlanError);
}
