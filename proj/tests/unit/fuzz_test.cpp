#include "fuzz.hpp"
#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace flarelite;
namespace ft = flarelite::testing;

TEST(Fuzz, GeneratedPlansRespectLimits) {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        auto inst = fuzz::generate(seed);
        EXPECT_LE(plan_depth(inst.plan), 5u) << seed;
        for (const auto& [name, t] : inst.tables) EXPECT_LE(t.row_count(), 1000u) << seed;
    }
}

TEST(Fuzz, GenerationIsDeterministic) {
    auto a = fuzz::generate(77);
    auto b = fuzz::generate(77);
    EXPECT_TRUE(plan_equal(a.plan, b.plan));
    for (const auto& [name, t] : a.tables) EXPECT_EQ(t, b.tables.at(name));
}

TEST(Fuzz, EnginesAgreeOnRandomPlans) {
    Session s;
    for (std::uint64_t seed = 10000; seed < 10040; ++seed) {
        auto inst = fuzz::generate(seed);
        auto out = fuzz::check(s, inst);
        if (!out.agree) {
            auto small = fuzz::shrink(s, inst);
            auto dir = fuzz::dump(small, fuzz::check(s, small), ft::scratch_dir("fuzz-unit"));
            ADD_FAILURE() << "seed " << seed << ": " << out.detail << " (repro in " << dir << ")";
        }
    }
}
