#include "begflow/oracle.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace begflow;
using namespace testsupport;

namespace {

SpinConfig octagon_config(i64 w, i64 h, std::array<i64, 4> cuts, i64 C, double k)
{
    OctagonGeom g;
    g.width = w;
    g.height = h;
    g.cuts = cuts;
    SpinConfig u;
    u.ones = rasterize(g);
    u.zeros = canonical_surfactant(u.ones, C, k);
    return u;
}

}  // namespace

TEST_CASE("pinned octagon for small zeta")
{
    const ModelParams p{0.1, 0.3, 0.5, 1.0};  // 4 zeta = 1.2 below every side length
    const SpinConfig u = octagon_config(30, 30, {8, 8, 8, 8}, 8, p.k);
    const StepResult r = parametric_step(u, p, SearchBudget{});
    CHECK(r.disp.zero());
    CHECK(r.config.ones == u.ones);
    // a fixed point stays fixed
    const MMTrajectory mm = minimizing_movement(u, p, 3, SearchBudget{});
    REQUIRE(mm.steps.size() == 3);
    for (const auto& s : mm.steps) CHECK(s.config.ones == u.ones);
}

TEST_CASE("fast and naive evaluation agree")
{
    std::mt19937_64 rng(43);
    std::uniform_int_distribution<i64> W(4, 6), Cu(0, 2), Cs(0, 5);
    std::uniform_real_distribution<double> Z(0.3, 1.2);
    SearchBudget b;
    b.max_parallel_shift = 1;
    b.max_diag_shift = 1;
    b.defect_span = 2;
    b.surf_range = 2;
    int done = 0;
    while (done < 12) {
        OctagonGeom g;
        g.width = W(rng);
        g.height = W(rng);
        for (auto& c : g.cuts) c = Cu(rng);
        if (!g.valid()) continue;
        ++done;
        const ModelParams p{0.1, Z(rng), 0.5, done % 3 == 0 ? 2.0 : 1.0};
        SpinConfig u;
        u.ones = rasterize(g);
        u.zeros = canonical_surfactant(u.ones, Cs(rng), p.k);
        const StepResult fast = parametric_step(u, p, b);
        const StepResult naive = parametric_step_naive(u, p, b);
        CHECK(fast.functional_value == doctest::Approx(naive.functional_value).epsilon(1e-12));
        CHECK(!fast.fast_mismatch);
        CHECK(total_functional(fast.config, u, p) == doctest::Approx(fast.functional_value));
    }
}

TEST_CASE("no surfactant: minimum over moved octagons")
{
    const ModelParams p{0.1, 0.45, 0.5, 1.0};
    const SpinConfig u = octagon_config(15, 13, {2, 1, 3, 2}, 0, p.k);
    SearchBudget b;
    b.max_parallel_shift = 2;
    b.max_diag_shift = 2;
    b.defects = false;
    const StepResult r = parametric_step(u, p, b);
    const OctagonGeom g = containing_octagon(u.ones);
    double best = total_functional(SpinConfig{}, u, p);
    Displacement d;
    for (d.alpha[0] = 0; d.alpha[0] <= 2; ++d.alpha[0])
        for (d.alpha[1] = 0; d.alpha[1] <= 2; ++d.alpha[1])
            for (d.alpha[2] = 0; d.alpha[2] <= 2; ++d.alpha[2])
                for (d.alpha[3] = 0; d.alpha[3] <= 2; ++d.alpha[3])
                    for (d.beta[0] = 0; d.beta[0] <= 2; ++d.beta[0])
                        for (d.beta[1] = 0; d.beta[1] <= 2; ++d.beta[1])
                            for (d.beta[2] = 0; d.beta[2] <= 2; ++d.beta[2])
                                for (d.beta[3] = 0; d.beta[3] <= 2; ++d.beta[3]) {
                                    const auto h = apply_displacement(g, d);
                                    if (!h) continue;
                                    SpinConfig v;
                                    v.ones = rasterize(*h);
                                    if (v.ones.empty()) continue;
                                    best = std::min(best, total_functional(v, u, p));
                                }
    CHECK(r.functional_value == doctest::Approx(best));
    CHECK(r.config.zeros.empty());
    CHECK(r.energy == doctest::Approx(2 * perimeter(r.config.ones, p.eps)));
}

TEST_CASE("serial reference and threaded search agree")
{
    const ModelParams p{0.1, 0.8, 0.5, 1.0};
    const SpinConfig u = octagon_config(16, 14, {3, 4, 2, 3}, 12, p.k);
    SearchBudget serial;
    serial.threads = 1;
    const StepResult a = parametric_step(u, p, serial);
    const StepResult b = parametric_step(u, p, SearchBudget{});
    CHECK(a.functional_value == doctest::Approx(b.functional_value).epsilon(1e-13));
    CHECK(a.config.ones == b.config.ones);
    CHECK(a.config.zeros == b.config.zeros);
}

TEST_CASE("flip local search")
{
    const ModelParams p{0.1, 0.7, 0.5, 1.0};
    const SpinConfig u = octagon_config(10, 9, {2, 2, 1, 3}, 5, p.k);
    const StepResult par = parametric_step(u, p, SearchBudget{});
    const StepResult ls = flip_local_search(u, p, SearchBudget{}, 1, &par.config);
    CHECK(ls.functional_value >= par.functional_value - 1e-9);
    const StepResult again = flip_local_search(u, p, SearchBudget{}, 1, &par.config);
    CHECK(again.functional_value == ls.functional_value);
    CHECK(again.config.ones == ls.config.ones);
    CHECK(again.config.zeros == ls.config.zeros);

    SpinConfig odd;  // not a staircase
    odd.ones = unite(block(0, 0, 4, 4), block(6, 0, 3, 3));
    const StepResult o = flip_local_search(odd, p, SearchBudget{}, 2);
    CHECK(o.functional_value <= total_functional(odd, odd, p) + 1e-12);
}

TEST_CASE("minimizing movement")
{
    SUBCASE("surfactant count is constant for gamma < 2")
    {
        const ModelParams p{0.1, 0.6, 0.5, 1.0};
        const SpinConfig u = octagon_config(20, 18, {4, 5, 3, 4}, 10, p.k);
        const MMTrajectory mm = minimizing_movement(u, p, 4, SearchBudget{});
        CHECK(mm.steps.size() == 4);
        for (const auto& s : mm.steps) CHECK(s.config.zeros.size() == 10);
    }
    SUBCASE("pinned diagonals do not move outward")
    {
        const ModelParams p{0.1, 0.4, 0.5, 1.0};
        SpinConfig u = octagon_config(20, 20, {7, 7, 7, 7}, 2, p.k);
        const MMTrajectory mm = minimizing_movement(u, p, 3, SearchBudget{});
        OctagonGeom prev = containing_octagon(u.ones);
        for (const auto& s : mm.steps) {
            const OctagonGeom g = containing_octagon(s.config.ones);
            for (int i = 0; i < 4; ++i) CHECK(s.disp.beta[static_cast<std::size_t>(i)] == 0);
            CHECK(g.width <= prev.width);
            CHECK(g.height <= prev.height);
            prev = g;
        }
    }
    SUBCASE("shrinking square without surfactant")
    {
        const ModelParams p{0.1, 1.0, 0.5, 1.0};
        const SpinConfig u = octagon_config(29, 29, {0, 0, 0, 0}, 0, p.k);
        const MMTrajectory mm = minimizing_movement(u, p, 4, SearchBudget{});
        REQUIRE(mm.steps.size() == 4);
        i64 w = 29;
        for (const auto& s : mm.steps) {
            const OctagonGeom g = containing_octagon(s.config.ones);
            const double P = static_cast<double>(w) * p.eps;
            const i64 a = static_cast<i64>(std::floor(4 * p.zeta / P));
            CHECK(g.width == w - 2 * a);
            CHECK(g.height == w - 2 * a);
            CHECK(g.cuts == std::array<i64, 4>{0, 0, 0, 0});
            w = g.width;
        }
    }
}
