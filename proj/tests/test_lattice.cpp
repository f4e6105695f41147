#include "begflow/energy.hpp"
#include "begflow/lattice.hpp"
#include "support.hpp"

#include <doctest.h>

#include <set>

using namespace begflow;
using namespace testsupport;

TEST_CASE("neighbors")
{
    auto n = neighbors({0, 0});
    std::set<Site> got(n.begin(), n.end());
    CHECK(got == std::set<Site>{{1, 0}, {-1, 0}, {0, 1}, {0, -1}});
    n = neighbors({5, -3});
    got = std::set<Site>(n.begin(), n.end());
    CHECK(got == std::set<Site>{{6, -3}, {4, -3}, {5, -2}, {5, -4}});
    CHECK(got.size() == 4);
}

TEST_CASE("d1 distances")
{
    SiteSet S{Site{2, 1}};
    CHECK(d1({2, 1}, S) == 0);
    CHECK(d1({0, 0}, S) == 3);
    S.insert({0, 2});
    CHECK(d1({0, 0}, S) == 2);
}

TEST_CASE("d1_boundary")
{
    const SiteSet I = block(0, 0, 3, 3);
    CHECK(d1_boundary({0, 1}, I) == 1);
    CHECK(d1_boundary({1, 1}, I) == 2);
    CHECK(d1_boundary({6, 1}, I) == 4);  // outside: distance to I
    const SiteSet big = block(0, 0, 7, 7);
    SiteSet complement;
    for (i64 x = -1; x <= 7; ++x)
        for (i64 y = -1; y <= 7; ++y)
            if (!big.contains({x, y})) complement.insert({x, y});
    for (const auto& p : big) CHECK(d1_boundary(p, big) == d1(p, complement));
}

TEST_CASE("boundaries")
{
    const SiteSet one = block(0, 0, 1, 1);
    CHECK(exterior_boundary(one).size() == 4);
    CHECK(interior_boundary(one).size() == 1);
    CHECK(exterior_boundary(block(0, 0, 2, 2)).size() == 8);
    CHECK(interior_boundary(block(0, 0, 2, 2)).size() == 4);
    CHECK(exterior_boundary(block(0, 0, 3, 1)).size() == 8);
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const SiteSet I = random_staircase(rng);
        CHECK(exterior_boundary(I) == ring_scan(I));
    }
}

TEST_CASE("staircase")
{
    CHECK(is_staircase(block(0, 0, 4, 3)));
    CHECK(is_staircase(unite(block(0, 0, 5, 2), block(0, 0, 2, 5))));
    CHECK_FALSE(is_staircase(unite(block(0, 0, 2, 2), block(5, 5, 2, 2))));
    std::mt19937_64 rng(5);
    for (int t = 0; t < 50; ++t) {
        SiteSet I = random_staircase(rng);
        CHECK(is_staircase(I) == is_staircase_bruteforce(I));
        I.insert({20, 20});
        CHECK(is_staircase(I) == is_staircase_bruteforce(I));
    }
}

TEST_CASE("slices and perimeter")
{
    const SiteSet R = block(0, 0, 2, 3);
    const Slices s = slices(R);
    CHECK(s.n_h() == 3);
    CHECK(s.n_v() == 2);
    CHECK(perimeter(R, 1.0) == doctest::Approx(2.0 * static_cast<double>(s.n_h() + s.n_v())));

    // three steps: rows of width 6, 4, 2 each two high
    const SiteSet st = unite(unite(block(0, 0, 6, 2), block(0, 2, 4, 2)), block(0, 4, 2, 2));
    const Slices t = slices(st);
    REQUIRE(t.n_h() == 6);
    REQUIRE(t.n_v() == 6);
    const i64 widths[] = {6, 6, 4, 4, 2, 2};
    for (std::size_t r = 0; r < 6; ++r) {
        CHECK(t.H[r].count == widths[r]);
        CHECK(t.H[r].start == Site{0, static_cast<i64>(r)});
    }
    const i64 heights[] = {6, 6, 4, 4, 2, 2};
    for (std::size_t c = 0; c < 6; ++c) CHECK(t.V[c].count == heights[c]);
    std::mt19937_64 rng(7);
    for (int k = 0; k < 40; ++k) {
        const SiteSet I = random_staircase(rng);
        const Slices q = slices(I);
        CHECK(perimeter(I, 0.1) == doctest::Approx(0.2 * static_cast<double>(q.n_h() + q.n_v())));
    }
}

TEST_CASE("rasterize")
{
    OctagonGeom g;
    g.width = g.height = 2;
    CHECK(rasterize(g) == block(0, 0, 3, 3));
    g.width = g.height = 4;
    g.cuts = {1, 1, 1, 1};
    CHECK(rasterize(g).size() == 21);
    // direct count of lattice points inside the octagon
    std::size_t n = 0;
    for (i64 x = 0; x <= 4; ++x)
        for (i64 y = 0; y <= 4; ++y)
            n += (x + y >= 1 && x + (4 - y) >= 1 && (4 - x) + (4 - y) >= 1 && (4 - x) + y >= 1) ? 1 : 0;
    CHECK(n == 21);
    OctagonGeom d;
    d.width = 6;
    d.height = 4;
    d.cuts = {4, 0, 0, 0};
    REQUIRE(d.valid());
    CHECK(is_staircase(rasterize(d)));
}

TEST_CASE("octagon recognition round trip")
{
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<i64> W(4, 20), C(0, 6);
    int done = 0;
    while (done < 60) {
        OctagonGeom g;
        g.anchor = {C(rng) - 3, C(rng) - 3};
        g.width = W(rng);
        g.height = W(rng);
        for (auto& c : g.cuts) c = C(rng);
        if (!g.valid()) continue;
        ++done;
        INFO("w=", g.width, " h=", g.height, " cuts=", g.cuts[0], ",", g.cuts[1], ",", g.cuts[2], ",", g.cuts[3]);
        const auto r = recognize_octagon(rasterize(g));
        REQUIRE(r.has_value());
        CHECK(side_lengths(*r, 0.1).P == side_lengths(g, 0.1).P);
        CHECK(side_lengths(*r, 0.1).D == side_lengths(g, 0.1).D);
        CHECK(rasterize(*r) == rasterize(g));
        bool sides = true;
        for (int i = 0; i < 4; ++i) sides = sides && g.side_lattice(i) > 0;
        if (sides) CHECK(octagon_criterion(rasterize(g)));
    }
}

TEST_CASE("quasi-octagon recognition")
{
    QuasiOctagonGeom q;
    q.core.width = 12;
    q.core.height = 10;
    q.core.cuts = {3, 3, 3, 3};
    q.defects[0] = Defect{1, 2};
    REQUIRE(q.valid());
    const SiteSet I = rasterize(q);
    CHECK(I.size() == rasterize(q.core).size() + defect_sites(q, 0).size());
    CHECK_FALSE(recognize_octagon(I).has_value());
    const auto r = recognize_quasi_octagon(I);
    REQUIRE(r.has_value());
    CHECK(rasterize(*r) == I);
    CHECK_FALSE(r->is_octagon());

    // steps of height two on a diagonal edge: staircase, but the inner corners sit in no slice pair
    const SiteSet bad = unite(unite(block(0, 0, 6, 2), block(0, 2, 4, 2)), block(0, 4, 2, 2));
    CHECK(is_staircase(bad));
    CHECK_FALSE(recognize_quasi_octagon(bad).has_value());
}

TEST_CASE("corner sets")
{
    CHECK(corner_sets(block(0, 0, 5, 4)).outer.empty());
    OctagonGeom g;
    g.width = g.height = 8;
    g.cuts = {1, 1, 1, 1};
    auto count_two = [](const SiteSet& I) {
        std::size_t n = 0;
        for (const auto& p : ring_scan(I)) {
            int k = 0;
            for (const auto& q : neighbors(p)) k += I.contains(q) ? 1 : 0;
            n += k == 2 ? 1 : 0;
        }
        return n;
    };
    CHECK(corner_sets(rasterize(g)).outer.size() == 4);
    CHECK(count_two(rasterize(g)) == 4);
    g.width = g.height = 10;
    g.cuts = {3, 2, 4, 1};
    CHECK(corner_sets(rasterize(g)).outer.size() == 10);
    CHECK(count_two(rasterize(g)) == 10);
}

TEST_CASE("hausdorff")
{
    const SiteSet A = block(0, 0, 4, 4);
    CHECK(hausdorff(A, A) == 0);
    CHECK(hausdorff(SiteSet{Site{0, 0}}, SiteSet{Site{3, 0}}) == 3);
    OctagonGeom outer;
    outer.width = outer.height = 14;
    outer.cuts = {4, 4, 4, 4};
    OctagonGeom inner;
    inner.anchor = {2, 2};
    inner.width = inner.height = 10;
    inner.cuts = {2, 2, 2, 2};
    const SiteSet O = rasterize(outer), I = rasterize(inner);
    CHECK(hausdorff_scan(O, I) == 2);
    CHECK(hausdorff(O, I) == 2);
    std::mt19937_64 rng(13);
    for (int t = 0; t < 30; ++t) {
        const SiteSet X = random_staircase(rng), Y = random_staircase(rng);
        CHECK(hausdorff(X, Y) == hausdorff_scan(X, Y));
    }
}
