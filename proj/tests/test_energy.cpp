#include "begflow/energy.hpp"
#include "begflow/surfactant.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace begflow;
using namespace testsupport;

namespace {

// Bond scan over a padded window.
double scan_energy(const SpinConfig& c, const ModelParams& p)
{
    const Box b = box_union(bounding_box(c.ones), bounding_box(c.zeros)).padded(1);
    double E = 0;
    for (i64 x = b.x0; x <= b.x1; ++x)
        for (i64 y = b.y0; y <= b.y1; ++y)
            for (const Site q : {Site{x + 1, y}, Site{x, y + 1}}) {
                const int a = c.value({x, y}), v = c.value(q);
                if (a == 0 || v == 0)
                    E += p.eps * (1 - p.k);
                else if (a != v)
                    E += 2 * p.eps;
            }
    return E;
}

// L1 distance from p to the boundary of I by scanning a window.
i64 scan_boundary_distance(const Site& p, const SiteSet& I, const Box& w)
{
    const bool inside = I.contains(p);
    i64 best = INT64_MAX;
    for (i64 x = w.x0; x <= w.x1; ++x)
        for (i64 y = w.y0; y <= w.y1; ++y)
            if (I.contains({x, y}) != inside) best = std::min(best, std::abs(x - p.x) + std::abs(y - p.y));
    return best;
}

double scan_functional(const SpinConfig& un, const SpinConfig& uo, const ModelParams& p)
{
    const Box w = box_union(bounding_box(un.ones), bounding_box(uo.ones)).padded(2);
    i64 sum = 0;
    for (i64 x = w.x0; x <= w.x1; ++x)
        for (i64 y = w.y0; y <= w.y1; ++y)
            if (un.ones.contains({x, y}) != uo.ones.contains({x, y}))
                sum += scan_boundary_distance({x, y}, uo.ones, w.padded(2));
    const double d0 = std::abs(static_cast<double>(un.zeros.size()) - static_cast<double>(uo.zeros.size()));
    return scan_energy(un, p) + (std::pow(p.eps, 3) * static_cast<double>(sum) + std::pow(p.eps, p.gamma) * d0) /
                                    (p.zeta * p.eps);
}

SpinConfig random_config(std::mt19937_64& rng)
{
    SpinConfig c;
    c.ones = random_staircase(rng);
    const auto ring = exterior_boundary(c.ones).sorted();
    std::bernoulli_distribution coin(0.3);
    for (const auto& s : ring)
        if (coin(rng)) c.zeros.insert(s);
    c.zeros.insert({30, 30});  // a far zero
    return c;
}

}  // namespace

TEST_CASE("beg_energy examples")
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    CHECK(beg_energy(SpinConfig{}, p).total == 0.0);
    SpinConfig one;
    one.ones.insert({0, 0});
    CHECK(beg_energy(one, p).total == doctest::Approx(0.8));
    SpinConfig zero;
    zero.zeros.insert({0, 0});
    CHECK(beg_energy(zero, p).total == doctest::Approx(0.2));
}

TEST_CASE("beg_energy against a bond scan, serial and parallel")
{
    std::mt19937_64 rng(17);
    const ModelParams p{0.1, 1.0, 0.6, 1.0};
    for (int t = 0; t < 40; ++t) {
        const SpinConfig c = random_config(rng);
        CHECK(beg_energy(c, p).total == doctest::Approx(scan_energy(c, p)));
        CHECK(beg_energy_serial(c, p).total == doctest::Approx(scan_energy(c, p)));
    }
    SpinConfig big;
    big.ones = block(0, 0, 90, 90);
    for (const auto& s : exterior_boundary(big.ones))
        if ((s.x + s.y) % 3 == 0) big.zeros.insert(s);
    CHECK(beg_energy(big, p).n_pm_bonds == beg_energy_serial(big, p).n_pm_bonds);
    CHECK(beg_energy(big, p).n_zero_bonds == beg_energy_serial(big, p).n_zero_bonds);
}

TEST_CASE("energy additivity over far components")
{
    std::mt19937_64 rng(19);
    const ModelParams p{0.05, 1.0, 0.5, 1.0};
    for (int t = 0; t < 10; ++t) {
        SpinConfig a = random_config(rng), b = random_config(rng);
        a.zeros.erase({30, 30});
        b.zeros.erase({30, 30});
        SpinConfig ab = a;
        for (const auto& s : b.ones) ab.ones.insert({s.x + 100, s.y});
        for (const auto& s : b.zeros) ab.zeros.insert({s.x + 100, s.y});
        CHECK(beg_energy(ab, p).total == doctest::Approx(beg_energy(a, p).total + beg_energy(b, p).total));
    }
}

TEST_CASE("contiguity and corner gain")
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    const double e = p.eps, k = p.k;
    // 1 x n side: three surfactant sites in one run or split in two
    SpinConfig run, split;
    run.ones = split.ones = block(0, 0, 8, 1);
    for (i64 x : {2, 3, 4}) run.zeros.insert({x, 1});
    for (i64 x : {1, 2, 5}) split.zeros.insert({x, 1});
    CHECK(beg_energy(split, p).total - beg_energy(run, p).total == doctest::Approx(e * (1 - k)));

    OctagonGeom g;
    g.width = g.height = 8;
    g.cuts = {2, 2, 2, 2};
    SpinConfig u;
    u.ones = rasterize(g);
    const Site corner = *corner_sets(u.ones).outer.begin();
    SpinConfig v = u;
    v.zeros.insert(corner);
    CHECK(beg_energy(v, p).total - beg_energy(u, p).total == doctest::Approx(-4 * k * e));

    SpinConfig w;
    w.ones = block(0, 0, 4, 4);
    SpinConfig w2 = w;
    w2.zeros.insert({1, 4});
    CHECK(beg_energy(w2, p).total - beg_energy(w, p).total == doctest::Approx((2 - 4 * k) * e));
}

TEST_CASE("dissipations")
{
    const ModelParams one{1.0, 1.0, 0.5, 1.0};
    const SiteSet B2 = block(0, 0, 2, 2);
    CHECK(dissipation_phase(B2, B2, one) == 0.0);
    SiteSet minus = B2;
    minus.erase({0, 0});
    CHECK(dissipation_phase(minus, B2, one) == doctest::Approx(1.0));
    CHECK(dissipation_phase(block(1, 1, 2, 2), block(0, 0, 4, 4), one) == doctest::Approx(12.0));
    std::mt19937_64 rng(23);
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    for (int t = 0; t < 30; ++t) {
        const SiteSet a = random_staircase(rng), b = random_staircase(rng);
        CHECK(dissipation_phase(a, b, p) == doctest::Approx(dissipation_phase_bruteforce(a, b, p)));
    }
    CHECK(dissipation_surf(SiteSet{}, SiteSet{}) == 0);
    CHECK(dissipation_surf(7, 4) == 3);
    CHECK(dissipation_surf(4, 4) == 0);
}

TEST_CASE("total functional")
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    SpinConfig u;
    u.ones = block(0, 0, 5, 5);
    CHECK(total_functional(u, u, p) == doctest::Approx(beg_energy(u, p).total));
    SpinConfig v = u;
    v.zeros.insert({2, 5});
    const double jump = total_functional(v, u, p) - beg_energy(v, p).total;
    CHECK(jump == doctest::Approx(1.0));

    std::mt19937_64 rng(29);
    const ModelParams q{0.1, 0.7, 0.6, 1.5};
    for (int t = 0; t < 25; ++t) {
        const SpinConfig a = random_config(rng), b = random_config(rng);
        CHECK(total_functional(a, b, q) == doctest::Approx(scan_functional(a, b, q)));
    }
}

TEST_CASE("perimeter")
{
    CHECK(perimeter(block(0, 0, 1, 1), 1.0) == doctest::Approx(4.0));
    CHECK(perimeter(block(0, 0, 2, 3), 1.0) == doctest::Approx(10.0));
    std::mt19937_64 rng(31);
    for (int t = 0; t < 40; ++t) {
        const SiteSet I = random_staircase(rng);
        CHECK(perimeter(I, 0.1) == doctest::Approx(0.1 * static_cast<double>(exposed_scan(I))));
    }
}

TEST_CASE("surface tension")
{
    CHECK(surface_tension({1, 0}, 0.5) == doctest::Approx(1.5));
    CHECK(surface_tension({0, 1}, 0.5) == doctest::Approx(1.5));
    const double r = 1 / std::sqrt(2.0);
    CHECK(surface_tension({r, r}, 0.5) == doctest::Approx(2 * std::sqrt(2.0) * 0.5));
    CHECK_THROWS(surface_tension({1, 1}, 0.5));
}

TEST_CASE("energy identity")
{
    const ModelParams p{0.1, 1.0, 0.5, 1.0};
    OctagonGeom g;
    g.width = 12;
    g.height = 10;
    g.cuts = {3, 2, 4, 1};
    SpinConfig u;
    u.ones = rasterize(g);
    CHECK(energy_identity_check(u, p));
    CHECK(beg_energy(u, p).total == doctest::Approx(2 * perimeter(u.ones, p.eps)));
    u.zeros = corner_sets(u.ones).outer;
    CHECK(energy_identity_check(u, p));
    std::mt19937_64 rng(37);
    std::uniform_int_distribution<i64> W(6, 16), C(0, 4);
    for (int t = 0; t < 30; ++t) {
        OctagonGeom h;
        h.width = W(rng);
        h.height = W(rng);
        for (auto& c : h.cuts) c = C(rng);
        if (!h.valid()) continue;
        SpinConfig v;
        v.ones = rasterize(h);
        std::bernoulli_distribution coin(0.5);
        for (const auto& s : corner_sets(v.ones).outer.sorted())
            if (coin(rng)) v.zeros.insert(s);
        const double Cn = static_cast<double>(v.zeros.size());
        const double rhs = 2 * p.eps * static_cast<double>(exposed_scan(v.ones));
        CHECK(scan_energy(v, p) == doctest::Approx(rhs + 4 * p.eps * (1 - p.k) * Cn - 4 * p.eps * Cn));
        CHECK(energy_identity_check(v, p));
    }
}

TEST_CASE("canonical surfactant")
{
    const double k = 0.5;
    OctagonGeom g;
    g.width = 12;
    g.height = 10;
    g.cuts = {3, 2, 4, 1};
    const SiteSet I = rasterize(g);
    const SiteSet O = corner_sets(I).outer;
    for (i64 C = 0; C <= static_cast<i64>(O.size()); ++C) {
        const SiteSet Z = canonical_surfactant(I, C, k);
        CHECK(static_cast<i64>(Z.size()) == C);
        for (const auto& z : Z) CHECK(O.contains(z));
    }
    const SiteSet ring = exterior_boundary(I);
    CHECK(canonical_surfactant(I, static_cast<i64>(ring.size()), k) == ring);

    // each diagonal one step long: four corners then a pair at a side end
    OctagonGeom s;
    s.width = s.height = 3;
    s.cuts = {1, 1, 1, 1};
    const SiteSet J = rasterize(s);
    REQUIRE(exterior_boundary(J).size() <= 20);
    const SiteSet Z = canonical_surfactant(J, 6, k);
    const SiteSet OJ = corner_sets(J).outer;
    CHECK(OJ.size() == 4);
    std::size_t on_corners = 0;
    std::vector<Site> rest;
    for (const auto& z : Z) {
        if (OJ.contains(z))
            ++on_corners;
        else
            rest.push_back(z);
    }
    CHECK(on_corners == 4);
    REQUIRE(rest.size() == 2);
    CHECK(l1(rest[0], rest[1]) == 1);
    CHECK(surfactant_energy(J, Z, k) == doctest::Approx(surfactant_bruteforce_energy(J, 6, k)));
}

TEST_CASE("surfactant minimum against exhaustive search")
{
    // minimum energy change per count over every subset of the exterior ring, by bond scan
    auto exhaustive = [](const SiteSet& I, double k) {
        const ModelParams p{1.0, 1.0, k, 1.0};
        const auto ring = exterior_boundary(I).sorted();
        const std::size_t n = ring.size();
        SpinConfig base;
        base.ones = I;
        const double E0 = scan_energy(base, p);
        std::vector<double> best(n + 1, 1e300);
        for (std::uint32_t m = 0; m < (1u << n); ++m) {
            SpinConfig c = base;
            for (std::size_t b = 0; b < n; ++b)
                if (m & (1u << b)) c.zeros.insert(ring[b]);
            const std::size_t C = c.zeros.size();
            best[C] = std::min(best[C], scan_energy(c, p) - E0);
        }
        return best;
    };
    std::mt19937_64 rng(41);
    std::uniform_int_distribution<i64> W(0, 3), Cd(0, 1);
    int done = 0;
    while (done < 12) {
        OctagonGeom g;
        g.width = W(rng);
        g.height = W(rng);
        for (auto& c : g.cuts) c = Cd(rng);
        if (!g.valid()) continue;
        const SiteSet I = rasterize(g);
        const i64 n = static_cast<i64>(exterior_boundary(I).size());
        if (n > 14) continue;
        ++done;
        for (const double k : {0.4, 0.5, 0.8}) {
            const auto best = exhaustive(I, k);
            for (i64 C = 0; C <= n; ++C) {
                const double e = best[static_cast<std::size_t>(C)];
                CHECK(surfactant_min_energy(I, C, k).energy == doctest::Approx(e));
                CHECK(surfactant_bruteforce_energy(I, C, k) == doctest::Approx(e));
                CHECK(surfactant_energy(I, canonical_surfactant(I, C, k), k) == doctest::Approx(e));
            }
        }
    }
}
