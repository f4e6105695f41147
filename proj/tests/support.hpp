#pragma once
// Small constructions and independent reference computations shared by the unit tests.
#include "begflow/lattice.hpp"

#include <algorithm>
#include <random>

namespace testsupport {

using begflow::i64;
using begflow::Site;
using begflow::SiteSet;

inline SiteSet block(i64 x0, i64 y0, i64 w, i64 h)
{
    SiteSet s;
    for (i64 x = x0; x < x0 + w; ++x)
        for (i64 y = y0; y < y0 + h; ++y) s.insert({x, y});
    return s;
}

inline SiteSet unite(const SiteSet& a, const SiteSet& b)
{
    SiteSet s = a;
    for (const auto& p : b) s.insert(p);
    return s;
}

// Exterior ring by scanning the padded box.
inline SiteSet ring_scan(const SiteSet& I)
{
    SiteSet out;
    const auto b = begflow::bounding_box(I).padded(1);
    for (i64 x = b.x0; x <= b.x1; ++x)
        for (i64 y = b.y0; y <= b.y1; ++y) {
            if (I.contains({x, y})) continue;
            if (I.contains({x + 1, y}) || I.contains({x - 1, y}) || I.contains({x, y + 1}) || I.contains({x, y - 1}))
                out.insert({x, y});
        }
    return out;
}

inline i64 exposed_scan(const SiteSet& I)
{
    i64 n = 0;
    for (const auto& p : I)
        for (const Site q : {Site{p.x + 1, p.y}, Site{p.x - 1, p.y}, Site{p.x, p.y + 1}, Site{p.x, p.y - 1}})
            n += I.contains(q) ? 0 : 1;
    return n;
}

inline i64 hausdorff_scan(const SiteSet& A, const SiteSet& B)
{
    auto one = [](const SiteSet& X, const SiteSet& Y) {
        i64 worst = 0;
        for (const auto& p : X) {
            i64 best = INT64_MAX;
            for (const auto& q : Y) best = std::min(best, std::max(std::abs(p.x - q.x), std::abs(p.y - q.y)));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(one(A, B), one(B, A));
}

// Random staircase: union of nested centered rectangles.
inline SiteSet random_staircase(std::mt19937_64& rng)
{
    std::uniform_int_distribution<i64> n(1, 4), w(1, 9);
    SiteSet s;
    const i64 layers = n(rng);
    for (i64 l = 0; l < layers; ++l) {
        const i64 a = w(rng), b = w(rng);
        s = unite(s, block(-a / 2, -b / 2, a, b));
    }
    return s;
}

}  // namespace testsupport
