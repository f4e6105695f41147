#include "begflow/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>

namespace begflow {

std::vector<Site> SiteSet::sorted() const
{
    std::vector<Site> v(set_.begin(), set_.end());
    std::sort(v.begin(), v.end());
    return v;
}

Box bounding_box(const SiteSet& s)
{
    Box b;
    bool first = true;
    for (const auto& p : s) {
        if (first) {
            b = {p.x, p.y, p.x, p.y};
            first = false;
            continue;
        }
        b.x0 = std::min(b.x0, p.x);
        b.y0 = std::min(b.y0, p.y);
        b.x1 = std::max(b.x1, p.x);
        b.y1 = std::max(b.y1, p.y);
    }
    return b;
}

Box box_union(const Box& a, const Box& b)
{
    if (a.empty()) return b;
    if (b.empty()) return a;
    return {std::min(a.x0, b.x0), std::min(a.y0, b.y0), std::max(a.x1, b.x1), std::max(a.y1, b.y1)};
}

void SpinConfig::validate() const
{
    for (const auto& z : zeros)
        if (ones.contains(z)) throw std::invalid_argument("ones and zeros overlap");
}

i64 OctagonGeom::side_lattice(int i) const
{
    const auto& c = cuts;
    switch (i) {
    case 0: return width - c[0] - c[3];
    case 1: return height - c[0] - c[1];
    case 2: return width - c[1] - c[2];
    case 3: return height - c[2] - c[3];
    default: throw std::out_of_range("side index");
    }
}

bool OctagonGeom::valid() const
{
    if (width < 0 || height < 0) return false;
    for (auto c : cuts)
        if (c < 0) return false;
    for (int i = 0; i < 4; ++i)
        if (side_lattice(i) < 0) return false;
    return true;
}

std::optional<std::pair<i64, i64>> OctagonGeom::row_span(i64 y) const
{
    if (y < 0 || y > height) return std::nullopt;
    const i64 top = height - y;
    i64 lo = std::max<i64>({0, cuts[0] - y, cuts[1] - top});
    i64 hi = width - std::max<i64>({0, cuts[3] - y, cuts[2] - top});
    if (lo > hi) return std::nullopt;
    return std::make_pair(lo, hi);
}

bool QuasiOctagonGeom::is_octagon() const
{
    for (const auto& d : defects)
        if (d) return false;
    return true;
}

namespace {

// Admissible segment for a defect on side i: fixed coordinate and [lo, hi] along the side,
// absolute coordinates.
struct Admissible {
    bool horizontal = true;
    i64 fixed = 0;
    i64 lo = 0, hi = -1;
};

Admissible admissible_segment(const OctagonGeom& g, int side)
{
    const auto& c = g.cuts;
    const i64 ax = g.anchor.x, ay = g.anchor.y;
    Admissible a;
    switch (side) {
    case 0:
        a = {true, ay - 1, ax + c[0] + 1, ax + g.width - c[3] - 1};
        break;
    case 1:
        a = {false, ax - 1, ay + c[0] + 1, ay + g.height - c[1] - 1};
        break;
    case 2:
        a = {true, ay + g.height + 1, ax + c[1] + 1, ax + g.width - c[2] - 1};
        break;
    case 3:
        a = {false, ax + g.width + 1, ay + c[3] + 1, ay + g.height - c[2] - 1};
        break;
    default: throw std::out_of_range("side index");
    }
    return a;
}

}  // namespace

bool QuasiOctagonGeom::valid() const
{
    if (!core.valid()) return false;
    for (int i = 0; i < 4; ++i) {
        const auto& d = defects[static_cast<std::size_t>(i)];
        if (!d) continue;
        if (d->lo < 0 || d->hi < 0) return false;
        auto a = admissible_segment(core, i);
        if (a.lo + d->lo > a.hi - d->hi) return false;
    }
    // Defects on two sides meeting at a corner must not touch each other.
    return true;
}

std::vector<Site> defect_sites(const QuasiOctagonGeom& q, int side)
{
    std::vector<Site> out;
    const auto& d = q.defects[static_cast<std::size_t>(side)];
    if (!d) return out;
    auto a = admissible_segment(q.core, side);
    for (i64 t = a.lo + d->lo; t <= a.hi - d->hi; ++t)
        out.push_back(a.horizontal ? Site{t, a.fixed} : Site{a.fixed, t});
    return out;
}

SideLengths side_lengths(const OctagonGeom& g, double eps)
{
    SideLengths s;
    const double r2 = std::sqrt(2.0);
    for (int i = 0; i < 4; ++i) {
        s.P[static_cast<std::size_t>(i)] = eps * static_cast<double>(g.side_lattice(i));
        s.D[static_cast<std::size_t>(i)] = r2 * eps * static_cast<double>(g.cuts[static_cast<std::size_t>(i)]);
    }
    return s;
}

std::array<Site, 4> neighbors(const Site& p)
{
    return {Site{p.x + 1, p.y}, Site{p.x - 1, p.y}, Site{p.x, p.y + 1}, Site{p.x, p.y - 1}};
}

i64 l1(const Site& a, const Site& b) { return std::abs(a.x - b.x) + std::abs(a.y - b.y); }
i64 linf(const Site& a, const Site& b) { return std::max(std::abs(a.x - b.x), std::abs(a.y - b.y)); }

i64 d1(const Site& p, const std::vector<Site>& S)
{
    if (S.empty()) throw std::invalid_argument("empty set distance");
    i64 best = std::numeric_limits<i64>::max();
    for (const auto& q : S) best = std::min(best, l1(p, q));
    return best;
}

i64 d1(const Site& p, const SiteSet& S)
{
    if (S.empty()) throw std::invalid_argument("empty set distance");
    i64 best = std::numeric_limits<i64>::max();
    for (const auto& q : S) best = std::min(best, l1(p, q));
    return best;
}

namespace {

// Smallest r such that the L1 sphere of radius r around p hits a site with membership == want.
i64 ring_search(const Site& p, const SiteSet& I, bool want, i64 limit)
{
    for (i64 r = 1; r <= limit; ++r) {
        for (i64 dx = -r; dx <= r; ++dx) {
            const i64 dy = r - std::abs(dx);
            if (I.contains({p.x + dx, p.y + dy}) == want) return r;
            if (dy != 0 && I.contains({p.x + dx, p.y - dy}) == want) return r;
        }
    }
    throw std::logic_error("ring search exhausted");
}

}  // namespace

i64 d1_boundary(const Site& p, const SiteSet& I)
{
    if (I.empty()) throw std::invalid_argument("empty set distance");
    const Box b = bounding_box(I);
    const i64 limit = b.width() + b.height() + l1(p, {b.x0, b.y0}) + 2;
    if (I.contains(p)) return ring_search(p, I, false, limit);
    return ring_search(p, I, true, limit);
}

int count_neighbors_in(const Site& p, const SiteSet& I)
{
    int n = 0;
    for (const auto& q : neighbors(p)) n += I.contains(q) ? 1 : 0;
    return n;
}

SiteSet exterior_boundary(const SiteSet& I)
{
    SiteSet out;
    for (const auto& p : I)
        for (const auto& q : neighbors(p))
            if (!I.contains(q)) out.insert(q);
    return out;
}

SiteSet interior_boundary(const SiteSet& I)
{
    SiteSet out;
    for (const auto& p : I)
        for (const auto& q : neighbors(p))
            if (!I.contains(q)) {
                out.insert(p);
                break;
            }
    return out;
}

namespace {

bool connected(const SiteSet& I)
{
    if (I.empty()) return true;
    SiteSet seen;
    std::deque<Site> queue;
    const Site start = *I.begin();
    seen.insert(start);
    queue.push_back(start);
    while (!queue.empty()) {
        Site p = queue.front();
        queue.pop_front();
        for (const auto& q : neighbors(p))
            if (I.contains(q) && seen.insert(q)) queue.push_back(q);
    }
    return seen.size() == I.size();
}

// rows[y] = sorted x values; cols likewise
std::map<i64, std::vector<i64>> rows_of(const SiteSet& I)
{
    std::map<i64, std::vector<i64>> rows;
    for (const auto& p : I) rows[p.y].push_back(p.x);
    for (auto& [y, xs] : rows) std::sort(xs.begin(), xs.end());
    return rows;
}

std::map<i64, std::vector<i64>> cols_of(const SiteSet& I)
{
    std::map<i64, std::vector<i64>> cols;
    for (const auto& p : I) cols[p.x].push_back(p.y);
    for (auto& [x, ys] : cols) std::sort(ys.begin(), ys.end());
    return cols;
}

bool contiguous(const std::vector<i64>& v)
{
    return v.empty() || v.back() - v.front() + 1 == static_cast<i64>(v.size());
}

}  // namespace

bool is_staircase(const SiteSet& I)
{
    if (I.empty()) return false;
    for (const auto& [y, xs] : rows_of(I))
        if (!contiguous(xs)) return false;
    for (const auto& [x, ys] : cols_of(I))
        if (!contiguous(ys)) return false;
    return connected(I);
}

bool is_staircase_bruteforce(const SiteSet& I)
{
    if (I.empty()) return false;
    if (!connected(I)) return false;
    // every pair of sites on a common row/column must have all sites between them in I
    auto v = I.sorted();
    for (std::size_t a = 0; a < v.size(); ++a)
        for (std::size_t b = a + 1; b < v.size(); ++b) {
            const Site& p = v[a];
            const Site& q = v[b];
            if (p.y == q.y) {
                for (i64 x = std::min(p.x, q.x); x <= std::max(p.x, q.x); ++x)
                    if (!I.contains({x, p.y})) return false;
            }
            if (p.x == q.x) {
                for (i64 y = std::min(p.y, q.y); y <= std::max(p.y, q.y); ++y)
                    if (!I.contains({p.x, y})) return false;
            }
        }
    return true;
}

Slices slices(const SiteSet& I)
{
    if (!is_staircase(I)) throw std::invalid_argument("slices: not a staircase set");
    Slices s;
    for (const auto& [y, xs] : rows_of(I)) s.H.push_back({{xs.front(), y}, static_cast<i64>(xs.size())});
    for (const auto& [x, ys] : cols_of(I)) s.V.push_back({{x, ys.front()}, static_cast<i64>(ys.size())});
    return s;
}

OctagonGeom containing_octagon(const SiteSet& I)
{
    if (I.empty()) throw std::invalid_argument("containing_octagon: empty set");
    const Box b = bounding_box(I);
    i64 smin = std::numeric_limits<i64>::max(), smax = std::numeric_limits<i64>::min();
    i64 dmin = smin, dmax = smax;
    for (const auto& p : I) {
        smin = std::min(smin, p.x + p.y);
        smax = std::max(smax, p.x + p.y);
        dmin = std::min(dmin, p.x - p.y);
        dmax = std::max(dmax, p.x - p.y);
    }
    OctagonGeom g;
    g.anchor = {b.x0, b.y0};
    g.width = b.x1 - b.x0;
    g.height = b.y1 - b.y0;
    g.cuts[0] = smin - (b.x0 + b.y0);
    g.cuts[1] = dmin - (b.x0 - b.y1);
    g.cuts[2] = (b.x1 + b.y1) - smax;
    g.cuts[3] = (b.x1 - b.y0) - dmax;
    return g;
}

namespace {

bool pair_criterion(const SiteSet& I, bool allow_second)
{
    if (!is_staircase(I)) return false;
    const Box b = bounding_box(I);
    SiteSet inner = interior_boundary(I);
    for (const auto& p : inner) {
        const Site qh{p.x + 1, p.y};
        if (inner.contains(qh)) {
            bool ok = p.y == b.y0 || p.y == b.y1;
            if (allow_second) ok = ok || p.y == b.y0 + 1 || p.y == b.y1 - 1;
            if (!ok) return false;
        }
        const Site qv{p.x, p.y + 1};
        if (inner.contains(qv)) {
            bool ok = p.x == b.x0 || p.x == b.x1;
            if (allow_second) ok = ok || p.x == b.x0 + 1 || p.x == b.x1 - 1;
            if (!ok) return false;
        }
    }
    return true;
}

}  // namespace

bool octagon_criterion(const SiteSet& I) { return pair_criterion(I, false); }
bool quasi_octagon_criterion(const SiteSet& I) { return pair_criterion(I, true); }

std::optional<OctagonGeom> recognize_octagon(const SiteSet& I)
{
    if (I.empty()) return std::nullopt;
    OctagonGeom g = containing_octagon(I);
    if (!g.valid() || rasterize(g) != I) return std::nullopt;
    // the pair criterion misses octagons with a zero parallel side, which the rasterization check catches
    return g;
}

std::optional<QuasiOctagonGeom> recognize_quasi_octagon(const SiteSet& I)
{
    if (!quasi_octagon_criterion(I)) return std::nullopt;
    const OctagonGeom G = containing_octagon(I);
    if (!G.valid()) return std::nullopt;
    const SiteSet full = rasterize(G);
    if (full == I) return QuasiOctagonGeom{G, {}};

    // Sides whose outermost slice of I is shorter than that of G carry a defect.
    const Box b = bounding_box(I);
    auto section = [&](const SiteSet& S, int side) {
        std::vector<i64> t;
        for (const auto& p : S) {
            if (side == 0 && p.y == b.y0) t.push_back(p.x);
            if (side == 2 && p.y == b.y1) t.push_back(p.x);
            if (side == 1 && p.x == b.x0) t.push_back(p.y);
            if (side == 3 && p.x == b.x1) t.push_back(p.y);
        }
        std::sort(t.begin(), t.end());
        return t;
    };
    std::array<bool, 4> has{};
    for (int s = 0; s < 4; ++s) has[static_cast<std::size_t>(s)] = section(I, s).size() != section(full, s).size();

    OctagonGeom core = G;
    if (has[0]) { core.anchor.y += 1; core.height -= 1; }
    if (has[2]) core.height -= 1;
    if (has[1]) { core.anchor.x += 1; core.width -= 1; }
    if (has[3]) core.width -= 1;
    // cuts in core coordinates; a cut shrinks by one for each adjacent side moved in
    const int adj[4][2] = {{0, 1}, {1, 2}, {2, 3}, {3, 0}};
    for (int d = 0; d < 4; ++d) {
        i64 c = G.cuts[static_cast<std::size_t>(d)];
        for (int s : adj[d])
            if (has[static_cast<std::size_t>(s)]) c -= 1;
        if (c < 0) return std::nullopt;
        core.cuts[static_cast<std::size_t>(d)] = c;
    }
    if (!core.valid()) return std::nullopt;

    QuasiOctagonGeom q{core, {}};
    for (int s = 0; s < 4; ++s) {
        if (!has[static_cast<std::size_t>(s)]) continue;
        auto t = section(I, s);
        if (t.empty()) return std::nullopt;
        auto a = admissible_segment(core, s);
        Defect d{t.front() - a.lo, a.hi - t.back()};
        if (d.lo < 0 || d.hi < 0) return std::nullopt;
        q.defects[static_cast<std::size_t>(s)] = d;
    }
    if (!q.valid() || rasterize(q) != I) return std::nullopt;
    return q;
}

OctagonGeom bounding_octagon(const QuasiOctagonGeom& q)
{
    if (q.is_octagon()) return q.core;
    return containing_octagon(rasterize(q));
}

CornerSets corner_sets(const SiteSet& I)
{
    CornerSets cs;
    for (const auto& p : exterior_boundary(I))
        if (count_neighbors_in(p, I) == 2) cs.outer.insert(p);
    for (const auto& p : interior_boundary(I))
        if (count_neighbors_in(p, I) == 2) cs.inner.insert(p);
    return cs;
}

SiteSet rasterize(const OctagonGeom& g)
{
    if (!g.valid()) throw std::invalid_argument("rasterize: invalid geometry");
    SiteSet out;
    for (i64 y = 0; y <= g.height; ++y) {
        auto span = g.row_span(y);
        if (!span) continue;
        for (i64 x = span->first; x <= span->second; ++x) out.insert({g.anchor.x + x, g.anchor.y + y});
    }
    return out;
}

SiteSet rasterize(const QuasiOctagonGeom& q)
{
    if (!q.valid()) throw std::invalid_argument("rasterize: invalid geometry");
    SiteSet out = rasterize(q.core);
    for (int s = 0; s < 4; ++s)
        for (const auto& p : defect_sites(q, s)) out.insert(p);
    return out;
}

namespace {

// Chessboard distance from every window site to the nearest site of B.
Grid linf_distance_map(const SiteSet& B, const Box& window)
{
    Grid g(window, -1);
    std::deque<Site> queue;
    for (const auto& p : B)
        if (g.inside(p)) {
            g.at(p) = 0;
            queue.push_back(p);
        }
    while (!queue.empty()) {
        Site p = queue.front();
        queue.pop_front();
        const auto d = g.at(p);
        for (i64 dx = -1; dx <= 1; ++dx)
            for (i64 dy = -1; dy <= 1; ++dy) {
                Site q{p.x + dx, p.y + dy};
                if (!g.inside(q) || g.at(q) >= 0) continue;
                g.at(q) = d + 1;
                queue.push_back(q);
            }
    }
    return g;
}

i64 directed_linf(const SiteSet& A, const SiteSet& B, const Box& window)
{
    Grid g = linf_distance_map(B, window);
    i64 best = 0;
    for (const auto& p : A) best = std::max<i64>(best, g.at(p));
    return best;
}

}  // namespace

i64 hausdorff(const SiteSet& A, const SiteSet& B)
{
    if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff: empty set");
    const Box w = box_union(bounding_box(A), bounding_box(B));
    return std::max(directed_linf(A, B, w), directed_linf(B, A, w));
}

i64 hausdorff_bruteforce(const SiteSet& A, const SiteSet& B)
{
    if (A.empty() || B.empty()) throw std::invalid_argument("hausdorff: empty set");
    auto directed = [](const SiteSet& X, const SiteSet& Y) {
        i64 worst = 0;
        for (const auto& p : X) {
            i64 best = std::numeric_limits<i64>::max();
            for (const auto& q : Y) best = std::min(best, linf(p, q));
            worst = std::max(worst, best);
        }
        return worst;
    };
    return std::max(directed(A, B), directed(B, A));
}

Grid boundary_distance_map(const SiteSet& I, const Box& window)
{
    Grid g(window, -1);
    std::deque<Site> inside_q, outside_q;
    // inside sites: distance to the complement; outside sites: distance to I
    for (i64 y = window.y0; y <= window.y1; ++y)
        for (i64 x = window.x0; x <= window.x1; ++x) {
            Site p{x, y};
            const bool in = I.contains(p);
            for (const auto& q : neighbors(p)) {
                if (I.contains(q) != in) {
                    g.at(p) = 1;
                    (in ? inside_q : outside_q).push_back(p);
                    break;
                }
            }
        }
    auto run = [&](std::deque<Site>& queue, bool in) {
        while (!queue.empty()) {
            Site p = queue.front();
            queue.pop_front();
            for (const auto& q : neighbors(p)) {
                if (!g.inside(q) || g.at(q) >= 0 || I.contains(q) != in) continue;
                g.at(q) = g.at(p) + 1;
                queue.push_back(q);
            }
        }
    };
    run(inside_q, true);
    run(outside_q, false);
    return g;
}

}  // namespace begflow
