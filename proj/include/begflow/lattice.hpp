#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <unordered_set>
#include <utility>
#include <vector>

namespace begflow {

using i64 = std::int64_t;

struct Site {
    i64 x = 0;
    i64 y = 0;
    auto operator<=>(const Site&) const = default;
    Site operator+(const Site& o) const { return {x + o.x, y + o.y}; }
    Site operator-(const Site& o) const { return {x - o.x, y - o.y}; }
};

struct SiteHash {
    std::size_t operator()(const Site& s) const noexcept
    {
        auto h = static_cast<std::uint64_t>(s.x) * 0x9E3779B97F4A7C15ULL;
        h ^= static_cast<std::uint64_t>(s.y) + 0x7F4A7C159E3779B9ULL + (h << 6) + (h >> 2);
        return static_cast<std::size_t>(h);
    }
};

// Hash set of sites; sorted() gives the deterministic lexicographic order.
class SiteSet {
public:
    SiteSet() = default;
    SiteSet(std::initializer_list<Site> sites) : set_(sites) {}
    explicit SiteSet(const std::vector<Site>& sites) : set_(sites.begin(), sites.end()) {}

    bool contains(const Site& s) const { return set_.count(s) != 0; }
    bool insert(const Site& s) { return set_.insert(s).second; }
    bool erase(const Site& s) { return set_.erase(s) != 0; }
    std::size_t size() const { return set_.size(); }
    bool empty() const { return set_.empty(); }
    void clear() { set_.clear(); }
    auto begin() const { return set_.begin(); }
    auto end() const { return set_.end(); }
    std::vector<Site> sorted() const;

    bool operator==(const SiteSet& o) const { return set_ == o.set_; }

private:
    std::unordered_set<Site, SiteHash> set_;
};

struct Box {
    i64 x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive; empty when x1 < x0
    bool empty() const { return x1 < x0 || y1 < y0; }
    i64 width() const { return empty() ? 0 : x1 - x0 + 1; }
    i64 height() const { return empty() ? 0 : y1 - y0 + 1; }
    bool contains(const Site& s) const { return s.x >= x0 && s.x <= x1 && s.y >= y0 && s.y <= y1; }
    Box padded(i64 r) const { return {x0 - r, y0 - r, x1 + r, y1 + r}; }
};

Box bounding_box(const SiteSet& s);
Box box_union(const Box& a, const Box& b);

// Phase +1 set I and surfactant set Z; everything else is -1.
struct SpinConfig {
    SiteSet ones;
    SiteSet zeros;
    int value(const Site& s) const { return ones.contains(s) ? 1 : (zeros.contains(s) ? 0 : -1); }
    void validate() const;
};

// Bounding rectangle plus cut depths c1..c4, clockwise from the lower-left corner.
// P1 bottom, P2 left, P3 top, P4 right; D_i sits between P_i and P_{i+1}.
struct OctagonGeom {
    Site anchor;
    i64 width = 0;
    i64 height = 0;
    std::array<i64, 4> cuts{0, 0, 0, 0};

    i64 side_lattice(int i) const;  // P_i / eps
    i64 diag_lattice(int i) const { return cuts[static_cast<std::size_t>(i)]; }  // D_i / (sqrt2 eps)
    bool valid() const;
    // Section of local row y (0..height) as local x range; nullopt if empty.
    std::optional<std::pair<i64, i64>> row_span(i64 y) const;
    bool operator==(const OctagonGeom&) const = default;
};

// Defect slice on one parallel side, offsets measured from the two ends of the
// admissible segment (one step outside the core side, shortened by one at each end).
// lo is the end with smaller coordinate along the side.
struct Defect {
    i64 lo = 0;
    i64 hi = 0;
    bool operator==(const Defect&) const = default;
};

struct QuasiOctagonGeom {
    OctagonGeom core;
    std::array<std::optional<Defect>, 4> defects{};
    bool is_octagon() const;
    bool valid() const;
    bool operator==(const QuasiOctagonGeom&) const = default;
};

struct SideLengths {
    std::array<double, 4> P{};
    std::array<double, 4> D{};
};

SideLengths side_lengths(const OctagonGeom& g, double eps);

std::array<Site, 4> neighbors(const Site& p);
i64 l1(const Site& a, const Site& b);
i64 linf(const Site& a, const Site& b);

i64 d1(const Site& p, const std::vector<Site>& S);
i64 d1(const Site& p, const SiteSet& S);
i64 d1_boundary(const Site& p, const SiteSet& I);

SiteSet exterior_boundary(const SiteSet& I);
SiteSet interior_boundary(const SiteSet& I);
int count_neighbors_in(const Site& p, const SiteSet& I);

bool is_staircase(const SiteSet& I);
bool is_staircase_bruteforce(const SiteSet& I);

struct Slice {
    Site start;
    i64 count = 0;  // number of sites
};

struct Slices {
    std::vector<Slice> H;  // bottom-up
    std::vector<Slice> V;  // left-to-right
    i64 n_h() const { return static_cast<i64>(H.size()); }
    i64 n_v() const { return static_cast<i64>(V.size()); }
};

Slices slices(const SiteSet& I);

OctagonGeom containing_octagon(const SiteSet& I);
bool octagon_criterion(const SiteSet& I);
bool quasi_octagon_criterion(const SiteSet& I);
std::optional<OctagonGeom> recognize_octagon(const SiteSet& I);
std::optional<QuasiOctagonGeom> recognize_quasi_octagon(const SiteSet& I);

// Smallest octagon containing the rasterized quasi-octagon.
OctagonGeom bounding_octagon(const QuasiOctagonGeom& q);

struct CornerSets {
    SiteSet outer;  // O
    SiteSet inner;  // I
};
CornerSets corner_sets(const SiteSet& I);

SiteSet rasterize(const OctagonGeom& g);
SiteSet rasterize(const QuasiOctagonGeom& q);

// Sites of the defect slice on side i in absolute coordinates.
std::vector<Site> defect_sites(const QuasiOctagonGeom& q, int side);

i64 hausdorff(const SiteSet& A, const SiteSet& B);
i64 hausdorff_bruteforce(const SiteSet& A, const SiteSet& B);

// Dense window mask helper used by the fast kernels.
struct Grid {
    Box box;
    std::vector<std::int32_t> data;
    Grid() = default;
    Grid(const Box& b, std::int32_t fill) : box(b), data(static_cast<std::size_t>(b.width() * b.height()), fill) {}
    bool inside(const Site& s) const { return box.contains(s); }
    std::size_t index(const Site& s) const
    {
        return static_cast<std::size_t>((s.y - box.y0) * box.width() + (s.x - box.x0));
    }
    std::int32_t& at(const Site& s) { return data[index(s)]; }
    std::int32_t at(const Site& s) const { return data[index(s)]; }
};

// d1_boundary(p, I) for every p of the window (multi-source BFS, exact L1 on Z^2).
Grid boundary_distance_map(const SiteSet& I, const Box& window);

}  // namespace begflow
