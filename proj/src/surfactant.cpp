#include "begflow/surfactant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace begflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double site_weight(int m, double k) { return 4.0 * (1.0 - k) - 2.0 * m; }

// Connected components of the exterior boundary ordered as paths when possible.
struct Component {
    std::vector<Site> sites;  // path order when is_path
    bool is_path = true;
};

std::vector<Component> boundary_components(const SiteSet& B)
{
    std::vector<Component> out;
    SiteSet seen;
    for (const auto& s : B.sorted()) {
        if (seen.contains(s)) continue;
        std::vector<Site> comp;
        std::vector<Site> stack{s};
        seen.insert(s);
        while (!stack.empty()) {
            Site p = stack.back();
            stack.pop_back();
            comp.push_back(p);
            for (const auto& q : neighbors(p))
                if (B.contains(q) && seen.insert(q)) stack.push_back(q);
        }
        std::sort(comp.begin(), comp.end());
        Component c;
        SiteSet cs(comp);
        int max_deg = 0;
        i64 edges = 0;
        std::vector<Site> ends;
        for (const auto& p : comp) {
            int d = count_neighbors_in(p, cs);
            max_deg = std::max(max_deg, d);
            edges += d;
            if (d <= 1) ends.push_back(p);
        }
        edges /= 2;
        c.is_path = max_deg <= 2 && edges + 1 == static_cast<i64>(comp.size());
        if (c.is_path) {
            Site cur = ends.front();
            SiteSet used;
            c.sites.push_back(cur);
            used.insert(cur);
            while (c.sites.size() < comp.size()) {
                for (const auto& q : neighbors(cur))
                    if (cs.contains(q) && !used.contains(q)) {
                        cur = q;
                        break;
                    }
                c.sites.push_back(cur);
                used.insert(cur);
            }
        } else {
            c.sites = comp;
        }
        out.push_back(std::move(c));
    }
    return out;
}

// best[c] and a chosen subset for each c, per component.
struct CompTable {
    std::vector<double> best;
    std::vector<std::vector<char>> pick;
};

CompTable path_table(const std::vector<double>& w, double bond)
{
    const std::size_t m = w.size();
    CompTable t;
    t.best.assign(m + 1, kInf);
    t.pick.assign(m + 1, {});
    // dp[i][c][s]: first i sites, c chosen, s = whether site i-1 chosen
    std::vector<std::vector<std::array<double, 2>>> dp(m + 1, std::vector<std::array<double, 2>>(m + 1, {kInf, kInf}));
    dp[0][0][0] = 0.0;
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t c = 0; c <= i; ++c)
            for (int s = 0; s < 2; ++s) {
                const double v = dp[i][c][static_cast<std::size_t>(s)];
                if (v == kInf) continue;
                dp[i + 1][c][0] = std::min(dp[i + 1][c][0], v);
                const double add = w[i] - (s ? bond : 0.0);
                dp[i + 1][c + 1][1] = std::min(dp[i + 1][c + 1][1], v + add);
            }
    for (std::size_t c = 0; c <= m; ++c) {
        int s = dp[m][c][0] <= dp[m][c][1] ? 0 : 1;
        double v = dp[m][c][static_cast<std::size_t>(s)];
        t.best[c] = v;
        if (v == kInf) continue;
        std::vector<char> pick(m, 0);
        std::size_t cc = c;
        for (std::size_t i = m; i > 0; --i) {
            const double cur = dp[i][cc][static_cast<std::size_t>(s)];
            if (s == 1) {
                pick[i - 1] = 1;
                // predecessor state
                int ps = 0;
                for (int q = 0; q < 2; ++q) {
                    const double prev = dp[i - 1][cc - 1][static_cast<std::size_t>(q)];
                    if (prev == kInf) continue;
                    if (std::abs(prev + w[i - 1] - (q ? bond : 0.0) - cur) < 1e-12) {
                        ps = q;
                        break;
                    }
                }
                --cc;
                s = ps;
            } else {
                int ps = 0;
                for (int q = 0; q < 2; ++q) {
                    const double prev = dp[i - 1][cc][static_cast<std::size_t>(q)];
                    if (prev != kInf && std::abs(prev - cur) < 1e-12) {
                        ps = q;
                        break;
                    }
                }
                s = ps;
            }
        }
        t.pick[c] = std::move(pick);
    }
    return t;
}

// Exhaustive table for small non-path components.
CompTable subset_table(const std::vector<Site>& sites, const std::vector<double>& w, double bond)
{
    const std::size_t m = sites.size();
    CompTable t;
    t.best.assign(m + 1, kInf);
    t.pick.assign(m + 1, std::vector<char>(m, 0));
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = a + 1; b < m; ++b)
            if (l1(sites[a], sites[b]) == 1) edges.emplace_back(a, b);
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        double v = 0.0;
        std::size_t c = 0;
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1ULL) {
                v += w[i];
                ++c;
            }
        for (const auto& [a, b] : edges)
            if ((mask >> a & 1ULL) && (mask >> b & 1ULL)) v -= bond;
        if (v < t.best[c] - 1e-12) {
            t.best[c] = v;
            for (std::size_t i = 0; i < m; ++i) t.pick[c][i] = static_cast<char>(mask >> i & 1ULL);
        }
    }
    return t;
}

struct BoundaryDP {
    std::vector<Component> comps;
    std::vector<CompTable> tables;
    std::vector<double> total;                 // min energy for c sites on the boundary
    std::vector<std::vector<std::size_t>> arg;  // arg[j][c]: sites taken from component j
    bool exact = true;
};

BoundaryDP boundary_dp(const SiteSet& I, i64 C, double k)
{
    BoundaryDP r;
    const SiteSet B = exterior_boundary(I);
    r.comps = boundary_components(B);
    const double bond = 1.0 - k;
    const auto cap = static_cast<std::size_t>(std::min<i64>(C, static_cast<i64>(B.size())));
    r.total.assign(1, 0.0);
    for (const auto& comp : r.comps) {
        std::vector<double> w;
        for (const auto& s : comp.sites) w.push_back(site_weight(count_neighbors_in(s, I), k));
        CompTable t;
        if (comp.is_path)
            t = path_table(w, bond);
        else if (comp.sites.size() <= 20)
            t = subset_table(comp.sites, w, bond);
        else {
            // greedy fallback on large irregular components
            r.exact = false;
            std::vector<std::size_t> order(comp.sites.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return w[a] < w[b]; });
            t.best.assign(order.size() + 1, 0.0);
            t.pick.assign(order.size() + 1, std::vector<char>(order.size(), 0));
            for (std::size_t c = 1; c <= order.size(); ++c) {
                t.pick[c] = t.pick[c - 1];
                t.pick[c][order[c - 1]] = 1;
                double v = 0.0;
                for (std::size_t i = 0; i < order.size(); ++i)
                    if (t.pick[c][i]) v += w[i];
                for (std::size_t a = 0; a < order.size(); ++a)
                    for (std::size_t b = a + 1; b < order.size(); ++b)
                        if (t.pick[c][a] && t.pick[c][b] && l1(comp.sites[a], comp.sites[b]) == 1) v -= bond;
                t.best[c] = v;
            }
        }
        const std::size_t prev_n = r.total.size();
        const std::size_t new_n = std::min(cap + 1, prev_n + comp.sites.size());
        std::vector<double> nt(new_n, kInf);
        std::vector<std::size_t> na(new_n, 0);
        for (std::size_t a = 0; a < prev_n; ++a) {
            if (r.total[a] == kInf) continue;
            for (std::size_t b = 0; b < t.best.size() && a + b < new_n; ++b) {
                const double v = r.total[a] + t.best[b];
                if (v < nt[a + b] - 1e-12) {
                    nt[a + b] = v;
                    na[a + b] = b;
                }
            }
        }
        r.total = std::move(nt);
        r.arg.push_back(std::move(na));
        r.tables.push_back(std::move(t));
    }
    return r;
}

SiteSet dp_traceback(const BoundaryDP& r, std::size_t c)
{
    SiteSet Z;
    for (std::size_t j = r.comps.size(); j > 0; --j) {
        const std::size_t b = r.arg[j - 1][c];
        const auto& pick = r.tables[j - 1].pick[b];
        for (std::size_t i = 0; i < pick.size(); ++i)
            if (pick[i]) Z.insert(r.comps[j - 1].sites[i]);
        c -= b;
    }
    return Z;
}

// Fill the second ring one site at a time, preferring sites with many surfactant neighbours.
void second_ring(const SiteSet& I, SiteSet& Z, i64 remaining)
{
    while (remaining > 0) {
        std::map<Site, int> cand;
        for (const auto& z : Z)
            for (const auto& q : neighbors(z))
                if (!I.contains(q) && !Z.contains(q)) cand[q] = 0;
        if (cand.empty()) cand[Site{0, 0}] = 0;  // empty phase set
        Site best{};
        int best_n = -1;
        for (auto& [q, n] : cand) {
            n = count_neighbors_in(q, Z) + 10 * count_neighbors_in(q, I);
            if (n > best_n) {
                best_n = n;
                best = q;
            }
        }
        Z.insert(best);
        --remaining;
    }
}

}  // namespace

double surfactant_energy(const SiteSet& I, const SiteSet& Z, double k)
{
    double e = 0.0;
    i64 zz = 0;
    for (const auto& p : Z) {
        e += site_weight(count_neighbors_in(p, I), k);
        zz += count_neighbors_in(p, Z);
    }
    return e - (1.0 - k) * static_cast<double>(zz / 2);
}

SurfactantMin surfactant_min_energy(const SiteSet& I, i64 C, double k)
{
    if (C < 0) throw std::invalid_argument("negative surfactant count");
    const i64 nb = static_cast<i64>(exterior_boundary(I).size());
    if (C <= nb) {
        auto r = boundary_dp(I, C, k);
        return {r.total[static_cast<std::size_t>(C)], r.exact};
    }
    SiteSet Z = canonical_surfactant(I, C, k);
    return {surfactant_energy(I, Z, k), false};
}

SiteSet canonical_surfactant(const SiteSet& I, i64 C, double k)
{
    if (C < 0) throw std::invalid_argument("negative surfactant count");
    SiteSet Z;
    if (I.empty()) {
        // rows of width ceil(sqrt C) maximise the 0-0 bonds of a free cluster
        const i64 w = static_cast<i64>(std::ceil(std::sqrt(static_cast<double>(C)) - 1e-12));
        for (i64 n = 0; n < C; ++n) Z.insert({n % w, n / w});
        return Z;
    }
    const SiteSet B = exterior_boundary(I);
    const auto Bs = B.sorted();
    if (C >= static_cast<i64>(B.size())) {
        Z = B;
        second_ring(I, Z, C - static_cast<i64>(B.size()));
        return Z;
    }
    // corners first (most phase neighbours, then lexicographic)
    std::vector<Site> corners;
    for (const auto& s : Bs)
        if (count_neighbors_in(s, I) >= 2) corners.push_back(s);
    std::stable_sort(corners.begin(), corners.end(),
                     [&](const Site& a, const Site& b) { return count_neighbors_in(a, I) > count_neighbors_in(b, I); });
    i64 left = C;
    for (const auto& s : corners) {
        if (left == 0) break;
        Z.insert(s);
        --left;
    }
    if (left > 0) {
        SiteSet rest;
        for (const auto& s : Bs)
            if (!Z.contains(s)) rest.insert(s);
        auto pieces = boundary_components(rest);
        struct Piece {
            std::vector<Site> order;
            bool attached;
        };
        std::vector<Piece> ps;
        for (auto& c : pieces) {
            auto v = c.sites;
            auto touches = [&](const Site& p) { return count_neighbors_in(p, Z) > 0; };
            bool front = touches(v.front()), back = touches(v.back());
            if (!front && back)
                std::reverse(v.begin(), v.end());
            else if (front == back && v.back() < v.front())
                std::reverse(v.begin(), v.end());
            ps.push_back({v, front || back});
        }
        std::stable_sort(ps.begin(), ps.end(), [](const Piece& a, const Piece& b) {
            if (a.attached != b.attached) return a.attached;
            if (a.order.size() != b.order.size()) return a.order.size() > b.order.size();
            return a.order.front() < b.order.front();
        });
        for (const auto& p : ps)
            for (const auto& s : p.order) {
                if (left == 0) break;
                Z.insert(s);
                --left;
            }
    }
    auto dp = boundary_dp(I, C, k);
    const double emin = dp.total[static_cast<std::size_t>(C)];
    if (surfactant_energy(I, Z, k) > emin + 1e-9) Z = dp_traceback(dp, static_cast<std::size_t>(C));
    return Z;
}

double surfactant_bruteforce_energy(const SiteSet& I, i64 C, double k)
{
    const auto B = exterior_boundary(I).sorted();
    const std::size_t m = B.size();
    if (m > 24) throw std::invalid_argument("bruteforce surfactant: boundary too large");
    if (C < 0 || C > static_cast<i64>(m)) throw std::invalid_argument("bruteforce surfactant: bad count");
    double best = kInf;
    for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
        if (static_cast<i64>(__builtin_popcountll(mask)) != C) continue;
        SiteSet Z;
        for (std::size_t i = 0; i < m; ++i)
            if (mask >> i & 1ULL) Z.insert(B[i]);
        best = std::min(best, surfactant_energy(I, Z, k));
    }
    return best;
}

}  // namespace begflow
