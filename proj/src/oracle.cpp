#include "begflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <tuple>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace begflow {

std::string to_string(StepMethod m) { return m == StepMethod::Parametric ? "parametric" : "local-search"; }

namespace {

constexpr double kTol = 1e-9;
constexpr double kInf = std::numeric_limits<double>::infinity();

int thread_count(const SearchBudget& b)
{
#ifdef _OPENMP
    return b.threads > 0 ? b.threads : omp_get_max_threads();
#else
    (void)b;
    return 1;
#endif
}

i64 pieces_needed(i64 R, std::array<i64, 4> n)
{
    std::sort(n.begin(), n.end(), std::greater<>());
    i64 cnt = 0;
    for (i64 v : n) {
        if (R <= 0) break;
        R -= v;
        ++cnt;
    }
    return cnt;
}

// Minimum surfactant energy (units of eps) on an octagon with corner count NO and side pieces n.
double ez_octagon(i64 X, i64 NO, const std::array<i64, 4>& n, double k)
{
    if (X <= NO) return -4.0 * k * static_cast<double>(X);
    const i64 sumn = n[0] + n[1] + n[2] + n[3];
    const i64 R = X - NO;
    if (R <= sumn)
        return -4.0 * k * static_cast<double>(NO) + static_cast<double>(R) * (1.0 - 3.0 * k) +
               (1.0 - k) * static_cast<double>(pieces_needed(R, n));
    double e = -4.0 * k * static_cast<double>(NO) + static_cast<double>(sumn) * (1.0 - 3.0 * k) + 4.0 * (1.0 - k);
    X -= NO + sumn;
    for (i64 ring = 1; X > 0; ++ring) {
        const i64 take = std::min(X, NO + 4 * ring);
        e += 2.0 * (1.0 - k) * static_cast<double>(take);
        X -= take;
        if (X <= 0) break;
        const i64 Rr = std::min(X, sumn);
        e += 2.0 * (1.0 - k) * static_cast<double>(Rr) + (1.0 - k) * static_cast<double>(pieces_needed(Rr, n));
        X -= Rr;
    }
    return e;
}

std::vector<i64> surf_candidates(i64 C, i64 NO, std::array<i64, 4> n, i64 boundary, i64 lo, i64 hi)
{
    std::vector<i64> v{lo, hi, C, NO, boundary};
    std::sort(n.begin(), n.end(), std::greater<>());
    i64 acc = NO;
    for (i64 x : n) {
        acc += x;
        v.push_back(acc);
    }
    std::vector<i64> out;
    for (i64 x : v)
        if (x >= lo && x <= hi) out.push_back(x);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

struct Key {
    i64 sum = 0;
    std::array<i64, 4> a{}, b{};
    int defect = 0;
    std::array<i64, 4> tl{}, tr{};
    i64 X = 0;
    auto tie() const { return std::tie(sum, a, b, defect, tl, tr, X); }
    bool operator<(const Key& o) const { return tie() < o.tie(); }
};

struct Cand {
    std::array<i64, 4> a{}, b{};
    OctagonGeom G;
    i64 X = 0;
    std::array<i64, 4> tl{}, tr{};
    i64 D1 = 0;
    double F = kInf;
    Key key() const
    {
        Key k;
        k.sum = a[0] + a[1] + a[2] + a[3] + b[0] + b[1] + b[2] + b[3];
        k.a = a;
        k.b = b;
        k.defect = (tl[0] + tl[1] + tl[2] + tl[3] + tr[0] + tr[1] + tr[2] + tr[3]) > 0 ? 1 : 0;
        k.tl = tl;
        k.tr = tr;
        k.X = X;
        return k;
    }
};

// Precomputed window data for one step.
struct Context {
    SiteSet I;
    i64 C = 0;
    OctagonGeom A;
    ResolvedBudget rb;
    double eps = 0, k = 0, ediss = 0, esurf = 0;
    bool gamma2 = false;
    Box W;
    i64 ww = 0, wh = 0;
    std::vector<i64> Qr, Or, Qc, Oc;  // row / column prefixes of (s_out - s_in) and s_out
    i64 S_in = 0;

    i64 qrow(i64 y, i64 x) const { return Qr[static_cast<std::size_t>((y - W.y0) * (ww + 1) + (x - W.x0 + 1))]; }
    i64 orow(i64 y, i64 x) const { return Or[static_cast<std::size_t>((y - W.y0) * (ww + 1) + (x - W.x0 + 1))]; }
    i64 qcol(i64 x, i64 y) const { return Qc[static_cast<std::size_t>((x - W.x0) * (wh + 1) + (y - W.y0 + 1))]; }
    i64 ocol(i64 x, i64 y) const { return Oc[static_cast<std::size_t>((x - W.x0) * (wh + 1) + (y - W.y0 + 1))]; }
    i64 rowsum(i64 y, i64 xa, i64 xb) const { return xa > xb ? 0 : qrow(y, xb) - qrow(y, xa - 1); }
    i64 colsum(i64 x, i64 ya, i64 yb) const { return ya > yb ? 0 : qcol(x, yb) - qcol(x, ya - 1); }
    i64 rowout(i64 y, i64 xa, i64 xb) const { return xa > xb ? 0 : orow(y, xb) - orow(y, xa - 1); }
    i64 colout(i64 x, i64 ya, i64 yb) const { return ya > yb ? 0 : ocol(x, yb) - ocol(x, ya - 1); }
};

Context make_context(const SpinConfig& u, const ModelParams& p, const SearchBudget& b)
{
    Context c;
    c.I = u.ones;
    c.C = static_cast<i64>(u.zeros.size());
    c.A = containing_octagon(u.ones);
    c.rb = resolve_budget(u, p, b);
    c.eps = p.eps;
    c.k = p.k;
    c.ediss = p.eps * p.eps / p.zeta;
    c.esurf = std::pow(p.eps, p.gamma - 1.0) / p.zeta;
    c.gamma2 = std::abs(p.gamma - 2.0) < 1e-12;
    c.W = bounding_box(u.ones).padded(1);
    c.ww = c.W.width();
    c.wh = c.W.height();
    const Grid dist = boundary_distance_map(u.ones, c.W);
    c.Qr.assign(static_cast<std::size_t>(c.wh * (c.ww + 1)), 0);
    c.Or.assign(c.Qr.size(), 0);
    c.Qc.assign(static_cast<std::size_t>(c.ww * (c.wh + 1)), 0);
    c.Oc.assign(c.Qc.size(), 0);
    for (i64 y = c.W.y0; y <= c.W.y1; ++y)
        for (i64 x = c.W.x0; x <= c.W.x1; ++x) {
            const Site s{x, y};
            const i64 d = dist.at(s);
            const bool in = c.I.contains(s);
            const i64 v = in ? -d : d;
            const i64 o = in ? 0 : d;
            if (in) c.S_in += d;
            const auto ri = static_cast<std::size_t>((y - c.W.y0) * (c.ww + 1) + (x - c.W.x0 + 1));
            c.Qr[ri] = c.Qr[ri - 1] + v;
            c.Or[ri] = c.Or[ri - 1] + o;
            const auto ci = static_cast<std::size_t>((x - c.W.x0) * (c.wh + 1) + (y - c.W.y0 + 1));
            c.Qc[ci] = c.Qc[ci - 1] + v;
            c.Oc[ci] = c.Oc[ci - 1] + o;
        }
    return c;
}

// Outer slice of side i of G: fixed coordinate and [lo, hi] range along the side.
struct SideSeg {
    bool horizontal;
    i64 fixed, lo, hi;
};

SideSeg side_segment(const OctagonGeom& G, int i)
{
    const i64 ax = G.anchor.x, ay = G.anchor.y, w = G.width, h = G.height;
    const auto& c = G.cuts;
    switch (i) {
        case 0: return {true, ay, ax + c[0], ax + w - c[3]};
        case 1: return {false, ax, ay + c[0], ay + h - c[1]};
        case 2: return {true, ay + h, ax + c[1], ax + w - c[2]};
        default: return {false, ax + w, ay + c[3], ay + h - c[2]};
    }
}

// Cut indices adjacent to the low and high end of side i.
constexpr std::array<std::array<int, 2>, 4> kSideDiag{{{0, 3}, {0, 1}, {1, 2}, {3, 2}}};

bool side_trimmable(const OctagonGeom& G, int i)
{
    return G.cuts[static_cast<std::size_t>(kSideDiag[static_cast<std::size_t>(i)][0])] >= 1 &&
           G.cuts[static_cast<std::size_t>(kSideDiag[static_cast<std::size_t>(i)][1])] >= 1 && G.side_lattice(i) >= 1;
}

bool trim_set_valid(const OctagonGeom& G, unsigned S)
{
    for (int i = 0; i < 4; ++i)
        if ((S >> i & 1U) && !side_trimmable(G, i)) return false;
    // diagonal d sits between sides d and d+1
    for (int d = 0; d < 4; ++d) {
        const int s1 = d, s2 = (d + 1) % 4;
        if ((S >> s1 & 1U) && (S >> s2 & 1U) && G.cuts[static_cast<std::size_t>(d)] < 2) return false;
    }
    return true;
}

i64 seg_sum(const Context& cx, const SideSeg& s, i64 a, i64 b)
{
    return s.horizontal ? cx.rowsum(s.fixed, a, b) : cx.colsum(s.fixed, a, b);
}

i64 seg_out(const Context& cx, const SideSeg& s, i64 a, i64 b)
{
    return s.horizontal ? cx.rowout(s.fixed, a, b) : cx.colout(s.fixed, a, b);
}

struct SideTrim {
    bool ok = false;
    i64 n = 0;
    std::vector<double> pair;  // index t = l + r, in sum-of-distance units
    std::vector<i64> pair_l;
    double best = kInf;
    i64 best_t = 0;
};

SideTrim side_trim_table(const Context& cx, const OctagonGeom& G, int i)
{
    SideTrim st;
    st.n = G.side_lattice(i) + 1;
    if (!side_trimmable(G, i)) return st;
    st.ok = true;
    const SideSeg s = side_segment(G, i);
    const i64 span = cx.rb.span;
    const i64 tmax = st.n - 1;
    std::vector<double> gL(static_cast<std::size_t>(tmax + 1)), gR(static_cast<std::size_t>(tmax + 1));
    for (i64 l = 0; l <= tmax; ++l) {
        gL[static_cast<std::size_t>(l)] = -static_cast<double>(seg_sum(cx, s, s.lo, s.lo + l - 1));
        gR[static_cast<std::size_t>(l)] = -static_cast<double>(seg_sum(cx, s, s.hi - l + 1, s.hi));
    }
    st.pair.assign(static_cast<std::size_t>(tmax + 1), kInf);
    st.pair_l.assign(static_cast<std::size_t>(tmax + 1), 0);
    for (i64 t = 1; t <= tmax; ++t)
        for (i64 l = 0; l <= t; ++l) {
            const i64 r = t - l;
            if (l > span || r > span) continue;
            const double v = gL[static_cast<std::size_t>(l)] + gR[static_cast<std::size_t>(r)];
            if (v < st.pair[static_cast<std::size_t>(t)] - 1e-12) {
                st.pair[static_cast<std::size_t>(t)] = v;
                st.pair_l[static_cast<std::size_t>(t)] = l;
            }
        }
    for (i64 t = 1; t <= tmax; ++t)
        if (st.pair[static_cast<std::size_t>(t)] < st.best - 1e-12) {
            st.best = st.pair[static_cast<std::size_t>(t)];
            st.best_t = t;
        }
    return st;
}

struct TrimChoice {
    double F = kInf;
    std::array<i64, 4> tl{}, tr{};
};

// Exact optimum over trim decorations of G for surfactant count X.
TrimChoice optimize_trims(const Context& cx, const OctagonGeom& G, i64 X, i64 D1sum)
{
    const double eps = cx.eps, k = cx.k;
    std::array<i64, 4> n{};
    i64 NO = 0;
    for (int i = 0; i < 4; ++i) {
        n[static_cast<std::size_t>(i)] = G.side_lattice(i) + 1;
        NO += G.cuts[static_cast<std::size_t>(i)];
    }
    const i64 sumn = n[0] + n[1] + n[2] + n[3];
    const i64 boundary = NO + sumn;
    const double base = eps * 4.0 * static_cast<double>(G.width + G.height + 2) +
                        cx.esurf * static_cast<double>(X > cx.C ? X - cx.C : cx.C - X);
    TrimChoice out;
    const double F_plain = base + eps * ez_octagon(X, NO, n, k) + cx.ediss * static_cast<double>(D1sum);
    out.F = F_plain;
    if (cx.rb.span == 0 || X > boundary) return out;

    std::array<SideTrim, 4> st;
    bool any = false;
    for (int i = 0; i < 4; ++i) {
        st[static_cast<std::size_t>(i)] = side_trim_table(cx, G, i);
        any = any || st[static_cast<std::size_t>(i)].ok;
    }
    if (!any) return out;

    auto fill = [&](TrimChoice& tc, int i, i64 t) {
        const auto& s = st[static_cast<std::size_t>(i)];
        const i64 l = s.pair_l[static_cast<std::size_t>(t)];
        tc.tl[static_cast<std::size_t>(i)] = l;
        tc.tr[static_cast<std::size_t>(i)] = t - l;
    };

    if (X <= NO) {
        const double ez = eps * ez_octagon(X, NO, n, k);
        for (unsigned S = 1; S < 16; ++S) {
            if (!trim_set_valid(G, S)) continue;
            double extra = 0;
            for (int i = 0; i < 4; ++i)
                if (S >> i & 1U) extra += st[static_cast<std::size_t>(i)].best;
            const double F = base + ez + cx.ediss * (static_cast<double>(D1sum) + extra);
            if (F < out.F - 1e-12) {
                TrimChoice tc;
                tc.F = F;
                for (int i = 0; i < 4; ++i)
                    if (S >> i & 1U) fill(tc, i, st[static_cast<std::size_t>(i)].best_t);
                out = tc;
            }
        }
        return out;
    }

    const i64 R = X - NO;
    const double ez_base = eps * (-4.0 * k * static_cast<double>(NO) + static_cast<double>(R) * (1.0 - 3.0 * k));
    for (unsigned S = 1; S < 16; ++S) {
        if (!trim_set_valid(G, S)) continue;
        for (unsigned U = 0; U < 16; ++U) {
            i64 cov = 0;
            for (int i = 0; i < 4; ++i)
                if (U >> i & 1U) cov += n[static_cast<std::size_t>(i)];
            const i64 T = R - cov;
            double cost = 0;
            for (int i = 0; i < 4; ++i)
                if ((S >> i & 1U) && (U >> i & 1U)) cost += st[static_cast<std::size_t>(i)].best;
            std::vector<int> rest;
            i64 cap = 0;
            for (int i = 0; i < 4; ++i)
                if ((S >> i & 1U) && !(U >> i & 1U)) {
                    rest.push_back(i);
                    cap += n[static_cast<std::size_t>(i)] - 1;
                }
            if (T > cap) continue;
            std::array<i64, 4> tsel{};
            if (T <= 0) {
                for (int i : rest) {
                    cost += st[static_cast<std::size_t>(i)].best;
                    tsel[static_cast<std::size_t>(i)] = st[static_cast<std::size_t>(i)].best_t;
                }
            } else {
                // knapsack on attached coverage, capped at T
                const auto TT = static_cast<std::size_t>(T);
                std::vector<std::vector<double>> dp(rest.size() + 1, std::vector<double>(TT + 1, kInf));
                std::vector<std::vector<i64>> ch(rest.size() + 1, std::vector<i64>(TT + 1, 0));
                std::vector<std::vector<std::size_t>> from(rest.size() + 1, std::vector<std::size_t>(TT + 1, 0));
                dp[0][0] = 0;
                for (std::size_t j = 0; j < rest.size(); ++j) {
                    const auto& s = st[static_cast<std::size_t>(rest[j])];
                    for (std::size_t c = 0; c <= TT; ++c) {
                        if (dp[j][c] == kInf) continue;
                        for (i64 t = 1; t < s.n; ++t) {
                            const double v = s.pair[static_cast<std::size_t>(t)];
                            if (v == kInf) continue;
                            const std::size_t nc = std::min(TT, c + static_cast<std::size_t>(t));
                            if (dp[j][c] + v < dp[j + 1][nc] - 1e-12) {
                                dp[j + 1][nc] = dp[j][c] + v;
                                ch[j + 1][nc] = t;
                                from[j + 1][nc] = c;
                            }
                        }
                    }
                }
                if (dp[rest.size()][TT] == kInf) continue;
                cost += dp[rest.size()][TT];
                std::size_t c = TT;
                for (std::size_t j = rest.size(); j > 0; --j) {
                    tsel[static_cast<std::size_t>(rest[j - 1])] = ch[j][c];
                    c = from[j][c];
                }
            }
            const double F = base + ez_base + eps * (1.0 - k) * static_cast<double>(__builtin_popcount(U)) +
                             cx.ediss * (static_cast<double>(D1sum) + cost);
            if (F < out.F - 1e-12) {
                TrimChoice tc;
                tc.F = F;
                for (int i = 0; i < 4; ++i) {
                    if (!(S >> i & 1U)) continue;
                    if (U >> i & 1U)
                        fill(tc, i, st[static_cast<std::size_t>(i)].best_t);
                    else
                        fill(tc, i, tsel[static_cast<std::size_t>(i)]);
                }
                out = tc;
            }
        }
    }
    return out;
}

SiteSet build_phase_set(const OctagonGeom& G, const std::array<i64, 4>& tl, const std::array<i64, 4>& tr)
{
    SiteSet I = rasterize(G);
    for (int i = 0; i < 4; ++i) {
        const i64 l = tl[static_cast<std::size_t>(i)], r = tr[static_cast<std::size_t>(i)];
        if (l + r == 0) continue;
        const SideSeg s = side_segment(G, i);
        auto drop = [&](i64 t) { I.erase(s.horizontal ? Site{t, s.fixed} : Site{s.fixed, t}); };
        for (i64 t = s.lo; t < s.lo + l; ++t) drop(t);
        for (i64 t = s.hi - r + 1; t <= s.hi; ++t) drop(t);
    }
    return I;
}

// Surfactant window for gamma = 2.
std::pair<i64, i64> surf_window(const Context& cx, i64 boundary)
{
    if (!cx.gamma2) return {cx.C, cx.C};
    const i64 r = cx.rb.surf_range;
    const i64 lo = std::max<i64>(0, cx.C - r);
    const i64 hi = std::min(cx.C + r, std::max(cx.C, boundary));
    return {lo, hi};
}

struct GeomEval {
    OctagonGeom G;
    i64 D1sum = 0;
    std::array<i64, 4> n{};
    i64 NO = 0;
    i64 boundary = 0;
};

// Enumerates every valid G of the budget; f(alpha, beta, eval) is called per candidate.
template <class Fn>
void enumerate_geometries(const Context& cx, int threads, Fn&& f)
{
    const i64 Aa = cx.rb.A, Bb = cx.rb.B;
    const OctagonGeom& A0 = cx.A;
    const i64 na = Aa + 1;
    const i64 total = na * na * na * na;
    const auto nb = static_cast<std::size_t>(Bb + 1);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (i64 idx = 0; idx < total; ++idx) {
        std::array<i64, 4> a{idx % na, (idx / na) % na, (idx / (na * na)) % na, idx / (na * na * na)};
        const i64 w = A0.width - a[1] - a[3];
        const i64 h = A0.height - a[0] - a[2];
        if (w < 0 || h < 0) continue;
        const Site anchor{A0.anchor.x + a[1], A0.anchor.y + a[0]};
        // clamped cut per diagonal and beta; -1 marks a duplicate
        std::array<std::vector<i64>, 4> cut;
        for (int d = 0; d < 4; ++d) {
            cut[static_cast<std::size_t>(d)].assign(nb, -1);
            for (i64 bb = 0; bb <= Bb; ++bb) {
                const i64 raw = A0.cuts[static_cast<std::size_t>(d)] + bb - a[static_cast<std::size_t>(d)] -
                                a[static_cast<std::size_t>((d + 1) % 4)];
                if (raw < 0 && bb > 0) continue;
                cut[static_cast<std::size_t>(d)][static_cast<std::size_t>(bb)] = std::max<i64>(0, raw);
            }
        }
        // left ends depend on (c1, c2), right ends on (c4, c3)
        std::vector<i64> sumL(nb * nb, 0), sumR(nb * nb, 0);
        for (std::size_t b0 = 0; b0 < nb; ++b0)
            for (std::size_t b1 = 0; b1 < nb; ++b1) {
                const i64 c0 = cut[0][b0], c1 = cut[1][b1];
                if (c0 < 0 || c1 < 0 || c0 + c1 > h) continue;
                i64 s = 0;
                for (i64 y = 0; y <= h; ++y) {
                    const i64 L = std::max({i64{0}, c0 - y, c1 - (h - y)});
                    s += cx.qrow(anchor.y + y, anchor.x + L - 1);
                }
                sumL[b0 * nb + b1] = s;
            }
        for (std::size_t b3 = 0; b3 < nb; ++b3)
            for (std::size_t b2 = 0; b2 < nb; ++b2) {
                const i64 c3 = cut[3][b3], c2 = cut[2][b2];
                if (c3 < 0 || c2 < 0 || c2 + c3 > h) continue;
                i64 s = 0;
                for (i64 y = 0; y <= h; ++y) {
                    const i64 R = w - std::max({i64{0}, c3 - y, c2 - (h - y)});
                    s += cx.qrow(anchor.y + y, anchor.x + R);
                }
                sumR[b3 * nb + b2] = s;
            }
        GeomEval ev;
        ev.G.anchor = anchor;
        ev.G.width = w;
        ev.G.height = h;
        for (std::size_t b0 = 0; b0 < nb; ++b0) {
            const i64 c0 = cut[0][b0];
            if (c0 < 0) continue;
            for (std::size_t b1 = 0; b1 < nb; ++b1) {
                const i64 c1 = cut[1][b1];
                if (c1 < 0 || c0 + c1 > h) continue;
                for (std::size_t b2 = 0; b2 < nb; ++b2) {
                    const i64 c2 = cut[2][b2];
                    if (c2 < 0 || c1 + c2 > w) continue;
                    for (std::size_t b3 = 0; b3 < nb; ++b3) {
                        const i64 c3 = cut[3][b3];
                        if (c3 < 0 || c2 + c3 > h || c0 + c3 > w) continue;
                        ev.G.cuts = {c0, c1, c2, c3};
                        ev.D1sum = cx.S_in + sumR[b3 * nb + b2] - sumL[b0 * nb + b1];
                        ev.n = {w - c0 - c3 + 1, h - c0 - c1 + 1, w - c1 - c2 + 1, h - c2 - c3 + 1};
                        ev.NO = c0 + c1 + c2 + c3;
                        ev.boundary = ev.NO + ev.n[0] + ev.n[1] + ev.n[2] + ev.n[3];
                        const std::array<i64, 4> b{static_cast<i64>(b0), static_cast<i64>(b1), static_cast<i64>(b2),
                                                   static_cast<i64>(b3)};
                        f(a, b, ev);
                    }
                }
            }
        }
    }
}

struct PlainEval {
    double F = kInf;  // best over X without trims
    double LB = kInf;  // lower bound including trims
    i64 X = 0;
};

PlainEval plain_eval(const Context& cx, const GeomEval& ev)
{
    PlainEval pe;
    const auto [lo, hi] = surf_window(cx, ev.boundary);
    const double base = cx.eps * 4.0 * static_cast<double>(ev.G.width + ev.G.height + 2) +
                        cx.ediss * static_cast<double>(ev.D1sum);
    i64 savings = 0;
    if (cx.rb.span > 0)
        for (int i = 0; i < 4; ++i)
            if (side_trimmable(ev.G, i)) {
                const SideSeg s = side_segment(ev.G, i);
                savings += seg_out(cx, s, s.lo, s.hi);
            }
    auto consider = [&](i64 X) {
        const double esurf = cx.esurf * static_cast<double>(X > cx.C ? X - cx.C : cx.C - X);
        const double F = base + cx.eps * ez_octagon(X, ev.NO, ev.n, cx.k) + esurf;
        double lb = F;
        if (X <= ev.boundary && cx.rb.span > 0) {
            const i64 phi = X > ev.NO ? pieces_needed(X - ev.NO, ev.n) : 0;
            lb = F - cx.eps * (1.0 - cx.k) * static_cast<double>(phi) - cx.ediss * static_cast<double>(savings);
        }
        if (F < pe.F) {
            pe.F = F;
            pe.X = X;
        }
        pe.LB = std::min(pe.LB, lb);
    };
    if (!cx.gamma2)
        consider(cx.C);
    else
        for (i64 X : surf_candidates(cx.C, ev.NO, ev.n, ev.boundary, lo, hi)) consider(X);
    return pe;
}

StepResult finish_result(const SpinConfig& u, const ModelParams& p, const Cand& best, std::size_t n_cand)
{
    StepResult r;
    r.method = StepMethod::Parametric;
    r.candidate_count = static_cast<i64>(n_cand);
    r.config.ones = build_phase_set(best.G, best.tl, best.tr);
    r.config.zeros = canonical_surfactant(r.config.ones, best.X, p.k);
    r.outer = containing_octagon(r.config.ones);
    r.geom = recognize_quasi_octagon(r.config.ones);
    r.disp = displacement_between(containing_octagon(u.ones), r.outer);
    const auto e = beg_energy(r.config, p);
    r.energy = e.total;
    r.diss1 = dissipation_phase(r.config.ones, u.ones, p) / p.tau();
    r.diss0 = std::pow(p.eps, p.gamma) * static_cast<double>(dissipation_surf(r.config.zeros, u.zeros)) / p.tau();
    r.functional_value = r.energy + r.diss1 + r.diss0;
    r.fast_value = best.F;
    r.fast_mismatch = std::abs(r.functional_value - best.F) > kTol;
    return r;
}

// The empty phase set, with the surfactant clustered (kept, or dropped when gamma = 2).
std::optional<StepResult> vanish_result(const ModelParams& p, const Context& cx)
{
    StepResult r;
    r.method = StepMethod::Parametric;
    const double d1 = cx.ediss * static_cast<double>(cx.S_in);
    SpinConfig keep;
    keep.zeros = canonical_surfactant(SiteSet{}, cx.C, p.k);
    const double Fk = beg_energy(keep, p).total + d1;
    const double Fd = d1 + cx.esurf * static_cast<double>(cx.C);
    if (cx.gamma2 && Fd < Fk) {
        r.energy = 0;
        r.diss0 = Fd - d1;
    } else {
        r.config = keep;
        r.energy = Fk - d1;
    }
    r.diss1 = d1;
    r.functional_value = r.energy + r.diss1 + r.diss0;
    r.fast_value = r.functional_value;
    r.outer = OctagonGeom{};
    return r;
}

}  // namespace

ResolvedBudget resolve_budget(const SpinConfig& u, const ModelParams& p, const SearchBudget& b)
{
    ResolvedBudget rb;
    const OctagonGeom A = containing_octagon(u.ones);
    const auto q = recognize_quasi_octagon(u.ones);
    const OctagonGeom core = q ? q->core : A;
    i64 pmin = std::numeric_limits<i64>::max(), pmax = 0;
    for (int i = 0; i < 4; ++i) {
        pmin = std::min(pmin, core.side_lattice(i));
        pmax = std::max(pmax, A.side_lattice(i));
    }
    // a zero core side is measured as one lattice step for the budget
    const i64 ca = c_alpha_from(p.zeta, static_cast<double>(std::max<i64>(pmin, 1)) * p.eps);
    const i64 cap = std::max(A.width, A.height);
    rb.A = std::min(b.max_parallel_shift >= 0 ? b.max_parallel_shift : ca + 2, cap);
    rb.B = std::min(b.max_diag_shift >= 0 ? b.max_diag_shift : ca + 2, cap);
    rb.span = b.defects ? (b.defect_span >= 0 ? b.defect_span : pmax) : 0;
    const i64 nb = static_cast<i64>(exterior_boundary(u.ones).size());
    rb.surf_range = b.surf_range >= 0 ? b.surf_range : static_cast<i64>(u.zeros.size()) + nb + 16;
    return rb;
}

StepResult parametric_step(const SpinConfig& u, const ModelParams& p, const SearchBudget& b)
{
    p.validate();
    u.validate();
    if (u.ones.empty()) throw std::runtime_error("collapsed");
    if (!recognize_quasi_octagon(u.ones)) throw std::invalid_argument("parametric_step: ones is not a quasi-octagon");
    const Context cx = make_context(u, p, b);
    const int threads = thread_count(b);

    // phase 1: best value over plain octagons
    std::vector<double> ub(static_cast<std::size_t>(threads > 0 ? threads : 1) * 8, kInf);
    std::vector<i64> counts(ub.size(), 0);
    enumerate_geometries(cx, threads, [&](const auto&, const auto&, const GeomEval& ev) {
#ifdef _OPENMP
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
#else
        const std::size_t t = 0;
#endif
        const PlainEval pe = plain_eval(cx, ev);
        ub[t] = std::min(ub[t], pe.F);
        ++counts[t];
    });
    double U = kInf;
    std::size_t n_cand = 0;
    for (std::size_t t = 0; t < ub.size(); ++t) {
        U = std::min(U, ub[t]);
        n_cand += static_cast<std::size_t>(counts[t]);
    }
    if (n_cand == 0) throw std::runtime_error("collapsed");

    // phase 2: collect candidates whose lower bound reaches U
    std::vector<std::vector<Cand>> buckets(ub.size());
    enumerate_geometries(cx, threads, [&](const auto& a, const auto& bb, const GeomEval& ev) {
#ifdef _OPENMP
        const auto t = static_cast<std::size_t>(omp_get_thread_num());
#else
        const std::size_t t = 0;
#endif
        const PlainEval pe = plain_eval(cx, ev);
        if (pe.LB > U + kTol && pe.F > U + kTol) return;
        const auto [lo, hi] = surf_window(cx, ev.boundary);
        std::vector<i64> xs = cx.gamma2 ? surf_candidates(cx.C, ev.NO, ev.n, ev.boundary, lo, hi) : std::vector<i64>{cx.C};
        for (i64 X : xs) {
            Cand c;
            c.a = a;
            c.b = bb;
            c.G = ev.G;
            c.X = X;
            c.D1 = ev.D1sum;
            buckets[t].push_back(c);
        }
    });
    std::vector<Cand> pool;
    for (auto& bk : buckets) pool.insert(pool.end(), bk.begin(), bk.end());
    std::sort(pool.begin(), pool.end(), [](const Cand& x, const Cand& y) { return x.key() < y.key(); });

    // phase 3: exact trim optimization
    const auto np = static_cast<std::ptrdiff_t>(pool.size());
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
    for (std::ptrdiff_t i = 0; i < np; ++i) {
        Cand& c = pool[static_cast<std::size_t>(i)];
        const TrimChoice tc = optimize_trims(cx, c.G, c.X, c.D1);
        c.F = tc.F;
        c.tl = tc.tl;
        c.tr = tc.tr;
    }
    double Fmin = kInf;
    for (const auto& c : pool) Fmin = std::min(Fmin, c.F);
    const Cand* best = nullptr;
    std::vector<const Cand*> ties;
    for (const auto& c : pool)
        if (c.F <= Fmin + kTol) {
            ties.push_back(&c);
            if (!best || c.key() < best->key()) best = &c;
        }
    if (auto v = vanish_result(p, cx); v && v->functional_value < Fmin - kTol) {
        v->candidate_count = static_cast<i64>(n_cand) + 1;
        return *v;
    }
    StepResult r = finish_result(u, p, *best, n_cand);
    r.ties.push_back(r.disp);
    for (const Cand* c : ties) {
        if (c == best) continue;
        SiteSet In = build_phase_set(c->G, c->tl, c->tr);
        Displacement d = displacement_between(cx.A, containing_octagon(In));
        if (std::find(r.ties.begin(), r.ties.end(), d) == r.ties.end()) r.ties.push_back(d);
    }
    r.tie_count = ties.size();
    return r;
}

StepResult parametric_step_naive(const SpinConfig& u, const ModelParams& p, const SearchBudget& b)
{
    p.validate();
    if (u.ones.empty()) throw std::runtime_error("collapsed");
    const Context cx = make_context(u, p, b);
    const OctagonGeom& A0 = cx.A;
    const i64 Aa = cx.rb.A, Bb = cx.rb.B;
    const double esurf_unit = std::pow(p.eps, p.gamma) / p.tau();
    Cand best;
    std::size_t n = 0;
    std::array<i64, 8> v{};
    std::function<void(int)> rec = [&](int depth) {
        if (depth < 8) {
            const i64 lim = depth < 4 ? Aa : Bb;
            for (i64 x = 0; x <= lim; ++x) {
                v[static_cast<std::size_t>(depth)] = x;
                rec(depth + 1);
            }
            return;
        }
        Cand c;
        for (int i = 0; i < 4; ++i) {
            c.a[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i)];
            c.b[static_cast<std::size_t>(i)] = v[static_cast<std::size_t>(i + 4)];
        }
        OctagonGeom G;
        G.width = A0.width - c.a[1] - c.a[3];
        G.height = A0.height - c.a[0] - c.a[2];
        G.anchor = {A0.anchor.x + c.a[1], A0.anchor.y + c.a[0]};
        for (int d = 0; d < 4; ++d) {
            const i64 raw = A0.cuts[static_cast<std::size_t>(d)] + c.b[static_cast<std::size_t>(d)] -
                            c.a[static_cast<std::size_t>(d)] - c.a[static_cast<std::size_t>((d + 1) % 4)];
            if (raw < 0 && c.b[static_cast<std::size_t>(d)] > 0) return;
            G.cuts[static_cast<std::size_t>(d)] = std::max<i64>(0, raw);
        }
        if (G.width < 0 || G.height < 0 || !G.valid()) return;
        c.G = G;
        ++n;
        // all trim decorations
        std::array<std::vector<std::pair<i64, i64>>, 4> opts;
        for (int i = 0; i < 4; ++i) {
            opts[static_cast<std::size_t>(i)].push_back({0, 0});
            if (!side_trimmable(G, i) || cx.rb.span == 0) continue;
            const i64 nn = G.side_lattice(i) + 1;
            for (i64 l = 0; l <= std::min(cx.rb.span, nn - 1); ++l)
                for (i64 r = 0; r <= std::min(cx.rb.span, nn - 1 - l); ++r)
                    if (l + r >= 1) opts[static_cast<std::size_t>(i)].push_back({l, r});
        }
        for (const auto& o0 : opts[0])
            for (const auto& o1 : opts[1])
                for (const auto& o2 : opts[2])
                    for (const auto& o3 : opts[3]) {
                        Cand t = c;
                        t.tl = {o0.first, o1.first, o2.first, o3.first};
                        t.tr = {o0.second, o1.second, o2.second, o3.second};
                        unsigned S = 0;
                        for (int i = 0; i < 4; ++i)
                            if (t.tl[static_cast<std::size_t>(i)] + t.tr[static_cast<std::size_t>(i)] > 0) S |= 1U << i;
                        if (!trim_set_valid(G, S)) continue;
                        const SiteSet In = build_phase_set(G, t.tl, t.tr);
                        const double E0 = p.eps * static_cast<double>(2 * exposed_edges(In));
                        const double d1 = dissipation_phase(In, u.ones, p) / p.tau();
                        const i64 nb = static_cast<i64>(exterior_boundary(In).size());
                        const auto [lo, hi] = surf_window(cx, nb);
                        for (i64 X = lo; X <= hi; ++X) {
                            t.X = X;
                            const double ez = p.eps * surfactant_min_energy(In, X, p.k).energy;
                            t.F = E0 + ez + d1 + esurf_unit * static_cast<double>(X > cx.C ? X - cx.C : cx.C - X);
                            if (t.F < best.F - kTol || (t.F <= best.F + kTol && t.key() < best.key())) best = t;
                        }
                    }
    };
    rec(0);
    if (n == 0) throw std::runtime_error("collapsed");
    if (auto v = vanish_result(p, cx); v && v->functional_value < best.F - kTol) {
        v->candidate_count = static_cast<i64>(n) + 1;
        return *v;
    }
    return finish_result(u, p, best, n);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

double bond(int u, int v, double k)
{
    const int uv = u * v;
    return 1.0 - uv - k * (1.0 - uv * uv);
}

// Dense state for the local search.
struct Lattice {
    Box box;
    i64 w = 0;
    std::vector<std::int8_t> val;
    std::vector<std::int32_t> dist;
    std::vector<std::int8_t> old_in;
    i64 nz = 0;
    std::size_t idx(i64 x, i64 y) const { return static_cast<std::size_t>((y - box.y0) * w + (x - box.x0)); }
    bool interior(i64 x, i64 y) const { return x > box.x0 && x < box.x1 && y > box.y0 && y < box.y1; }
};

struct LSParams {
    double eps, k, ediss, esurf;
    i64 C;
};

double delta_set(const Lattice& L, const LSParams& q, i64 x, i64 y, int b)
{
    const std::size_t i = L.idx(x, y);
    const int a = L.val[i];
    if (a == b) return 0.0;
    double dE = 0;
    const std::array<std::pair<i64, i64>, 4> nb{{{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}}};
    for (const auto& [nx, ny] : nb) {
        const int v = L.val[L.idx(nx, ny)];
        dE += bond(b, v, q.k) - bond(a, v, q.k);
    }
    double dD = 0;
    const bool in_old = L.old_in[i] != 0;
    const int before = ((a == 1) != in_old) ? 1 : 0;
    const int after = ((b == 1) != in_old) ? 1 : 0;
    dD = static_cast<double>((after - before) * L.dist[i]);
    const i64 nz2 = L.nz + (b == 0 ? 1 : 0) - (a == 0 ? 1 : 0);
    const double dS = static_cast<double>(std::abs(nz2 - q.C) - std::abs(L.nz - q.C));
    return q.eps * dE + q.ediss * dD + q.esurf * dS;
}

void set_value(Lattice& L, i64 x, i64 y, int b)
{
    const std::size_t i = L.idx(x, y);
    if (L.val[i] == 0) --L.nz;
    if (b == 0) ++L.nz;
    L.val[i] = static_cast<std::int8_t>(b);
}

SpinConfig to_config(const Lattice& L)
{
    SpinConfig c;
    for (i64 y = L.box.y0; y <= L.box.y1; ++y)
        for (i64 x = L.box.x0; x <= L.box.x1; ++x) {
            const int v = L.val[L.idx(x, y)];
            if (v == 1) c.ones.insert({x, y});
            if (v == 0) c.zeros.insert({x, y});
        }
    return c;
}

void load(Lattice& L, const SpinConfig& c)
{
    std::fill(L.val.begin(), L.val.end(), std::int8_t{-1});
    L.nz = 0;
    for (const auto& s : c.ones)
        if (L.box.contains(s)) L.val[L.idx(s.x, s.y)] = 1;
    for (const auto& s : c.zeros)
        if (L.box.contains(s)) {
            L.val[L.idx(s.x, s.y)] = 0;
            ++L.nz;
        }
}

struct Move {
    i64 x1, y1;
    int v1;
    i64 x2, y2;
    int v2;
    bool swap;
};

void descend(Lattice& L, const LSParams& q, int max_steps, std::mt19937_64& rng)
{
    std::vector<Move> best_moves;
    for (int step = 0; step < max_steps; ++step) {
        double best = -1e-12;
        best_moves.clear();
        auto offer = [&](double d, const Move& m) {
            if (d < best - 1e-12) {
                best = d;
                best_moves.clear();
                best_moves.push_back(m);
            } else if (d <= best + 1e-12 && d < -1e-12) {
                best_moves.push_back(m);
            }
        };
        std::vector<std::pair<i64, i64>> near, zeros;
        for (i64 y = L.box.y0 + 1; y < L.box.y1; ++y)
            for (i64 x = L.box.x0 + 1; x < L.box.x1; ++x) {
                const int v = L.val[L.idx(x, y)];
                bool edge = false;
                for (i64 dy = -1; dy <= 1 && !edge; ++dy)
                    for (i64 dx = -1; dx <= 1; ++dx)
                        if (L.val[L.idx(x + dx, y + dy)] != v) {
                            edge = true;
                            break;
                        }
                if (edge) near.emplace_back(x, y);
                if (v == 0) zeros.emplace_back(x, y);
                for (int b : {-1, 0, 1}) {
                    if (b == v) continue;
                    offer(delta_set(L, q, x, y, b), {x, y, b, 0, 0, 0, false});
                }
            }
        auto try_swap = [&](i64 x1, i64 y1, i64 x2, i64 y2) {
            const int v1 = L.val[L.idx(x1, y1)], v2 = L.val[L.idx(x2, y2)];
            if (v1 == v2) return;
            const double d1 = delta_set(L, q, x1, y1, v2);
            set_value(L, x1, y1, v2);
            const double d2 = delta_set(L, q, x2, y2, v1);
            set_value(L, x1, y1, v1);
            offer(d1 + d2, {x1, y1, v2, x2, y2, v1, true});
        };
        for (const auto& [zx, zy] : zeros)
            for (const auto& [nx, ny] : near) try_swap(zx, zy, nx, ny);
        for (const auto& [x, y] : near) {
            if (L.interior(x + 1, y)) try_swap(x, y, x + 1, y);
            if (L.interior(x, y + 1)) try_swap(x, y, x, y + 1);
        }
        if (best_moves.empty()) return;
        std::uniform_int_distribution<std::size_t> pick(0, best_moves.size() - 1);
        const Move m = best_moves[pick(rng)];
        set_value(L, m.x1, m.y1, m.v1);
        if (m.swap) set_value(L, m.x2, m.y2, m.v2);
    }
}

}  // namespace

StepResult flip_local_search(const SpinConfig& u, const ModelParams& p, const SearchBudget& b, std::uint64_t seed,
                             const SpinConfig* start)
{
    p.validate();
    if (u.ones.empty()) throw std::invalid_argument("flip_local_search: empty phase set");
    std::optional<SpinConfig> param_opt;
    if (start)
        param_opt = *start;
    else {
        try {
            param_opt = parametric_step(u, p, b).config;
        } catch (const std::exception&) {
            param_opt.reset();
        }
    }
    Box box = box_union(bounding_box(u.ones), u.zeros.empty() ? bounding_box(u.ones) : bounding_box(u.zeros));
    if (param_opt && !param_opt->ones.empty()) box = box_union(box, bounding_box(param_opt->ones));
    if (param_opt && !param_opt->zeros.empty()) box = box_union(box, bounding_box(param_opt->zeros));
    box = box.padded(3);

    Lattice base;
    base.box = box;
    base.w = box.width();
    base.val.assign(static_cast<std::size_t>(box.width() * box.height()), -1);
    base.old_in.assign(base.val.size(), 0);
    const Grid dist = boundary_distance_map(u.ones, box);
    base.dist = dist.data;
    for (const auto& s : u.ones) base.old_in[base.idx(s.x, s.y)] = 1;
    const LSParams q{p.eps, p.k, p.eps * p.eps / p.zeta, std::pow(p.eps, p.gamma - 1.0) / p.zeta,
                     static_cast<i64>(u.zeros.size())};

    const int restarts = std::max(1, b.local_search_restarts);
    std::vector<SpinConfig> results(static_cast<std::size_t>(restarts));
    std::vector<double> values(static_cast<std::size_t>(restarts), kInf);
    const int threads = thread_count(b);
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r) + 1)));
        Lattice L = base;
        const bool from_opt = param_opt && (r % 2 == 0);
        load(L, from_opt ? *param_opt : u);
        if (r >= 2) {
            std::vector<std::pair<i64, i64>> near;
            for (i64 y = L.box.y0 + 1; y < L.box.y1; ++y)
                for (i64 x = L.box.x0 + 1; x < L.box.x1; ++x) {
                    const int v = L.val[L.idx(x, y)];
                    for (const auto& s : neighbors({x, y}))
                        if (L.val[L.idx(s.x, s.y)] != v) {
                            near.emplace_back(x, y);
                            break;
                        }
                }
            std::uniform_int_distribution<int> nflip(1, 4), val(-1, 1);
            const int kf = nflip(rng);
            for (int f = 0; f < kf && !near.empty(); ++f) {
                std::uniform_int_distribution<std::size_t> pick(0, near.size() - 1);
                const auto [x, y] = near[pick(rng)];
                set_value(L, x, y, val(rng));
            }
        }
        descend(L, q, b.local_search_steps, rng);
        results[static_cast<std::size_t>(r)] = to_config(L);
        values[static_cast<std::size_t>(r)] = total_functional(results[static_cast<std::size_t>(r)], u, p);
    }
    std::size_t bi = 0;
    for (std::size_t r = 1; r < values.size(); ++r)
        if (values[r] < values[bi] - kTol) bi = r;
    StepResult out;
    out.method = StepMethod::LocalSearch;
    out.config = results[bi];
    out.functional_value = values[bi];
    out.candidate_count = restarts;
    const auto e = beg_energy(out.config, p);
    out.energy = e.total;
    if (!out.config.ones.empty()) {
        out.outer = containing_octagon(out.config.ones);
        out.geom = recognize_quasi_octagon(out.config.ones);
    }
    out.diss1 = dissipation_phase(out.config.ones, u.ones, p) / p.tau();
    out.diss0 = std::pow(p.eps, p.gamma) * static_cast<double>(dissipation_surf(out.config.zeros, u.zeros)) / p.tau();
    return out;
}

MMTrajectory minimizing_movement(const SpinConfig& u0, const ModelParams& p, std::size_t n_steps, const SearchBudget& b)
{
    MMTrajectory t;
    t.initial = u0;
    if (!recognize_octagon(u0.ones)) throw std::invalid_argument("minimizing_movement: initial phase set is not an octagon");
    const bool gamma2 = std::abs(p.gamma - 2.0) < 1e-12;
    SpinConfig cur = u0;
    for (std::size_t j = 0; j < n_steps; ++j) {
        if (cur.ones.empty()) {
            t.status = "collapsed";
            break;
        }
        if (!gamma2 && static_cast<i64>(exterior_boundary(cur.ones).size()) <= static_cast<i64>(cur.zeros.size())) {
            t.status = "complete-wetting";
            break;
        }
        try {
            StepResult r = parametric_step(cur, p, b);
            cur = r.config;
            t.steps.push_back(std::move(r));
        } catch (const std::runtime_error& e) {
            t.status = std::string(e.what()) == "collapsed" ? "collapsed" : std::string("error: ") + e.what();
            break;
        } catch (const std::invalid_argument& e) {
            t.status = std::string("error: ") + e.what();
            break;
        }
    }
    return t;
}

}  // namespace begflow
