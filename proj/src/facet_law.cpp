#include "begflow/facet_law.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace begflow {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kTol = 1e-12;

std::size_t u(int i) { return static_cast<std::size_t>(i); }
int nx(int i) { return (i + 1) % 4; }
int pv(int i) { return (i + 3) % 4; }

bool near_int(double x, double eps) { return dist_to_int(x) < std::sqrt(eps); }

i64 ifloor(double x) { return static_cast<i64>(std::floor(x + 1e-12)); }
i64 iceil(double x) { return static_cast<i64>(std::ceil(x - 1e-12)); }

std::vector<i64> nonneg_unique(std::vector<i64> v)
{
    for (auto& x : v) x = std::max<i64>(0, x);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

// Minimizer of f over the set; exact ties go to the member closest to floor(x).
i64 pick(const std::vector<i64>& set, double x, const std::function<double(i64)>& f)
{
    i64 best = set.front();
    double fb = f(best);
    const i64 fl = std::max<i64>(0, ifloor(x));
    for (i64 v : set) {
        const double fv = f(v);
        if (fv < fb - kTol || (std::abs(fv - fb) <= kTol && std::abs(v - fl) < std::abs(best - fl))) {
            best = v;
            fb = fv;
        }
    }
    return best;
}

// floor law with the two-element near-integer set
struct FloorLaw {
    std::vector<i64> set;
    i64 value = 0;
    bool tie = false;
};

FloorLaw floor_law(double x, double eps, const std::function<double(i64)>& f)
{
    FloorLaw r;
    if (near_int(x, eps)) {
        const i64 n = nearest_int(x);
        r.set = nonneg_unique({n - 1, n});
        r.tie = true;
    } else {
        r.set = nonneg_unique({ifloor(x)});
    }
    r.value = pick(r.set, x, f);
    return r;
}

i64 safe_c_alpha(const FacetState& s)
{
    const auto Pt = s.core_lengths().P;
    double m = *std::min_element(Pt.begin(), Pt.end());
    if (m <= 0) m = s.params.eps;
    return c_alpha_from(s.params.zeta, m);
}

i64 boundary_count(const OctagonGeom& g) { return static_cast<i64>(exterior_boundary(rasterize(g)).size()); }

bool all_positive(const std::array<double, 4>& v)
{
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0; });
}

}  // namespace

double dist_to_int(double x) { return std::abs(x - std::round(x)); }
i64 nearest_int(double x) { return static_cast<i64>(std::llround(x)); }

std::optional<OctagonGeom> apply_displacement(const OctagonGeom& g, const Displacement& d)
{
    OctagonGeom h;
    h.anchor = {g.anchor.x + d.alpha[1], g.anchor.y + d.alpha[0]};
    h.width = g.width - d.alpha[1] - d.alpha[3];
    h.height = g.height - d.alpha[0] - d.alpha[2];
    if (h.width < 0 || h.height < 0) return std::nullopt;
    for (int i = 0; i < 4; ++i)
        h.cuts[u(i)] = std::max<i64>(0, g.cuts[u(i)] + d.beta[u(i)] - d.alpha[u(i)] - d.alpha[u(nx(i))]);
    if (!h.valid()) return std::nullopt;
    return h;
}

Displacement displacement_between(const OctagonGeom& from, const OctagonGeom& to)
{
    Displacement d;
    d.alpha[0] = to.anchor.y - from.anchor.y;
    d.alpha[1] = to.anchor.x - from.anchor.x;
    d.alpha[2] = (from.anchor.y + from.height) - (to.anchor.y + to.height);
    d.alpha[3] = (from.anchor.x + from.width) - (to.anchor.x + to.width);
    for (int i = 0; i < 4; ++i)
        d.beta[u(i)] =
            std::max<i64>(0, to.cuts[u(i)] - from.cuts[u(i)] + d.alpha[u(i)] + d.alpha[u(nx(i))]);
    return d;
}

std::string to_string(RegimeTag t)
{
    switch (t) {
    case RegimeTag::Stage1Pinned: return "Stage1Pinned";
    case RegimeTag::Stage2SurfDependent: return "Stage2SurfDependent";
    case RegimeTag::Stage3Nonlocal: return "Stage3Nonlocal";
    case RegimeTag::NullDiagonal: return "NullDiagonal";
    case RegimeTag::CompleteWetting: return "CompleteWetting";
    case RegimeTag::Gamma2Surrounded: return "Gamma2Surrounded";
    case RegimeTag::Gamma2ReduceToSub2: return "Gamma2ReduceToSub2";
    case RegimeTag::Indeterminate: return "Indeterminate";
    }
    return "Indeterminate";
}

RegimeTag regime_from_string(const std::string& s)
{
    for (auto t : {RegimeTag::Stage1Pinned, RegimeTag::Stage2SurfDependent, RegimeTag::Stage3Nonlocal,
                   RegimeTag::NullDiagonal, RegimeTag::CompleteWetting, RegimeTag::Gamma2Surrounded,
                   RegimeTag::Gamma2ReduceToSub2, RegimeTag::Indeterminate})
        if (to_string(t) == s) return t;
    throw std::invalid_argument("unknown regime: " + s);
}

double FacetState::cbar_value() const
{
    if (cbar) return *cbar;
    return 0.5 * kSqrt2 * params.zeta * (1 + params.k) / static_cast<double>(8 * safe_c_alpha(*this) + 1);
}

void FacetState::check() const
{
    if (!geom.valid()) throw std::invalid_argument("invalid geometry");
    if (C < 0) throw std::invalid_argument("negative surfactant count");
    params.validate();
}

bool FacetState::side_bound_ok() const
{
    const auto P = lengths().P;
    const double m = *std::min_element(P.begin(), P.end());
    return m >= (1 - params.k) * params.zeta / static_cast<double>(safe_c_alpha(*this) + 1) - 1e-9;
}

std::optional<OctagonGeom> octagon_from_counts(const std::array<i64, 4>& P, const std::array<i64, 4>& D, Site anchor)
{
    for (int i = 0; i < 4; ++i)
        if (P[u(i)] < 0 || D[u(i)] < 0) return std::nullopt;
    OctagonGeom g;
    g.anchor = anchor;
    g.width = P[0] + D[0] + D[3];
    g.height = P[1] + D[0] + D[1];
    g.cuts = D;
    if (P[2] + D[1] + D[2] != g.width || P[3] + D[2] + D[3] != g.height) return std::nullopt;
    if (!g.valid()) return std::nullopt;
    return g;
}

FacetState make_state(const OctagonGeom& g, i64 C, const ModelParams& p)
{
    FacetState s;
    s.geom.core = g;
    s.C = C;
    s.params = p;
    s.check();
    return s;
}

i64 c_alpha_from(double zeta, double Pt_min)
{
    if (Pt_min <= 0) throw std::invalid_argument("c_alpha: zero core side");
    return static_cast<i64>(std::floor(4 * zeta / Pt_min + 1e-9)) + 2;
}

i64 c_alpha(const FacetState& s)
{
    const auto Pt = s.core_lengths().P;
    return c_alpha_from(s.params.zeta, *std::min_element(Pt.begin(), Pt.end()));
}

AlphaBetaBounds alpha_min_beta_max(const FacetState& s)
{
    const auto L = s.core_lengths();
    if (!all_positive(L.P) || !all_positive(L.D)) throw std::invalid_argument("alpha_min_beta_max: zero core length");
    const auto& p = s.params;
    AlphaBetaBounds r;
    for (int i = 0; i < 4; ++i) {
        r.alpha_min[u(i)] = alpha_min_value(L.P[u(i)], p.zeta, p.k, p.eps);
        r.beta_max[u(i)] = beta_max_value(L.D[u(i)], p.zeta, p.k, p.eps);
    }
    return r;
}

Regime classify(const FacetState& s)
{
    const auto& p = s.params;
    Regime r;
    const OctagonGeom G = s.outer();
    const auto L = s.lengths();
    r.boundary_count = static_cast<i64>(exterior_boundary(rasterize(s.geom)).size());
    r.c_alpha = safe_c_alpha(s);
    r.cbar = s.cbar_value();
    const double C = static_cast<double>(s.C);
    for (int i = 0; i < 4; ++i) r.diag_count += G.cuts[u(i)];
    const double diag = static_cast<double>(r.diag_count);
    const double ca = static_cast<double>(r.c_alpha);
    r.long_diagonals = std::all_of(L.D.begin(), L.D.end(), [&](double d) { return d >= r.cbar; });
    r.surround_margin = static_cast<double>(r.boundary_count) - 8 * std::pow(p.eps, s.mu - 1) - C;
    r.stage1_margin = diag - 8 * ca - (C + 2);
    r.stage3_upper = C + 2 + 8 * ca - diag;

    const auto Lc = s.core_lengths();
    std::optional<AlphaBetaBounds> ab;
    if (all_positive(Lc.P) && all_positive(Lc.D)) ab = alpha_min_beta_max(s);
    double shift = 0;  // sum(beta_max - 2 alpha_min)
    if (ab)
        for (int i = 0; i < 4; ++i) shift += static_cast<double>(ab->beta_max[u(i)] - 2 * ab->alpha_min[u(i)]);
    r.stage2_margin = ab ? (C - 2) - (diag + shift) : -std::numeric_limits<double>::infinity();

    if (p.gamma == 2.0) {
        if (r.boundary_count <= s.C) {
            r.tag = RegimeTag::Gamma2Surrounded;
            r.note = "surrounded";
            return r;
        }
        if (p.zeta > 1 / (3 * p.k - 1)) {
            r.tag = RegimeTag::Gamma2Surrounded;
            r.note = "surrounded after one step";
            return r;
        }
        FacetState sub = s;
        sub.params.gamma = 1.0;
        const Regime rs = classify(sub);
        r = rs;
        r.tag = RegimeTag::Gamma2ReduceToSub2;
        r.sub = rs.tag;
        r.note = p.zeta < 1 / (4 * p.k) ? "zeta < 1/(4k)" : "1/(4k) <= zeta <= 1/(3k-1)";
        return r;
    }

    if (r.boundary_count <= s.C) {
        r.tag = RegimeTag::CompleteWetting;
        return r;
    }
    if (s.C > 0 && r.surround_margin <= 0) {
        r.tag = RegimeTag::Indeterminate;
        r.note = "surrounding margin not met";
        return r;
    }
    if (r.stage1_margin >= 0) {
        r.tag = RegimeTag::Stage1Pinned;
        return r;
    }
    if (ab && r.stage2_margin >= 0 && r.long_diagonals) {
        r.tag = RegimeTag::Stage2SurfDependent;
        return r;
    }
    if (s.lambda && *s.lambda > 0) {
        double sd = 0;
        for (double d : L.D) sd += d / kSqrt2;
        if (std::abs(*s.lambda - sd) < 1e-12) {
            r.tag = RegimeTag::Indeterminate;
            r.note = "lambda equals the diagonal mass";
            return r;
        }
    }
    if (s.geom.is_octagon() && C <= diag && diag < C + 8 * ca + 2 && !r.long_diagonals) {
        r.tag = RegimeTag::NullDiagonal;
        return r;
    }
    // the Stage 3 law needs #O_{j+1} <= C for some xi >= -8 c_alpha
    if (ab && r.long_diagonals && C - 2 - shift < diag && diag < C + 2 + 8 * ca && diag - C <= 8 * ca) {
        // the bound above is only necessary; beta >= 0 can still rule out every xi
        if (step_stage3(s).status == "ok") {
            r.tag = RegimeTag::Stage3Nonlocal;
            return r;
        }
        r.tag = RegimeTag::Indeterminate;
        r.note = "no nonnegative Stage 3 displacement";
        return r;
    }
    r.tag = RegimeTag::Indeterminate;
    r.note = "no hypothesis holds";
    return r;
}

namespace {

ScalarLaw to_scalar(const FloorLaw& f) { return ScalarLaw{f.value, f.set, f.tie}; }

// floor/ceil pair, or the three values around the nearest integer on a tie
std::vector<i64> pair_or_triple(double x, double eps, bool& tie)
{
    if (near_int(x, eps)) {
        tie = true;
        const i64 n = nearest_int(x);
        return nonneg_unique({n - 1, n, n + 1});
    }
    return nonneg_unique({ifloor(x), iceil(x)});
}

// alpha = floor(4 zeta / P) per side with the near-integer pair, capped at c_alpha
void parallel_pinned_law(const FacetState& s, LawResult& r)
{
    const auto P = s.lengths().P;
    const i64 ca = safe_c_alpha(s);
    for (int i = 0; i < 4; ++i) {
        if (P[u(i)] <= 0) {
            r.d.alpha[u(i)] = ca;
            r.alpha_set[u(i)] = {ca};
            continue;
        }
        ScalarLaw sl = pinned_alpha(P[u(i)], s.params.zeta, s.params.eps);
        for (auto& v : sl.set) v = std::min(v, ca);
        r.d.alpha[u(i)] = std::min(sl.value, ca);
        r.alpha_set[u(i)] = nonneg_unique(sl.set);
        r.tie = r.tie || sl.tie;
    }
}

}  // namespace

ScalarLaw pinned_alpha(double P, double zeta, double eps)
{
    if (P <= 0) throw std::invalid_argument("pinned_alpha: zero side");
    const double x = 4 * zeta / P;
    return to_scalar(floor_law(x, eps, [&](i64 a) { return -4.0 * a + P * a * (a + 1) / (2 * zeta); }));
}

ScalarLaw stage2_alpha(double Pt, double zeta, double k, double eps)
{
    if (Pt <= 0) throw std::invalid_argument("stage2_alpha: zero side");
    const double x = 2 * zeta * (1 - k) / Pt;
    ScalarLaw r;
    r.set = pair_or_triple(x, eps, r.tie);
    r.value = pick(r.set, x, [&](i64 a) { return -2 * (1 - k) * a + Pt * a * (a + 1) / (2 * zeta); });
    return r;
}

ScalarLaw stage2_beta(double Dt, double zeta, double k, double eps)
{
    if (Dt <= 0) throw std::invalid_argument("stage2_beta: zero diagonal");
    const double y = kSqrt2 * zeta * (1 + k) / Dt;
    return to_scalar(
        floor_law(y, eps, [&](i64 b) { return -(1 + k) * b + (Dt / kSqrt2) * b * (b + 1) / (2 * zeta); }));
}

ScalarLaw gamma2_alpha(double P, double zeta, double k, double eps)
{
    if (P <= 0) return ScalarLaw{0, {0}, false};
    const double x = 2 * zeta * (1 - k) / P;
    return to_scalar(floor_law(x, eps, [&](i64 a) { return -2 * (1 - k) * a + P * a * (a + 1) / (2 * zeta); }));
}

ScalarLaw gamma2_beta(double D, double zeta, double k, double eps)
{
    const double y = D > 0 ? (2 * kSqrt2 * (1 - k) * zeta - kSqrt2) / D : 0.0;
    if (D <= 0 || y < 0) return ScalarLaw{0, {0}, false};
    const double drive = 2 * (1 - k) - 1 / zeta;
    return to_scalar(
        floor_law(y, eps, [&](i64 b) { return -drive * b + (D / kSqrt2) * b * (b + 1) / (2 * zeta); }));
}

i64 alpha_min_value(double Pt, double zeta, double k, double eps)
{
    if (Pt <= 0) throw std::invalid_argument("alpha_min: zero side");
    const double x = 2 * zeta * (1 - k) / Pt;
    return near_int(x, eps) ? nearest_int(x) - 1 : ifloor(x);
}

i64 beta_max_value(double Dt, double zeta, double k, double eps)
{
    if (Dt <= 0) throw std::invalid_argument("beta_max: zero diagonal");
    const double y = kSqrt2 * zeta * (1 + k) / Dt;
    return near_int(y, eps) ? nearest_int(y) : ifloor(y);
}

LawResult step_stage1(const FacetState& s)
{
    LawResult r;
    parallel_pinned_law(s, r);
    for (int i = 0; i < 4; ++i) r.beta_set[u(i)] = {0};
    r.xi = r.d.sum_beta() - 2 * r.d.sum_alpha();
    return r;
}

LawResult step_stage2(const FacetState& s)
{
    const auto L = s.core_lengths();
    if (!all_positive(L.P) || !all_positive(L.D)) throw std::invalid_argument("step_stage2: zero core length");
    const auto& p = s.params;
    LawResult r;
    for (int i = 0; i < 4; ++i) {
        const ScalarLaw a = stage2_alpha(L.P[u(i)], p.zeta, p.k, p.eps);
        const ScalarLaw b = stage2_beta(L.D[u(i)], p.zeta, p.k, p.eps);
        r.d.alpha[u(i)] = a.value;
        r.alpha_set[u(i)] = a.set;
        r.d.beta[u(i)] = b.value;
        r.beta_set[u(i)] = b.set;
        r.tie = r.tie || a.tie || b.tie;
    }
    r.xi = r.d.sum_beta() - 2 * r.d.sum_alpha();
    return r;
}

double stage3_objective(const Displacement& d, const std::array<double, 4>& D, const std::array<double, 4>& Pt,
                        const ModelParams& p, bool literal)
{
    const double w = literal ? p.eps / p.zeta : 1 / p.zeta;
    double F = 0;
    for (int i = 0; i < 4; ++i) {
        const double ai = static_cast<double>(d.alpha[u(i)]), bi = static_cast<double>(d.beta[u(i)]);
        F += 4 * (ai - bi);
        F += w * (D[u(i)] / kSqrt2) * bi * (bi + 1) / 2;
        F += w * Pt[u(i)] * ai * (ai + 1) / 2;
    }
    return F;
}

void stage3_fractions(const std::array<double, 4>& D, const std::array<double, 4>& Pt, i64 xi, const ModelParams& p,
                      std::array<double, 4>& af, std::array<double, 4>& bf)
{
    double SD = 0, SP = 0;
    for (int i = 0; i < 4; ++i) {
        SD += 1 / D[u(i)];
        SP += 1 / Pt[u(i)];
    }
    const double X = static_cast<double>(xi);
    for (int i = 0; i < 4; ++i) {
        af[u(i)] = (1 / Pt[u(i)]) * (4 + 4 * kSqrt2 * p.zeta * SD - X) / (kSqrt2 * SD + 4 * SP);
        bf[u(i)] = (1 / D[u(i)]) * (X - 2 + 8 * p.zeta * SP) / (SD + 2 * kSqrt2 * SP);
    }
}

LawResult stage3_sets(const std::array<double, 4>& D, const std::array<double, 4>& Pt, i64 xi, const ModelParams& p)
{
    LawResult r;
    r.xi = xi;
    if (!all_positive(D) || !all_positive(Pt)) {
        r.status = "error: stage3 infeasible";
        return r;
    }
    std::array<double, 4> af{}, bf{};
    stage3_fractions(D, Pt, xi, p, af, bf);
    for (int i = 0; i < 4; ++i) {
        r.alpha_set[u(i)] = pair_or_triple(af[u(i)], p.eps, r.tie);
        r.beta_set[u(i)] = pair_or_triple(bf[u(i)], p.eps, r.tie);
    }
    return r;
}

LawResult stage3_from_lengths(const std::array<double, 4>& D, const std::array<double, 4>& Pt, i64 C, i64 n_corner,
                              i64 ca, const ModelParams& p, bool literal)
{
    LawResult r;
    if (!all_positive(D) || !all_positive(Pt)) {
        r.status = "error: stage3 infeasible";
        return r;
    }
    const i64 xi_lo = -8 * ca;
    const i64 xi_hi = std::min<i64>(8 * ca, C - n_corner);
    auto fracs = [&](i64 xi, std::array<double, 4>& af, std::array<double, 4>& bf) {
        stage3_fractions(D, Pt, xi, p, af, bf);
    };
    bool found = false;
    double Fbest = std::numeric_limits<double>::infinity();
    for (i64 xi = xi_lo; xi <= xi_hi; ++xi) {
        std::array<double, 4> af{}, bf{};
        fracs(xi, af, bf);
        std::array<i64, 4> ra{}, rb{};
        for (int i = 0; i < 4; ++i) {
            ra[u(i)] = nearest_int(af[u(i)] - 0.5);
            rb[u(i)] = nearest_int(bf[u(i)] - 0.5);
        }
        for (int code = 0; code < 6561; ++code) {
            Displacement d;
            int c = code;
            bool ok = true;
            for (int i = 0; i < 4 && ok; ++i, c /= 3) ok = (d.alpha[u(i)] = ra[u(i)] + (c % 3) - 1) >= 0;
            for (int i = 0; i < 4 && ok; ++i, c /= 3) ok = (d.beta[u(i)] = rb[u(i)] + (c % 3) - 1) >= 0;
            if (!ok || d.sum_beta() - 2 * d.sum_alpha() != xi) continue;
            const double F = stage3_objective(d, D, Pt, p, literal);
            const bool better =
                !found || F < Fbest - kTol ||
                (std::abs(F - Fbest) <= kTol &&
                 std::make_tuple(d.sum_alpha(), d.sum_beta(), d.alpha, d.beta) <
                     std::make_tuple(r.d.sum_alpha(), r.d.sum_beta(), r.d.alpha, r.d.beta));
            if (better) {
                found = true;
                Fbest = F;
                r.d = d;
                r.xi = xi;
            }
        }
    }
    if (!found) {
        r.status = "error: stage3 infeasible";
        return r;
    }
    std::array<double, 4> af{}, bf{};
    fracs(r.xi, af, bf);
    for (int i = 0; i < 4; ++i) {
        r.alpha_set[u(i)] = pair_or_triple(af[u(i)], p.eps, r.tie);
        r.beta_set[u(i)] = pair_or_triple(bf[u(i)], p.eps, r.tie);
    }
    return r;
}

LawResult step_stage3(const FacetState& s)
{
    const auto L = s.lengths();
    const double cb = s.cbar_value();
    if (!s.geom.is_octagon() && std::any_of(L.D.begin(), L.D.end(), [&](double d) { return d < cb; })) {
        LawResult r;
        r.status = "error: stage3 on a quasi-octagon with a short diagonal";
        return r;
    }
    i64 NO = 0;
    for (i64 c : s.outer().cuts) NO += c;
    return stage3_from_lengths(L.D, s.core_lengths().P, s.C, NO, safe_c_alpha(s), s.params, s.stage3_literal);
}

LawResult step_null_diagonal(const FacetState& s, double ell)
{
    const auto& p = s.params;
    LawResult r;
    parallel_pinned_law(s, r);
    const auto L = s.lengths();
    const OctagonGeom G = s.outer();
    const i64 ca = safe_c_alpha(s);
    const auto& a = r.d.alpha;
    const i64 sa = r.d.sum_alpha();
    i64 N = 0;
    for (i64 c : G.cuts) N += c;

    // the clamp: beta below alpha_i + alpha_{i+1} - c_i leaves the new cut at 0
    std::array<i64, 4> lb{};
    std::vector<int> free_idx;
    for (int i = 0; i < 4; ++i) {
        lb[u(i)] = std::max<i64>(0, a[u(i)] + a[u(nx(i))] - G.cuts[u(i)]);
        r.d.beta[u(i)] = lb[u(i)];
        if (L.D[u(i)] < 16.0 * static_cast<double>(ca) * ell) free_idx.push_back(i);
    }
    i64 budget = 2 * sa;
    for (i64 v : lb) budget -= v;
    if (budget < 0) budget = 0;

    const double k = p.k;
    auto ez = [&](i64 Nn) {
        const i64 R = std::max<i64>(0, s.C - Nn);
        return -4 * k * static_cast<double>(std::min(s.C, Nn)) + static_cast<double>(R) * (1 - 3 * k) +
               (R > 0 ? (1 - k) : 0.0);
    };
    auto cost = [&](const std::array<i64, 4>& b) {
        double F = 0;
        i64 sb = 0;
        for (int i = 0; i < 4; ++i) {
            const double bi = static_cast<double>(b[u(i)]);
            F += (L.D[u(i)] / kSqrt2) * bi * (bi + 1) / (2 * p.zeta);
            sb += b[u(i)];
        }
        return F + ez(N + sb - 2 * sa);
    };
    auto new_cuts_sq = [&](const std::array<i64, 4>& b) {
        i64 q = 0;
        for (int i = 0; i < 4; ++i) {
            const i64 c = G.cuts[u(i)] + b[u(i)] - a[u(i)] - a[u(nx(i))];
            q += c * c;
        }
        return q;
    };

    std::array<i64, 4> best = r.d.beta;
    double Fb = cost(best);
    std::array<i64, 4> cur = best;
    std::function<void(std::size_t, i64)> rec = [&](std::size_t j, i64 left) {
        if (j == free_idx.size()) {
            const double F = cost(cur);
            const i64 sb = cur[0] + cur[1] + cur[2] + cur[3];
            const i64 sbb = best[0] + best[1] + best[2] + best[3];
            const bool better =
                F < Fb - kTol ||
                (std::abs(F - Fb) <= kTol &&
                 std::make_tuple(sb, new_cuts_sq(cur), cur) < std::make_tuple(sbb, new_cuts_sq(best), best));
            if (better) {
                best = cur;
                Fb = F;
            }
            return;
        }
        const auto i = u(free_idx[j]);
        for (i64 e = 0; e <= left; ++e) {
            cur[i] = lb[i] + e;
            rec(j + 1, left - e);
        }
        cur[i] = lb[i];
    };
    rec(0, budget);
    r.d.beta = best;
    for (int i = 0; i < 4; ++i) r.beta_set[u(i)] = {best[u(i)]};
    r.xi = r.d.sum_beta() - 2 * r.d.sum_alpha();
    return r;
}

LawResult step_gamma2(const FacetState& s)
{
    const auto& p = s.params;
    LawResult r;
    if (p.zeta < 1 / (2 - 2 * p.k)) {
        r.status = "delegated-out-of-scope";
        return r;
    }
    const auto L = s.lengths();
    for (int i = 0; i < 4; ++i) {
        const ScalarLaw a = gamma2_alpha(L.P[u(i)], p.zeta, p.k, p.eps);
        const ScalarLaw b = gamma2_beta(L.D[u(i)], p.zeta, p.k, p.eps);
        r.d.alpha[u(i)] = a.value;
        r.alpha_set[u(i)] = a.set;
        r.d.beta[u(i)] = b.value;
        r.beta_set[u(i)] = b.set;
        r.tie = r.tie || a.tie || b.tie;
    }
    r.xi = r.d.sum_beta() - 2 * r.d.sum_alpha();
    return r;
}

LengthUpdate predicted_lengths(const FacetState& s, const Displacement& d)
{
    const double e = s.params.eps;
    const auto L = s.lengths();
    LengthUpdate lu;
    for (int i = 0; i < 4; ++i) {
        const double ai = static_cast<double>(d.alpha[u(i)]);
        lu.formula.P[u(i)] = L.P[u(i)] + 2 * e * ai - e * static_cast<double>(d.beta[u(i)] + d.beta[u(pv(i))]);
        lu.formula.D[u(i)] = L.D[u(i)] + kSqrt2 * e * static_cast<double>(d.beta[u(i)]) -
                             kSqrt2 * e * static_cast<double>(d.alpha[u(i)] + d.alpha[u(nx(i))]);
    }
    const auto g = apply_displacement(s.outer(), d);
    if (!g) throw std::runtime_error("degenerate transition");
    lu.measured = side_lengths(*g, e);
    for (int i = 0; i < 4; ++i)
        if (lu.formula.P[u(i)] < -1e-12 || lu.formula.D[u(i)] < -1e-12) lu.rederived = true;
    return lu;
}

FacetState update_lengths(const FacetState& s, const Displacement& d, RegimeTag regime)
{
    const auto g = apply_displacement(s.outer(), d);
    if (!g) throw std::runtime_error("degenerate transition");
    FacetState t = s;
    t.geom = QuasiOctagonGeom{*g, {}};
    if (regime == RegimeTag::Gamma2Surrounded) t.C = boundary_count(*g);
    return t;
}

LawResult facet_law_step(const FacetState& s, const Regime& r)
{
    const auto& p = s.params;
    auto dispatch = [&](RegimeTag tag) -> LawResult {
        switch (tag) {
        case RegimeTag::Stage1Pinned: return step_stage1(s);
        case RegimeTag::Stage2SurfDependent: return step_stage2(s);
        case RegimeTag::Stage3Nonlocal: return step_stage3(s);
        case RegimeTag::NullDiagonal: {
            const double ell = kSqrt2 * p.eps * static_cast<double>(s.C + 8 * safe_c_alpha(s) + 2);
            return step_null_diagonal(s, ell);
        }
        case RegimeTag::Gamma2Surrounded: return step_gamma2(s);
        case RegimeTag::CompleteWetting: {
            LawResult lr;
            lr.status = "complete-wetting";
            return lr;
        }
        default: {
            LawResult lr;
            lr.status = "indeterminate";
            return lr;
        }
        }
    };
    if (r.tag == RegimeTag::Gamma2ReduceToSub2) {
        if (!r.sub) {
            LawResult lr;
            lr.status = "indeterminate";
            return lr;
        }
        return dispatch(*r.sub);
    }
    return dispatch(r.tag);
}

FacetTrajectory facet_trajectory(const FacetState& s0, std::size_t n_steps)
{
    s0.check();
    FacetTrajectory tr;
    FacetState s = s0;
    std::string prev;
    for (std::size_t j = 0; j < n_steps; ++j) {
        FacetStep st;
        st.state = s;
        st.regime = classify(s);
        std::string name = to_string(st.regime.tag);
        if (st.regime.sub) name += "/" + to_string(*st.regime.sub);
        if (name != prev) tr.transitions.emplace_back(j, name);
        prev = name;
        st.law = facet_law_step(s, st.regime);
        tr.steps.push_back(st);
        if (st.law.status != "ok") {
            tr.status = st.law.status;
            break;
        }
        try {
            s = update_lengths(s, st.law.d, st.regime.tag);
        } catch (const std::exception&) {
            tr.status = "collapsed";
            break;
        }
    }
    tr.final_state = s;
    return tr;
}

}  // namespace begflow
