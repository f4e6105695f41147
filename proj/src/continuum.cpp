#include "begflow/continuum.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace begflow {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr double kZero = 1e-12;
constexpr std::size_t kMaxEvents = 20000;

std::size_t u(int i) { return static_cast<std::size_t>(i); }

// floor with the lower branch at integer arguments
double lower_floor(double x, bool& at_int)
{
    const double n = std::round(x);
    if (std::abs(x - n) < 1e-12) {
        at_int = true;
        return std::max(0.0, n - 1);
    }
    return std::max(0.0, std::floor(x));
}

struct Signature {
    int tag = 0;
    std::array<double, 4> a{};
    std::array<double, 4> b{};
    unsigned zeros = 0;
    bool operator==(const Signature&) const = default;
};

struct Evaluated {
    VelocityLaw v;
    std::string halt;  // non-empty when no law applies
};

Evaluated evaluate(const ContinuumState& s, Envelope env)
{
    Evaluated e;
    try {
        e.v = velocities(s, env);
    } catch (const std::domain_error& ex) {
        e.halt = ex.what();
    }
    return e;
}

Signature signature(const ContinuumState& s, const Evaluated& e)
{
    Signature g;
    g.tag = e.halt.empty() ? static_cast<int>(e.v.tag) : -1;
    g.a = e.v.vP;
    g.b = e.v.vD;
    for (int i = 0; i < 4; ++i) {
        if (s.P[u(i)] <= kZero) g.zeros |= 1U << i;
        if (s.D[u(i)] <= kZero) g.zeros |= 1U << (i + 4);
    }
    return g;
}

ContinuumState advance(const ContinuumState& s, const LengthRates& r, double h)
{
    ContinuumState t = s;
    for (int i = 0; i < 4; ++i) {
        t.P[u(i)] = std::max(0.0, s.P[u(i)] + h * r.dP[u(i)]);
        t.D[u(i)] = std::max(0.0, s.D[u(i)] + h * r.dD[u(i)]);
        if (t.P[u(i)] < kZero) t.P[u(i)] = 0;
        if (t.D[u(i)] < kZero) t.D[u(i)] = 0;
    }
    t.origin[0] = s.origin[0] + h * r.vP[1];
    t.origin[1] = s.origin[1] + h * r.vP[0];
    t.t = s.t + h;
    return t;
}

std::string describe(const Signature& a, const Signature& b)
{
    if (a.tag != b.tag) return "regime change";
    if (a.zeros != b.zeros) return "length reaches zero";
    return "velocity jump";
}

}  // namespace

double ContinuumState::width() const { return P[0] + (D[0] + D[3]) / kSqrt2; }
double ContinuumState::height() const { return P[1] + (D[0] + D[1]) / kSqrt2; }

std::array<double, 2> ContinuumState::closure() const
{
    return {P[0] + (D[0] + D[3]) / kSqrt2 - P[2] - (D[1] + D[2]) / kSqrt2,
            P[1] + (D[0] + D[1]) / kSqrt2 - P[3] - (D[2] + D[3]) / kSqrt2};
}

double ContinuumState::area() const
{
    double a = width() * height();
    for (double d : D) a -= d * d / 4;  // each corner triangle has legs d / sqrt2
    return a;
}

void ContinuumState::validate() const
{
    for (int i = 0; i < 4; ++i)
        if (P[u(i)] < 0 || D[u(i)] < 0) throw std::invalid_argument("negative length");
    const auto c = closure();
    if (std::abs(c[0]) > 1e-9 || std::abs(c[1]) > 1e-9) throw std::invalid_argument("octagon does not close");
    if (lambda < 0 || zeta <= 0) throw std::invalid_argument("invalid continuum parameters");
}

ContinuumState continuum_from_geom(const OctagonGeom& g, double eps, double lambda, double k, double zeta)
{
    ContinuumState s;
    const SideLengths L = side_lengths(g, eps);
    s.P = L.P;
    s.D = L.D;
    s.origin = {eps * static_cast<double>(g.anchor.x), eps * static_cast<double>(g.anchor.y)};
    s.lambda = lambda;
    s.k = k;
    s.zeta = zeta;
    return s;
}

std::string to_string(VelocityTag t)
{
    switch (t) {
    case VelocityTag::PrePinned: return "PrePinned";
    case VelocityTag::SurfDependent: return "SurfDependent";
    case VelocityTag::NegligibleSurf: return "NegligibleSurf";
    case VelocityTag::Gamma2Surrounded: return "Gamma2Surrounded";
    }
    return "PrePinned";
}

VelocityLaw velocities(const ContinuumState& s, Envelope env)
{
    for (double p : s.P)
        if (p <= 0) throw std::domain_error("side collapse");
    const double z = s.zeta, k = s.k;
    VelocityLaw v;
    double diag = 0, perim = 0;
    for (int i = 0; i < 4; ++i) {
        diag += s.D[u(i)] / kSqrt2;
        perim += s.P[u(i)];
    }
    bool at = false;
    auto fl = [&](double x, double& upper) {
        bool here = false;
        const double r = lower_floor(x, here);
        upper = here ? r + 1 : r;
        at = at || here;
        return r;
    };
    if (s.gamma2) {
        v.tag = VelocityTag::Gamma2Surrounded;
        for (int i = 0; i < 4; ++i) {
            double up = 0;
            v.vP[u(i)] = fl(2 * z * (1 - k) / s.P[u(i)], up) / z;
            v.vP_upper[u(i)] = up / z;
            const double D = s.D[u(i)];
            const double y = D > 0 ? (2 * kSqrt2 * (1 - k) * z - kSqrt2) / D : 0.0;
            if (D > 0 && y > 0) {
                v.vD[u(i)] = kSqrt2 / (2 * z) * fl(y, up);
                v.vD_upper[u(i)] = kSqrt2 / (2 * z) * up;
            }
        }
        v.inclusion = at;
        return v;
    }
    if (s.lambda == 0 || s.lambda < diag - 1e-12) {
        v.tag = s.lambda == 0 ? VelocityTag::NegligibleSurf : VelocityTag::PrePinned;
        for (int i = 0; i < 4; ++i) {
            double up = 0;
            v.vP[u(i)] = fl(4 * z / s.P[u(i)], up) / z;
            v.vP_upper[u(i)] = up / z;
        }
        v.inclusion = at;
        return v;
    }
    if (std::abs(s.lambda - diag) <= 1e-12) throw std::domain_error("indeterminate");
    if (s.lambda >= diag + perim) throw std::domain_error("complete-wetting");
    v.tag = VelocityTag::SurfDependent;
    for (int i = 0; i < 4; ++i) {
        const double x = 2 * z * (1 - k) / s.P[u(i)];
        double up = 0;
        if (env == Envelope::Floor) {
            v.vP[u(i)] = fl(x, up) / z;
            v.vP_upper[u(i)] = std::ceil(x) / z;
        } else {
            v.vP[u(i)] = std::ceil(x - 1e-12) / z;
            v.vP_upper[u(i)] = v.vP[u(i)];
            if (dist_to_int(x) < 1e-12) at = true;
        }
        const double D = s.D[u(i)];
        if (D <= 0) throw std::domain_error("diagonal collapse");
        v.vD[u(i)] = kSqrt2 / (2 * z) * fl(kSqrt2 * z * (1 + k) / D, up);
        v.vD_upper[u(i)] = kSqrt2 / (2 * z) * up;
    }
    v.inclusion = at;
    return v;
}

LengthRates length_rates(const ContinuumState& s, const VelocityLaw& v)
{
    LengthRates r;
    std::array<double, 4> vD = v.vD;
    for (int i = 0; i < 4; ++i) {
        const int n = (i + 1) % 4;
        const double dD = 2 * vD[u(i)] - kSqrt2 * (v.vP[u(i)] + v.vP[u(n)]);
        // a vanished diagonal stays at zero: its corner is cut at the rate of the two sides
        if (s.D[u(i)] <= kZero && dD < 0) vD[u(i)] = (v.vP[u(i)] + v.vP[u(n)]) / kSqrt2;
    }
    for (int i = 0; i < 4; ++i) {
        const int n = (i + 1) % 4, p = (i + 3) % 4;
        r.dP[u(i)] = 2 * v.vP[u(i)] - kSqrt2 * (vD[u(i)] + vD[u(p)]);
        r.dD[u(i)] = 2 * vD[u(i)] - kSqrt2 * (v.vP[u(i)] + v.vP[u(n)]);
    }
    r.vP = v.vP;
    return r;
}

ContinuumTrajectory integrate(const ContinuumState& s0, double dt, double t_end, Envelope env)
{
    if (!(dt > 0)) throw std::invalid_argument("dt must be positive");
    s0.validate();
    ContinuumTrajectory tr;
    ContinuumState s = s0;
    tr.states.push_back(s);
    auto halt = [&](const std::string& st) {
        tr.status = st;
        tr.events.push_back({s.t, st});
    };
    while (s.t < t_end - 1e-15) {
        Evaluated e0 = evaluate(s, env);
        if (!e0.halt.empty()) {
            double amin = 0;
            for (double p : s.P) amin = std::max(amin, p);
            halt(e0.halt == "side collapse" && (s.area() <= 1e-12 || amin <= 1e-9) ? "extinct" : e0.halt);
            break;
        }
        // the velocity used on the open interval is the right limit
        LengthRates r = length_rates(s, e0.v);
        const double eta = 1e-10 * std::max(dt, 1e-6);
        ContinuumState probe = advance(s, r, eta);
        Evaluated ep = evaluate(probe, env);
        if (ep.halt.empty()) {
            const Signature s0g = signature(s, e0), spg = signature(probe, ep);
            if (!(s0g == spg)) {
                r = length_rates(probe, ep.v);
                e0 = ep;
            }
        } else if (ep.halt == "side collapse") {
            halt("extinct");
            break;
        }
        const Signature sig = signature(advance(s, r, eta), e0);
        const double h = std::min(dt, t_end - s.t);
        ContinuumState end = advance(s, r, h);
        const Evaluated ee = evaluate(end, env);
        const Signature se = signature(end, ee);
        if (ee.halt.empty() && se == sig) {
            s = end;
            tr.tags.push_back(e0.v.tag);
            tr.states.push_back(s);
            continue;
        }
        double lo = eta, hi = h;
        for (int it = 0; it < 200 && hi - lo > 1e-14 * std::max(1.0, h); ++it) {
            const double mid = 0.5 * (lo + hi);
            const ContinuumState m = advance(s, r, mid);
            const Evaluated em = evaluate(m, env);
            if (em.halt.empty() && signature(m, em) == sig)
                lo = mid;
            else
                hi = mid;
        }
        const ContinuumState next = advance(s, r, hi);
        const Evaluated en = evaluate(next, env);
        tr.tags.push_back(e0.v.tag);
        s = next;
        tr.states.push_back(s);
        if (!en.halt.empty()) {
            double pmax = 0;
            for (double p : s.P) pmax = std::max(pmax, p);
            halt(en.halt == "side collapse" && (s.area() <= 1e-12 || pmax <= 1e-9) ? "extinct"
                                                                                   : en.halt);
            break;
        }
        const Signature sn = signature(s, en);
        const bool regime = sn.tag != sig.tag;
        if (regime && (e0.v.tag == VelocityTag::PrePinned || en.v.tag == VelocityTag::PrePinned) &&
            (e0.v.tag == VelocityTag::SurfDependent || en.v.tag == VelocityTag::SurfDependent)) {
            halt("indeterminate");
            break;
        }
        tr.events.push_back({s.t, describe(sig, sn)});
        if (tr.events.size() > kMaxEvents) {
            double pmax = 0;
            for (double p : s.P) pmax = std::max(pmax, p);
            halt(pmax < 1e-3 ? "extinct" : "error: too many events");
            break;
        }
        const auto c = s.closure();
        if (std::abs(c[0]) > 1e-9 || std::abs(c[1]) > 1e-9) {
            halt("error: closure violated");
            break;
        }
    }
    return tr;
}

ContinuumState state_at(const ContinuumTrajectory& tr, double t)
{
    if (tr.states.empty()) throw std::invalid_argument("empty continuum trajectory");
    if (t <= tr.states.front().t) return tr.states.front();
    if (t >= tr.states.back().t) return tr.states.back();
    auto it = std::upper_bound(tr.states.begin(), tr.states.end(), t,
                               [](double x, const ContinuumState& s) { return x < s.t; });
    const ContinuumState& b = *it;
    const ContinuumState& a = *(it - 1);
    const double span = b.t - a.t;
    const double w = span > 0 ? (t - a.t) / span : 0.0;
    ContinuumState s = a;
    for (int i = 0; i < 4; ++i) {
        s.P[u(i)] = a.P[u(i)] + w * (b.P[u(i)] - a.P[u(i)]);
        s.D[u(i)] = a.D[u(i)] + w * (b.D[u(i)] - a.D[u(i)]);
    }
    for (int j = 0; j < 2; ++j) s.origin[u(j)] = a.origin[u(j)] + w * (b.origin[u(j)] - a.origin[u(j)]);
    s.t = t;
    return s;
}

SiteSet rasterize_continuum(const ContinuumState& s, double eps)
{
    SiteSet out;
    const double tol = 1e-9;
    const double x0 = s.origin[0] / eps, y0 = s.origin[1] / eps;
    const double x1 = x0 + s.width() / eps, y1 = y0 + s.height() / eps;
    std::array<double, 4> c{};
    for (int i = 0; i < 4; ++i) c[u(i)] = s.D[u(i)] / kSqrt2 / eps;
    for (auto y = static_cast<i64>(std::ceil(y0 - tol)); static_cast<double>(y) <= y1 + tol; ++y)
        for (auto x = static_cast<i64>(std::ceil(x0 - tol)); static_cast<double>(x) <= x1 + tol; ++x) {
            const double X = static_cast<double>(x), Y = static_cast<double>(y);
            if ((X - x0) + (Y - y0) < c[0] - tol) continue;
            if ((X - x0) + (y1 - Y) < c[1] - tol) continue;
            if ((x1 - X) + (y1 - Y) < c[2] - tol) continue;
            if ((x1 - X) + (Y - y0) < c[3] - tol) continue;
            out.insert({x, y});
        }
    return out;
}

ConvergenceReport convergence_check(const ContinuumState& s0, const std::vector<double>& eps_list, double t_end,
                                    i64 bound_lattice)
{
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw std::invalid_argument("eps_list must be decreasing");
    ConvergenceReport rep;
    const ContinuumTrajectory ct = integrate(s0, t_end / 1000.0, t_end);
    rep.continuum_status = ct.status;
    rep.rows.resize(eps_list.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::size_t e = 0; e < eps_list.size(); ++e) {
        const double eps = eps_list[e];
        ConvergenceRow& row = rep.rows[e];
        row.eps = eps;
        row.C = static_cast<i64>(std::llround(s0.lambda / eps));
        OctagonGeom g;
        g.anchor = {static_cast<i64>(std::llround(s0.origin[0] / eps)), static_cast<i64>(std::llround(s0.origin[1] / eps))};
        g.width = static_cast<i64>(std::llround(s0.width() / eps));
        g.height = static_cast<i64>(std::llround(s0.height() / eps));
        for (int i = 0; i < 4; ++i) g.cuts[u(i)] = static_cast<i64>(std::llround(s0.D[u(i)] / kSqrt2 / eps));
        ModelParams p;
        p.eps = eps;
        p.zeta = s0.zeta;
        p.k = s0.k;
        p.gamma = s0.gamma2 ? 2.0 : 1.0;
        FacetState fs = make_state(g, row.C, p);
        fs.lambda = s0.lambda;
        const double tau = p.tau();
        const auto n = static_cast<std::size_t>(std::floor(t_end / tau + 1e-9));
        const FacetTrajectory ft = facet_trajectory(fs, n);
        row.facet_status = ft.status;
        std::vector<FacetState> states;
        for (const auto& st : ft.steps) states.push_back(st.state);
        states.push_back(ft.final_state);
        if (ft.status != "ok" && !ft.steps.empty()) states.pop_back();  // the failed step did not move
        for (std::size_t j = 0; j < states.size(); ++j) {
            const double t = static_cast<double>(j) * tau;
            if (t > t_end + 1e-12) break;
            if (t > ct.states.back().t + 1e-12) break;  // continuum flow halted
            const SiteSet A = rasterize(states[j].geom);
            const SiteSet B = rasterize_continuum(state_at(ct, t), eps);
            if (A.empty() || B.empty()) break;
            row.max_hausdorff = std::max(row.max_hausdorff, hausdorff(A, B));
            ++row.checkpoints;
        }
        row.max_hausdorff_phys = eps * static_cast<double>(row.max_hausdorff);
    }
    for (std::size_t e = 0; e < rep.rows.size(); ++e) {
        if (rep.rows[e].max_hausdorff > bound_lattice) rep.within_bound = false;
        if (e > 0 && rep.rows[e].max_hausdorff_phys > 2 * rep.rows[e - 1].max_hausdorff_phys + 1e-12)
            rep.monotone = false;
    }
    return rep;
}

void export_continuum_csv(const ContinuumTrajectory& tr, const std::string& path)
{
    if (tr.states.empty()) throw std::invalid_argument("empty continuum trajectory");
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << "t,P1,P2,P3,P4,D1,D2,D3,D4,regime,event\n";
    f << std::setprecision(12);
    std::size_t ev = 0;
    for (std::size_t i = 0; i < tr.states.size(); ++i) {
        const auto& s = tr.states[i];
        f << s.t;
        for (double p : s.P) f << ',' << p;
        for (double d : s.D) f << ',' << d;
        f << ',' << (i < tr.tags.size() ? to_string(tr.tags[i]) : (i > 0 ? to_string(tr.tags[i - 1]) : ""));
        std::string flag;
        while (ev < tr.events.size() && tr.events[ev].t <= s.t + 1e-15) {
            if (!flag.empty()) flag += ';';
            flag += tr.events[ev].what;
            ++ev;
        }
        f << ',' << flag << '\n';
    }
}

}  // namespace begflow
