#include "begflow/energy.hpp"

#include <cmath>

namespace begflow {

void ModelParams::validate() const
{
    if (!(eps > 0)) throw std::invalid_argument("eps must be positive");
    if (!(zeta > 0)) throw std::invalid_argument("zeta must be positive");
    if (!(k > 1.0 / 3.0 && k < 1.0)) throw std::invalid_argument("k must lie in (1/3, 1)");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
}

namespace {

// Bond (p,q) is visited from both endpoints when both are non-background; count it from the smaller one.
inline void bond_terms(const SpinConfig& cfg, const Site& p, int up, i64& pm, i64& zero)
{
    for (const auto& q : neighbors(p)) {
        const int uq = cfg.value(q);
        if (uq != -1 && q < p) continue;
        if (up == 0 || uq == 0)
            ++zero;
        else if (up * uq == -1)
            ++pm;
    }
}

EnergyBreakdown finish(i64 pm, i64 zero, const ModelParams& p)
{
    EnergyBreakdown e;
    e.n_pm_bonds = pm;
    e.n_zero_bonds = zero;
    e.total = p.eps * (2.0 * static_cast<double>(pm) + (1.0 - p.k) * static_cast<double>(zero));
    return e;
}

std::vector<std::pair<Site, int>> active_sites(const SpinConfig& cfg)
{
    std::vector<std::pair<Site, int>> v;
    v.reserve(cfg.ones.size() + cfg.zeros.size());
    for (const auto& s : cfg.ones) v.emplace_back(s, 1);
    for (const auto& s : cfg.zeros) v.emplace_back(s, 0);
    return v;
}

}  // namespace

EnergyBreakdown beg_energy_serial(const SpinConfig& cfg, const ModelParams& p)
{
    i64 pm = 0, zero = 0;
    for (const auto& [s, u] : active_sites(cfg)) bond_terms(cfg, s, u, pm, zero);
    return finish(pm, zero, p);
}

EnergyBreakdown beg_energy(const SpinConfig& cfg, const ModelParams& p)
{
    const auto sites = active_sites(cfg);
    i64 pm = 0, zero = 0;
    const auto n = static_cast<std::ptrdiff_t>(sites.size());
#pragma omp parallel for reduction(+ : pm, zero) schedule(static) if (n > 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& [s, u] = sites[static_cast<std::size_t>(i)];
        bond_terms(cfg, s, u, pm, zero);
    }
    return finish(pm, zero, p);
}

double dissipation_phase(const SiteSet& I_new, const SiteSet& I_old, const ModelParams& p)
{
    if (I_old.empty()) throw std::invalid_argument("empty set distance");
    Box w = box_union(bounding_box(I_old), bounding_box(I_new)).padded(1);
    Grid dist = boundary_distance_map(I_old, w);
    i64 sum = 0;
    for (const auto& s : I_new)
        if (!I_old.contains(s)) sum += dist.at(s);
    for (const auto& s : I_old)
        if (!I_new.contains(s)) sum += dist.at(s);
    return p.eps * p.eps * p.eps * static_cast<double>(sum);
}

double dissipation_phase_bruteforce(const SiteSet& I_new, const SiteSet& I_old, const ModelParams& p)
{
    if (I_old.empty()) throw std::invalid_argument("empty set distance");
    i64 sum = 0;
    for (const auto& s : I_new)
        if (!I_old.contains(s)) sum += d1_boundary(s, I_old);
    for (const auto& s : I_old)
        if (!I_new.contains(s)) sum += d1_boundary(s, I_old);
    return p.eps * p.eps * p.eps * static_cast<double>(sum);
}

i64 dissipation_surf(const SiteSet& Z_new, const SiteSet& Z_old)
{
    return dissipation_surf(static_cast<i64>(Z_new.size()), static_cast<i64>(Z_old.size()));
}

i64 dissipation_surf(i64 n_new, i64 n_old) { return n_new > n_old ? n_new - n_old : n_old - n_new; }

double total_functional(const SpinConfig& u_new, const SpinConfig& u_old, const ModelParams& p)
{
    const double e = beg_energy(u_new, p).total;
    const double d1v = dissipation_phase(u_new.ones, u_old.ones, p);
    const double d0 = static_cast<double>(dissipation_surf(u_new.zeros, u_old.zeros));
    return e + (d1v + std::pow(p.eps, p.gamma) * d0) / p.tau();
}

i64 exposed_edges(const SiteSet& I)
{
    i64 n = 0;
    for (const auto& s : I)
        for (const auto& q : neighbors(s))
            if (!I.contains(q)) ++n;
    return n;
}

double perimeter(const SiteSet& I, double eps)
{
    if (I.empty()) return 0.0;
    if (is_staircase(I)) {
        auto s = slices(I);
        return 2.0 * eps * static_cast<double>(s.n_h() + s.n_v());
    }
    return eps * static_cast<double>(exposed_edges(I));
}

double surface_tension(const std::array<double, 2>& nu, double k)
{
    const double n = std::hypot(nu[0], nu[1]);
    if (std::abs(n - 1.0) > 1e-9) throw std::invalid_argument("surface_tension: nu must be a unit vector");
    const double a = std::abs(nu[0]), b = std::abs(nu[1]);
    return (1.0 - k) * (3.0 * std::max(a, b) + std::min(a, b));
}

bool energy_identity_check(const SpinConfig& cfg, const ModelParams& p)
{
    if (!recognize_quasi_octagon(cfg.ones)) throw std::invalid_argument("energy identity: ones is not a quasi-octagon");
    const auto corners = corner_sets(cfg.ones);
    for (const auto& z : cfg.zeros)
        if (!corners.outer.contains(z)) throw std::invalid_argument("energy identity: zeros not inside the outer corner set");
    const double C = static_cast<double>(cfg.zeros.size());
    const double rhs = 2.0 * perimeter(cfg.ones, p.eps) + 4.0 * p.eps * (1.0 - p.k) * C - 4.0 * p.eps * C;
    return std::abs(beg_energy(cfg, p).total - rhs) < 1e-9;
}

}  // namespace begflow
