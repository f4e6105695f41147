#pragma once

#include "begflow/lattice.hpp"

#include <array>

namespace begflow {

struct ModelParams {
    double eps = 0.1;
    double zeta = 1.0;
    double k = 0.5;
    double gamma = 1.0;
    void validate() const;
    double tau() const { return zeta * eps; }
};

struct EnergyBreakdown {
    double total = 0.0;
    i64 n_pm_bonds = 0;
    i64 n_zero_bonds = 0;
};

EnergyBreakdown beg_energy(const SpinConfig& cfg, const ModelParams& p);
EnergyBreakdown beg_energy_serial(const SpinConfig& cfg, const ModelParams& p);

// Sum over I_new symmetric-difference I_old of eps^3 * d1_boundary(p, I_old).
double dissipation_phase(const SiteSet& I_new, const SiteSet& I_old, const ModelParams& p);
double dissipation_phase_bruteforce(const SiteSet& I_new, const SiteSet& I_old, const ModelParams& p);
i64 dissipation_surf(const SiteSet& Z_new, const SiteSet& Z_old);
i64 dissipation_surf(i64 n_new, i64 n_old);

double total_functional(const SpinConfig& u_new, const SpinConfig& u_old, const ModelParams& p);

// Exposed cell edges times eps.
double perimeter(const SiteSet& I, double eps);
i64 exposed_edges(const SiteSet& I);

double surface_tension(const std::array<double, 2>& nu, double k);

// Throws when ones is not a quasi-octagon or zeros is not inside the outer corner set.
bool energy_identity_check(const SpinConfig& cfg, const ModelParams& p);

}  // namespace begflow
