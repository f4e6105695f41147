#pragma once

#include "begflow/energy.hpp"
#include "begflow/lattice.hpp"

namespace begflow {

// Energy change (in units of eps) of turning the -1 sites of Z into 0 next to the phase set I:
// sum_p (4(1-k) - 2 m_p) - (1-k) n_zz.
double surfactant_energy(const SiteSet& I, const SiteSet& Z, double k);

// Exact minimum of surfactant_energy over |Z| = C with Z inside the exterior boundary
// (path dynamic program over the components of the exterior boundary). For C above the
// boundary size the boundary is filled and the rest is placed greedily on the next ring.
struct SurfactantMin {
    double energy = 0.0;  // units of eps
    bool exact = true;
};
SurfactantMin surfactant_min_energy(const SiteSet& I, i64 C, double k);

// Fill O first, then contiguous runs on the sides starting at the ends next to the corners,
// then the second ring; ties broken lexicographically.
SiteSet canonical_surfactant(const SiteSet& I, i64 C, double k);

// Exhaustive minimum over all C-subsets of the exterior boundary (small instances only).
double surfactant_bruteforce_energy(const SiteSet& I, i64 C, double k);

}  // namespace begflow
