#pragma once

#include "begflow/facet_law.hpp"
#include "begflow/lattice.hpp"

#include <array>
#include <string>
#include <vector>

namespace begflow {

// Physical octagon: bounding box lower-left corner plus the eight side lengths.
struct ContinuumState {
    std::array<double, 4> P{};
    std::array<double, 4> D{};
    std::array<double, 2> origin{0.0, 0.0};
    double lambda = 0.0;
    double k = 0.5;
    double zeta = 1.0;
    bool gamma2 = false;  // surrounded, gamma = 2 law
    double t = 0.0;

    double width() const;
    double height() const;
    // residuals of the two closure identities (zero for a closed octagon)
    std::array<double, 2> closure() const;
    double area() const;
    void validate() const;
};

ContinuumState continuum_from_geom(const OctagonGeom& g, double eps, double lambda, double k, double zeta);

enum class VelocityTag { PrePinned, SurfDependent, NegligibleSurf, Gamma2Surrounded };
std::string to_string(VelocityTag t);

// Selection inside the Stage 2 inclusion {floor, ceil}.
enum class Envelope { Floor, Ceil };

struct VelocityLaw {
    VelocityTag tag = VelocityTag::PrePinned;
    std::array<double, 4> vP{};
    std::array<double, 4> vD{};
    bool inclusion = false;  // some floor argument is an integer; the lower branch was taken
    std::array<double, 4> vP_upper{};
    std::array<double, 4> vD_upper{};
};

VelocityLaw velocities(const ContinuumState& s, Envelope env = Envelope::Floor);

// d/dt of (P, D) including the zero-length clamp on diagonals.
struct LengthRates {
    std::array<double, 4> dP{};
    std::array<double, 4> dD{};
    std::array<double, 4> vP{};  // support line speeds used for the origin
};
LengthRates length_rates(const ContinuumState& s, const VelocityLaw& v);

struct ContinuumEvent {
    double t = 0.0;
    std::string what;
};

struct ContinuumTrajectory {
    std::vector<ContinuumState> states;
    std::vector<VelocityTag> tags;  // velocity regime on [states[i].t, states[i+1].t)
    std::vector<ContinuumEvent> events;
    std::string status = "ok";  // ok | indeterminate | complete-wetting | extinct | error: ...
};

ContinuumTrajectory integrate(const ContinuumState& s0, double dt, double t_end, Envelope env = Envelope::Floor);

// State at time t by exact interpolation between recorded points (velocities are constant on
// each recorded interval). Clamped to the last state.
ContinuumState state_at(const ContinuumTrajectory& tr, double t);

// Lattice points eps Z^2 inside the octagon.
SiteSet rasterize_continuum(const ContinuumState& s, double eps);

struct ConvergenceRow {
    double eps = 0.0;
    i64 C = 0;
    std::size_t checkpoints = 0;
    i64 max_hausdorff = 0;  // lattice units
    double max_hausdorff_phys = 0.0;
    std::string facet_status;
};

struct ConvergenceReport {
    std::vector<ConvergenceRow> rows;
    std::string continuum_status;
    bool within_bound = true;  // every row <= bound_lattice lattice units
    bool monotone = true;      // physical distance nonincreasing up to a factor 2
};

// The facet flow at each eps starts from the rasterization of s0; C = round(lambda / eps).
ConvergenceReport convergence_check(const ContinuumState& s0, const std::vector<double>& eps_list, double t_end,
                                    i64 bound_lattice = 4);

void export_continuum_csv(const ContinuumTrajectory& tr, const std::string& path);

}  // namespace begflow
