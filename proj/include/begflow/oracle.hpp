#pragma once

#include "begflow/energy.hpp"
#include "begflow/facet_law.hpp"
#include "begflow/lattice.hpp"
#include "begflow/surfactant.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace begflow {

// Negative values select the defaults (A = B = c_alpha + 2, defect_span = longest side,
// unbounded surfactant range for gamma = 2).
struct SearchBudget {
    i64 max_parallel_shift = -1;
    i64 max_diag_shift = -1;
    i64 defect_span = -1;
    bool defects = true;
    i64 surf_range = -1;
    int local_search_restarts = 6;
    int local_search_steps = 400;
    int threads = 0;  // 0: OpenMP default, 1: serial reference path
};

enum class StepMethod { Parametric, LocalSearch };
std::string to_string(StepMethod m);

struct StepResult {
    SpinConfig config;
    double functional_value = 0.0;
    i64 candidate_count = 0;
    StepMethod method = StepMethod::Parametric;

    // bookkeeping filled by parametric_step
    std::optional<QuasiOctagonGeom> geom;
    OctagonGeom outer;
    Displacement disp;
    double energy = 0.0;
    double diss1 = 0.0;  // D^1 / tau
    double diss0 = 0.0;  // eps^gamma D^0 / tau
    double fast_value = 0.0;
    bool fast_mismatch = false;
    std::size_t tie_count = 1;
    std::vector<Displacement> ties;  // displacements of tied optima (first = selected)
};

struct ResolvedBudget {
    i64 A = 0, B = 0, span = 0, surf_range = 0;
};
ResolvedBudget resolve_budget(const SpinConfig& u, const ModelParams& p, const SearchBudget& b);

StepResult parametric_step(const SpinConfig& u, const ModelParams& p, const SearchBudget& b);
// Reference: every candidate and every trim decoration rasterized and evaluated exactly.
StepResult parametric_step_naive(const SpinConfig& u, const ModelParams& p, const SearchBudget& b);

// Starts from `start` (usually the parametric optimum) and from u; when start is null the
// parametric optimum is computed when possible.
StepResult flip_local_search(const SpinConfig& u, const ModelParams& p, const SearchBudget& b, std::uint64_t seed,
                             const SpinConfig* start = nullptr);

struct MMTrajectory {
    SpinConfig initial;
    std::vector<StepResult> steps;
    std::string status = "ok";  // ok | collapsed | complete-wetting | error: ...
};

MMTrajectory minimizing_movement(const SpinConfig& u0, const ModelParams& p, std::size_t n_steps,
                                 const SearchBudget& b);

}  // namespace begflow
