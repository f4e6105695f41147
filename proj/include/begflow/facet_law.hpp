#pragma once

#include "begflow/energy.hpp"
#include "begflow/lattice.hpp"

#include <optional>
#include <string>
#include <vector>

namespace begflow {

struct Displacement {
    std::array<i64, 4> alpha{0, 0, 0, 0};
    std::array<i64, 4> beta{0, 0, 0, 0};
    i64 sum_alpha() const { return alpha[0] + alpha[1] + alpha[2] + alpha[3]; }
    i64 sum_beta() const { return beta[0] + beta[1] + beta[2] + beta[3]; }
    bool zero() const { return sum_alpha() == 0 && sum_beta() == 0; }
    bool operator==(const Displacement&) const = default;
};

// Moves the containing octagon: (alpha, beta) are inward shifts of the parallel and diagonal
// support lines. Cuts that would become negative are clamped to 0; the returned displacement
// is re-derived from the clamped geometry. nullopt if a derived side is negative.
std::optional<OctagonGeom> apply_displacement(const OctagonGeom& g, const Displacement& d);
// Displacement taking g to h (both containing octagons); beta may be re-derived from clamps.
Displacement displacement_between(const OctagonGeom& from, const OctagonGeom& to);

enum class RegimeTag {
    Stage1Pinned,
    Stage2SurfDependent,
    Stage3Nonlocal,
    NullDiagonal,
    CompleteWetting,
    Gamma2Surrounded,
    Gamma2ReduceToSub2,
    Indeterminate,
};
std::string to_string(RegimeTag t);
RegimeTag regime_from_string(const std::string& s);

struct Regime {
    RegimeTag tag = RegimeTag::Indeterminate;
    // witnessing quantities, lattice units unless noted
    i64 boundary_count = 0;      // #d+ I
    double surround_margin = 0;  // #d+ I - 8 eps^(mu-1) - C  (> 0 means not surrounded)
    double stage1_margin = 0;    // sum(D/(sqrt2 eps) - 2 c_alpha) - (C + 2)  (>= 0)
    double stage2_margin = 0;    // (C - 2) - sum(D/(sqrt2 eps) + beta_max - 2 alpha_min)  (>= 0)
    double stage3_upper = 0;     // C + 2 + 8 c_alpha - sum D/(sqrt2 eps)  (> 0)
    i64 diag_count = 0;          // sum D/(sqrt2 eps)
    i64 c_alpha = 0;
    double cbar = 0;
    bool long_diagonals = false;
    std::optional<RegimeTag> sub;  // gamma = 2 cells that reduce to the gamma < 2 analysis
    std::string note;
};

struct FacetState {
    QuasiOctagonGeom geom;
    i64 C = 0;
    ModelParams params;
    std::optional<double> lambda;
    double mu = 0.2;
    std::optional<double> cbar;  // default 0.5 sqrt2 zeta (1+k) / (8 c_alpha + 1)
    // Stage 3 objective: dissipation weighted eps/zeta against 4 sum(alpha - beta) as displayed,
    // instead of 1/zeta (both sides in units of eps).
    bool stage3_literal = false;

    OctagonGeom outer() const { return bounding_octagon(geom); }
    SideLengths lengths() const { return side_lengths(outer(), params.eps); }       // P_i, D_i
    SideLengths core_lengths() const { return side_lengths(geom.core, params.eps); }  // tilde
    double cbar_value() const;
    void check() const;          // throws on an invalid geometry or C < 0
    bool side_bound_ok() const;  // min P >= (1-k) zeta / (c_alpha + 1), reported only
};

FacetState make_state(const OctagonGeom& g, i64 C, const ModelParams& p);

i64 c_alpha(const FacetState& s);
i64 c_alpha_from(double zeta, double Pt_min);

struct AlphaBetaBounds {
    std::array<i64, 4> alpha_min{};
    std::array<i64, 4> beta_max{};
};
AlphaBetaBounds alpha_min_beta_max(const FacetState& s);

Regime classify(const FacetState& s);

// Output of a displacement law: the selected displacement, and per-index inclusion sets
// used when comparing against the oracle (selected values are always members).
struct LawResult {
    Displacement d;
    i64 xi = 0;
    std::array<std::vector<i64>, 4> alpha_set;
    std::array<std::vector<i64>, 4> beta_set;
    bool tie = false;
    std::string status = "ok";
};

// Per-side laws on physical lengths; set holds the displayed inclusion values.
struct ScalarLaw {
    i64 value = 0;
    std::vector<i64> set;
    bool tie = false;
};
ScalarLaw pinned_alpha(double P, double zeta, double eps);                // floor(4 zeta / P)
ScalarLaw stage2_alpha(double Pt, double zeta, double k, double eps);     // 2 zeta (1-k) / Pt
ScalarLaw stage2_beta(double Dt, double zeta, double k, double eps);      // sqrt2 zeta (1+k) / Dt
ScalarLaw gamma2_alpha(double P, double zeta, double k, double eps);      // 2 zeta (1-k) / P
ScalarLaw gamma2_beta(double D, double zeta, double k, double eps);       // (2 sqrt2 (1-k) zeta - sqrt2) / D
i64 alpha_min_value(double Pt, double zeta, double k, double eps);
i64 beta_max_value(double Dt, double zeta, double k, double eps);

// Stage 3 on explicit lengths: D outer diagonals, Pt core parallel sides, n_corner = #O.
LawResult stage3_from_lengths(const std::array<double, 4>& D, const std::array<double, 4>& Pt, i64 C, i64 n_corner,
                              i64 c_alpha, const ModelParams& p, bool literal = false);
// Inclusion sets of the Stage 3 formulas evaluated at a given xi.
LawResult stage3_sets(const std::array<double, 4>& D, const std::array<double, 4>& Pt, i64 xi, const ModelParams& p);
double stage3_objective(const Displacement& d, const std::array<double, 4>& D, const std::array<double, 4>& Pt,
                        const ModelParams& p, bool literal = false);

LawResult step_stage1(const FacetState& s);
LawResult step_stage2(const FacetState& s);
LawResult step_stage3(const FacetState& s);
LawResult step_null_diagonal(const FacetState& s, double ell);
LawResult step_gamma2(const FacetState& s);

// Closed-form length update next to the lengths measured on the moved geometry; the
// measured ones are used whenever the formula would give a negative length.
struct LengthUpdate {
    SideLengths formula;
    SideLengths measured;
    bool rederived = false;
};
LengthUpdate predicted_lengths(const FacetState& s, const Displacement& d);
FacetState update_lengths(const FacetState& s, const Displacement& d, RegimeTag regime);

struct FacetStep {
    FacetState state;  // state before the step
    Regime regime;
    LawResult law;
};

struct FacetTrajectory {
    std::vector<FacetStep> steps;
    FacetState final_state;
    std::string status = "ok";  // ok | indeterminate | complete-wetting | delegated-out-of-scope | error: ...
    std::vector<std::pair<std::size_t, std::string>> transitions;
};

// Dispatches one step for a classified state.
LawResult facet_law_step(const FacetState& s, const Regime& r);
FacetTrajectory facet_trajectory(const FacetState& s0, std::size_t n_steps);

// Octagon with the given lattice side counts (P_i / eps, D_i / (sqrt2 eps)); nullopt if the
// counts do not close up.
std::optional<OctagonGeom> octagon_from_counts(const std::array<i64, 4>& P, const std::array<i64, 4>& D,
                                               Site anchor = {0, 0});

// Helpers shared with the oracle comparison.
double dist_to_int(double x);
i64 nearest_int(double x);

}  // namespace begflow
