#pragma once

#include "begflow/continuum.hpp"
#include "begflow/facet_law.hpp"
#include "begflow/oracle.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace begflow {

enum class RunMode { Oracle, Facet, Continuum, Compare, Scenario };
std::string to_string(RunMode m);

// Invalid configuration; field names the offending key.
struct ConfigError : std::runtime_error {
    std::string field;
    ConfigError(std::string f, const std::string& msg) : std::runtime_error(f + ": " + msg), field(std::move(f)) {}
};

// Lengths are physical; the lattice is derived from eps.
struct RunConfig {
    RunMode mode = RunMode::Facet;
    ModelParams params;
    double width = 0, height = 0;
    std::array<double, 4> cuts{};  // cut depths, D_i / sqrt2
    Site anchor{0, 0};
    std::optional<i64> count;
    std::optional<double> lambda;
    std::size_t steps = 10;
    double t_end = 1.0;
    double dt = 0.01;
    std::uint64_t seed = 0;
    SearchBudget budget;
    bool local_search_check = false;
    bool stage3_literal = false;
    Envelope envelope = Envelope::Floor;
    std::string output = "begflow_out";
    std::string scenario;
    std::vector<double> eps_list;

    OctagonGeom lattice_geometry() const;  // throws ConfigError when lengths are off the lattice
    i64 surfactant_count() const;          // count, or round(lambda / eps)
    RunConfig at_eps(double eps) const;
    void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& c);

// Physical description of a lattice octagon.
void set_geometry(RunConfig& c, const OctagonGeom& g);

struct TrajectoryRow {
    i64 step = 0;
    double t = 0;
    std::array<double, 4> P{};
    std::array<double, 4> D{};
    i64 C = 0;
    std::string regime;
    std::array<i64, 4> alpha{};
    std::array<i64, 4> beta{};
    i64 xi = 0;
    double energy = 0, diss1 = 0, diss0 = 0, F = 0;
    bool operator==(const TrajectoryRow&) const = default;
};

struct TrajectoryRecord {
    std::string source;  // oracle | facet | continuum
    std::string status = "ok";
    std::vector<TrajectoryRow> rows;
    bool operator==(const TrajectoryRecord&) const = default;
};

extern const char* const kCsvHeader;

void export_csv(const TrajectoryRecord& tr, const std::string& path);
void export_jsonl(const TrajectoryRecord& tr, const std::string& path);
TrajectoryRecord read_jsonl(const std::string& path);

TrajectoryRecord record_from_oracle(const MMTrajectory& mm, const ModelParams& p);
TrajectoryRecord record_from_facet(const FacetTrajectory& ft);
TrajectoryRecord record_from_continuum(const ContinuumTrajectory& ct);

enum class Verdict { Match, InInclusionSet, Mismatch, Skipped };
std::string to_string(Verdict v);

struct CompareRow {
    std::size_t step = 0;
    std::string regime;
    Displacement oracle;
    Displacement law;
    Verdict verdict = Verdict::Skipped;
    std::string note;
};

// Oracle step from state s judged against the displacement law on s.
CompareRow judge_step(const FacetState& s, const Regime& r, const StepResult& step);

// Oracle trajectory with the facet view of every visited state.
struct OracleRun {
    RunConfig config;
    MMTrajectory mm;
    std::vector<SpinConfig> configs;        // configs[j] is the state before step j; one extra at the end
    std::vector<std::optional<FacetState>> states;  // quasi-octagon states, same indexing
    std::vector<Regime> regimes;
    std::vector<CompareRow> compare;
    double seconds = 0;
    bool has_mismatch() const;
};

SpinConfig initial_config(const RunConfig& c);
OracleRun oracle_run(const RunConfig& c);

struct AssertionResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

struct ScenarioSpec {
    std::string name;
    std::string recipe;
    std::vector<RunConfig> runs;
    std::function<std::vector<AssertionResult>(const std::vector<OracleRun>&)> check;
};

struct ScenarioResult {
    std::string name;
    std::vector<OracleRun> runs;
    std::vector<AssertionResult> assertions;
    double seconds = 0;
    bool pass() const;
};

std::vector<ScenarioSpec> builtin_scenarios();
ScenarioResult run_scenario(const ScenarioSpec& s);

struct SuiteReport {
    std::vector<ScenarioResult> results;
    bool pass() const;
};
// Empty names: every built-in scenario. Unknown names throw ConfigError.
SuiteReport scenario_suite(const std::vector<std::string>& names = {});

// Dispatches on config.mode, writes <output>.jsonl, <output>.csv and <output>.summary.json.
// Returns 0 on success, 1 when an assertion or comparison fails.
int run(const RunConfig& c, std::string* summary_out = nullptr);

}  // namespace begflow
