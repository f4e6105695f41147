#include "begflow/harness.hpp"

#include "begflow/surfactant.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace begflow {

using nlohmann::json;

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLatticeTol = 1e-6;

std::size_t u(int i) { return static_cast<std::size_t>(i); }

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

i64 to_lattice(double v, double eps, const std::string& field, bool snap)
{
    const double x = v / eps;
    const double r = std::round(x);
    if (!snap && std::abs(x - r) > kLatticeTol) throw ConfigError(field, "not a multiple of eps");
    if (r < 0) throw ConfigError(field, "negative length");
    return static_cast<i64>(r);
}

std::string regime_name(const Regime& r)
{
    std::string n = to_string(r.tag);
    if (r.sub) n += "/" + to_string(*r.sub);
    return n;
}

std::optional<FacetState> facet_view(const SpinConfig& c, const ModelParams& p, bool literal)
{
    if (c.ones.empty()) return std::nullopt;
    auto q = recognize_quasi_octagon(c.ones);
    if (!q) return std::nullopt;
    FacetState s;
    s.geom = *q;
    s.C = static_cast<i64>(c.zeros.size());
    s.params = p;
    s.stage3_literal = literal;
    return s;
}

SpinConfig facet_config(const FacetState& s)
{
    SpinConfig c;
    c.ones = rasterize(s.geom);
    c.zeros = canonical_surfactant(c.ones, s.C, s.params.k);
    return c;
}

template <class T>
T get_field(const json& j, const char* key, const std::string& path)
{
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + key, e.what());
    }
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& path)
{
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return it.key() == k; }))
            throw ConfigError(path + it.key(), "unknown key");
    }
}

RunMode mode_from_string(const std::string& s)
{
    if (s == "oracle") return RunMode::Oracle;
    if (s == "facet") return RunMode::Facet;
    if (s == "continuum") return RunMode::Continuum;
    if (s == "compare") return RunMode::Compare;
    if (s == "scenario") return RunMode::Scenario;
    throw ConfigError("mode", "unknown mode '" + s + "'");
}

std::string fmt_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

json row_json(const TrajectoryRow& r)
{
    return json{{"kind", "row"},   {"step", r.step},   {"t", r.t},         {"P", r.P},
                {"D", r.D},        {"C", r.C},         {"regime", r.regime}, {"alpha", r.alpha},
                {"beta", r.beta},  {"xi", r.xi},       {"energy", r.energy}, {"diss1", r.diss1},
                {"diss0", r.diss0}, {"F", r.F}};
}

json geom_json(const OctagonGeom& g, double eps)
{
    const SideLengths L = side_lengths(g, eps);
    return json{{"anchor", {g.anchor.x, g.anchor.y}},
                {"width", g.width},
                {"height", g.height},
                {"cuts", g.cuts},
                {"P", L.P},
                {"D", L.D}};
}

json disp_json(const Displacement& d) { return json{{"alpha", d.alpha}, {"beta", d.beta}}; }

// Compressed regime sequence: consecutive duplicates removed.
std::vector<std::string> compress(const std::vector<std::string>& v)
{
    std::vector<std::string> out;
    for (const auto& s : v)
        if (out.empty() || out.back() != s) out.push_back(s);
    return out;
}

}  // namespace

std::string to_string(RunMode m)
{
    switch (m) {
    case RunMode::Oracle: return "oracle";
    case RunMode::Facet: return "facet";
    case RunMode::Continuum: return "continuum";
    case RunMode::Compare: return "compare";
    case RunMode::Scenario: return "scenario";
    }
    return "facet";
}

OctagonGeom RunConfig::lattice_geometry() const
{
    const double e = params.eps;
    OctagonGeom g;
    g.anchor = anchor;
    const bool snap = false;
    g.width = to_lattice(width, e, "geometry.width", snap);
    g.height = to_lattice(height, e, "geometry.height", snap);
    for (int i = 0; i < 4; ++i)
        g.cuts[u(i)] = to_lattice(cuts[u(i)], e, "geometry.cuts[" + std::to_string(i) + "]", snap);
    if (!g.valid()) throw ConfigError("geometry", "cuts exceed the bounding box");
    return g;
}

i64 RunConfig::surfactant_count() const
{
    if (count) return *count;
    if (lambda) return static_cast<i64>(std::llround(*lambda / params.eps));
    throw ConfigError("surfactant", "count or lambda required");
}

RunConfig RunConfig::at_eps(double eps) const
{
    RunConfig c = *this;
    if (count && !lambda) {
        c.lambda = static_cast<double>(*count) * params.eps;
        c.count.reset();
    }
    c.params.eps = eps;
    // snap the physical description onto the new lattice
    auto snap = [&](double v) { return std::round(v / eps) * eps; };
    c.width = snap(width);
    c.height = snap(height);
    for (auto& x : c.cuts) x = snap(x);
    return c;
}

void RunConfig::validate() const
{
    try {
        params.validate();
    } catch (const std::exception& e) {
        throw ConfigError("params", e.what());
    }
    if (count && lambda) throw ConfigError("surfactant", "exactly one of count and lambda");
    if (mode == RunMode::Scenario) return;
    if (!count && !lambda) throw ConfigError("surfactant", "count or lambda required");
    if (count && *count < 0) throw ConfigError("surfactant.count", "negative");
    if (lambda && *lambda < 0) throw ConfigError("surfactant.lambda", "negative");
    if (width <= 0 || height <= 0) throw ConfigError("geometry", "required");
    lattice_geometry();
    if (mode == RunMode::Continuum) {
        if (!(dt > 0)) throw ConfigError("dt", "must be positive");
        if (!(t_end >= 0)) throw ConfigError("t_end", "must be nonnegative");
    }
    for (std::size_t i = 1; i < eps_list.size(); ++i)
        if (!(eps_list[i] < eps_list[i - 1])) throw ConfigError("eps_list", "must be decreasing");
    for (double e : eps_list)
        if (!(e > 0)) throw ConfigError("eps_list", "entries must be positive");
}

void set_geometry(RunConfig& c, const OctagonGeom& g)
{
    const double e = c.params.eps;
    c.anchor = g.anchor;
    c.width = static_cast<double>(g.width) * e;
    c.height = static_cast<double>(g.height) * e;
    for (int i = 0; i < 4; ++i) c.cuts[u(i)] = static_cast<double>(g.cuts[u(i)]) * e;
}

RunConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("config", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config", "top level must be an object");
    reject_unknown(j,
                   {"mode", "params", "geometry", "surfactant", "steps", "t_end", "dt", "seed", "budget",
                    "local_search_check", "stage3_literal", "envelope", "output", "scenario", "eps_list"},
                   "");
    RunConfig c;
    c.mode = mode_from_string(j.contains("mode") ? get_field<std::string>(j, "mode", "") : "facet");
    if (j.contains("params")) {
        const json& p = j["params"];
        reject_unknown(p, {"eps", "zeta", "k", "gamma"}, "params.");
        if (p.contains("eps")) c.params.eps = get_field<double>(p, "eps", "params.");
        if (p.contains("zeta")) c.params.zeta = get_field<double>(p, "zeta", "params.");
        if (p.contains("k")) c.params.k = get_field<double>(p, "k", "params.");
        if (p.contains("gamma")) c.params.gamma = get_field<double>(p, "gamma", "params.");
    }
    if (j.contains("geometry")) {
        const json& g = j["geometry"];
        reject_unknown(g, {"width", "height", "cuts", "P", "D", "anchor"}, "geometry.");
        if (g.contains("anchor")) {
            auto a = get_field<std::array<i64, 2>>(g, "anchor", "geometry.");
            c.anchor = {a[0], a[1]};
        }
        const bool box = g.contains("width") || g.contains("height") || g.contains("cuts");
        const bool sides = g.contains("P") || g.contains("D");
        if (box == sides) throw ConfigError("geometry", "give either width/height/cuts or P/D");
        if (box) {
            c.width = get_field<double>(g, "width", "geometry.");
            c.height = get_field<double>(g, "height", "geometry.");
            if (g.contains("cuts")) c.cuts = get_field<std::array<double, 4>>(g, "cuts", "geometry.");
        } else {
            const auto P = get_field<std::array<double, 4>>(g, "P", "geometry.");
            const auto D = get_field<std::array<double, 4>>(g, "D", "geometry.");
            for (int i = 0; i < 4; ++i) c.cuts[u(i)] = D[u(i)] / kSqrt2;
            c.width = P[0] + c.cuts[0] + c.cuts[3];
            c.height = P[1] + c.cuts[0] + c.cuts[1];
            const double w2 = P[2] + c.cuts[1] + c.cuts[2], h2 = P[3] + c.cuts[2] + c.cuts[3];
            if (std::abs(w2 - c.width) > kLatticeTol * 10 || std::abs(h2 - c.height) > kLatticeTol * 10)
                throw ConfigError("geometry.P", "side lengths do not close up");
        }
    }
    if (j.contains("surfactant")) {
        const json& s = j["surfactant"];
        reject_unknown(s, {"count", "lambda"}, "surfactant.");
        if (s.contains("count")) c.count = get_field<i64>(s, "count", "surfactant.");
        if (s.contains("lambda")) c.lambda = get_field<double>(s, "lambda", "surfactant.");
    }
    if (j.contains("steps")) {
        const i64 n = get_field<i64>(j, "steps", "");
        if (n < 0) throw ConfigError("steps", "negative");
        c.steps = static_cast<std::size_t>(n);
    }
    if (j.contains("t_end")) c.t_end = get_field<double>(j, "t_end", "");
    if (j.contains("dt")) c.dt = get_field<double>(j, "dt", "");
    if (j.contains("seed")) c.seed = get_field<std::uint64_t>(j, "seed", "");
    if (j.contains("budget")) {
        const json& b = j["budget"];
        reject_unknown(b,
                       {"max_parallel_shift", "max_diag_shift", "defect_span", "defects", "surf_range",
                        "local_search_restarts", "local_search_steps", "threads"},
                       "budget.");
        auto& B = c.budget;
        if (b.contains("max_parallel_shift")) B.max_parallel_shift = get_field<i64>(b, "max_parallel_shift", "budget.");
        if (b.contains("max_diag_shift")) B.max_diag_shift = get_field<i64>(b, "max_diag_shift", "budget.");
        if (b.contains("defect_span")) B.defect_span = get_field<i64>(b, "defect_span", "budget.");
        if (b.contains("defects")) B.defects = get_field<bool>(b, "defects", "budget.");
        if (b.contains("surf_range")) B.surf_range = get_field<i64>(b, "surf_range", "budget.");
        if (b.contains("local_search_restarts"))
            B.local_search_restarts = get_field<int>(b, "local_search_restarts", "budget.");
        if (b.contains("local_search_steps")) B.local_search_steps = get_field<int>(b, "local_search_steps", "budget.");
        if (b.contains("threads")) B.threads = get_field<int>(b, "threads", "budget.");
    }
    if (j.contains("local_search_check")) c.local_search_check = get_field<bool>(j, "local_search_check", "");
    if (j.contains("stage3_literal")) c.stage3_literal = get_field<bool>(j, "stage3_literal", "");
    if (j.contains("envelope")) {
        const auto e = get_field<std::string>(j, "envelope", "");
        if (e == "floor")
            c.envelope = Envelope::Floor;
        else if (e == "ceil")
            c.envelope = Envelope::Ceil;
        else
            throw ConfigError("envelope", "floor or ceil");
    }
    if (j.contains("output")) c.output = get_field<std::string>(j, "output", "");
    if (j.contains("scenario")) c.scenario = get_field<std::string>(j, "scenario", "");
    if (j.contains("eps_list")) c.eps_list = get_field<std::vector<double>>(j, "eps_list", "");
    c.validate();
    return c;
}

RunConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("config", "cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string dump_config(const RunConfig& c)
{
    json j;
    j["mode"] = to_string(c.mode);
    j["params"] = {{"eps", c.params.eps}, {"zeta", c.params.zeta}, {"k", c.params.k}, {"gamma", c.params.gamma}};
    j["geometry"] = {{"width", c.width}, {"height", c.height}, {"cuts", c.cuts}, {"anchor", {c.anchor.x, c.anchor.y}}};
    if (c.count) j["surfactant"] = {{"count", *c.count}};
    if (c.lambda) j["surfactant"] = {{"lambda", *c.lambda}};
    j["steps"] = c.steps;
    j["t_end"] = c.t_end;
    j["dt"] = c.dt;
    j["seed"] = c.seed;
    const auto& B = c.budget;
    j["budget"] = {{"max_parallel_shift", B.max_parallel_shift},
                   {"max_diag_shift", B.max_diag_shift},
                   {"defect_span", B.defect_span},
                   {"defects", B.defects},
                   {"surf_range", B.surf_range},
                   {"local_search_restarts", B.local_search_restarts},
                   {"local_search_steps", B.local_search_steps},
                   {"threads", B.threads}};
    j["local_search_check"] = c.local_search_check;
    j["stage3_literal"] = c.stage3_literal;
    j["envelope"] = c.envelope == Envelope::Floor ? "floor" : "ceil";
    j["output"] = c.output;
    if (!c.scenario.empty()) j["scenario"] = c.scenario;
    if (!c.eps_list.empty()) j["eps_list"] = c.eps_list;
    return j.dump(2);
}

// ---------------------------------------------------------------- trajectories

const char* const kCsvHeader =
    "step,t,P1,P2,P3,P4,D1,D2,D3,D4,C,regime,alpha1,alpha2,alpha3,alpha4,beta1,beta2,beta3,beta4,xi,energy,diss1,"
    "diss0,F";

void export_csv(const TrajectoryRecord& tr, const std::string& path)
{
    if (tr.rows.empty()) throw std::invalid_argument("export_csv: empty trajectory");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot open " + path);
    out << kCsvHeader << '\n';
    for (const auto& r : tr.rows) {
        out << r.step << ',' << fmt_double(r.t);
        for (double v : r.P) out << ',' << fmt_double(v);
        for (double v : r.D) out << ',' << fmt_double(v);
        out << ',' << r.C << ',' << r.regime;
        for (i64 v : r.alpha) out << ',' << v;
        for (i64 v : r.beta) out << ',' << v;
        out << ',' << r.xi << ',' << fmt_double(r.energy) << ',' << fmt_double(r.diss1) << ','
            << fmt_double(r.diss0) << ',' << fmt_double(r.F) << '\n';
    }
    if (!out) throw std::runtime_error("export_csv: write failed for " + path);
}

void export_jsonl(const TrajectoryRecord& tr, const std::string& path)
{
    if (tr.rows.empty()) throw std::invalid_argument("export_jsonl: empty trajectory");
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_jsonl: cannot open " + path);
    out << json{{"kind", "meta"}, {"source", tr.source}, {"status", tr.status}, {"rows", tr.rows.size()}}.dump()
        << '\n';
    for (const auto& r : tr.rows) out << row_json(r).dump() << '\n';
    if (!out) throw std::runtime_error("export_jsonl: write failed for " + path);
}

TrajectoryRecord read_jsonl(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_jsonl: cannot open " + path);
    TrajectoryRecord tr;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
            if (j.at("kind") == "meta") {
                tr.source = j.at("source").get<std::string>();
                tr.status = j.at("status").get<std::string>();
                continue;
            }
            TrajectoryRow r;
            r.step = j.at("step").get<i64>();
            r.t = j.at("t").get<double>();
            r.P = j.at("P").get<std::array<double, 4>>();
            r.D = j.at("D").get<std::array<double, 4>>();
            r.C = j.at("C").get<i64>();
            r.regime = j.at("regime").get<std::string>();
            r.alpha = j.at("alpha").get<std::array<i64, 4>>();
            r.beta = j.at("beta").get<std::array<i64, 4>>();
            r.xi = j.at("xi").get<i64>();
            r.energy = j.at("energy").get<double>();
            r.diss1 = j.at("diss1").get<double>();
            r.diss0 = j.at("diss0").get<double>();
            r.F = j.at("F").get<double>();
            tr.rows.push_back(r);
        } catch (const json::exception& e) {
            throw std::runtime_error("read_jsonl: " + path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return tr;
}

TrajectoryRecord record_from_oracle(const MMTrajectory& mm, const ModelParams& p)
{
    TrajectoryRecord tr;
    tr.source = "oracle";
    tr.status = mm.status;
    auto regime_of = [&](const SpinConfig& c) -> std::string {
        if (c.ones.empty()) return "collapsed";
        auto s = facet_view(c, p, false);
        return s ? regime_name(classify(*s)) : "none";
    };
    TrajectoryRow r0;
    const auto L0 = side_lengths(containing_octagon(mm.initial.ones), p.eps);
    r0.P = L0.P;
    r0.D = L0.D;
    r0.C = static_cast<i64>(mm.initial.zeros.size());
    r0.regime = regime_of(mm.initial);
    r0.energy = beg_energy(mm.initial, p).total;
    r0.F = r0.energy;
    tr.rows.push_back(r0);
    for (std::size_t j = 0; j < mm.steps.size(); ++j) {
        const StepResult& s = mm.steps[j];
        TrajectoryRow r;
        r.step = static_cast<i64>(j + 1);
        r.t = static_cast<double>(j + 1) * p.tau();
        if (!s.config.ones.empty()) {
            const auto L = side_lengths(s.outer, p.eps);
            r.P = L.P;
            r.D = L.D;
        }
        r.C = static_cast<i64>(s.config.zeros.size());
        r.regime = regime_of(s.config);
        r.alpha = s.disp.alpha;
        r.beta = s.disp.beta;
        r.xi = s.disp.sum_beta() - 2 * s.disp.sum_alpha();
        r.energy = s.energy;
        r.diss1 = s.diss1;
        r.diss0 = s.diss0;
        r.F = s.functional_value;
        tr.rows.push_back(r);
    }
    return tr;
}

TrajectoryRecord record_from_facet(const FacetTrajectory& ft)
{
    TrajectoryRecord tr;
    tr.source = "facet";
    tr.status = ft.status;
    std::vector<FacetState> states;
    for (const auto& st : ft.steps)
        if (st.law.status == "ok") states.push_back(st.state);
    if (ft.steps.empty() || ft.steps.back().law.status == "ok") states.push_back(ft.final_state);
    if (states.empty()) states.push_back(ft.final_state);
    const ModelParams& p = states.front().params;
    SpinConfig prev;
    for (std::size_t j = 0; j < states.size(); ++j) {
        const FacetState& s = states[j];
        TrajectoryRow r;
        r.step = static_cast<i64>(j);
        r.t = static_cast<double>(j) * p.tau();
        const auto L = s.lengths();
        r.P = L.P;
        r.D = L.D;
        r.C = s.C;
        r.regime = j < ft.steps.size() ? regime_name(ft.steps[j].regime) : regime_name(classify(s));
        const SpinConfig cur = facet_config(s);
        r.energy = beg_energy(cur, p).total;
        r.F = r.energy;
        if (j > 0) {
            const LawResult& law = ft.steps[j - 1].law;
            r.alpha = law.d.alpha;
            r.beta = law.d.beta;
            r.xi = law.d.sum_beta() - 2 * law.d.sum_alpha();
            r.diss1 = dissipation_phase(cur.ones, prev.ones, p) / p.tau();
            r.diss0 = std::pow(p.eps, p.gamma) * static_cast<double>(dissipation_surf(r.C, states[j - 1].C)) / p.tau();
            r.F = r.energy + r.diss1 + r.diss0;
        }
        prev = cur;
        tr.rows.push_back(r);
    }
    return tr;
}

TrajectoryRecord record_from_continuum(const ContinuumTrajectory& ct)
{
    TrajectoryRecord tr;
    tr.source = "continuum";
    tr.status = ct.status;
    for (std::size_t j = 0; j < ct.states.size(); ++j) {
        TrajectoryRow r;
        r.step = static_cast<i64>(j);
        r.t = ct.states[j].t;
        r.P = ct.states[j].P;
        r.D = ct.states[j].D;
        r.regime = j < ct.tags.size() ? to_string(ct.tags[j]) : (ct.status == "ok" ? "end" : ct.status);
        tr.rows.push_back(r);
    }
    return tr;
}

// ---------------------------------------------------------------- comparison

std::string to_string(Verdict v)
{
    switch (v) {
    case Verdict::Match: return "match";
    case Verdict::InInclusionSet: return "in-inclusion-set";
    case Verdict::Mismatch: return "mismatch";
    case Verdict::Skipped: return "skipped";
    }
    return "skipped";
}

CompareRow judge_step(const FacetState& s, const Regime& r, const StepResult& step)
{
    CompareRow row;
    row.regime = regime_name(r);
    row.oracle = step.disp;
    RegimeTag eff = r.tag;
    if (eff == RegimeTag::Gamma2ReduceToSub2 && r.sub) eff = *r.sub;
    const bool displayed = eff == RegimeTag::Stage1Pinned || eff == RegimeTag::Stage2SurfDependent ||
                           eff == RegimeTag::Stage3Nonlocal || eff == RegimeTag::Gamma2Surrounded;
    if (!displayed) {
        row.note = "no displayed law";
        return row;
    }
    if (eff == RegimeTag::Gamma2Surrounded && r.boundary_count > s.C) {
        row.note = "step into the surrounded regime";
        return row;
    }
    const LawResult law = facet_law_step(s, r);
    row.law = law.d;
    if (law.status != "ok") {
        row.note = law.status;
        return row;
    }
    if (!step.geom || step.config.ones.empty()) {
        row.verdict = Verdict::Mismatch;
        row.note = "oracle minimizer is empty";
        return row;
    }
    if (law.d == step.disp) {
        row.verdict = Verdict::Match;
        if (law.tie) row.note = "tie";
        return row;
    }
    LawResult sets = law;
    if (eff == RegimeTag::Stage3Nonlocal) {
        const i64 xi = step.disp.sum_beta() - 2 * step.disp.sum_alpha();
        sets = stage3_sets(s.lengths().D, s.core_lengths().P, xi, s.params);
        row.note = "sets at oracle xi = " + std::to_string(xi);
    }
    bool in = true;
    for (int i = 0; i < 4; ++i) {
        const auto& as = sets.alpha_set[u(i)];
        const auto& bs = sets.beta_set[u(i)];
        in = in && std::find(as.begin(), as.end(), step.disp.alpha[u(i)]) != as.end();
        in = in && std::find(bs.begin(), bs.end(), step.disp.beta[u(i)]) != bs.end();
    }
    row.verdict = in ? Verdict::InInclusionSet : Verdict::Mismatch;
    return row;
}

bool OracleRun::has_mismatch() const
{
    return std::any_of(compare.begin(), compare.end(), [](const CompareRow& r) { return r.verdict == Verdict::Mismatch; });
}

SpinConfig initial_config(const RunConfig& c)
{
    SpinConfig u;
    u.ones = rasterize(c.lattice_geometry());
    u.zeros = canonical_surfactant(u.ones, c.surfactant_count(), c.params.k);
    return u;
}

OracleRun oracle_run(const RunConfig& c)
{
    const auto t0 = std::chrono::steady_clock::now();
    OracleRun run;
    run.config = c;
    const SpinConfig u0 = initial_config(c);
    run.mm = minimizing_movement(u0, c.params, c.steps, c.budget);
    run.configs.push_back(u0);
    for (const auto& s : run.mm.steps) run.configs.push_back(s.config);
    for (const auto& cfg : run.configs) {
        auto s = facet_view(cfg, c.params, c.stage3_literal);
        if (s && c.lambda) s->lambda = *c.lambda;
        run.states.push_back(s);
        Regime r;
        if (s)
            r = classify(*s);
        else
            r.note = cfg.ones.empty() ? "collapsed" : "not a quasi-octagon";
        run.regimes.push_back(r);
    }
    for (std::size_t j = 0; j < run.mm.steps.size(); ++j) {
        CompareRow row;
        if (run.states[j]) {
            row = judge_step(*run.states[j], run.regimes[j], run.mm.steps[j]);
        } else {
            row.oracle = run.mm.steps[j].disp;
            row.note = "state is not a quasi-octagon";
        }
        row.step = j;
        run.compare.push_back(row);
    }
    run.seconds = seconds_since(t0);
    return run;
}

// ---------------------------------------------------------------- scenarios

namespace {

RunConfig count_config(const std::array<i64, 4>& P, const std::array<i64, 4>& D, i64 C, double eps, double zeta,
                       double k, double gamma, std::size_t steps)
{
    RunConfig c;
    c.mode = RunMode::Oracle;
    c.params = {eps, zeta, k, gamma};
    auto g = octagon_from_counts(P, D);
    if (!g) throw std::logic_error("scenario geometry does not close");
    set_geometry(c, *g);
    c.count = C;
    c.steps = steps;
    c.budget.threads = 1;
    return c;
}

i64 boundary_of(const SpinConfig& c) { return static_cast<i64>(exterior_boundary(c.ones).size()); }

bool surrounded(const SpinConfig& c)
{
    const SiteSet B = exterior_boundary(c.ones);
    return std::all_of(B.begin(), B.end(), [&](const Site& s) { return c.zeros.contains(s); });
}

AssertionResult surfactant_constant(const OracleRun& r)
{
    AssertionResult a{"surfactant count constant", true, ""};
    const std::size_t C0 = r.configs.front().zeros.size();
    for (std::size_t j = 0; j < r.configs.size(); ++j)
        if (r.configs[j].zeros.size() != C0) {
            a.pass = false;
            a.detail = "step " + std::to_string(j) + ": #Z = " + std::to_string(r.configs[j].zeros.size()) +
                       " vs " + std::to_string(C0);
            return a;
        }
    a.detail = "#Z = " + std::to_string(C0);
    return a;
}

AssertionResult no_mismatch(const OracleRun& r)
{
    AssertionResult a{"oracle agrees with the displacement law", true, ""};
    std::size_t judged = 0;
    for (const auto& row : r.compare) {
        if (row.verdict == Verdict::Skipped) continue;
        ++judged;
        if (row.verdict == Verdict::Mismatch) {
            a.pass = false;
            a.detail = "step " + std::to_string(row.step) + " (" + row.regime + ") mismatch";
            return a;
        }
    }
    a.detail = std::to_string(judged) + " judged steps";
    if (judged == 0) {
        a.pass = false;
        a.detail = "no judged steps";
    }
    return a;
}

AssertionResult all_steps(const OracleRun& r, const std::string& name, std::size_t n_expected)
{
    AssertionResult a{name, r.mm.steps.size() >= n_expected, ""};
    a.detail = std::to_string(r.mm.steps.size()) + " steps, status " + r.mm.status;
    return a;
}

std::vector<AssertionResult> check_stage1(const std::vector<OracleRun>& runs)
{
    const OracleRun& r = runs.front();
    std::vector<AssertionResult> out;
    out.push_back(all_steps(r, "trajectory completes", r.config.steps));
    AssertionResult reg{"every state is Stage1Pinned", true, ""};
    for (std::size_t j = 0; j < r.regimes.size(); ++j)
        if (r.regimes[j].tag != RegimeTag::Stage1Pinned) {
            reg.pass = false;
            reg.detail = "state " + std::to_string(j) + " is " + regime_name(r.regimes[j]);
            break;
        }
    out.push_back(reg);
    AssertionResult pinned{"diagonals pinned (beta = 0)", true, ""};
    for (const auto& s : r.mm.steps)
        if (s.disp.sum_beta() != 0) pinned.pass = false;
    out.push_back(pinned);
    out.push_back(no_mismatch(r));
    out.push_back(surfactant_constant(r));
    return out;
}

std::vector<AssertionResult> check_stage2(const std::vector<OracleRun>& runs)
{
    const OracleRun& r = runs.front();
    std::vector<AssertionResult> out;
    AssertionResult first{"initial state is Stage2SurfDependent", r.regimes.front().tag == RegimeTag::Stage2SurfDependent,
                          regime_name(r.regimes.front())};
    out.push_back(first);
    AssertionResult march{"#d+ drops by sum(beta) each step", true, ""};
    for (std::size_t j = 0; j < r.mm.steps.size(); ++j) {
        const i64 before = boundary_of(r.configs[j]), after = boundary_of(r.configs[j + 1]);
        if (after != before - r.mm.steps[j].disp.sum_beta()) {
            march.pass = false;
            march.detail = "step " + std::to_string(j) + ": " + std::to_string(before) + " -> " + std::to_string(after);
            break;
        }
    }
    if (march.pass) {
        std::ostringstream os;
        for (const auto& c : r.configs) os << boundary_of(c) << ' ';
        march.detail = os.str();
    }
    out.push_back(march);
    const i64 C = r.config.surfactant_count();
    AssertionResult wet{"reaches complete wetting", r.mm.status == "complete-wetting" && boundary_of(r.configs.back()) <= C,
                        "status " + r.mm.status};
    out.push_back(wet);
    out.push_back(surfactant_constant(r));
    return out;
}

std::vector<AssertionResult> check_stage3(const std::vector<OracleRun>& runs)
{
    const OracleRun& r = runs.front();
    std::vector<AssertionResult> out;
    out.push_back(all_steps(r, "trajectory completes", r.config.steps));
    const i64 C = r.config.surfactant_count();
    AssertionResult keep{"#O in {C, C-1} while Stage3Nonlocal", true, ""};
    std::size_t n3 = 0;
    for (std::size_t j = 0; j < r.configs.size(); ++j) {
        if (r.regimes[j].tag != RegimeTag::Stage3Nonlocal) continue;
        ++n3;
        const i64 nO = static_cast<i64>(corner_sets(r.configs[j].ones).outer.size());
        if (nO != C && nO != C - 1) {
            keep.pass = false;
            keep.detail = "state " + std::to_string(j) + ": #O = " + std::to_string(nO);
            break;
        }
    }
    if (keep.pass) keep.detail = std::to_string(n3) + " Stage3 states";
    if (n3 < r.configs.size()) keep.pass = false;
    out.push_back(keep);
    out.push_back(no_mismatch(r));
    out.push_back(surfactant_constant(r));
    return out;
}

std::vector<AssertionResult> check_degenerate(const std::vector<OracleRun>& runs)
{
    const OracleRun& r = runs.front();
    std::vector<AssertionResult> out;
    AssertionResult seq{"regime sequence contains Stage1Pinned then NullDiagonal", false, ""};
    std::vector<std::string> names;
    for (const auto& g : r.regimes) names.push_back(regime_name(g));
    for (std::size_t j = 0; j + 1 < r.regimes.size(); ++j)
        if (r.regimes[j].tag == RegimeTag::Stage1Pinned && r.regimes[j + 1].tag == RegimeTag::NullDiagonal) seq.pass = true;
    for (const auto& n : compress(names)) seq.detail += n + " ";
    out.push_back(seq);
    AssertionResult regrow{"a vanished diagonal regrows", false, ""};
    for (int d = 0; d < 4 && !regrow.pass; ++d) {
        std::optional<std::size_t> zero_at;
        for (std::size_t j = 0; j < r.configs.size(); ++j) {
            if (r.configs[j].ones.empty()) break;
            const i64 c = containing_octagon(r.configs[j].ones).cuts[u(d)];
            const i64 c0 = containing_octagon(r.configs.front().ones).cuts[u(d)];
            if (c == 0 && c0 > 0 && !zero_at) zero_at = j;
            if (zero_at && j > *zero_at && c > 0) {
                regrow.pass = true;
                regrow.detail = "D" + std::to_string(d + 1) + " zero at state " + std::to_string(*zero_at) +
                                ", length " + std::to_string(c) + " at state " + std::to_string(j);
                break;
            }
        }
    }
    out.push_back(regrow);
    out.push_back(surfactant_constant(r));
    return out;
}

std::vector<AssertionResult> check_negligible(const std::vector<OracleRun>& runs)
{
    const OracleRun& r = runs.front();
    std::vector<AssertionResult> out;
    out.push_back(all_steps(r, "trajectory completes", r.config.steps));
    AssertionResult still{"diagonals do not move (beta = 0 while all D > 0)", true, ""};
    AssertionResult law{"parallel sides follow floor(4 zeta / P)", true, ""};
    std::size_t judged = 0;
    for (std::size_t j = 0; j < r.mm.steps.size(); ++j) {
        const OctagonGeom G = containing_octagon(r.configs[j].ones);
        if (std::any_of(G.cuts.begin(), G.cuts.end(), [](i64 c) { return c == 0; })) break;
        const auto& d = r.mm.steps[j].disp;
        if (d.sum_beta() != 0) {
            still.pass = false;
            still.detail = "step " + std::to_string(j);
        }
        const auto L = side_lengths(G, r.config.params.eps);
        for (int i = 0; i < 4; ++i) {
            const ScalarLaw a = pinned_alpha(L.P[u(i)], r.config.params.zeta, r.config.params.eps);
            const bool ok = a.tie ? std::find(a.set.begin(), a.set.end(), d.alpha[u(i)]) != a.set.end()
                                  : d.alpha[u(i)] == a.value;
            if (!ok) {
                law.pass = false;
                law.detail = "step " + std::to_string(j) + " side " + std::to_string(i + 1);
            }
        }
        ++judged;
    }
    if (judged == 0) law.pass = still.pass = false;
    if (law.pass) law.detail = std::to_string(judged) + " steps";
    out.push_back(still);
    out.push_back(law);
    return out;
}

std::vector<AssertionResult> check_gamma2(const std::vector<OracleRun>& runs)
{
    // runs: 0 zeta=0.4 gamma=2, 1 zeta=0.4 gamma=1, 2 zeta=1, 3 zeta=2, 4 zeta=3
    std::vector<AssertionResult> out;
    AssertionResult same{"zeta=0.4: gamma=2 trajectory equals the gamma<2 trajectory", true, ""};
    if (runs[0].configs.size() != runs[1].configs.size()) same.pass = false;
    for (std::size_t j = 0; same.pass && j < runs[0].configs.size(); ++j)
        if (!(runs[0].configs[j].ones == runs[1].configs[j].ones) || !(runs[0].configs[j].zeros == runs[1].configs[j].zeros)) {
            same.pass = false;
            same.detail = "differs at state " + std::to_string(j);
        }
    if (same.pass) same.detail = std::to_string(runs[0].configs.size()) + " states";
    out.push_back(same);
    {
        const OracleRun& r = runs[2];
        AssertionResult a = surfactant_constant(r);
        bool open = true;
        for (const auto& c : r.configs)
            if (!c.ones.empty() && surrounded(c)) open = false;
        a.name = "zeta=1: #Z constant and never surrounded";
        a.pass = a.pass && open && r.mm.steps.size() == r.config.steps;
        out.push_back(a);
    }
    {
        // critical zeta = 1/(3k-1): side runs cost exactly what they gain, corners still gain
        const OracleRun& r = runs[3];
        AssertionResult a{"zeta=2: never surrounded, surfactant stays on corner sites", r.mm.steps.size() == r.config.steps, ""};
        for (std::size_t j = 0; j < r.configs.size(); ++j) {
            const auto& c = r.configs[j];
            if (c.ones.empty()) continue;
            const SiteSet O = corner_sets(c.ones).outer;
            const bool inO = std::all_of(c.zeros.begin(), c.zeros.end(), [&](const Site& p) { return O.contains(p); });
            if (surrounded(c) || !inO) {
                a.pass = false;
                a.detail = "state " + std::to_string(j) + (inO ? " surrounded" : " has surfactant off the corners");
                break;
            }
            a.detail += std::to_string(c.zeros.size()) + "/" + std::to_string(O.size()) + " ";
        }
        out.push_back(a);
    }
    const OracleRun& s = runs[4];
    AssertionResult sur{"zeta=3: surrounded after one step", s.configs.size() > 1 && surrounded(s.configs[1]), ""};
    if (s.configs.size() > 1)
        sur.detail = "#Z = " + std::to_string(s.configs[1].zeros.size()) + ", #d+ = " + std::to_string(boundary_of(s.configs[1]));
    out.push_back(sur);
    AssertionResult fl{"zeta=3: surrounded steps follow the floor formulas", false, ""};
    std::size_t judged = 0;
    bool bad = false;
    for (const auto& row : s.compare) {
        if (row.verdict == Verdict::Skipped) continue;
        ++judged;
        if (row.verdict == Verdict::Mismatch) bad = true;
    }
    fl.pass = judged > 0 && !bad;
    fl.detail = std::to_string(judged) + " judged steps";
    out.push_back(fl);
    return out;
}

}  // namespace

bool ScenarioResult::pass() const
{
    return !assertions.empty() &&
           std::all_of(assertions.begin(), assertions.end(), [](const AssertionResult& a) { return a.pass; });
}

bool SuiteReport::pass() const
{
    return std::all_of(results.begin(), results.end(), [](const ScenarioResult& r) { return r.pass(); });
}

std::vector<ScenarioSpec> builtin_scenarios()
{
    std::vector<ScenarioSpec> v;
    v.push_back({"stage1-pinning",
                 "P = (7,20,7,20), D = 12 (lattice), C = 4, eps = 0.1, zeta = 0.4",
                 {count_config({7, 20, 7, 20}, {12, 12, 12, 12}, 4, 0.1, 0.4, 0.5, 1, 6)},
                 check_stage1});
    v.push_back({"stage2-wetting-march",
                 "P = 15, D = 10 (lattice), C = 48, eps = 0.1, zeta = 1",
                 {count_config({15, 15, 15, 15}, {10, 10, 10, 10}, 48, 0.1, 1, 0.5, 1, 16)},
                 check_stage2});
    v.push_back({"stage3-persistence",
                 "P = 20, D = 7 (lattice), C = #O = 28, eps = 0.1, zeta = 1",
                 {count_config({20, 20, 20, 20}, {7, 7, 7, 7}, 28, 0.1, 1, 0.5, 1, 8)},
                 check_stage3});
    v.push_back({"degenerate-diagonal",
                 "P = (10,10,8,8), D = (2,12,4,12) (lattice), C = 4, eps = 0.1, zeta = 0.37",
                 {count_config({10, 10, 8, 8}, {2, 12, 4, 12}, 4, 0.1, 0.37, 0.5, 1, 6)},
                 check_degenerate});
    v.push_back({"negligible-surfactant",
                 "P = (7,20,7,20), D = 10 (lattice), C = 0, eps = 0.1, zeta = 0.4",
                 {count_config({7, 20, 7, 20}, {10, 10, 10, 10}, 0, 0.1, 0.4, 0.5, 1, 3)},
                 check_negligible});
    {
        const std::array<i64, 4> P{20, 20, 20, 20}, D{6, 6, 6, 6};
        ScenarioSpec s{"gamma2-cells",
                       "P = 20, D = 6 (lattice), eps = 0.1, k = 0.5; zeta = 0.4 (C = 12, against gamma = 1), "
                       "1 and 2 (C = #O = 24), 3 (C = 12)",
                       {},
                       check_gamma2};
        s.runs.push_back(count_config(P, D, 12, 0.1, 0.4, 0.5, 2, 3));
        s.runs.push_back(count_config(P, D, 12, 0.1, 0.4, 0.5, 1, 3));
        s.runs.push_back(count_config(P, D, 24, 0.1, 1, 0.5, 2, 2));
        s.runs.push_back(count_config(P, D, 24, 0.1, 2, 0.5, 2, 2));
        s.runs.back().budget.max_parallel_shift = s.runs.back().budget.max_diag_shift = 6;
        s.runs.push_back(count_config(P, D, 12, 0.1, 3, 0.5, 2, 2));
        s.runs.back().budget.max_parallel_shift = s.runs.back().budget.max_diag_shift = 7;
        v.push_back(s);
    }
    return v;
}

ScenarioResult run_scenario(const ScenarioSpec& s)
{
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioResult r;
    r.name = s.name;
    for (const auto& c : s.runs) r.runs.push_back(oracle_run(c));
    try {
        r.assertions = s.check(r.runs);
    } catch (const std::exception& e) {
        r.assertions.push_back({"assertions evaluate", false, e.what()});
    }
    r.seconds = seconds_since(t0);
    return r;
}

SuiteReport scenario_suite(const std::vector<std::string>& names)
{
    std::vector<ScenarioSpec> all = builtin_scenarios(), sel;
    if (names.empty())
        sel = all;
    else
        for (const auto& n : names) {
            auto it = std::find_if(all.begin(), all.end(), [&](const ScenarioSpec& s) { return s.name == n; });
            if (it == all.end()) throw ConfigError("scenario", "unknown scenario '" + n + "'");
            sel.push_back(*it);
        }
    SuiteReport rep;
    rep.results.resize(sel.size());
    const auto n = static_cast<std::ptrdiff_t>(sel.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) rep.results[static_cast<std::size_t>(i)] = run_scenario(sel[static_cast<std::size_t>(i)]);
    return rep;
}

// ---------------------------------------------------------------- run

namespace {

json compare_json(const OracleRun& r)
{
    json rows = json::array();
    for (const auto& c : r.compare)
        rows.push_back({{"step", c.step},
                        {"regime", c.regime},
                        {"oracle", disp_json(c.oracle)},
                        {"law", disp_json(c.law)},
                        {"verdict", to_string(c.verdict)},
                        {"note", c.note}});
    return rows;
}

json scenario_json(const ScenarioResult& s)
{
    json a = json::array();
    for (const auto& x : s.assertions) a.push_back({{"name", x.name}, {"pass", x.pass}, {"detail", x.detail}});
    json runs = json::array();
    for (const auto& r : s.runs) {
        std::vector<std::string> names;
        for (const auto& g : r.regimes) names.push_back(regime_name(g));
        runs.push_back({{"config", json::parse(dump_config(r.config))},
                        {"status", r.mm.status},
                        {"regime_sequence", compress(names)},
                        {"compare", compare_json(r)}});
    }
    return json{{"name", s.name}, {"pass", s.pass()}, {"assertions", a}, {"runs", runs}};
}

void write_text(const std::string& path, const std::string& text)
{
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

json conservation_json(const TrajectoryRecord& tr)
{
    bool constant = true;
    for (const auto& r : tr.rows) constant = constant && r.C == tr.rows.front().C;
    return json{{"surfactant_constant", constant}, {"C_initial", tr.rows.front().C}, {"C_final", tr.rows.back().C}};
}

std::vector<std::string> row_regimes(const TrajectoryRecord& tr)
{
    std::vector<std::string> v;
    for (const auto& r : tr.rows) v.push_back(r.regime);
    return compress(v);
}

}  // namespace

int run(const RunConfig& c, std::string* summary_out)
{
    c.validate();
    json summary;
    summary["mode"] = to_string(c.mode);
    summary["config"] = json::parse(dump_config(c));
    int code = 0;
    auto finish_record = [&](const TrajectoryRecord& tr) {
        export_jsonl(tr, c.output + ".jsonl");
        export_csv(tr, c.output + ".csv");
        summary["status"] = tr.status;
        summary["rows"] = tr.rows.size();
        summary["regime_sequence"] = row_regimes(tr);
        summary["conservation"] = conservation_json(tr);
    };

    switch (c.mode) {
    case RunMode::Oracle: {
        OracleRun r = oracle_run(c);
        const TrajectoryRecord tr = record_from_oracle(r.mm, c.params);
        finish_record(tr);
        const SpinConfig& last = r.configs.back();
        if (!last.ones.empty()) summary["final_geometry"] = geom_json(containing_octagon(last.ones), c.params.eps);
        bool quasi = true;
        for (const auto& s : r.states) quasi = quasi && s.has_value();
        summary["quasi_octagon_every_step"] = quasi;
        if (c.local_search_check) {
            json gaps = json::array();
            for (std::size_t j = 0; j < r.mm.steps.size(); ++j) {
                const StepResult ls = flip_local_search(r.configs[j], c.params, c.budget, c.seed + j, &r.mm.steps[j].config);
                const double gap = ls.functional_value - r.mm.steps[j].functional_value;
                gaps.push_back(gap);
                if (gap < -1e-9) code = 1;
            }
            summary["local_search_gap"] = gaps;
        }
        break;
    }
    case RunMode::Facet: {
        FacetState s = make_state(c.lattice_geometry(), c.surfactant_count(), c.params);
        s.stage3_literal = c.stage3_literal;
        if (c.lambda) s.lambda = *c.lambda;
        const FacetTrajectory ft = facet_trajectory(s, c.steps);
        const TrajectoryRecord tr = record_from_facet(ft);
        finish_record(tr);
        summary["final_geometry"] = geom_json(ft.final_state.outer(), c.params.eps);
        json tj = json::array();
        for (const auto& [step, name] : ft.transitions) tj.push_back({{"step", step}, {"regime", name}});
        summary["transitions"] = tj;
        if (ft.status.rfind("error", 0) == 0) code = 1;
        break;
    }
    case RunMode::Continuum: {
        const double lam = c.lambda ? *c.lambda : static_cast<double>(*c.count) * c.params.eps;
        ContinuumState s0 = continuum_from_geom(c.lattice_geometry(), c.params.eps, lam, c.params.k, c.params.zeta);
        s0.gamma2 = c.params.gamma == 2.0;
        const ContinuumTrajectory ct = integrate(s0, c.dt, c.t_end, c.envelope);
        const TrajectoryRecord tr = record_from_continuum(ct);
        finish_record(tr);
        export_continuum_csv(ct, c.output + ".continuum.csv");
        json ev = json::array();
        for (const auto& e : ct.events) ev.push_back({{"t", e.t}, {"event", e.what}});
        summary["events"] = ev;
        double res = 0;
        for (const auto& st : ct.states)
            for (double x : st.closure()) res = std::max(res, std::abs(x));
        summary["closure_max_residual"] = res;
        if (ct.status.rfind("error", 0) == 0) code = 1;
        break;
    }
    case RunMode::Compare: {
        std::vector<double> eps = c.eps_list.empty() ? std::vector<double>{c.params.eps} : c.eps_list;
        json per = json::array();
        std::optional<TrajectoryRecord> first;
        for (double e : eps) {
            const RunConfig ce = c.eps_list.empty() ? c : c.at_eps(e);
            OracleRun r = oracle_run(ce);
            if (!first) first = record_from_oracle(r.mm, ce.params);
            json counts = {{"match", 0}, {"in-inclusion-set", 0}, {"mismatch", 0}, {"skipped", 0}};
            for (const auto& row : r.compare) counts[to_string(row.verdict)] = counts[to_string(row.verdict)].get<int>() + 1;
            per.push_back({{"eps", e}, {"C", ce.surfactant_count()}, {"status", r.mm.status}, {"counts", counts},
                           {"table", compare_json(r)}});
            if (r.has_mismatch()) code = 1;
        }
        finish_record(*first);
        summary["compare"] = per;
        break;
    }
    case RunMode::Scenario: {
        std::vector<std::string> names;
        if (!c.scenario.empty() && c.scenario != "all") names.push_back(c.scenario);
        const SuiteReport rep = scenario_suite(names);
        json sc = json::array();
        for (const auto& s : rep.results) sc.push_back(scenario_json(s));
        summary["scenarios"] = sc;
        summary["status"] = rep.pass() ? "pass" : "fail";
        if (!rep.pass()) code = 1;
        // the first run of the first scenario is exported as the trajectory
        if (!rep.results.empty() && !rep.results.front().runs.empty()) {
            const auto& r0 = rep.results.front().runs.front();
            const TrajectoryRecord tr = record_from_oracle(r0.mm, r0.config.params);
            export_jsonl(tr, c.output + ".jsonl");
            export_csv(tr, c.output + ".csv");
        }
        break;
    }
    }
    const std::string text = summary.dump(2) + "\n";
    write_text(c.output + ".summary.json", text);
    if (summary_out) *summary_out = text;
    return code;
}

}  // namespace begflow
