#include "begflow/harness.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <sstream>

using namespace begflow;

namespace {

std::vector<double> parse_eps_list(const std::string& s)
{
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        try {
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("eps_list", "bad entry '" + tok + "'");
        }
    }
    return out;
}

RunMode parse_mode(const std::string& m)
{
    if (m == "oracle") return RunMode::Oracle;
    if (m == "facet") return RunMode::Facet;
    if (m == "continuum") return RunMode::Continuum;
    if (m == "compare") return RunMode::Compare;
    if (m == "scenario") return RunMode::Scenario;
    throw ConfigError("mode", "unknown mode '" + m + "'");
}

void print_compare(const std::string& summary)
{
    const auto j = nlohmann::json::parse(summary);
    for (const auto& e : j["compare"]) {
        std::printf("eps %g  C %lld  oracle %s\n", e["eps"].get<double>(), e["C"].get<long long>(),
                    e["status"].get<std::string>().c_str());
        for (const auto& r : e["table"]) {
            auto v = [&](const char* who, const char* what) {
                std::string t;
                for (const auto& x : r[who][what]) t += std::to_string(x.get<long long>()) + " ";
                return t;
            };
            std::printf("  step %3d  %-28s  %-16s  oracle a[%s] b[%s]  law a[%s] b[%s]  %s\n", r["step"].get<int>(),
                        r["regime"].get<std::string>().c_str(), r["verdict"].get<std::string>().c_str(),
                        v("oracle", "alpha").c_str(), v("oracle", "beta").c_str(), v("law", "alpha").c_str(),
                        v("law", "beta").c_str(), r["note"].get<std::string>().c_str());
        }
    }
}

void print_scenarios(const std::string& summary)
{
    const auto j = nlohmann::json::parse(summary);
    for (const auto& s : j["scenarios"]) {
        std::printf("[%s] %s\n", s["pass"].get<bool>() ? "PASS" : "FAIL", s["name"].get<std::string>().c_str());
        for (const auto& a : s["assertions"])
            std::printf("    %s  %s  (%s)\n", a["pass"].get<bool>() ? "ok  " : "FAIL", a["name"].get<std::string>().c_str(),
                        a["detail"].get<std::string>().c_str());
    }
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"begflow: lattice surfactant flow simulator"};
    app.require_subcommand(1);

    std::string config_path, mode, out, name, eps_list;
    std::size_t steps = 0;
    std::uint64_t seed = 0;
    bool all = false;

    auto* run_cmd = app.add_subcommand("run", "run one configuration");
    run_cmd->add_option("--config", config_path, "JSON config file")->required();
    run_cmd->add_option("--mode", mode, "oracle | facet | continuum | compare | scenario");
    run_cmd->add_option("--steps", steps, "number of steps");
    run_cmd->add_option("--out", out, "output path prefix");
    run_cmd->add_option("--seed", seed, "seed");

    auto* sc_cmd = app.add_subcommand("scenario", "run built-in scenarios");
    sc_cmd->add_option("--name", name, "scenario name");
    sc_cmd->add_flag("--all", all, "run every scenario");
    sc_cmd->add_option("--out", out, "output path prefix");

    auto* cmp_cmd = app.add_subcommand("compare", "oracle against displacement laws");
    cmp_cmd->add_option("--config", config_path, "JSON config file")->required();
    cmp_cmd->add_option("--eps-list", eps_list, "comma separated, decreasing");
    cmp_cmd->add_option("--out", out, "output path prefix");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        RunConfig c;
        if (*run_cmd) {
            c = load_config(config_path);
            if (!mode.empty()) c.mode = parse_mode(mode);
            if (run_cmd->count("--steps")) c.steps = steps;
            if (run_cmd->count("--seed")) c.seed = seed;
        } else if (*sc_cmd) {
            if (all == !name.empty()) throw ConfigError("scenario", "give exactly one of --name and --all");
            c.mode = RunMode::Scenario;
            c.scenario = all ? "all" : name;
        } else {
            c = load_config(config_path);
            c.mode = RunMode::Compare;
            if (!eps_list.empty()) c.eps_list = parse_eps_list(eps_list);
        }
        if (!out.empty()) c.output = out;
        std::string summary;
        const int code = run(c, &summary);
        if (c.mode == RunMode::Compare)
            print_compare(summary);
        else if (c.mode == RunMode::Scenario)
            print_scenarios(summary);
        else
            std::printf("%s: status %s, wrote %s.{jsonl,csv,summary.json}\n", to_string(c.mode).c_str(),
                        nlohmann::json::parse(summary).value("status", "ok").c_str(), c.output.c_str());
        return code;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "usage error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
