#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sagaqnet/simengine.hpp"

namespace {

int load(const std::string& path, sqn::Scenario& out) {
    std::ifstream in(path);
    if (!in) {
        std::cerr << "error: cannot open " << path << "\n";
        return 2;
    }
    std::ostringstream text;
    text << in.rdbuf();
    auto parsed = sqn::parse_scenario(text.str());
    if (!parsed.scenario) {
        for (const auto& d : parsed.diagnostics)
            std::cerr << path << ":" << d.line << ": " << d.message << "\n";
        return 1;
    }
    out = std::move(*parsed.scenario);
    return 0;
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("SAGAQNET_SEED")) return std::strtoull(env, nullptr, 10);
    return 0;
}

bool write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
    return bool(out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum network control-plane simulator"};
    app.require_subcommand(1);

    std::string scenario_path, mode_flag, trace_path, metrics_path, objective_id;
    std::uint64_t seed = default_seed();

    auto* cmd_run = app.add_subcommand("run", "execute a scenario");
    cmd_run->add_option("--scenario", scenario_path, "scenario file")->required();
    cmd_run->add_option("--seed", seed, "random seed (default: SAGAQNET_SEED or 0)");
    cmd_run->add_option("--mode", mode_flag, "override execution mode for all objectives")
        ->check(CLI::IsMember({"orchestration", "choreography"}));
    cmd_run->add_option("--trace", trace_path, "write the trace here instead of stdout");
    cmd_run->add_option("--metrics", metrics_path, "write the metrics block here");

    auto* cmd_plan = app.add_subcommand("plan", "print a planned saga DAG without executing");
    cmd_plan->add_option("--scenario", scenario_path, "scenario file")->required();
    cmd_plan->add_option("--objective", objective_id, "objective id to plan")->required();

    auto* cmd_validate = app.add_subcommand("validate", "check a scenario file");
    cmd_validate->add_option("--scenario", scenario_path, "scenario file")->required();

    CLI11_PARSE(app, argc, argv);

    sqn::Scenario scenario;
    if (int rc = load(scenario_path, scenario); rc != 0) return rc;

    try {
        if (cmd_validate->parsed()) {
            std::cout << "ok\n";
            return 0;
        }
        if (cmd_plan->parsed()) {
            const sqn::Objective* objective = nullptr;
            for (const auto& o : scenario.objectives)
                if (o.id == objective_id) objective = &o;
            if (!objective) {
                std::cerr << "error: no objective '" << objective_id << "' in scenario\n";
                return 1;
            }
            sqn::ResourceView view;
            for (const auto& [id, caps] : scenario.nodes) view.preload_capability(caps);
            for (const auto& e : scenario.channels) view.preload_channel(e);
            for (const auto& l : scenario.classical) view.preload_classical(l);
            for (const auto& r : scenario.entanglement) view.preload_record(r);
            sqn::NodeId initiator = objective->kind == sqn::ObjectiveKind::EstablishGraphState
                                        ? *objective->graph.nodes.begin()
                                        : std::min(objective->a, objective->b);
            sqn::Saga saga = sqn::plan(*objective, view, scenario.policy, objective->arrival,
                                       initiator, objective->id);
            std::cout << sqn::serialize(saga);
            return 0;
        }
        if (!mode_flag.empty()) {
            auto mode = mode_flag == "choreography" ? sqn::ExecMode::Choreography
                                                    : sqn::ExecMode::Orchestration;
            for (auto& o : scenario.objectives) o.mode = mode;
        }
        sqn::RunResult result = sqn::run(scenario, seed);
        if (trace_path.empty()) std::cout << result.trace;
        else if (!write_file(trace_path, result.trace)) {
            std::cerr << "error: cannot write " << trace_path << "\n";
            return 2;
        }
        if (!metrics_path.empty() && !write_file(metrics_path, result.metrics_text())) {
            std::cerr << "error: cannot write " << metrics_path << "\n";
            return 2;
        }
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
