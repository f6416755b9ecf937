#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sagaqnet/saga.hpp"

namespace sqn {

/// Run configuration: topology, initial entanglement, objectives, knobs.
struct Scenario {
    std::map<NodeId, CapabilitySet> nodes;
    std::vector<ChannelEdge> channels;
    std::vector<ClassicalLink> classical;
    std::vector<EntanglementRecord> entanglement;
    std::vector<Objective> objectives;
    PlannerPolicy policy;
    MonitorConfig monitor;
    double horizon = 0.0;  // 0: run until the event queue drains

    bool operator==(const Scenario& other) const;
};

struct Diagnostic {
    int line = 0;
    std::string message;
};

struct ParseResult {
    std::optional<Scenario> scenario;  // set iff diagnostics is empty
    std::vector<Diagnostic> diagnostics;
};

/// Line-oriented grammar: section headers `[nodes] [channels] [classical]
/// [entanglement] [objectives] [policy] [monitor]`, one record per line as
/// space-separated key=value pairs, `#` comments.
ParseResult parse_scenario(const std::string& text);

/// Canonical text form; parse_scenario(print_scenario(s)) round-trips.
std::string print_scenario(const Scenario& s);

}  // namespace sqn
