#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "sagaqnet/scenario.hpp"

namespace sqn {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RunResult {
    std::string trace;                      // newline-delimited event records
    std::map<NodeId, ResourceView> views;   // per-node state after quiescence
    std::map<std::string, double> metrics;  // name -> value, deterministic order

    /// The metrics as the trailing `metric=<name> value=<number>` block.
    std::string metrics_text() const;
};

/// Deterministic discrete-event run: identical (scenario, seed) pairs give
/// byte-identical traces.
RunResult run(const Scenario& scenario, std::uint64_t seed);

}  // namespace sqn
