#pragma once

#include <string>
#include <vector>

#include "sagaqnet/tasks.hpp"

namespace sqn {

struct PlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ObjectiveKind { EstablishBell, EstablishGraphState, SendQubit, SendClassical };
enum class ExecMode { Orchestration, Choreography };

std::string to_string(ObjectiveKind k);
std::string to_string(ExecMode m);

/// Requested multipartite shape, edges over node ids (one qubit per node).
struct GraphSpec {
    std::set<NodeId> nodes;
    std::set<std::pair<NodeId, NodeId>> edges;  // stored with a < b

    bool operator==(const GraphSpec&) const = default;
};

struct Objective {
    std::string id;
    ObjectiveKind kind = ObjectiveKind::EstablishBell;
    NodeId a, b;          // endpoints for Bell / SendQubit / SendClassical
    GraphSpec graph;      // EstablishGraphState only
    double min_fidelity = 0.0;
    int priority = 1;     // higher is more urgent
    double arrival = 0.0;
    ExecMode mode = ExecMode::Orchestration;
    std::string payload;  // SendClassical / SendQubit descriptor

    bool operator==(const Objective&) const = default;
};

struct Saga {
    SagaId id;
    std::string objective;
    std::vector<TaskInstance> tasks;
    std::vector<std::pair<int, int>> deps;  // edge a -> b: b waits for a
    ExecMode mode = ExecMode::Orchestration;
    int priority = 1;
    NodeId initiator;
    std::vector<RecordId> input_locks;    // pre-existing records to lock first
    std::vector<RecordId> final_records;  // result records of the objective
};

/// Canonical serialization; plan determinism is checked on this string.
std::string serialize(const Saga& s);

struct PlannerPolicy {
    bool prefer_preshared = true;
    int purify_target_rounds = 2;
    int retry_cap = 10;
    double latency_weight = 1e-3;  // epsilon in cost = -ln(f_est) + eps * latency

    bool operator==(const PlannerPolicy&) const = default;
};

/// Derive a saga achieving the objective from the node's current view.
/// Deterministic for fixed inputs. Throws PlanError (NoRoute / Incapable /
/// Infeasible).
Saga plan(const Objective& o, const ResourceView& view, const PlannerPolicy& policy, double now,
          const NodeId& initiator, const SagaId& saga_id);

struct Estimate {
    double f_pred = 1.0;
    double t_pred = 0.0;
};

/// Expected-value walk of the DAG: closed-form quality maps along the
/// tasks, critical-path timing, retries at expected attempt counts.
Estimate estimate(const Saga& s, const ResourceView& view, double now,
                  const PlannerPolicy& policy = {}, const OpDurations& ops = {});

struct MaintainedPair {
    NodeId a, b;
    int low_water = 1;
    double min_fidelity = 0.5;

    bool operator==(const MaintainedPair&) const = default;
};

struct MonitorConfig {
    std::vector<MaintainedPair> pairs;
    double period = 1.0;

    bool operator==(const MonitorConfig&) const = default;
};

/// Replenishment objectives for maintained pairs below stock or fidelity
/// thresholds. Emitted at the lowest priority.
std::vector<Objective> monitor_tick(const ResourceView& view, const MonitorConfig& monitor,
                                    const PlannerPolicy& policy, double now);

}  // namespace sqn
