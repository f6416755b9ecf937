#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sagaqnet/resources.hpp"

namespace sqn {

struct TaskError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Kind-specific task parameters. Unused fields stay empty.
struct TaskParams {
    std::vector<NodeId> participants;       // kind-specific arity
    std::vector<RecordId> input_records;    // consumed records
    std::vector<VertexRef> qubits;          // operated-on qubits (graph ops, sends)
    std::set<VertexRef> fission_keep;       // GraphFission share
    std::vector<RecordId> output_records;   // reserved ids for created records
    std::string payload;                    // classical payload / op name
    int max_attempts = 10;
};

struct TaskInstance {
    std::string id;
    TaskKind kind = TaskKind::ClassicalSend;
    TaskParams params;

    /// Node that runs the effect (center for midpoints, pivot for swap, ...).
    NodeId responsible() const;
};

enum class TaskOutcome { Success, HeraldedFailure };

struct TraceNote {
    std::string key;
    std::string value;
};

struct EffectResult {
    TaskOutcome outcome = TaskOutcome::Success;
    std::vector<Change> changes;       // record creations/consumptions to broadcast
    std::vector<TraceNote> notes;      // extra trace detail (teleport delivery etc.)
};

/// Validate a task against the view: participants advertise the kind,
/// channels exist, input records exist and are lockable.
/// Throws TaskError with an Incapable / NoChannel / NoRecord message.
TaskInstance instantiate(TaskKind kind, const TaskParams& params, const ResourceView& view,
                         const std::string& id = "t0");

/// Deterministic resource-effect semantics; `rand` is one unit-interval
/// sample deciding stochastic success. The view is not mutated: the caller
/// applies the returned changes.
EffectResult apply_effect(const TaskInstance& t, const ResourceView& view, double now, double rand,
                          const SagaId& owning_saga = "");

/// The Midpoint decomposition: two Bell preparations, two synchronized
/// sends toward the center, one swap at the center.
struct SubtaskDag {
    std::vector<TaskInstance> tasks;
    std::vector<std::pair<int, int>> edges;  // dependency a -> b (indices)
};

SubtaskDag decompose_midpoint(const TaskInstance& t, const ResourceView& view);

/// Fixed durations of local quantum operations, seconds.
struct OpDurations {
    double gate = 1e-6;
    double measurement = 1e-6;
    double bell_prep = 1e-6;
};

/// Wall-clock cost of one attempt of the task.
double task_duration(const TaskInstance& t, const ResourceView& view,
                     const OpDurations& ops = {});

}  // namespace sqn
