#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "sagaqnet/graphstate.hpp"
#include "sagaqnet/noisemodel.hpp"

namespace sqn {

using NodeId = std::string;
using RecordId = std::string;
using SagaId = std::string;

struct ResourceError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct TimeWindow {
    double start = 0.0;
    double end = 0.0;
    auto operator<=>(const TimeWindow&) const = default;
};

/// Quantum channel between two nodes.
struct ChannelEdge {
    NodeId a, b;
    double length_km = 0.0;
    double p_loss = 0.0;
    double q_depol = 0.0;
    double latency = 0.0;
    std::vector<TimeWindow> available_windows;  // empty: always available

    auto operator<=>(const ChannelEdge&) const = default;
};

struct ClassicalLink {
    NodeId a, b;
    double latency = 0.0;
    auto operator<=>(const ClassicalLink&) const = default;
};

/// Quality of a shared state: full Bell-diagonal vector for pairs, a
/// scalar lower-bound estimate for multipartite records.
using Quality = std::variant<BellDiag, double>;

double fidelity_of(const Quality& q);
bool quality_equal(const Quality& a, const Quality& b);

struct EntanglementRecord {
    RecordId id;
    GraphState graph;
    Quality quality;
    double created_at = 0.0;
    SagaId lock;  // empty when unlocked

    bool operator==(const EntanglementRecord&) const = default;

    /// Lowest node id among the record's vertices; arbitrates lock requests.
    NodeId home_node() const;
    std::set<NodeId> nodes() const;
};

enum class TaskKind {
    SendQubit,
    PrepareBell,
    ApplyOp,
    Midpoint,
    MidpointSource,
    Swap,
    Teleport,
    Purify,
    Pump,
    GraphMerge,
    GraphCut,
    GraphLC,
    GraphFission,
    ClassicalSend,
    ClassicalBroadcast,
};

std::string to_string(TaskKind k);
std::set<TaskKind> all_task_kinds();
/// Kinds a node without quantum memory cannot offer.
std::set<TaskKind> storage_requiring_kinds();

struct CapabilitySet {
    NodeId node;
    std::set<TaskKind> tasks;
    NoiseParams noise;
    int memory_slots = 0;

    auto operator<=>(const CapabilitySet&) const = default;
};

// -- replicated-view updates -------------------------------------------------

struct AddChannel { ChannelEdge edge; };
struct RemoveChannel { NodeId a, b; };
struct AddClassicalLink { ClassicalLink link; };
struct RemoveClassicalLink { NodeId a, b; };
struct PutRecord { EntanglementRecord record; };  // add or replace
struct RemoveRecord { RecordId id; };
struct SetCapability { CapabilitySet caps; };
struct LockRecord { RecordId id; SagaId saga; };
struct UnlockRecord { RecordId id; };

using Change = std::variant<AddChannel, RemoveChannel, AddClassicalLink, RemoveClassicalLink,
                            PutRecord, RemoveRecord, SetCapability, LockRecord, UnlockRecord>;

struct Update {
    NodeId origin;
    std::uint64_t seq = 0;
    Change change;
};

std::string describe(const Change& c);

struct ApplyResult {
    bool applied = false;                  // false for stale/duplicate or conflict
    std::optional<std::string> conflict;   // set when the change referenced unknown state
};

/// One node's replica of the network resource state.
class ResourceView {
public:
    ApplyResult apply_update(const Update& u);
    /// Apply a change without sequence bookkeeping (local effects, estimator).
    ApplyResult apply_change_direct(const Change& c) { return apply_change(c); }

    const std::set<ChannelEdge>& channels() const { return channels_; }
    const std::set<ClassicalLink>& classical() const { return classical_; }
    const std::map<RecordId, EntanglementRecord>& entanglement() const { return entanglement_; }
    const std::map<NodeId, CapabilitySet>& capabilities() const { return capabilities_; }
    const std::map<NodeId, std::uint64_t>& seq() const { return seq_; }

    const EntanglementRecord* find_record(const RecordId& id) const;
    const CapabilitySet* find_capability(const NodeId& node) const;
    const ChannelEdge* find_channel(const NodeId& a, const NodeId& b) const;
    const ClassicalLink* find_classical(const NodeId& a, const NodeId& b) const;

    /// Lock grant check: grants iff unlocked or already held by `saga`
    /// (reentrant). Mutates the local replica on grant.
    std::pair<bool, std::string> acquire_lock(const RecordId& record, const SagaId& saga);
    void release_lock(const RecordId& record, const SagaId& saga);

    /// Unlocked bipartite records between the two endpoints whose
    /// decay-adjusted fidelity at `now` is at least min_f, best first,
    /// ties by id.
    std::vector<RecordId> find_entanglement(const NodeId& x, const NodeId& y, double now,
                                            double min_f) const;

    /// Decay-adjusted quality of a record at time `now`.
    Quality decayed_quality(const EntanglementRecord& rec, double now) const;
    double decayed_fidelity(const EntanglementRecord& rec, double now) const;

    /// Lowest memory slot on `node` not used by any record vertex.
    int next_free_slot(const NodeId& node) const;

    // direct mutation, used only for preloading scenarios before the run
    void preload_channel(const ChannelEdge& e) { channels_.insert(e); }
    void preload_classical(const ClassicalLink& l) { classical_.insert(l); }
    void preload_record(const EntanglementRecord& r) { entanglement_[r.id] = r; }
    void preload_capability(const CapabilitySet& c) { capabilities_[c.node] = c; }

    bool operator==(const ResourceView& other) const;

private:
    ApplyResult apply_change(const Change& c);

    std::set<ChannelEdge> channels_;
    std::set<ClassicalLink> classical_;
    std::map<RecordId, EntanglementRecord> entanglement_;
    std::map<NodeId, CapabilitySet> capabilities_;
    std::map<NodeId, std::uint64_t> seq_;
};

/// Capability advertisement carrying the node's next sequence number.
Update advertise_capabilities(const NodeId& node, const CapabilitySet& caps,
                              std::uint64_t next_seq);

}  // namespace sqn
