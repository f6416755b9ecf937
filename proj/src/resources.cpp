#include "sagaqnet/resources.hpp"

#include <algorithm>
#include <cmath>

namespace sqn {

double fidelity_of(const Quality& q) {
    if (std::holds_alternative<BellDiag>(q)) return std::get<BellDiag>(q).fidelity();
    return std::get<double>(q);
}

bool quality_equal(const Quality& a, const Quality& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<BellDiag>(a))
        return std::get<BellDiag>(a) == std::get<BellDiag>(b);
    return std::get<double>(a) == std::get<double>(b);
}

NodeId EntanglementRecord::home_node() const {
    NodeId best;
    for (const auto& v : graph.vertices())
        if (best.empty() || v.node < best) best = v.node;
    return best;
}

std::set<NodeId> EntanglementRecord::nodes() const {
    std::set<NodeId> out;
    for (const auto& v : graph.vertices()) out.insert(v.node);
    return out;
}

std::string to_string(TaskKind k) {
    switch (k) {
        case TaskKind::SendQubit: return "send_qubit";
        case TaskKind::PrepareBell: return "prepare_bell";
        case TaskKind::ApplyOp: return "apply_op";
        case TaskKind::Midpoint: return "midpoint";
        case TaskKind::MidpointSource: return "midpoint_source";
        case TaskKind::Swap: return "swap";
        case TaskKind::Teleport: return "teleport";
        case TaskKind::Purify: return "purify";
        case TaskKind::Pump: return "pump";
        case TaskKind::GraphMerge: return "graph_merge";
        case TaskKind::GraphCut: return "graph_cut";
        case TaskKind::GraphLC: return "graph_lc";
        case TaskKind::GraphFission: return "graph_fission";
        case TaskKind::ClassicalSend: return "classical_send";
        case TaskKind::ClassicalBroadcast: return "classical_broadcast";
    }
    return "?";
}

std::set<TaskKind> all_task_kinds() {
    return {TaskKind::SendQubit,    TaskKind::PrepareBell,   TaskKind::ApplyOp,
            TaskKind::Midpoint,     TaskKind::MidpointSource, TaskKind::Swap,
            TaskKind::Teleport,     TaskKind::Purify,        TaskKind::Pump,
            TaskKind::GraphMerge,   TaskKind::GraphCut,      TaskKind::GraphLC,
            TaskKind::GraphFission, TaskKind::ClassicalSend, TaskKind::ClassicalBroadcast};
}

std::set<TaskKind> storage_requiring_kinds() {
    return {TaskKind::PrepareBell, TaskKind::Midpoint, TaskKind::MidpointSource,
            TaskKind::Swap,        TaskKind::Teleport, TaskKind::Purify,
            TaskKind::Pump,        TaskKind::GraphMerge, TaskKind::GraphCut,
            TaskKind::GraphLC,     TaskKind::GraphFission};
}

std::string describe(const Change& c) {
    return std::visit(
        [](const auto& ch) -> std::string {
            using T = std::decay_t<decltype(ch)>;
            if constexpr (std::is_same_v<T, AddChannel>)
                return "add_channel " + ch.edge.a + "-" + ch.edge.b;
            else if constexpr (std::is_same_v<T, RemoveChannel>)
                return "remove_channel " + ch.a + "-" + ch.b;
            else if constexpr (std::is_same_v<T, AddClassicalLink>)
                return "add_classical " + ch.link.a + "-" + ch.link.b;
            else if constexpr (std::is_same_v<T, RemoveClassicalLink>)
                return "remove_classical " + ch.a + "-" + ch.b;
            else if constexpr (std::is_same_v<T, PutRecord>)
                return "put_record " + ch.record.id;
            else if constexpr (std::is_same_v<T, RemoveRecord>)
                return "remove_record " + ch.id;
            else if constexpr (std::is_same_v<T, SetCapability>)
                return "set_capability " + ch.caps.node;
            else if constexpr (std::is_same_v<T, LockRecord>)
                return "lock " + ch.id + " by " + ch.saga;
            else
                return "unlock " + ch.id;
        },
        c);
}

ApplyResult ResourceView::apply_update(const Update& u) {
    auto it = seq_.find(u.origin);
    if (it != seq_.end() && u.seq <= it->second) return {false, std::nullopt};  // stale
    ApplyResult res = apply_change(u.change);
    seq_[u.origin] = u.seq;
    return res;
}

ApplyResult ResourceView::apply_change(const Change& c) {
    return std::visit(
        [this](const auto& ch) -> ApplyResult {
            using T = std::decay_t<decltype(ch)>;
            if constexpr (std::is_same_v<T, AddChannel>) {
                channels_.insert(ch.edge);
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, RemoveChannel>) {
                auto it = std::find_if(channels_.begin(), channels_.end(), [&](const ChannelEdge& e) {
                    return (e.a == ch.a && e.b == ch.b) || (e.a == ch.b && e.b == ch.a);
                });
                if (it == channels_.end())
                    return {false, "remove_channel: unknown channel " + ch.a + "-" + ch.b};
                channels_.erase(it);
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, AddClassicalLink>) {
                classical_.insert(ch.link);
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, RemoveClassicalLink>) {
                auto it = std::find_if(classical_.begin(), classical_.end(), [&](const ClassicalLink& l) {
                    return (l.a == ch.a && l.b == ch.b) || (l.a == ch.b && l.b == ch.a);
                });
                if (it == classical_.end())
                    return {false, "remove_classical: unknown link " + ch.a + "-" + ch.b};
                classical_.erase(it);
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, PutRecord>) {
                entanglement_[ch.record.id] = ch.record;
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, RemoveRecord>) {
                if (!entanglement_.count(ch.id)) return {false, "remove_record: unknown id " + ch.id};
                entanglement_.erase(ch.id);
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, SetCapability>) {
                capabilities_[ch.caps.node] = ch.caps;
                return {true, std::nullopt};
            } else if constexpr (std::is_same_v<T, LockRecord>) {
                auto it = entanglement_.find(ch.id);
                if (it == entanglement_.end()) return {false, "lock: unknown id " + ch.id};
                it->second.lock = ch.saga;
                return {true, std::nullopt};
            } else {
                auto it = entanglement_.find(ch.id);
                if (it == entanglement_.end()) return {false, "unlock: unknown id " + ch.id};
                it->second.lock.clear();
                return {true, std::nullopt};
            }
        },
        c);
}

const EntanglementRecord* ResourceView::find_record(const RecordId& id) const {
    auto it = entanglement_.find(id);
    return it == entanglement_.end() ? nullptr : &it->second;
}

const CapabilitySet* ResourceView::find_capability(const NodeId& node) const {
    auto it = capabilities_.find(node);
    return it == capabilities_.end() ? nullptr : &it->second;
}

const ChannelEdge* ResourceView::find_channel(const NodeId& a, const NodeId& b) const {
    for (const auto& e : channels_)
        if ((e.a == a && e.b == b) || (e.a == b && e.b == a)) return &e;
    return nullptr;
}

const ClassicalLink* ResourceView::find_classical(const NodeId& a, const NodeId& b) const {
    for (const auto& l : classical_)
        if ((l.a == a && l.b == b) || (l.a == b && l.b == a)) return &l;
    return nullptr;
}

std::pair<bool, std::string> ResourceView::acquire_lock(const RecordId& record, const SagaId& saga) {
    auto it = entanglement_.find(record);
    if (it == entanglement_.end()) throw ResourceError("acquire_lock: unknown record " + record);
    if (it->second.lock.empty() || it->second.lock == saga) {
        std::string previous = it->second.lock;
        it->second.lock = saga;
        return {true, previous};
    }
    return {false, it->second.lock};
}

void ResourceView::release_lock(const RecordId& record, const SagaId& saga) {
    auto it = entanglement_.find(record);
    if (it == entanglement_.end()) return;
    if (it->second.lock == saga) it->second.lock.clear();
}

Quality ResourceView::decayed_quality(const EntanglementRecord& rec, double now) const {
    double dt = std::max(0.0, now - rec.created_at);
    if (std::holds_alternative<BellDiag>(rec.quality)) {
        // memory constant: smallest t_mem among the record's nodes
        double t_mem = 1.0;
        bool found = false;
        for (const auto& n : rec.nodes()) {
            if (const auto* cap = find_capability(n)) {
                t_mem = found ? std::min(t_mem, cap->noise.t_mem) : cap->noise.t_mem;
                found = true;
            }
        }
        return decay(std::get<BellDiag>(rec.quality), dt, t_mem);
    }
    double t_mem = 1.0;
    bool found = false;
    for (const auto& n : rec.nodes()) {
        if (const auto* cap = find_capability(n)) {
            t_mem = found ? std::min(t_mem, cap->noise.t_mem) : cap->noise.t_mem;
            found = true;
        }
    }
    double q = 1.0 - std::exp(-dt / t_mem);
    double f = std::get<double>(rec.quality);
    // per-qubit scalar bound, one factor per vertex
    double per = std::pow(1.0 - q, double(rec.graph.vertices().size()));
    return std::clamp(f * per + (1.0 - per) * 0.25, 0.0, 1.0);
}

double ResourceView::decayed_fidelity(const EntanglementRecord& rec, double now) const {
    return fidelity_of(decayed_quality(rec, now));
}

std::vector<RecordId> ResourceView::find_entanglement(const NodeId& x, const NodeId& y, double now,
                                                     double min_f) const {
    std::vector<std::pair<double, RecordId>> hits;
    for (const auto& [id, rec] : entanglement_) {
        if (!rec.lock.empty()) continue;
        if (rec.graph.vertices().size() != 2) continue;
        auto ns = rec.nodes();
        if (!(ns.count(x) && ns.count(y))) continue;
        if (x != y && ns.size() != 2) continue;
        double f = decayed_fidelity(rec, now);
        if (f < min_f) continue;
        hits.push_back({f, id});
    }
    std::sort(hits.begin(), hits.end(), [](const auto& l, const auto& r) {
        if (l.first != r.first) return l.first > r.first;
        return l.second < r.second;
    });
    std::vector<RecordId> out;
    for (auto& [f, id] : hits) out.push_back(id);
    return out;
}

int ResourceView::next_free_slot(const NodeId& node) const {
    std::set<int> used;
    for (const auto& [id, rec] : entanglement_)
        for (const auto& v : rec.graph.vertices())
            if (v.node == node) used.insert(v.slot);
    int slot = 0;
    while (used.count(slot)) ++slot;
    return slot;
}

bool ResourceView::operator==(const ResourceView& other) const {
    if (channels_ != other.channels_ || classical_ != other.classical_) return false;
    if (seq_ != other.seq_) return false;
    if (entanglement_.size() != other.entanglement_.size()) return false;
    for (const auto& [id, rec] : entanglement_) {
        auto it = other.entanglement_.find(id);
        if (it == other.entanglement_.end()) return false;
        const auto& o = it->second;
        if (!(rec.graph == o.graph) || !quality_equal(rec.quality, o.quality) ||
            rec.created_at != o.created_at || rec.lock != o.lock)
            return false;
    }
    if (capabilities_.size() != other.capabilities_.size()) return false;
    for (const auto& [n, cap] : capabilities_) {
        auto it = other.capabilities_.find(n);
        if (it == other.capabilities_.end()) return false;
        const auto& o = it->second;
        if (cap.tasks != o.tasks || cap.memory_slots != o.memory_slots) return false;
        if (cap.noise.q_channel != o.noise.q_channel || cap.noise.p_loss != o.noise.p_loss ||
            cap.noise.p_gate != o.noise.p_gate || cap.noise.p_meas != o.noise.p_meas ||
            cap.noise.t_mem != o.noise.t_mem)
            return false;
    }
    return true;
}

Update advertise_capabilities(const NodeId& node, const CapabilitySet& caps,
                              std::uint64_t next_seq) {
    if (caps.memory_slots < 0) throw ResourceError("advertise_capabilities: negative memory_slots");
    CapabilitySet c = caps;
    c.node = node;
    if (c.memory_slots == 0)
        for (const auto& k : storage_requiring_kinds()) c.tasks.erase(k);
    return Update{node, next_seq, SetCapability{c}};
}

}  // namespace sqn
