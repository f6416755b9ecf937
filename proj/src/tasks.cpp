#include "sagaqnet/tasks.hpp"

#include <algorithm>
#include <cmath>

namespace sqn {

namespace {

const CapabilitySet& require_capability(const ResourceView& view, const NodeId& node, TaskKind kind) {
    const auto* cap = view.find_capability(node);
    if (!cap) throw TaskError("Incapable(" + node + ", " + to_string(kind) + "): unknown node");
    if (!cap->tasks.count(kind))
        throw TaskError("Incapable(" + node + ", " + to_string(kind) + ")");
    return *cap;
}

const ChannelEdge& require_channel(const ResourceView& view, const NodeId& a, const NodeId& b) {
    const auto* ch = view.find_channel(a, b);
    if (!ch) throw TaskError("NoChannel(" + a + "," + b + ")");
    return *ch;
}

const EntanglementRecord& require_record(const ResourceView& view, const RecordId& id) {
    const auto* rec = view.find_record(id);
    if (!rec) throw TaskError("NoRecord(" + id + ")");
    return *rec;
}

void require_arity(const TaskInstance& t, size_t participants, size_t records) {
    if (t.params.participants.size() != participants)
        throw TaskError(to_string(t.kind) + ": expected " + std::to_string(participants) +
                        " participants");
    if (t.params.input_records.size() != records)
        throw TaskError(to_string(t.kind) + ": expected " + std::to_string(records) +
                        " input records");
}

bool classically_connected(const ResourceView& view, const NodeId& a, const NodeId& b) {
    if (a == b) return true;
    std::set<NodeId> seen{a};
    std::vector<NodeId> frontier{a};
    while (!frontier.empty()) {
        NodeId cur = frontier.back();
        frontier.pop_back();
        for (const auto& l : view.classical()) {
            NodeId next;
            if (l.a == cur) next = l.b;
            else if (l.b == cur) next = l.a;
            else continue;
            if (next == b) return true;
            if (seen.insert(next).second) frontier.push_back(next);
        }
    }
    return false;
}

BellDiag decayed_pair(const ResourceView& view, const EntanglementRecord& rec, double now) {
    Quality q = view.decayed_quality(rec, now);
    if (!std::holds_alternative<BellDiag>(q))
        throw TaskError("record " + rec.id + " is not bipartite");
    return std::get<BellDiag>(q);
}

/// Scalar estimate -> Bell-diagonal form for records that shrink back to pairs.
Quality quality_for_graph(const GraphState& g, double f) {
    if (g.vertices().size() == 2) return werner(std::clamp(f, 0.25, 1.0));
    return f;
}

NoiseParams node_noise(const ResourceView& view, const NodeId& node) {
    const auto* cap = view.find_capability(node);
    return cap ? cap->noise : NoiseParams{};
}

VertexRef send_half(const EntanglementRecord& rec, const NodeId& sender) {
    // the moved qubit: highest slot of the record on the sending node
    const VertexRef* best = nullptr;
    for (const auto& v : rec.graph.vertices())
        if (v.node == sender && (!best || v.slot > best->slot)) best = &v;
    if (!best) throw TaskError("send_qubit: record " + rec.id + " has no qubit at " + sender);
    return *best;
}

GraphState relabel(const GraphState& g, const VertexRef& from, const VertexRef& to) {
    GraphState out;
    for (const auto& v : g.vertices()) out.add_vertex(v == from ? to : v);
    for (const auto& e : g.edges()) {
        VertexRef a = (e.a == from) ? to : e.a;
        VertexRef b = (e.b == from) ? to : e.b;
        out.add_edge(a, b);
    }
    return out;
}

/// Graph-op qubit fallback: the record's unique vertex at the acting node.
/// Lets planners defer vertex choice until the record's final shape is known.
VertexRef resolve_vertex(const TaskInstance& t, const EntanglementRecord& rec, size_t idx) {
    if (idx < t.params.qubits.size()) return t.params.qubits[idx];
    const NodeId& node = t.params.participants.at(0);
    const VertexRef* found = nullptr;
    for (const auto& v : rec.graph.vertices()) {
        if (v.node != node) continue;
        if (found) throw TaskError(to_string(t.kind) + ": ambiguous qubit at " + node +
                                   " in record " + rec.id);
        found = &v;
    }
    if (!found)
        throw TaskError(to_string(t.kind) + ": record " + rec.id + " has no qubit at " + node);
    return *found;
}

Quality depolarize_quality(const Quality& q, double weight) {
    if (std::holds_alternative<BellDiag>(q)) return depolarize(std::get<BellDiag>(q), weight);
    double f = std::get<double>(q);
    return f * (1.0 - weight) + weight * 0.25;
}

}  // namespace

NodeId TaskInstance::responsible() const {
    switch (kind) {
        case TaskKind::Midpoint:
        case TaskKind::MidpointSource:
            return params.participants.at(1);
        default:
            return params.participants.at(0);
    }
}

TaskInstance instantiate(TaskKind kind, const TaskParams& params, const ResourceView& view,
                         const std::string& id) {
    TaskInstance t{id, kind, params};
    for (const auto& n : params.participants) require_capability(view, n, kind);
    for (const auto& rid : params.input_records) require_record(view, rid);
    switch (kind) {
        case TaskKind::Midpoint:
        case TaskKind::MidpointSource:
            require_arity(t, 3, 0);
            require_channel(view, params.participants[0], params.participants[1]);
            require_channel(view, params.participants[1], params.participants[2]);
            break;
        case TaskKind::Swap: {
            require_arity(t, 1, 2);
            const auto& pivot = params.participants[0];
            for (const auto& rid : params.input_records) {
                const auto& rec = require_record(view, rid);
                if (rec.graph.vertices().size() != 2)
                    throw TaskError("swap: record " + rid + " is not bipartite");
                if (!rec.nodes().count(pivot))
                    throw TaskError("swap: record " + rid + " has no qubit at pivot " + pivot);
            }
            break;
        }
        case TaskKind::Teleport: {
            require_arity(t, 2, 1);
            const auto& rec = require_record(view, params.input_records[0]);
            auto ns = rec.nodes();
            if (!ns.count(params.participants[0]) || !ns.count(params.participants[1]))
                throw TaskError("teleport: record does not span the endpoints");
            break;
        }
        case TaskKind::Purify:
        case TaskKind::Pump:
            require_arity(t, 2, 2);
            for (const auto& rid : params.input_records) {
                const auto& rec = require_record(view, rid);
                if (rec.graph.vertices().size() != 2)
                    throw TaskError("purify: record " + rid + " is not bipartite");
            }
            break;
        case TaskKind::SendQubit:
            require_arity(t, 2, params.input_records.size());
            if (params.input_records.size() > 1) throw TaskError("send_qubit: at most one record");
            require_channel(view, params.participants[0], params.participants[1]);
            break;
        case TaskKind::PrepareBell:
            require_arity(t, 1, 0);
            break;
        case TaskKind::ApplyOp:
            require_arity(t, 1, 1);
            break;
        case TaskKind::GraphMerge:
            require_arity(t, 1, 2);
            if (!params.qubits.empty() && params.qubits.size() != 2)
                throw TaskError("graph_merge: expected two qubits");
            break;
        case TaskKind::GraphCut:
        case TaskKind::GraphLC:
        case TaskKind::GraphFission:
            require_arity(t, 1, 1);
            if (!params.qubits.empty() && params.qubits.size() != 1)
                throw TaskError(to_string(kind) + ": expected one qubit");
            break;
        case TaskKind::ClassicalSend:
            require_arity(t, 2, 0);
            if (!classically_connected(view, params.participants[0], params.participants[1]))
                throw TaskError("classical_send: no classical route " + params.participants[0] +
                                "->" + params.participants[1]);
            break;
        case TaskKind::ClassicalBroadcast:
            require_arity(t, 1, 0);
            break;
    }
    return t;
}

EffectResult apply_effect(const TaskInstance& t, const ResourceView& view, double now, double rand,
                          const SagaId& owning_saga) {
    EffectResult res;
    const auto& p = t.params;
    switch (t.kind) {
        case TaskKind::Midpoint:
        case TaskKind::MidpointSource: {
            const NodeId &left = p.participants[0], &center = p.participants[1],
                         &right = p.participants[2];
            const auto& chL = require_channel(view, left, center);
            const auto& chR = require_channel(view, center, right);
            double p_s = (1.0 - chL.p_loss) * (1.0 - chR.p_loss);
            if (rand >= p_s) {
                res.outcome = TaskOutcome::HeraldedFailure;
                return res;
            }
            BellDiag perfect;
            BellDiag quality;
            if (t.kind == TaskKind::Midpoint) {
                BellDiag prep_l = depolarize(perfect, node_noise(view, left).p_gate);
                BellDiag prep_r = depolarize(perfect, node_noise(view, right).p_gate);
                quality = swap_map(depolarize(prep_l, chL.q_depol), depolarize(prep_r, chR.q_depol),
                                   node_noise(view, center));
            } else {
                BellDiag prep_c = depolarize(perfect, node_noise(view, center).p_gate);
                quality = depolarize(depolarize(prep_c, chL.q_depol), chR.q_depol);
            }
            EntanglementRecord rec;
            rec.id = p.output_records.at(0);
            rec.graph = bell_graph({left, view.next_free_slot(left)},
                                   {right, view.next_free_slot(right)});
            rec.quality = quality;
            rec.created_at = now;
            rec.lock = owning_saga;
            res.changes.push_back(PutRecord{rec});
            return res;
        }
        case TaskKind::Swap: {
            const auto& r1 = require_record(view, p.input_records[0]);
            const auto& r2 = require_record(view, p.input_records[1]);
            const NodeId& pivot = p.participants[0];
            auto outer_of = [&](const EntanglementRecord& r) {
                for (const auto& v : r.graph.vertices())
                    if (v.node != pivot) return v;
                // both qubits at the pivot: keep the lower slot as the survivor
                return *r.graph.vertices().begin();
            };
            BellDiag q = swap_map(decayed_pair(view, r1, now), decayed_pair(view, r2, now),
                                  node_noise(view, pivot));
            EntanglementRecord rec;
            rec.id = p.output_records.at(0);
            rec.graph = bell_graph(outer_of(r1), outer_of(r2));
            rec.quality = q;
            rec.created_at = now;
            rec.lock = owning_saga;
            res.changes.push_back(RemoveRecord{r1.id});
            res.changes.push_back(RemoveRecord{r2.id});
            res.changes.push_back(PutRecord{rec});
            return res;
        }
        case TaskKind::Teleport: {
            const auto& rec = require_record(view, p.input_records[0]);
            BellDiag q = decayed_pair(view, rec, now);
            res.changes.push_back(RemoveRecord{rec.id});
            res.notes.push_back({"delivered_qubit", p.payload.empty() ? "qubit" : p.payload});
            res.notes.push_back({"channel_fidelity", std::to_string(q.fidelity())});
            return res;
        }
        case TaskKind::Purify:
        case TaskKind::Pump: {
            const auto& kept = require_record(view, p.input_records[0]);
            const auto& fresh = require_record(view, p.input_records[1]);
            NoiseParams noise = node_noise(view, t.responsible());
            auto pr = purify_map(decayed_pair(view, kept, now), decayed_pair(view, fresh, now),
                                 noise, t.kind == TaskKind::Pump ? PurifyMode::Pump
                                                                 : PurifyMode::Purify);
            bool success = pr.p_succ > 0.0 && rand < pr.p_succ;
            if (t.kind == TaskKind::Purify) {
                res.changes.push_back(RemoveRecord{kept.id});
                res.changes.push_back(RemoveRecord{fresh.id});
                if (success) {
                    EntanglementRecord out;
                    out.id = p.output_records.at(0);
                    out.graph = kept.graph;
                    out.quality = pr.out;
                    out.created_at = now;
                    out.lock = owning_saga;
                    res.changes.push_back(PutRecord{out});
                } else {
                    res.outcome = TaskOutcome::HeraldedFailure;
                }
            } else {
                res.changes.push_back(RemoveRecord{fresh.id});
                EntanglementRecord out = kept;
                out.quality = success ? pr.out : pr.out_fail;
                out.created_at = now;
                out.lock = owning_saga.empty() ? kept.lock : owning_saga;
                res.changes.push_back(PutRecord{out});
                if (!success) res.outcome = TaskOutcome::HeraldedFailure;
            }
            return res;
        }
        case TaskKind::GraphMerge: {
            const auto& r1 = require_record(view, p.input_records[0]);
            const auto& r2 = require_record(view, p.input_records[1]);
            GraphState merged = merge_vertices(r1.graph, resolve_vertex(t, r1, 0), r2.graph,
                                               resolve_vertex(t, r2, 1));
            double f = multi_fidelity_compose(view.decayed_fidelity(r1, now),
                                              view.decayed_fidelity(r2, now), 1,
                                              node_noise(view, p.participants[0]));
            EntanglementRecord out;
            out.id = p.output_records.at(0);
            out.graph = merged;
            out.quality = quality_for_graph(merged, f);
            out.created_at = now;
            out.lock = owning_saga;
            res.changes.push_back(RemoveRecord{r1.id});
            res.changes.push_back(RemoveRecord{r2.id});
            res.changes.push_back(PutRecord{out});
            return res;
        }
        case TaskKind::GraphCut: {
            const auto& rec = require_record(view, p.input_records[0]);
            GraphState cut = measure_z(rec.graph, resolve_vertex(t, rec, 0));
            double f = multi_fidelity_compose(view.decayed_fidelity(rec, now), 1.0, 1,
                                              node_noise(view, p.participants[0]));
            res.changes.push_back(RemoveRecord{rec.id});
            if (cut.vertices().size() >= 2) {
                EntanglementRecord out;
                out.id = p.output_records.at(0);
                out.graph = cut;
                out.quality = quality_for_graph(cut, f);
                out.created_at = now;
                out.lock = owning_saga;
                res.changes.push_back(PutRecord{out});
            }
            return res;
        }
        case TaskKind::GraphLC: {
            const auto& rec = require_record(view, p.input_records[0]);
            EntanglementRecord out = rec;
            out.graph = local_complement(rec.graph, resolve_vertex(t, rec, 0));
            double f = multi_fidelity_compose(view.decayed_fidelity(rec, now), 1.0, 1,
                                              node_noise(view, p.participants[0]));
            out.quality = quality_for_graph(out.graph, f);
            out.created_at = now;
            if (!owning_saga.empty()) out.lock = owning_saga;
            res.changes.push_back(PutRecord{out});
            return res;
        }
        case TaskKind::GraphFission: {
            const auto& rec = require_record(view, p.input_records[0]);
            auto [part1, part2] = fission(rec.graph, resolve_vertex(t, rec, 0), p.fission_keep);
            double f = multi_fidelity_compose(view.decayed_fidelity(rec, now), 1.0, 2,
                                              node_noise(view, p.participants[0]));
            res.changes.push_back(RemoveRecord{rec.id});
            int out_idx = 0;
            for (const auto& part : {part1, part2}) {
                if (part.vertices().size() < 2) continue;
                EntanglementRecord out;
                out.id = p.output_records.at(out_idx++);
                out.graph = part;
                out.quality = quality_for_graph(part, f);
                out.created_at = now;
                out.lock = owning_saga;
                res.changes.push_back(PutRecord{out});
            }
            return res;
        }
        case TaskKind::SendQubit: {
            const auto& ch = require_channel(view, p.participants[0], p.participants[1]);
            if (rand < ch.p_loss) {
                res.outcome = TaskOutcome::HeraldedFailure;
                if (!p.input_records.empty())
                    res.changes.push_back(RemoveRecord{p.input_records[0]});
                return res;
            }
            if (!p.input_records.empty()) {
                const auto& rec = require_record(view, p.input_records[0]);
                VertexRef moved = p.qubits.empty() ? send_half(rec, p.participants[0]) : p.qubits[0];
                EntanglementRecord out = rec;
                out.graph = relabel(rec.graph, moved,
                                    {p.participants[1], view.next_free_slot(p.participants[1])});
                out.quality = depolarize_quality(view.decayed_quality(rec, now), ch.q_depol);
                out.created_at = now;
                if (!owning_saga.empty()) out.lock = owning_saga;
                res.changes.push_back(PutRecord{out});
            } else {
                res.notes.push_back({"delivered_qubit", p.payload.empty() ? "qubit" : p.payload});
            }
            return res;
        }
        case TaskKind::PrepareBell: {
            const NodeId& node = p.participants[0];
            std::set<int> used;
            for (const auto& [id, r] : view.entanglement())
                for (const auto& v : r.graph.vertices())
                    if (v.node == node) used.insert(v.slot);
            int s1 = 0;
            while (used.count(s1)) ++s1;
            int s2 = s1 + 1;
            while (used.count(s2)) ++s2;
            EntanglementRecord rec;
            rec.id = p.output_records.at(0);
            rec.graph = bell_graph({node, s1}, {node, s2});
            rec.quality = depolarize(BellDiag{}, node_noise(view, node).p_gate);
            rec.created_at = now;
            rec.lock = owning_saga;
            res.changes.push_back(PutRecord{rec});
            return res;
        }
        case TaskKind::ApplyOp: {
            const auto& rec = require_record(view, p.input_records[0]);
            NoiseParams noise = node_noise(view, p.participants[0]);
            double charge = (p.payload == "measurement") ? noise.p_meas : noise.p_gate;
            EntanglementRecord out = rec;
            out.quality = depolarize_quality(view.decayed_quality(rec, now), charge);
            out.created_at = now;
            res.changes.push_back(PutRecord{out});
            return res;
        }
        case TaskKind::ClassicalSend:
        case TaskKind::ClassicalBroadcast:
            res.notes.push_back({"payload", p.payload});
            return res;
    }
    return res;
}

SubtaskDag decompose_midpoint(const TaskInstance& t, const ResourceView& view) {
    if (t.kind != TaskKind::Midpoint) throw TaskError("decompose_midpoint: wrong kind");
    const NodeId &left = t.params.participants[0], &center = t.params.participants[1],
                 &right = t.params.participants[2];
    RecordId final_id = t.params.output_records.at(0);
    RecordId rec_l = final_id + ".L", rec_r = final_id + ".R";

    SubtaskDag dag;
    // later subtasks consume records the earlier ones create, so validate
    // against a scratch copy with the planned effects replayed (rand = 0)
    ResourceView scratch = view;
    auto add = [&](TaskKind kind, TaskParams params, const std::string& suffix) {
        params.max_attempts = t.params.max_attempts;
        dag.tasks.push_back(instantiate(kind, params, scratch, t.id + suffix));
        for (const auto& c : apply_effect(dag.tasks.back(), scratch, 0.0, 0.0).changes)
            scratch.apply_change_direct(c);
        return int(dag.tasks.size()) - 1;
    };
    TaskParams prep_l;
    prep_l.participants = {left};
    prep_l.output_records = {rec_l};
    int i_prep_l = add(TaskKind::PrepareBell, prep_l, ".prepL");

    TaskParams prep_r;
    prep_r.participants = {right};
    prep_r.output_records = {rec_r};
    int i_prep_r = add(TaskKind::PrepareBell, prep_r, ".prepR");

    TaskParams send_l;
    send_l.participants = {left, center};
    send_l.input_records = {rec_l};
    int i_send_l = add(TaskKind::SendQubit, send_l, ".sendL");

    TaskParams send_r;
    send_r.participants = {right, center};
    send_r.input_records = {rec_r};
    int i_send_r = add(TaskKind::SendQubit, send_r, ".sendR");

    TaskParams swap;
    swap.participants = {center};
    swap.input_records = {rec_l, rec_r};
    swap.output_records = {final_id};
    int i_swap = add(TaskKind::Swap, swap, ".swap");

    // both sends wait for both preparations (synchronized departure)
    dag.edges = {{i_prep_l, i_send_l}, {i_prep_l, i_send_r}, {i_prep_r, i_send_l},
                 {i_prep_r, i_send_r}, {i_send_l, i_swap},   {i_send_r, i_swap}};
    return dag;
}

double task_duration(const TaskInstance& t, const ResourceView& view, const OpDurations& ops) {
    const auto& p = t.params;
    switch (t.kind) {
        case TaskKind::SendQubit: {
            const auto* ch = view.find_channel(p.participants[0], p.participants[1]);
            return ch ? ch->latency : 0.0;
        }
        case TaskKind::PrepareBell:
            return ops.bell_prep;
        case TaskKind::ApplyOp:
            return p.payload == "measurement" ? ops.measurement : ops.gate;
        case TaskKind::Midpoint:
        case TaskKind::MidpointSource: {
            const auto* chL = view.find_channel(p.participants[0], p.participants[1]);
            const auto* chR = view.find_channel(p.participants[1], p.participants[2]);
            double lat = std::max(chL ? chL->latency : 0.0, chR ? chR->latency : 0.0);
            double tail = (t.kind == TaskKind::Midpoint) ? ops.measurement : 0.0;
            return ops.bell_prep + lat + tail;
        }
        case TaskKind::Swap:
        case TaskKind::Teleport:
            return ops.measurement;
        case TaskKind::Purify:
        case TaskKind::Pump:
            return ops.gate + ops.measurement;
        case TaskKind::GraphMerge:
        case TaskKind::GraphLC:
            return ops.gate;
        case TaskKind::GraphCut:
            return ops.measurement;
        case TaskKind::GraphFission:
            return 2.0 * ops.gate;
        case TaskKind::ClassicalSend:
        case TaskKind::ClassicalBroadcast:
            return 0.0;
    }
    return 0.0;
}

}  // namespace sqn
