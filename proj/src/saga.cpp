#include "sagaqnet/saga.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>

namespace sqn {

std::string to_string(ObjectiveKind k) {
    switch (k) {
        case ObjectiveKind::EstablishBell: return "establish_bell";
        case ObjectiveKind::EstablishGraphState: return "establish_graph";
        case ObjectiveKind::SendQubit: return "send_qubit";
        case ObjectiveKind::SendClassical: return "send_classical";
    }
    return "?";
}

std::string to_string(ExecMode m) {
    return m == ExecMode::Orchestration ? "orchestration" : "choreography";
}

namespace {

// ---- path selection --------------------------------------------------------

double edge_cost(const ChannelEdge& e, const PlannerPolicy& policy) {
    double f_est = 1.0 - 0.75 * e.q_depol;
    return -std::log(std::max(f_est, 1e-9)) + policy.latency_weight * e.latency;
}

std::vector<NodeId> channel_path(const ResourceView& view, const NodeId& from, const NodeId& to,
                                 const PlannerPolicy& policy) {
    std::map<NodeId, double> dist;
    std::map<NodeId, NodeId> prev;
    std::set<std::pair<double, NodeId>> frontier;
    dist[from] = 0.0;
    frontier.insert({0.0, from});
    while (!frontier.empty()) {
        auto [d, cur] = *frontier.begin();
        frontier.erase(frontier.begin());
        if (cur == to) break;
        for (const auto& e : view.channels()) {
            NodeId next;
            if (e.a == cur) next = e.b;
            else if (e.b == cur) next = e.a;
            else continue;
            double nd = d + edge_cost(e, policy);
            auto it = dist.find(next);
            // lexicographic node-id tie-break keeps the path deterministic
            if (it == dist.end() || nd < it->second ||
                (nd == it->second && cur < prev[next])) {
                if (it != dist.end()) frontier.erase({it->second, next});
                dist[next] = nd;
                prev[next] = cur;
                frontier.insert({nd, next});
            }
        }
    }
    if (!dist.count(to)) throw PlanError("NoRoute(" + from + "," + to + ")");
    std::vector<NodeId> path{to};
    while (path.back() != from) path.push_back(prev[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

// ---- saga assembly ---------------------------------------------------------

/// Appends tasks in dependency order, validating each against a scratch view
/// into which planned effects are replayed (rand=0), so tasks may consume
/// records produced earlier in the same saga.
struct Builder {
    Saga& saga;
    ResourceView scratch;
    double now = 0.0;
    int record_counter = 0;

    Builder(Saga& s, const ResourceView& view, double t = 0.0) : saga(s), scratch(view), now(t) {}

    RecordId fresh_record() { return saga.id + ".r" + std::to_string(record_counter++); }

    void replay(const TaskInstance& t) {
        auto eff = apply_effect(t, scratch, now, 0.0, saga.id);
        for (const auto& c : eff.changes) scratch.apply_change_direct(c);
    }

    int add(TaskKind kind, TaskParams params, const std::vector<int>& deps) {
        std::string tid = saga.id + "." + std::to_string(saga.tasks.size());
        try {
            saga.tasks.push_back(instantiate(kind, params, scratch, tid));
        } catch (const TaskError& e) {
            throw PlanError(e.what());
        }
        replay(saga.tasks.back());
        int idx = int(saga.tasks.size()) - 1;
        for (int d : deps) saga.deps.push_back({d, idx});
        return idx;
    }
};

bool node_offers(const ResourceView& view, const NodeId& n, TaskKind k) {
    const auto* cap = view.find_capability(n);
    return cap && cap->tasks.count(k);
}

struct Produced {
    RecordId record;
    int producer;  // task index, -1 for pre-existing records
};

/// One fresh end-to-end pair along the channel path: midpoints on edge
/// pairs (midpoint-source where the center cannot do midpoint), a locally
/// prepared half sent directly for a leftover edge, swaps at the junctions.
Produced build_generation_chain(Builder& b, const std::vector<NodeId>& path, int retry_cap) {
    std::vector<Produced> segments;
    size_t i = 0;
    while (i + 1 < path.size()) {
        if (i + 2 < path.size()) {
            const NodeId &l = path[i], &c = path[i + 1], &r = path[i + 2];
            TaskKind kind = TaskKind::Midpoint;
            if (!node_offers(b.scratch, c, TaskKind::Midpoint) &&
                node_offers(b.scratch, c, TaskKind::MidpointSource))
                kind = TaskKind::MidpointSource;
            TaskParams params;
            params.participants = {l, c, r};
            params.output_records = {b.fresh_record()};
            params.max_attempts = retry_cap;
            int idx = b.add(kind, params, {});
            segments.push_back({params.output_records[0], idx});
            i += 2;
        } else {
            // leftover single edge: prepare a pair locally and send one half
            const NodeId &u = path[i], &v = path[i + 1];
            TaskParams prep;
            prep.participants = {u};
            prep.output_records = {b.fresh_record()};
            int prep_idx = b.add(TaskKind::PrepareBell, prep, {});
            TaskParams send;
            send.participants = {u, v};
            send.input_records = {prep.output_records[0]};
            send.max_attempts = retry_cap;
            int send_idx = b.add(TaskKind::SendQubit, send, {prep_idx});
            segments.push_back({prep.output_records[0], send_idx});
            i += 1;
        }
    }
    // swap left-to-right at the junctions
    size_t seg = 0;
    std::vector<NodeId> junctions;
    for (size_t k = 2; k + 1 < path.size(); k += 2) junctions.push_back(path[k]);
    if ((path.size() - 1) % 2 == 1 && path.size() > 2) junctions.push_back(path[path.size() - 2]);
    Produced current = segments[0];
    for (size_t s = 1; s < segments.size(); ++s) {
        TaskParams swap;
        swap.participants = {junctions.at(s - 1)};
        swap.input_records = {current.record, segments[s].record};
        swap.output_records = {b.fresh_record()};
        int idx = b.add(TaskKind::Swap, swap, {current.producer, segments[s].producer});
        current = {swap.output_records[0], idx};
        (void)seg;
    }
    return current;
}

/// Pairwise purification tournament over same-endpoint records.
Produced purify_tournament(Builder& b, std::vector<Produced> layer, const NodeId& a,
                           const NodeId& x) {
    NodeId lead = std::min(a, x), peer = std::max(a, x);
    while (layer.size() > 1) {
        std::vector<Produced> next;
        for (size_t i = 0; i + 1 < layer.size(); i += 2) {
            TaskParams purify;
            purify.participants = {lead, peer};
            purify.input_records = {layer[i].record, layer[i + 1].record};
            purify.output_records = {b.fresh_record()};
            std::vector<int> deps;
            if (layer[i].producer >= 0) deps.push_back(layer[i].producer);
            if (layer[i + 1].producer >= 0) deps.push_back(layer[i + 1].producer);
            int idx = b.add(TaskKind::Purify, purify, deps);
            next.push_back({purify.output_records[0], idx});
        }
        if (layer.size() % 2 == 1) next.push_back(layer.back());
        layer = std::move(next);
    }
    return layer[0];
}

// pre-shared record pool: unordered node pair -> ids, best decayed fidelity first
std::map<std::pair<NodeId, NodeId>, std::vector<RecordId>> record_pool(const ResourceView& view,
                                                                       double now) {
    std::map<std::pair<NodeId, NodeId>, std::vector<std::pair<double, RecordId>>> raw;
    for (const auto& [id, rec] : view.entanglement()) {
        if (!rec.lock.empty() || rec.graph.vertices().size() != 2) continue;
        auto ns = rec.nodes();
        if (ns.size() != 2) continue;
        auto it = ns.begin();
        NodeId x = *it++;
        NodeId y = *it;
        raw[{std::min(x, y), std::max(x, y)}].push_back({view.decayed_fidelity(rec, now), id});
    }
    std::map<std::pair<NodeId, NodeId>, std::vector<RecordId>> pool;
    for (auto& [pair, v] : raw) {
        std::sort(v.begin(), v.end(), [](const auto& l, const auto& r) {
            if (l.first != r.first) return l.first > r.first;
            return l.second < r.second;
        });
        for (auto& [f, id] : v) pool[pair].push_back(id);
    }
    return pool;
}

std::vector<NodeId> entanglement_path(
    const std::map<std::pair<NodeId, NodeId>, std::vector<RecordId>>& pool, const NodeId& from,
    const NodeId& to) {
    std::map<NodeId, NodeId> prev;
    std::set<NodeId> seen{from};
    std::deque<NodeId> frontier{from};
    while (!frontier.empty()) {
        NodeId cur = frontier.front();
        frontier.pop_front();
        if (cur == to) break;
        std::set<NodeId> nexts;
        for (const auto& [pair, ids] : pool) {
            if (ids.empty()) continue;
            if (pair.first == cur) nexts.insert(pair.second);
            if (pair.second == cur) nexts.insert(pair.first);
        }
        for (const auto& n : nexts)
            if (seen.insert(n).second) {
                prev[n] = cur;
                frontier.push_back(n);
            }
    }
    if (!seen.count(to) || (from != to && !prev.count(to))) return {};
    std::vector<NodeId> path{to};
    while (path.back() != from) path.push_back(prev[path.back()]);
    std::reverse(path.begin(), path.end());
    return path;
}

Saga plan_bell_preshared(const Objective& o, const ResourceView& view,
                         const PlannerPolicy& policy, double now, const NodeId& initiator,
                         const SagaId& saga_id) {
    auto pool = record_pool(view, now);
    auto path = entanglement_path(pool, std::min(o.a, o.b), std::max(o.a, o.b));
    if (path.empty()) throw PlanError("NoRoute: no pre-shared route " + o.a + "-" + o.b);

    auto assemble = [&](bool with_purify) {
        Saga s;
        s.id = saga_id;
        s.objective = o.id;
        s.mode = o.mode;
        s.priority = o.priority;
        s.initiator = initiator;
        Builder b(s, view, now);
        std::vector<Produced> segments;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            auto key = std::make_pair(std::min(path[i], path[i + 1]),
                                      std::max(path[i], path[i + 1]));
            const auto& ids = pool.at(key);
            if (with_purify && ids.size() >= 2) {
                s.input_locks.push_back(ids[0]);
                s.input_locks.push_back(ids[1]);
                segments.push_back(purify_tournament(
                    b, {{ids[0], -1}, {ids[1], -1}}, path[i], path[i + 1]));
            } else {
                s.input_locks.push_back(ids[0]);
                segments.push_back({ids[0], -1});
            }
        }
        Produced current = segments[0];
        for (size_t i = 1; i < segments.size(); ++i) {
            TaskParams swap;
            swap.participants = {path[i]};
            swap.input_records = {current.record, segments[i].record};
            swap.output_records = {b.fresh_record()};
            std::vector<int> deps;
            if (current.producer >= 0) deps.push_back(current.producer);
            if (segments[i].producer >= 0) deps.push_back(segments[i].producer);
            int idx = b.add(TaskKind::Swap, swap, deps);
            current = {swap.output_records[0], idx};
        }
        s.final_records = {current.record};
        return s;
    };

    Saga bare = assemble(false);
    if (estimate(bare, view, now, policy).f_pred >= o.min_fidelity) return bare;
    Saga purified = assemble(true);
    if (estimate(purified, view, now, policy).f_pred >= o.min_fidelity) return purified;
    throw PlanError("Infeasible: pre-shared route cannot reach min_fidelity");
}

Saga plan_bell_generation(const Objective& o, const ResourceView& view,
                          const PlannerPolicy& policy, double now, const NodeId& initiator,
                          const SagaId& saga_id) {
    auto path = channel_path(view, o.a, o.b, policy);
    for (int rounds = 0; rounds <= policy.purify_target_rounds; ++rounds) {
        Saga s;
        s.id = saga_id;
        s.objective = o.id;
        s.mode = o.mode;
        s.priority = o.priority;
        s.initiator = initiator;
        Builder b(s, view, now);
        int copies = 1 << rounds;
        std::vector<Produced> chains;
        for (int c = 0; c < copies; ++c)
            chains.push_back(build_generation_chain(b, path, policy.retry_cap));
        Produced final_rec = purify_tournament(b, chains, o.a, o.b);
        s.final_records = {final_rec.record};
        if (estimate(s, view, now, policy).f_pred >= o.min_fidelity) return s;
    }
    throw PlanError("Infeasible: cannot reach min_fidelity within the purification round cap");
}

Saga plan_send_qubit(const Objective& o, const ResourceView& view, const PlannerPolicy& policy,
                     double now, const NodeId& initiator, const SagaId& saga_id) {
    Saga s;
    s.id = saga_id;
    s.objective = o.id;
    s.mode = o.mode;
    s.priority = o.priority;
    s.initiator = initiator;
    Builder b(s, view, now);

    double teleport_f = -1.0;
    RecordId teleport_rec;
    if (policy.prefer_preshared) {
        auto recs = view.find_entanglement(o.a, o.b, now, 0.0);
        if (!recs.empty()) {
            teleport_rec = recs[0];
            teleport_f = view.decayed_fidelity(*view.find_record(teleport_rec), now);
        }
    }
    double channel_f = -1.0;
    std::vector<NodeId> path;
    try {
        path = channel_path(view, o.a, o.b, policy);
        channel_f = 1.0;
        for (size_t i = 0; i + 1 < path.size(); ++i)
            channel_f *= 1.0 - 0.75 * view.find_channel(path[i], path[i + 1])->q_depol;
    } catch (const PlanError&) {
    }
    if (teleport_f < 0 && channel_f < 0) throw PlanError("NoRoute(" + o.a + "," + o.b + ")");

    if (teleport_f >= channel_f) {
        TaskParams tp;
        tp.participants = {o.a, o.b};
        tp.input_records = {teleport_rec};
        tp.payload = o.payload;
        b.add(TaskKind::Teleport, tp, {});
        s.input_locks = {teleport_rec};
    } else {
        int last = -1;
        for (size_t i = 0; i + 1 < path.size(); ++i) {
            TaskParams send;
            send.participants = {path[i], path[i + 1]};
            send.payload = o.payload;
            send.max_attempts = policy.retry_cap;
            last = b.add(TaskKind::SendQubit, send, last >= 0 ? std::vector<int>{last}
                                                              : std::vector<int>{});
        }
    }
    return s;
}

// node-level shape of a one-qubit-per-node record graph
std::set<std::pair<NodeId, NodeId>> shape_of(const GraphState& g) {
    std::set<std::pair<NodeId, NodeId>> out;
    for (const auto& e : g.edges())
        out.insert({std::min(e.a.node, e.b.node), std::max(e.a.node, e.b.node)});
    return out;
}

/// Breadth-first search over local-complementation moves on the node-level
/// shape; returns the node sequence reaching `target`, empty if start equals
/// target, nullopt if unreachable within the budget.
std::optional<std::vector<NodeId>> lc_sequence(const std::set<std::pair<NodeId, NodeId>>& start,
                                               const std::set<std::pair<NodeId, NodeId>>& target,
                                               const std::set<NodeId>& nodes) {
    using Shape = std::set<std::pair<NodeId, NodeId>>;
    auto complement_at = [&](const Shape& shape, const NodeId& v) {
        std::set<NodeId> nb;
        for (const auto& e : shape) {
            if (e.first == v) nb.insert(e.second);
            if (e.second == v) nb.insert(e.first);
        }
        Shape out = shape;
        for (auto i = nb.begin(); i != nb.end(); ++i)
            for (auto j = std::next(i); j != nb.end(); ++j) {
                std::pair<NodeId, NodeId> e{std::min(*i, *j), std::max(*i, *j)};
                if (out.count(e)) out.erase(e);
                else out.insert(e);
            }
        return out;
    };
    std::map<Shape, std::pair<Shape, NodeId>> prev;
    std::deque<Shape> frontier{start};
    prev[start] = {start, ""};
    size_t budget = 20000;
    while (!frontier.empty() && budget-- > 0) {
        Shape cur = frontier.front();
        frontier.pop_front();
        if (cur == target) {
            std::vector<NodeId> seq;
            Shape at = cur;
            while (!(prev[at].second.empty())) {
                seq.push_back(prev[at].second);
                at = prev[at].first;
            }
            std::reverse(seq.begin(), seq.end());
            return seq;
        }
        for (const auto& v : nodes) {
            Shape next = complement_at(cur, v);
            if (!prev.count(next)) {
                prev[next] = {cur, v};
                frontier.push_back(next);
            }
        }
    }
    return std::nullopt;
}

Saga plan_graph_state(const Objective& o, const ResourceView& view, const PlannerPolicy& policy,
                      double now, const NodeId& initiator, const SagaId& saga_id) {
    if (o.graph.nodes.size() < 2) throw PlanError("Infeasible: graph objective needs >= 2 nodes");
    // spanning tree over the requested edges (sorted order, union-find)
    std::map<NodeId, NodeId> parent;
    for (const auto& n : o.graph.nodes) parent[n] = n;
    std::function<NodeId(NodeId)> find = [&](NodeId x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    std::vector<std::pair<NodeId, NodeId>> tree;
    for (const auto& e : o.graph.edges) {
        NodeId ra = find(e.first), rb = find(e.second);
        if (ra == rb) continue;
        parent[ra] = rb;
        tree.push_back(e);
    }
    NodeId root = find(*o.graph.nodes.begin());
    for (const auto& n : o.graph.nodes)
        if (find(n) != root) throw PlanError("NoRoute: requested graph is disconnected");

    Saga s;
    s.id = saga_id;
    s.objective = o.id;
    s.mode = o.mode;
    s.priority = o.priority;
    s.initiator = initiator;

    // one Bell segment per tree edge, planned recursively
    std::vector<Produced> bells;
    for (size_t k = 0; k < tree.size(); ++k) {
        Objective sub;
        sub.id = o.id + ".e" + std::to_string(k);
        sub.kind = ObjectiveKind::EstablishBell;
        sub.a = tree[k].first;
        sub.b = tree[k].second;
        sub.min_fidelity = o.min_fidelity;
        sub.priority = o.priority;
        sub.mode = o.mode;
        Saga part = plan(sub, view, policy, now, initiator, saga_id + ".e" + std::to_string(k));
        int offset = int(s.tasks.size());
        for (auto& t : part.tasks) s.tasks.push_back(t);
        for (auto& [x, y] : part.deps) s.deps.push_back({x + offset, y + offset});
        for (auto& l : part.input_locks) s.input_locks.push_back(l);
        int producer = -1;
        for (int i = 0; i < int(part.tasks.size()); ++i)
            for (const auto& out : part.tasks[i].params.output_records)
                if (out == part.final_records.at(0)) producer = i + offset;
        bells.push_back({part.final_records.at(0), producer});
    }

    // merge the segments into one record along the tree
    Builder b(s, view, now);
    b.record_counter = 1000;  // keep clear of sub-saga record ids
    std::map<NodeId, int> component;  // node -> index into `current`
    Produced current = bells[0];
    std::set<NodeId> covered{tree[0].first, tree[0].second};
    std::set<std::pair<NodeId, NodeId>> built_shape{
        {std::min(tree[0].first, tree[0].second), std::max(tree[0].first, tree[0].second)}};
    std::vector<bool> used(tree.size(), false);
    used[0] = true;
    for (size_t round = 1; round < tree.size(); ++round) {
        // next unused tree edge touching the covered set
        size_t pick = tree.size();
        for (size_t k = 0; k < tree.size(); ++k) {
            if (used[k]) continue;
            if (covered.count(tree[k].first) || covered.count(tree[k].second)) {
                pick = k;
                break;
            }
        }
        if (pick == tree.size()) throw PlanError("Infeasible: tree merge ordering failed");
        used[pick] = true;
        NodeId shared = covered.count(tree[pick].first) ? tree[pick].first : tree[pick].second;
        NodeId fresh = (shared == tree[pick].first) ? tree[pick].second : tree[pick].first;
        TaskParams merge;
        merge.participants = {shared};
        merge.input_records = {current.record, bells[pick].record};
        merge.output_records = {b.fresh_record()};
        std::vector<int> deps;
        if (current.producer >= 0) deps.push_back(current.producer);
        if (bells[pick].producer >= 0) deps.push_back(bells[pick].producer);
        int idx = b.add(TaskKind::GraphMerge, merge, deps);
        current = {merge.output_records[0], idx};
        covered.insert(fresh);
        built_shape.insert({std::min(tree[pick].first, tree[pick].second),
                            std::max(tree[pick].first, tree[pick].second)});
    }

    // sculpt non-tree edges by local complementation search
    std::set<std::pair<NodeId, NodeId>> target;
    for (const auto& e : o.graph.edges)
        target.insert({std::min(e.first, e.second), std::max(e.first, e.second)});
    if (built_shape != target) {
        auto seq = lc_sequence(built_shape, target, o.graph.nodes);
        if (!seq) throw PlanError("Infeasible: requested graph not reachable by merges and LC");
        for (const auto& v : *seq) {
            TaskParams lc;
            lc.participants = {v};
            lc.input_records = {current.record};
            std::vector<int> deps;
            if (current.producer >= 0) deps.push_back(current.producer);
            int idx = b.add(TaskKind::GraphLC, lc, deps);
            current = {current.record, idx};
        }
    }
    s.final_records = {current.record};
    return s;
}

}  // namespace

Saga plan(const Objective& o, const ResourceView& view, const PlannerPolicy& policy, double now,
          const NodeId& initiator, const SagaId& saga_id) {
    switch (o.kind) {
        case ObjectiveKind::EstablishBell: {
            if (o.a == o.b) throw PlanError("Infeasible: identical endpoints");
            if (policy.prefer_preshared) {
                try {
                    return plan_bell_preshared(o, view, policy, now, initiator, saga_id);
                } catch (const PlanError&) {
                    // fall through to fresh generation
                }
            }
            return plan_bell_generation(o, view, policy, now, initiator, saga_id);
        }
        case ObjectiveKind::SendQubit:
            return plan_send_qubit(o, view, policy, now, initiator, saga_id);
        case ObjectiveKind::EstablishGraphState:
            return plan_graph_state(o, view, policy, now, initiator, saga_id);
        case ObjectiveKind::SendClassical: {
            Saga s;
            s.id = saga_id;
            s.objective = o.id;
            s.mode = o.mode;
            s.priority = o.priority;
            s.initiator = initiator;
            Builder b(s, view, now);
            TaskParams send;
            send.participants = {o.a, o.b};
            send.payload = o.payload;
            b.add(TaskKind::ClassicalSend, send, {});
            return s;
        }
    }
    throw PlanError("unknown objective kind");
}

Estimate estimate(const Saga& s, const ResourceView& view, double now,
                  const PlannerPolicy& policy, const OpDurations& ops) {
    Estimate est;

    // topological order (Kahn, stable by task index)
    std::vector<int> indegree(s.tasks.size(), 0);
    for (const auto& [a, b] : s.deps) indegree[b]++;
    std::set<int> ready;
    for (int i = 0; i < int(s.tasks.size()); ++i)
        if (indegree[i] == 0) ready.insert(i);
    std::vector<int> order;
    auto indeg = indegree;
    while (!ready.empty()) {
        int i = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (const auto& [a, b] : s.deps)
            if (a == i && --indeg[b] == 0) ready.insert(b);
    }
    if (order.size() != s.tasks.size()) throw PlanError("saga DAG has a cycle");

    ResourceView scratch = view;
    std::vector<double> completion(s.tasks.size(), now);
    for (int i : order) {
        const auto& t = s.tasks[i];
        double start = now;
        for (const auto& [a, b] : s.deps)
            if (b == i) start = std::max(start, completion[a]);
        double attempts = 1.0;
        if (t.kind == TaskKind::Midpoint || t.kind == TaskKind::MidpointSource) {
            const auto* chL = scratch.find_channel(t.params.participants[0], t.params.participants[1]);
            const auto* chR = scratch.find_channel(t.params.participants[1], t.params.participants[2]);
            double p_s = (1.0 - (chL ? chL->p_loss : 0.0)) * (1.0 - (chR ? chR->p_loss : 0.0));
            attempts = p_s > 0 ? std::min(1.0 / p_s, double(policy.retry_cap)) : policy.retry_cap;
        } else if (t.kind == TaskKind::SendQubit) {
            const auto* ch = scratch.find_channel(t.params.participants[0], t.params.participants[1]);
            double p_s = 1.0 - (ch ? ch->p_loss : 0.0);
            attempts = p_s > 0 ? std::min(1.0 / p_s, double(policy.retry_cap)) : policy.retry_cap;
        }
        completion[i] = start + attempts * task_duration(t, scratch, ops);
        auto eff = apply_effect(t, scratch, completion[i], 0.0, s.id);
        for (const auto& c : eff.changes) scratch.apply_change_direct(c);
        est.t_pred = std::max(est.t_pred, completion[i] - now);
    }
    double f = 1.0;
    for (const auto& rid : s.final_records) {
        const auto* rec = scratch.find_record(rid);
        // a missing final record means the expected-value walk cannot succeed
        f = rec ? std::min(f, scratch.decayed_fidelity(*rec, now + est.t_pred)) : 0.0;
    }
    est.f_pred = f;
    return est;
}

std::vector<Objective> monitor_tick(const ResourceView& view, const MonitorConfig& monitor,
                                    const PlannerPolicy& /*policy*/, double now) {
    std::vector<Objective> out;
    for (const auto& mp : monitor.pairs) {
        auto ids = view.find_entanglement(mp.a, mp.b, now, mp.min_fidelity);
        if (int(ids.size()) >= mp.low_water) continue;
        Objective o;
        o.id = "mon." + mp.a + "-" + mp.b;
        o.kind = ObjectiveKind::EstablishBell;
        o.a = mp.a;
        o.b = mp.b;
        o.min_fidelity = mp.min_fidelity;
        o.priority = 0;  // monitor runs below every application objective
        o.arrival = now;
        out.push_back(o);
    }
    return out;
}

std::string serialize(const Saga& s) {
    std::ostringstream os;
    os << "saga id=" << s.id << " objective=" << s.objective << " mode=" << to_string(s.mode)
       << " priority=" << s.priority << " initiator=" << s.initiator << "\n";
    os << "locks";
    for (const auto& l : s.input_locks) os << " " << l;
    os << "\nfinals";
    for (const auto& f : s.final_records) os << " " << f;
    os << "\n";
    for (size_t i = 0; i < s.tasks.size(); ++i) {
        const auto& t = s.tasks[i];
        os << "task " << i << " id=" << t.id << " kind=" << to_string(t.kind) << " participants=";
        for (const auto& p : t.params.participants) os << p << ",";
        os << " inputs=";
        for (const auto& r : t.params.input_records) os << r << ",";
        os << " outputs=";
        for (const auto& r : t.params.output_records) os << r << ",";
        os << " qubits=";
        for (const auto& q : t.params.qubits) os << to_string(q) << ",";
        os << "\n";
    }
    auto deps = s.deps;
    std::sort(deps.begin(), deps.end());
    for (const auto& [a, b] : deps) os << "dep " << a << "->" << b << "\n";
    return os.str();
}

}  // namespace sqn
