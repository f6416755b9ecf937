#include "sagaqnet/graphstate.hpp"

#include <algorithm>

namespace sqn {

std::string to_string(const VertexRef& v) {
    return v.node + ":" + std::to_string(v.slot);
}

Edge::Edge(VertexRef x, VertexRef y) {
    if (x == y) throw GraphStateError("self-loop edge at " + to_string(x));
    if (y < x) std::swap(x, y);
    a = std::move(x);
    b = std::move(y);
}

void GraphState::add_vertex(const VertexRef& v) {
    if (v.slot < 0) throw GraphStateError("negative slot in " + to_string(v));
    vertices_.insert(v);
}

void GraphState::add_edge(const VertexRef& a, const VertexRef& b) {
    Edge e(a, b);
    if (!has_vertex(a) || !has_vertex(b))
        throw GraphStateError("edge endpoint not in graph: " + to_string(a) + "-" + to_string(b));
    edges_.insert(e);
}

bool GraphState::has_edge(const VertexRef& a, const VertexRef& b) const {
    return edges_.count(Edge(a, b)) != 0;
}

std::set<VertexRef> GraphState::neighbors(const VertexRef& v) const {
    std::set<VertexRef> out;
    for (const auto& e : edges_) {
        if (e.a == v) out.insert(e.b);
        if (e.b == v) out.insert(e.a);
    }
    return out;
}

std::string to_string(const GraphState& g) {
    std::string s = "V{";
    for (const auto& v : g.vertices()) s += to_string(v) + ",";
    s += "} E{";
    for (const auto& e : g.edges()) s += to_string(e.a) + "-" + to_string(e.b) + ",";
    s += "}";
    return s;
}

GraphState bell_graph(const VertexRef& a, const VertexRef& b) {
    if (a == b) throw GraphStateError("bell_graph endpoints must differ");
    GraphState g;
    g.add_vertex(a);
    g.add_vertex(b);
    g.add_edge(a, b);
    return g;
}

GraphState local_complement(const GraphState& g, const VertexRef& v) {
    if (!g.has_vertex(v)) throw GraphStateError("local_complement: vertex not in graph");
    std::set<VertexRef> nb = g.neighbors(v);
    GraphState out;
    for (const auto& u : g.vertices()) out.add_vertex(u);
    for (const auto& e : g.edges()) {
        bool inside = nb.count(e.a) && nb.count(e.b);
        if (!inside) out.add_edge(e.a, e.b);
    }
    std::vector<VertexRef> ns(nb.begin(), nb.end());
    for (size_t i = 0; i < ns.size(); ++i)
        for (size_t j = i + 1; j < ns.size(); ++j)
            if (!g.has_edge(ns[i], ns[j])) out.add_edge(ns[i], ns[j]);
    return out;
}

GraphState measure_z(const GraphState& g, const VertexRef& v) {
    if (!g.has_vertex(v)) throw GraphStateError("measure_z: vertex not in graph");
    GraphState out;
    for (const auto& u : g.vertices())
        if (u != v) out.add_vertex(u);
    for (const auto& e : g.edges())
        if (e.a != v && e.b != v) out.add_edge(e.a, e.b);
    return out;
}

GraphState merge_vertices(const GraphState& g1, const VertexRef& v1,
                          const GraphState& g2, const VertexRef& v2) {
    if (!g1.has_vertex(v1)) throw GraphStateError("merge_vertices: v1 not in g1");
    if (!g2.has_vertex(v2)) throw GraphStateError("merge_vertices: v2 not in g2");
    for (const auto& u : g2.vertices())
        if (g1.has_vertex(u))
            throw GraphStateError("merge_vertices: overlapping vertex sets at " + to_string(u));
    GraphState out;
    for (const auto& u : g1.vertices()) out.add_vertex(u);
    for (const auto& u : g2.vertices())
        if (u != v2) out.add_vertex(u);
    for (const auto& e : g1.edges()) out.add_edge(e.a, e.b);
    for (const auto& e : g2.edges()) {
        VertexRef a = (e.a == v2) ? v1 : e.a;
        VertexRef b = (e.b == v2) ? v1 : e.b;
        out.add_edge(a, b);
    }
    return out;
}

namespace {

GraphState component_of(const GraphState& g, const VertexRef& start) {
    std::set<VertexRef> seen{start};
    std::vector<VertexRef> frontier{start};
    while (!frontier.empty()) {
        VertexRef cur = frontier.back();
        frontier.pop_back();
        for (const auto& n : g.neighbors(cur))
            if (seen.insert(n).second) frontier.push_back(n);
    }
    GraphState out;
    for (const auto& v : seen) out.add_vertex(v);
    for (const auto& e : g.edges())
        if (seen.count(e.a) && seen.count(e.b)) out.add_edge(e.a, e.b);
    return out;
}

}  // namespace

std::pair<GraphState, GraphState> fission(const GraphState& g, const VertexRef& v,
                                          const std::set<VertexRef>& keep) {
    if (!g.has_vertex(v)) throw GraphStateError("fission: vertex not in graph");
    std::set<VertexRef> nb = g.neighbors(v);
    for (const auto& s : keep)
        if (!nb.count(s))
            throw GraphStateError("fission: " + to_string(s) + " is not a neighbor of " + to_string(v));

    // fresh vertex: same node, lowest slot unused in g
    std::set<int> used;
    for (const auto& u : g.vertices())
        if (u.node == v.node) used.insert(u.slot);
    int slot = 0;
    while (used.count(slot)) ++slot;
    VertexRef fresh{v.node, slot};

    GraphState split;
    for (const auto& u : g.vertices()) split.add_vertex(u);
    split.add_vertex(fresh);
    for (const auto& e : g.edges()) {
        if (e.a != v && e.b != v) {
            split.add_edge(e.a, e.b);
            continue;
        }
        const VertexRef& other = (e.a == v) ? e.b : e.a;
        if (keep.count(other))
            split.add_edge(v, other);
        else
            split.add_edge(fresh, other);
    }
    GraphState first = component_of(split, v);
    GraphState second = component_of(split, fresh);
    if (first.has_vertex(fresh))
        throw GraphStateError("fission: shares remain connected through the rest of the graph");
    return {first, second};
}

}  // namespace sqn
