#pragma once

#include <compare>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sqn {

struct GraphStateError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// One qubit held by a node: (node id, memory slot).
struct VertexRef {
    std::string node;
    int slot = 0;

    auto operator<=>(const VertexRef&) const = default;
};

std::string to_string(const VertexRef& v);

/// Undirected edge, stored with endpoints in sorted order.
struct Edge {
    VertexRef a, b;

    Edge(VertexRef x, VertexRef y);
    auto operator<=>(const Edge&) const = default;
};

/// Entanglement structure of one shared state as a classical graph.
/// Edges carry the correlations; vertices are qubits at nodes.
class GraphState {
public:
    GraphState() = default;

    void add_vertex(const VertexRef& v);
    void add_edge(const VertexRef& a, const VertexRef& b);

    bool has_vertex(const VertexRef& v) const { return vertices_.count(v) != 0; }
    bool has_edge(const VertexRef& a, const VertexRef& b) const;

    const std::set<VertexRef>& vertices() const { return vertices_; }
    const std::set<Edge>& edges() const { return edges_; }

    std::set<VertexRef> neighbors(const VertexRef& v) const;

    bool operator==(const GraphState&) const = default;

private:
    std::set<VertexRef> vertices_;
    std::set<Edge> edges_;
};

std::string to_string(const GraphState& g);

/// Two-vertex graph state, the Bell pair.
GraphState bell_graph(const VertexRef& a, const VertexRef& b);

/// Toggle every edge inside the neighborhood of v.
GraphState local_complement(const GraphState& g, const VertexRef& v);

/// Z-measure v: drop the vertex and its incident edges.
GraphState measure_z(const GraphState& g, const VertexRef& v);

/// Identify v1 of g1 with v2 of g2; the merged vertex keeps the label v1
/// and the union of both neighborhoods. Vertex sets must be disjoint.
GraphState merge_vertices(const GraphState& g1, const VertexRef& v1,
                          const GraphState& g2, const VertexRef& v2);

/// Split g at v: v keeps edges to `keep`, a fresh vertex on the same node
/// (lowest free slot) takes the rest. Returns the connected components
/// containing v and the fresh vertex; throws if they end up connected
/// through the remaining graph.
std::pair<GraphState, GraphState> fission(const GraphState& g, const VertexRef& v,
                                          const std::set<VertexRef>& keep);

}  // namespace sqn
