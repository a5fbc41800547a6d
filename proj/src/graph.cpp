#include "hsm/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace hsm {

namespace {

std::string vertex_str(VertexId v) { return std::to_string(v); }

}  // namespace

WeightedGraph WeightedGraph::build(std::vector<VertexId> vertices,
                                   const std::vector<WeightedEdge>& edges) {
    WeightedGraph g;
    g.ids_ = std::move(vertices);
    for (std::size_t k = 0; k < g.ids_.size(); ++k) {
        if (!g.position_.emplace(g.ids_[k], static_cast<Index>(k)).second)
            throw GraphError(GraphError::Kind::DuplicateVertex,
                             "duplicate vertex id " + vertex_str(g.ids_[k]));
    }
    const Index n = g.size();
    g.weights_ = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : edges) {
        if (e.a == e.b)
            throw GraphError(GraphError::Kind::SelfLoop,
                             "self-loop at vertex " + vertex_str(e.a));
        if (!(e.weight > 0.0) || !std::isfinite(e.weight))
            throw GraphError(GraphError::Kind::NonPositiveWeight,
                             "edge (" + vertex_str(e.a) + "," + vertex_str(e.b) +
                                 ") has non-positive weight");
        const auto i = g.index_of(e.a);
        const auto j = g.index_of(e.b);
        if (!i || !j)
            throw GraphError(GraphError::Kind::UnknownVertex,
                             "edge (" + vertex_str(e.a) + "," + vertex_str(e.b) +
                                 ") references an unknown vertex");
        double& slot = g.weights_(*i, *j);
        // A repeated edge must carry the same weight in both listings.
        if (slot != 0.0 && slot != e.weight)
            throw GraphError(GraphError::Kind::ConflictingEdge,
                             "edge (" + vertex_str(e.a) + "," + vertex_str(e.b) +
                                 ") listed with different weights");
        slot = e.weight;
        g.weights_(*j, *i) = e.weight;
    }
    return g;
}

std::optional<Index> WeightedGraph::index_of(VertexId id) const {
    auto it = position_.find(id);
    if (it == position_.end()) return std::nullopt;
    return it->second;
}

std::vector<WeightedEdge> WeightedGraph::edges() const {
    std::vector<WeightedEdge> out;
    for (Index i = 0; i < size(); ++i)
        for (Index j = i + 1; j < size(); ++j)
            if (weights_(i, j) > 0.0) out.push_back({id(i), id(j), weights_(i, j)});
    return out;
}

std::vector<Index> WeightedGraph::neighbors(Index i) const {
    std::vector<Index> out;
    for (Index j = 0; j < size(); ++j)
        if (weights_(i, j) > 0.0) out.push_back(j);
    return out;
}

bool WeightedGraph::connected() const {
    if (size() == 0) return false;
    std::vector<bool> seen(static_cast<std::size_t>(size()), false);
    std::vector<Index> stack{0};
    seen[0] = true;
    Index count = 1;
    while (!stack.empty()) {
        const Index i = stack.back();
        stack.pop_back();
        for (Index j : neighbors(i)) {
            if (!seen[static_cast<std::size_t>(j)]) {
                seen[static_cast<std::size_t>(j)] = true;
                ++count;
                stack.push_back(j);
            }
        }
    }
    return count == size();
}

PinnedGraph PinnedGraph::build(const std::vector<VertexId>& vertices, VertexId pin,
                               const std::vector<WeightedEdge>& edges) {
    if (std::find(vertices.begin(), vertices.end(), pin) == vertices.end())
        throw GraphError(GraphError::Kind::PinMissing,
                         "pin " + vertex_str(pin) + " is not among the vertices");
    std::vector<VertexId> ordered{pin};
    for (VertexId v : vertices)
        if (v != pin) ordered.push_back(v);
    if (ordered.size() < 2)
        throw GraphError(GraphError::Kind::EmptyInterior,
                         "graph has no vertex besides the pin");
    if (ordered.size() != vertices.size())
        throw GraphError(GraphError::Kind::DuplicateVertex, "pin listed twice");
    WeightedGraph g = WeightedGraph::build(std::move(ordered), edges);
    if (!g.connected())
        throw GraphError(GraphError::Kind::Disconnected, "graph is not connected");
    return PinnedGraph(std::move(g));
}

Index PinnedGraph::require_index(VertexId id) const {
    auto i = index_of(id);
    if (!i)
        throw GraphError(GraphError::Kind::UnknownVertex,
                         "vertex " + vertex_str(id) + " is not in the graph");
    return *i;
}

Eigen::MatrixXd PinnedGraph::interior_weights() const {
    const Index n = interior_size();
    return weights().bottomRightCorner(n, n);
}

Eigen::VectorXd PinnedGraph::pin_weights() const {
    return weights().col(0).tail(interior_size());
}

Eigen::VectorXd PinnedGraph::to_vector(const VertexMap& values) const {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(size());
    for (const auto& [id, value] : values) out(require_index(id)) = value;
    out(0) = 0.0;
    return out;
}

HostExhaustion HostExhaustion::build(WeightedGraph host,
                                     std::vector<std::vector<VertexId>> levels) {
    if (levels.empty())
        throw GraphError(GraphError::Kind::InvalidLevels, "exhaustion has no levels");
    if (!host.connected())
        throw GraphError(GraphError::Kind::Disconnected, "host graph is not connected");
    std::set<VertexId> previous;
    for (std::size_t n = 0; n < levels.size(); ++n) {
        std::set<VertexId> current;
        for (VertexId v : levels[n]) {
            if (!host.contains(v))
                throw GraphError(GraphError::Kind::UnknownVertex,
                                 "level " + std::to_string(n + 1) + " vertex " +
                                     vertex_str(v) + " is not in the host");
            if (!current.insert(v).second)
                throw GraphError(GraphError::Kind::DuplicateVertex,
                                 "level " + std::to_string(n + 1) + " repeats vertex " +
                                     vertex_str(v));
        }
        if (current.empty())
            throw GraphError(GraphError::Kind::InvalidLevels,
                             "level " + std::to_string(n + 1) + " is empty");
        if (!std::includes(current.begin(), current.end(), previous.begin(), previous.end()) ||
            current.size() <= previous.size())
            throw GraphError(GraphError::Kind::InvalidLevels,
                             "levels must be strictly nested");
        previous = std::move(current);
    }
    if (static_cast<Index>(previous.size()) >= host.size())
        throw GraphError(GraphError::Kind::InvalidLevels,
                         "largest level must be a strict subset of the host");
    return HostExhaustion(std::move(host), std::move(levels));
}

const std::vector<VertexId>& HostExhaustion::level(int n) const {
    if (n < 1 || n > depth())
        throw GraphError(GraphError::Kind::LevelOutOfRange,
                         "level " + std::to_string(n) + " outside 1.." + std::to_string(depth()));
    return levels_[static_cast<std::size_t>(n - 1)];
}

VertexId HostExhaustion::boundary_id(int n) const {
    const VertexId smallest = *std::min_element(host_.ids().begin(), host_.ids().end());
    return smallest - n;
}

PinnedGraph wired_collapse(const HostExhaustion& exhaustion, int n) {
    const auto& window = exhaustion.level(n);
    const WeightedGraph& host = exhaustion.host();
    const VertexId pin = exhaustion.boundary_id(n);
    std::set<VertexId> inside(window.begin(), window.end());

    std::vector<WeightedEdge> edges;
    for (VertexId a : window) {
        const Index i = *host.index_of(a);
        double boundary = 0.0;
        for (Index j : host.neighbors(i)) {
            const VertexId b = host.id(j);
            if (inside.count(b)) {
                if (a < b) edges.push_back({a, b, host.weight(i, j)});
            } else {
                boundary += host.weight(i, j);
            }
        }
        if (boundary > 0.0) edges.push_back({a, pin, boundary});
    }
    std::vector<VertexId> vertices{pin};
    vertices.insert(vertices.end(), window.begin(), window.end());
    return PinnedGraph::build(vertices, pin, edges);
}

}  // namespace hsm
