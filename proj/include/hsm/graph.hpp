#pragma once

// Finite weighted graphs with a pinned reference vertex, and wired-boundary
// collapses of nested windows inside a finite host graph.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hsm {

using VertexId = std::int64_t;
using Index = Eigen::Index;

/// Values attached to vertex ids; absent ids read as zero.
using VertexMap = std::map<VertexId, double>;

struct WeightedEdge {
    VertexId a = 0;
    VertexId b = 0;
    double weight = 0.0;
};

class GraphError : public std::invalid_argument {
public:
    enum class Kind {
        Disconnected,
        NonPositiveWeight,
        SelfLoop,
        PinMissing,
        EmptyInterior,
        UnknownVertex,
        DuplicateVertex,
        ConflictingEdge,
        LevelOutOfRange,
        InvalidLevels,
    };

    GraphError(Kind kind, const std::string& what)
        : std::invalid_argument(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

/// Undirected weighted graph on opaque integer ids. Weights are stored as a
/// dense symmetric matrix indexed by vertex position.
class WeightedGraph {
public:
    /// Validates ids and weights. Connectivity is not required here.
    static WeightedGraph build(std::vector<VertexId> vertices,
                               const std::vector<WeightedEdge>& edges);

    Index size() const { return static_cast<Index>(ids_.size()); }
    const std::vector<VertexId>& ids() const { return ids_; }
    VertexId id(Index i) const { return ids_[static_cast<std::size_t>(i)]; }
    std::optional<Index> index_of(VertexId id) const;
    bool contains(VertexId id) const { return index_of(id).has_value(); }

    double weight(Index i, Index j) const { return weights_(i, j); }
    const Eigen::MatrixXd& weights() const { return weights_; }

    /// Edges with i < j (positions), in row-major order.
    std::vector<WeightedEdge> edges() const;
    std::vector<Index> neighbors(Index i) const;
    bool connected() const;

private:
    std::vector<VertexId> ids_;
    std::map<VertexId, Index> position_;
    Eigen::MatrixXd weights_;
};

/// A connected weighted graph with a distinguished pin vertex. The pin always
/// sits at position 0; interior vertices follow in input order, so the V x V
/// block of any matrix over the vertex set is its bottom-right corner.
class PinnedGraph {
public:
    static PinnedGraph build(const std::vector<VertexId>& vertices, VertexId pin,
                             const std::vector<WeightedEdge>& edges);

    /// |V| + 1
    Index size() const { return graph_.size(); }
    /// |V|
    Index interior_size() const { return graph_.size() - 1; }

    VertexId pin() const { return graph_.id(0); }
    VertexId id(Index i) const { return graph_.id(i); }
    const std::vector<VertexId>& ids() const { return graph_.ids(); }
    std::optional<Index> index_of(VertexId id) const { return graph_.index_of(id); }
    /// Position of `id`, throwing GraphError(UnknownVertex) when absent.
    Index require_index(VertexId id) const;

    double weight(Index i, Index j) const { return graph_.weight(i, j); }
    const Eigen::MatrixXd& weights() const { return graph_.weights(); }
    /// W restricted to V x V.
    Eigen::MatrixXd interior_weights() const;
    /// (W_{i delta})_{i in V}
    Eigen::VectorXd pin_weights() const;

    std::vector<WeightedEdge> edges() const { return graph_.edges(); }
    std::vector<Index> neighbors(Index i) const { return graph_.neighbors(i); }

    /// Vector over the vertex positions, filled from `values` (pin entry 0).
    Eigen::VectorXd to_vector(const VertexMap& values) const;

    /// Same topology with each weight replaced by f(i, j, W_ij).
    template <class F>
    PinnedGraph reweighted(F&& f) const {
        std::vector<WeightedEdge> out;
        for (const auto& e : edges()) {
            const Index i = *index_of(e.a);
            const Index j = *index_of(e.b);
            out.push_back({e.a, e.b, f(i, j, e.weight)});
        }
        return build(ids(), pin(), out);
    }

private:
    explicit PinnedGraph(WeightedGraph g) : graph_(std::move(g)) {}
    WeightedGraph graph_;
};

/// A finite host graph standing in for an infinite graph, plus nested windows
/// V_1 ⊂ V_2 ⊂ ... ⊂ V_m. Levels are numbered from 1.
class HostExhaustion {
public:
    static HostExhaustion build(WeightedGraph host,
                                std::vector<std::vector<VertexId>> levels);

    const WeightedGraph& host() const { return host_; }
    int depth() const { return static_cast<int>(levels_.size()); }
    const std::vector<VertexId>& level(int n) const;

    /// Reserved id of the collapsed boundary vertex at level n.
    VertexId boundary_id(int n) const;

private:
    HostExhaustion(WeightedGraph host, std::vector<std::vector<VertexId>> levels)
        : host_(std::move(host)), levels_(std::move(levels)) {}
    WeightedGraph host_;
    std::vector<std::vector<VertexId>> levels_;
};

/// Window V_n with every exterior host vertex collapsed into one boundary pin.
/// Interior order follows the level's vertex list.
PinnedGraph wired_collapse(const HostExhaustion& exhaustion, int n);

}  // namespace hsm
