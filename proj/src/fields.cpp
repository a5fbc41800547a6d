#include "hsm/fields.hpp"

#include <cmath>
#include <string>

namespace hsm {

FieldConfig::FieldConfig(Eigen::VectorXd u, Eigen::VectorXd s) : u_(std::move(u)), s_(std::move(s)) {
    if (u_.size() != s_.size() || u_.size() < 2)
        throw std::invalid_argument("field u and s must have equal size >= 2");
    if (u_(0) != 0.0 || s_(0) != 0.0)
        throw std::invalid_argument("field must vanish at the pin");
}

FieldConfig FieldConfig::zero(Index size) {
    return FieldConfig(Eigen::VectorXd::Zero(size), Eigen::VectorXd::Zero(size));
}

FieldConfig FieldConfig::from_u(Eigen::VectorXd u) {
    const Index n = u.size();
    return FieldConfig(std::move(u), Eigen::VectorXd::Zero(n));
}

void require_pinned(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    if (u.size() != graph.size())
        throw std::invalid_argument("field has " + std::to_string(u.size()) +
                                    " entries, graph has " + std::to_string(graph.size()) +
                                    " vertices");
    if (u(0) != 0.0) throw std::invalid_argument("field must vanish at the pin");
}

ScalingParams::ScalingParams(Eigen::VectorXd lambda) : lambda_(std::move(lambda)) {
    if (lambda_.size() < 1 || lambda_(0) != 0.0)
        throw std::invalid_argument("lambda must vanish at the pin");
    for (Index i = 0; i < lambda_.size(); ++i)
        if (!(lambda_(i) > -1.0) || !std::isfinite(lambda_(i)))
            throw std::invalid_argument("lambda entries must be finite and > -1");
}

ScalingParams ScalingParams::inverse() const {
    return ScalingParams((-lambda_.array() / (1.0 + lambda_.array())).matrix());
}

void require_nonpositive(const Eigen::VectorXd& theta) {
    for (Index i = 0; i < theta.size(); ++i)
        if (!(theta(i) <= 0.0))
            throw std::invalid_argument("theta entries must be <= 0");
}

std::optional<SpdFactor> SpdFactor::of(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return std::nullopt;
    // LLT only checks the sign of pivots; reject pivots lost to rounding.
    const auto diag = llt.matrixLLT().diagonal();
    if (!(diag.minCoeff() > 0.0) || !diag.allFinite()) return std::nullopt;
    return SpdFactor(std::move(llt));
}

double SpdFactor::log_det() const {
    return 2.0 * llt_.matrixLLT().diagonal().array().log().sum();
}

Eigen::MatrixXd SpdFactor::inverse() const {
    const Index n = llt_.matrixLLT().rows();
    return llt_.solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::MatrixXd assemble_laplacian(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    require_pinned(graph, u);
    const Eigen::VectorXd e = u.array().exp().matrix();
    Eigen::MatrixXd a = -(graph.weights().array() * (e * e.transpose()).array()).matrix();
    a.diagonal() = -a.rowwise().sum();
    return a;
}

Eigen::MatrixXd interior_laplacian(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    const Index n = graph.interior_size();
    return assemble_laplacian(graph, u).bottomRightCorner(n, n);
}

BetaField beta_field(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    require_pinned(graph, u);
    const Index n = graph.interior_size();
    const Eigen::VectorXd e = u.array().exp().matrix();
    // beta_i = e^{-u_i} (W e^u)_i / 2
    const Eigen::VectorXd we = graph.weights().bottomRows(n) * e;
    return BetaField{(0.5 * we.array() / e.tail(n).array()).matrix()};
}

GreenMatrix green_function(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    const Index n = graph.interior_size();
    auto factor = SpdFactor::of(interior_laplacian(graph, u));
    if (!factor) throw NumericError("interior Laplacian is not positive definite");
    const Eigen::VectorXd e = u.tail(n).array().exp().matrix();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(graph.size(), graph.size());
    g.bottomRightCorner(n, n) = e.asDiagonal() * factor->inverse() * e.asDiagonal();
    return GreenMatrix(std::move(g));
}

Eigen::MatrixXd h_matrix(const Eigen::MatrixXd& interior_weights, const Eigen::VectorXd& b) {
    if (interior_weights.rows() != b.size() || interior_weights.cols() != b.size())
        throw std::invalid_argument("h_matrix: size mismatch");
    Eigen::MatrixXd h = -interior_weights;
    h.diagonal() += 2.0 * b;
    return h;
}

Eigen::MatrixXd h_matrix(const PinnedGraph& graph, const Eigen::VectorXd& b) {
    return h_matrix(graph.interior_weights(), b);
}

Eigen::VectorXd reconstruct_u(const PinnedGraph& graph, const BetaField& beta) {
    auto factor = SpdFactor::of(h_matrix(graph, beta.values));
    if (!factor) throw OutsideBetaSupport("H_beta is not positive definite");
    const Eigen::VectorXd e = factor->solve(graph.pin_weights());
    if (!(e.minCoeff() > 0.0) || !e.allFinite())
        throw OutsideBetaSupport("H_beta^{-1} W_{V,pin} has a non-positive entry");
    Eigen::VectorXd u = Eigen::VectorXd::Zero(graph.size());
    u.tail(graph.interior_size()) = e.array().log().matrix();
    return u;
}

FieldConfig scale_transform(const FieldConfig& config, const ScalingParams& lambda) {
    if (lambda.size() != config.size())
        throw std::invalid_argument("scale_transform: size mismatch");
    Eigen::VectorXd u = config.u() + lambda.root().array().log().matrix();
    u(0) = 0.0;
    return FieldConfig(std::move(u), config.s());
}

PinnedGraph rescale_weights(const PinnedGraph& graph, const ScalingParams& lambda) {
    if (lambda.size() != graph.size())
        throw std::invalid_argument("rescale_weights: size mismatch");
    const Eigen::VectorXd r = lambda.root();
    return graph.reweighted([&](Index i, Index j, double w) { return r(i) * r(j) * w; });
}

Eigen::MatrixXd GreenRank1Split::recombined() const {
    return exp_shifted * exp_shifted.transpose() / coefficient + reduced;
}

GreenRank1Split green_rank1_split(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    require_pinned(graph, u);
    const auto pin_neighbors = graph.neighbors(0);
    if (pin_neighbors.size() != 1)
        throw std::invalid_argument("green_rank1_split: pin must have exactly one neighbour");
    if (graph.interior_size() < 2)
        throw std::invalid_argument("green_rank1_split: need at least two interior vertices");
    const Index ell = pin_neighbors.front();
    const Index n = graph.interior_size();

    std::vector<VertexId> interior(graph.ids().begin() + 1, graph.ids().end());
    std::vector<WeightedEdge> interior_edges;
    for (const auto& e : graph.edges())
        if (e.a != graph.pin() && e.b != graph.pin()) interior_edges.push_back(e);
    PinnedGraph reduced_graph = PinnedGraph::build(interior, graph.id(ell), interior_edges);

    // v_i = u_i - u_ell, laid out in the reduced graph's order
    Eigen::VectorXd v(reduced_graph.size());
    for (Index k = 0; k < reduced_graph.size(); ++k)
        v(k) = u(graph.require_index(reduced_graph.id(k))) - u(ell);
    v(0) = 0.0;
    const GreenMatrix reduced_green = green_function(reduced_graph, v);

    Eigen::VectorXd exp_shifted(n);
    Eigen::MatrixXd reduced(n, n);
    for (Index a = 0; a < n; ++a) {
        const Index ra = reduced_graph.require_index(graph.id(a + 1));
        exp_shifted(a) = std::exp(v(ra));
        for (Index b = 0; b < n; ++b)
            reduced(a, b) = reduced_green(ra, reduced_graph.require_index(graph.id(b + 1)));
    }
    const double coefficient = graph.weight(ell, 0) * std::exp(-u(ell));
    return GreenRank1Split{ell, coefficient, std::move(exp_shifted), std::move(reduced),
                           std::move(reduced_graph)};
}

}  // namespace hsm
