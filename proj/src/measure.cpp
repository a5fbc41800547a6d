#include "hsm/measure.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace hsm {

LogDensity log_density_u(const PinnedGraph& graph, const Eigen::VectorXd& u) {
    require_pinned(graph, u);
    auto factor = SpdFactor::of(interior_laplacian(graph, u));
    if (!factor) return LogDensity{};
    double value = 0.5 * factor->log_det() - u.sum();
    for (const auto& e : graph.edges()) {
        const Index i = *graph.index_of(e.a);
        const Index j = *graph.index_of(e.b);
        value -= e.weight * (std::cosh(u(i) - u(j)) - 1.0);
    }
    return LogDensity{value, false};
}

double log_normalizer_u(const PinnedGraph& graph) {
    return -0.5 * static_cast<double>(graph.interior_size()) * std::log(2.0 * std::numbers::pi);
}

double single_edge_log_density(double w, double t) {
    return 0.5 * std::log(w / (2.0 * std::numbers::pi)) - w * (std::cosh(t) - 1.0) - 0.5 * t;
}

Eigen::VectorXd sample_s_given_u(const SpdFactor& factor, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index n = factor.llt().matrixLLT().rows();
    Eigen::VectorXd z(n);
    for (Index i = 0; i < n; ++i) z(i) = normal(rng);
    // A = L L^T, so L^{-T} z has covariance A^{-1}.
    Eigen::VectorXd s = Eigen::VectorXd::Zero(n + 1);
    s.tail(n) = factor.llt().matrixU().solve(z);
    return s;
}

Eigen::VectorXd sample_s_given_u(const PinnedGraph& graph, const Eigen::VectorXd& u, Rng& rng) {
    auto factor = SpdFactor::of(interior_laplacian(graph, u));
    if (!factor) throw NumericError("interior Laplacian is not positive definite");
    return sample_s_given_u(*factor, rng);
}

double log_laplace_closed_form(const PinnedGraph& graph, const ScalingParams& lambda) {
    if (lambda.size() != graph.size())
        throw std::invalid_argument("laplace_closed_form: size mismatch");
    const Eigen::VectorXd r = lambda.root();
    double value = 0.0;
    for (const auto& e : graph.edges()) {
        const Index i = *graph.index_of(e.a);
        const Index j = *graph.index_of(e.b);
        value += e.weight * (1.0 - r(i) * r(j));
    }
    value -= r.tail(graph.interior_size()).array().log().sum();
    return value;
}

double laplace_closed_form(const PinnedGraph& graph, const ScalingParams& lambda) {
    return std::exp(log_laplace_closed_form(graph, lambda));
}

double rn_derivative(const PinnedGraph& graph, const ScalingParams& lambda, const Eigen::VectorXd& u) {
    const BetaField beta = beta_field(graph, u);
    const Index n = graph.interior_size();
    const Eigen::VectorXd r = lambda.root();
    double log_value = 0.0;
    for (const auto& e : graph.edges()) {
        const Index i = *graph.index_of(e.a);
        const Index j = *graph.index_of(e.b);
        log_value += e.weight * (r(i) * r(j) - 1.0);
    }
    log_value += r.tail(n).array().log().sum() - lambda.lambda().tail(n).dot(beta.values);
    return std::exp(log_value);
}

LogDensity nu_log_density(const PinnedGraph& graph, const Eigen::VectorXd& beta) {
    const Index n = graph.interior_size();
    if (beta.size() != n) throw std::invalid_argument("nu_log_density: beta must live on V");
    const Eigen::MatrixXd w = graph.interior_weights();
    auto factor = SpdFactor::of(h_matrix(w, beta));
    if (!factor) return LogDensity{-std::numeric_limits<double>::infinity(), true};
    const double value = 0.5 * static_cast<double>(n) * std::log(2.0 / std::numbers::pi) - beta.sum() +
                         0.5 * w.sum() - 0.5 * factor->log_det();
    return LogDensity{value, true};
}

double nu_laplace_closed_form(const PinnedGraph& graph, const Eigen::VectorXd& lambda_interior) {
    const Index n = graph.interior_size();
    if (lambda_interior.size() != n)
        throw std::invalid_argument("nu_laplace_closed_form: lambda must live on V");
    const Eigen::MatrixXd w = graph.interior_weights();
    const Eigen::ArrayXd r = (1.0 + lambda_interior.array()).sqrt();
    double value = -r.log().sum();
    for (Index i = 0; i < n; ++i)
        for (Index j = i + 1; j < n; ++j) value += w(i, j) * (1.0 - r(i) * r(j));
    return std::exp(value);
}

Eigen::VectorXd theta_restriction(const VertexMap& theta, const HostExhaustion& exhaustion, int n) {
    const auto& window = exhaustion.level(n);
    std::set<VertexId> inside(window.begin(), window.end());
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Index>(window.size()) + 1);
    for (const auto& [id, value] : theta) {
        if (!exhaustion.host().contains(id))
            throw std::invalid_argument("theta references a vertex outside the host");
        if (value > 0.0) throw std::invalid_argument("theta entries must be <= 0");
    }
    // position 0 is the boundary vertex, then the window in level order
    for (std::size_t k = 0; k < window.size(); ++k) {
        auto it = theta.find(window[k]);
        if (it != theta.end()) out(static_cast<Index>(k) + 1) = it->second;
    }
    for (const auto& [id, value] : theta)
        if (!inside.count(id)) out(0) += value;
    return out;
}

}  // namespace hsm
