#pragma once

// Densities and closed forms attached to the pinned H^{2|2} measure mu^W and
// to the beta law nu^{W,1}.

#include <cstdint>
#include <limits>
#include <random>

#include <Eigen/Dense>

#include "hsm/fields.hpp"
#include "hsm/graph.hpp"

namespace hsm {

using Rng = std::mt19937_64;

struct LogDensity {
    double value = -std::numeric_limits<double>::infinity();
    /// true when the additive constant is included
    bool normalized = false;

    bool in_support() const { return value > -std::numeric_limits<double>::infinity(); }
};

/// Log density of the u-marginal (s integrated out), without the constant
///   1/2 logdet A_VV(u) - sum_edges W_ij [cosh(u_i - u_j) - 1] - sum_V u_i.
LogDensity log_density_u(const PinnedGraph& graph, const Eigen::VectorXd& u);

/// Additive constant that normalizes log_density_u: -|V|/2 log(2 pi).
double log_normalizer_u(const PinnedGraph& graph);

/// Exact normalized density of t = u_1 on the two-vertex graph with weight w:
///   sqrt(w / 2 pi) exp(-w (cosh t - 1) - t / 2).
double single_edge_log_density(double w, double t);

/// Draws s given u: s_pin = 0, s_V ~ N(0, A_VV(u)^{-1}).
Eigen::VectorXd sample_s_given_u(const PinnedGraph& graph, const Eigen::VectorXd& u, Rng& rng);

/// Same draw from a precomputed factor of A_VV(u).
Eigen::VectorXd sample_s_given_u(const SpdFactor& interior_laplacian_factor, Rng& rng);

/// Laplace transform of beta under mu^W:
///   prod_edges e^{W_ij (1 - sqrt(1+l_i) sqrt(1+l_j))} prod_V (1+l_i)^{-1/2}.
double laplace_closed_form(const PinnedGraph& graph, const ScalingParams& lambda);
double log_laplace_closed_form(const PinnedGraph& graph, const ScalingParams& lambda);

/// Density of the pushforward of mu^{W^lambda} under the local scaling map,
/// relative to mu^W, at u:
///   prod_edges e^{W^l_ij - W_ij} prod_V sqrt(1+l_j) e^{-l_j beta_j(u)}.
double rn_derivative(const PinnedGraph& graph, const ScalingParams& lambda, const Eigen::VectorXd& u);

/// log of 1{H_beta > 0} (2/pi)^{|V|/2} e^{-<1,beta>} prod_{interior edges} e^{W_ij} det(H_beta)^{-1/2}.
/// Only interior weights enter. Outside the cone the value is -inf.
LogDensity nu_log_density(const PinnedGraph& graph, const Eigen::VectorXd& beta);

/// Laplace transform of beta under nu^{W,1} (interior edges only), lambda over V.
double nu_laplace_closed_form(const PinnedGraph& graph, const Eigen::VectorXd& lambda_interior);

/// theta over host ids, restricted to the level-n wired graph: entries on V_n
/// are copied and the boundary vertex collects the exterior mass.
/// Throws std::invalid_argument on a positive entry.
Eigen::VectorXd theta_restriction(const VertexMap& theta, const HostExhaustion& exhaustion, int n);

}  // namespace hsm
