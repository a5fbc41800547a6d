#pragma once

// Deterministic integrals over the cone {H_b > 0} for one and two interior
// vertices, the phi-scaling reduction, the single-edge conditional
// expectation, and a Monte Carlo route through the nu density for larger V.

#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "hsm/graph.hpp"
#include "hsm/identities.hpp"

namespace hsm {

class QuadratureError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct QuadratureSpec {
    enum class DomainMap {
        /// b = x / (1 - x) on (0, 1) for each unbounded coordinate
        Rational,
    };

    double rel_tol = 1e-10;
    /// tanh-sinh refinement levels per dimension
    std::size_t max_refinements = 15;
    DomainMap domain_map = DomainMap::Rational;
    /// Test hook: moves the boundary curve b_2 = W^2/(4 b_1) from which the
    /// |V| = 2 cone is parametrized (and det H_b measured) by this factor.
    double cone_boundary_scale = 1.0;

    void validate() const;
};

/// Integral of exp(-1/2 (<phi,H_b phi> + <theta,H_b^{-1} theta>)) / sqrt(det H_b)
/// over {H_b > 0}, for |V| = 1 or 2. `interior_weights` is W_VV.
double letac_lhs(const Eigen::MatrixXd& interior_weights, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                 const QuadratureSpec& spec);
double letac_lhs(const PinnedGraph& graph, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                 const QuadratureSpec& spec);

/// (pi/2)^{|V|/2} e^{-<phi,theta>} / prod phi
double letac_rhs(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta);

/// Variables of the same integral after b'_i = phi_i^2 b_i.
struct ScalingReduction {
    Eigen::VectorXd theta;    // phi * theta
    Eigen::MatrixXd weights;  // diag(phi) W diag(phi)
    double jacobian;          // |db / db'| = prod phi^{-2}
};

ScalingReduction scaling_reduction(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& interior_weights);

/// E[e^{-c e^t}] for t with the single-edge density, by quadrature.
double cond_exp_quadrature(double w, double c, const QuadratureSpec& spec);
/// e^{W (1 - sqrt(1 + 2c/W))}
double cond_exp_closed_form(double w, double c);
IdentityVerdict cond_exp_closed_form_check(double w, double c, const QuadratureSpec& spec, double tolerance = 1e-8);

/// CDF of the single-edge u density with weight w.
class SingleEdgeCdf {
public:
    explicit SingleEdgeCdf(double w);
    double operator()(double t) const;

private:
    double density(double t) const;

    double w_;
    double lo_;
    double step_;
    std::vector<double> table_;  // CDF at lo_ + k * step_
};

/// sup_t |F_n(t) - F(t)| for the empirical CDF of `samples`.
double ks_distance(std::vector<double> samples, const SingleEdgeCdf& cdf);

/// Monte Carlo route for Letac's formula with phi = 1 on any graph:
/// E_nu[e^{-1/2 <theta, H_beta^{-1} theta>}] against e^{-<theta,1>}, sampling
/// beta from the nu density by componentwise Metropolis on the cone.
std::vector<IdentityVerdict> letac_nu_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& thetas,
                                            const CheckOptions& options);

/// E_nu[e^{-<lambda,beta>}] against its closed form (interior edges only).
std::vector<IdentityVerdict> nu_laplace_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& lambdas,
                                              const CheckOptions& options);

}  // namespace hsm
