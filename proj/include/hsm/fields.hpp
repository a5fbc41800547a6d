#pragma once

// Deterministic field algebra on a pinned graph: the u-dependent Laplacian,
// the beta environment, the Green's function, and the local scaling maps.
//
// Vectors "over the vertex set" have graph.size() entries with the pin at
// position 0. Vectors "over V" have graph.interior_size() entries and line up
// with positions 1..|V|.

#include <optional>
#include <stdexcept>

#include <Eigen/Dense>

#include "hsm/graph.hpp"

namespace hsm {

/// Raised when a matrix that must be positive definite fails to factor.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised by reconstruct_u when beta cannot come from any pinned field.
class OutsideBetaSupport : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A point (u, s) with u and s clamped to zero at the pin.
class FieldConfig {
public:
    FieldConfig(Eigen::VectorXd u, Eigen::VectorXd s);
    static FieldConfig zero(Index size);
    /// s = 0
    static FieldConfig from_u(Eigen::VectorXd u);

    const Eigen::VectorXd& u() const { return u_; }
    const Eigen::VectorXd& s() const { return s_; }
    Index size() const { return u_.size(); }

private:
    Eigen::VectorXd u_;
    Eigen::VectorXd s_;
};

/// Throws std::invalid_argument unless u has the graph's size and u(0) == 0.
void require_pinned(const PinnedGraph& graph, const Eigen::VectorXd& u);

struct BetaField {
    Eigen::VectorXd values;  // over V
};

/// Green's function over the full vertex set; row and column 0 vanish.
class GreenMatrix {
public:
    explicit GreenMatrix(Eigen::MatrixXd g) : g_(std::move(g)) {}

    double operator()(Index i, Index j) const { return g_(i, j); }
    const Eigen::MatrixXd& matrix() const { return g_; }
    Eigen::MatrixXd interior() const {
        const Index n = g_.rows() - 1;
        return g_.bottomRightCorner(n, n);
    }
    Index size() const { return g_.rows(); }

    /// Test hook: multiplies every entry by `factor`.
    GreenMatrix scaled(double factor) const { return GreenMatrix(g_ * factor); }

private:
    Eigen::MatrixXd g_;
};

/// lambda over the vertex set, entries > -1, lambda(0) == 0.
class ScalingParams {
public:
    explicit ScalingParams(Eigen::VectorXd lambda);
    static ScalingParams zero(Index size) { return ScalingParams(Eigen::VectorXd::Zero(size)); }

    const Eigen::VectorXd& lambda() const { return lambda_; }
    /// sqrt(1 + lambda), componentwise
    Eigen::VectorXd root() const { return (1.0 + lambda_.array()).sqrt().matrix(); }
    /// lambda'_j = -lambda_j / (1 + lambda_j), so that sqrt(1+l) sqrt(1+l') = 1.
    ScalingParams inverse() const;
    Index size() const { return lambda_.size(); }

private:
    Eigen::VectorXd lambda_;
};

/// Throws std::invalid_argument if any entry is positive.
void require_nonpositive(const Eigen::VectorXd& theta);

/// Cholesky factor of a symmetric positive definite matrix.
class SpdFactor {
public:
    /// nullopt when the matrix is not numerically positive definite.
    static std::optional<SpdFactor> of(const Eigen::MatrixXd& m);

    double log_det() const;
    Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const { return llt_.solve(rhs); }
    Eigen::MatrixXd inverse() const;
    /// Lower-triangular L with m = L L^T.
    Eigen::MatrixXd lower() const { return llt_.matrixL(); }
    const Eigen::LLT<Eigen::MatrixXd>& llt() const { return llt_; }

private:
    explicit SpdFactor(Eigen::LLT<Eigen::MatrixXd> llt) : llt_(std::move(llt)) {}
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// A_ij = -W_ij e^{u_i+u_j} (i != j), A_ii = sum_k W_ik e^{u_i+u_k}.
Eigen::MatrixXd assemble_laplacian(const PinnedGraph& graph, const Eigen::VectorXd& u);

/// A restricted to V x V.
Eigen::MatrixXd interior_laplacian(const PinnedGraph& graph, const Eigen::VectorXd& u);

/// beta_i = 1/2 sum_j W_ij e^{u_j - u_i}, i in V.
BetaField beta_field(const PinnedGraph& graph, const Eigen::VectorXd& u);

/// G_ij = e^{u_i} (A_VV^{-1})_ij e^{u_j} on V x V, zero at the pin.
GreenMatrix green_function(const PinnedGraph& graph, const Eigen::VectorXd& u);

/// (H_b)_ij = 2 b_i [i == j] - W_ij over V x V.
Eigen::MatrixXd h_matrix(const PinnedGraph& graph, const Eigen::VectorXd& b);
Eigen::MatrixXd h_matrix(const Eigen::MatrixXd& interior_weights, const Eigen::VectorXd& b);

/// Inverts beta_field: solves H_beta e^{u_V} = W_{V,pin} and takes logs.
/// Throws OutsideBetaSupport when H_beta is not positive definite or the
/// solution has a non-positive entry.
Eigen::VectorXd reconstruct_u(const PinnedGraph& graph, const BetaField& beta);

/// u_i -> u_i + log sqrt(1 + lambda_i); s untouched.
FieldConfig scale_transform(const FieldConfig& config, const ScalingParams& lambda);

/// W_ij -> sqrt(1+lambda_i) sqrt(1+lambda_j) W_ij
PinnedGraph rescale_weights(const PinnedGraph& graph, const ScalingParams& lambda);

/// Splits G_VV(u) for a graph whose pin has a single neighbour ell into a
/// rank-one part and the Green's function of the graph re-pinned at ell:
///   G_VV(u) = e^{v} e^{v}^T / (W_{ell,pin} e^{-u_ell}) + G_reduced(v),
/// with v_i = u_i - u_ell.
struct GreenRank1Split {
    Index ell = 0;                  // position of ell in the original graph
    double coefficient = 0.0;       // W_{ell,pin} e^{-u_ell}
    Eigen::VectorXd exp_shifted;    // e^{v} over V (original order)
    Eigen::MatrixXd reduced;        // V x V, original order; zero row/column at ell
    PinnedGraph reduced_graph;      // interior edges only, pinned at ell

    Eigen::MatrixXd recombined() const;
};

GreenRank1Split green_rank1_split(const PinnedGraph& graph, const Eigen::VectorXd& u);

}  // namespace hsm
