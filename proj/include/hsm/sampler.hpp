#pragma once

// Adaptive componentwise random-walk Metropolis on the u-marginal of mu^W,
// exact s | u draws, and batch-means Monte Carlo estimates.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsm/fields.hpp"
#include "hsm/graph.hpp"
#include "hsm/measure.hpp"

namespace hsm {

struct ChainConfig {
    std::uint64_t seed = 1;
    std::size_t burn_in = 20000;
    std::size_t samples = 200000;
    std::size_t thinning = 1;
    double initial_step_size = 1.0;
    double target_accept = 0.44;
    /// One random coordinate per step instead of a full sweep. The random-scan
    /// kernel is reversible; the systematic sweep is only stationary.
    bool random_scan = false;

    void validate() const;
};

struct McEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    double ess = 1.0;
    std::size_t n = 0;

    /// (mean - truth) / std_error; 0 when both the error and the gap vanish.
    double z_against(double truth) const;
};

/// z-score of the difference of two independent estimates.
double combined_z(const McEstimate& a, const McEstimate& b);
/// z-score of a - scale * b for independent a, b and an exact scale.
double combined_z(const McEstimate& a, const McEstimate& b, double scale);

/// Pools per-chain estimates of the same quantity (weights by sample count).
McEstimate pool(const std::vector<McEstimate>& parts);

class EstimationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Running mean, i.i.d. variance and batch means for a stream whose length is
/// known up front. Uses floor(sqrt(n)) batches.
class BatchMeans {
public:
    explicit BatchMeans(std::size_t expected);
    void add(double x);
    McEstimate result() const;

private:
    std::size_t expected_;
    std::size_t batch_size_;
    std::size_t count_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
    double batch_sum_ = 0.0;
    std::size_t batch_fill_ = 0;
    std::vector<double> batch_means_;
};

/// Per-chain random stream derived from (seed, stream tag, chain index).
Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chain);

/// Cached evaluator of log_density_u for repeated calls on one graph.
class UMarginalTarget {
public:
    explicit UMarginalTarget(const PinnedGraph& graph);
    double operator()(const Eigen::VectorXd& u);

private:
    struct Edge {
        Index i, j;
        double w;
    };
    Index n_;
    std::vector<Edge> edges_;
    Eigen::MatrixXd a_;
    Eigen::LLT<Eigen::MatrixXd> llt_;
};

struct ChainDiagnostics {
    Eigen::VectorXd step_sizes;  // per free coordinate, frozen after burn-in
    Eigen::VectorXd acceptance;  // per free coordinate, post burn-in
};

/// Metropolis-within-Gibbs with Gaussian proposals on the free coordinates.
/// Step sizes follow a Robbins-Monro recursion during burn-in and are frozen
/// afterwards. The target may return -inf to reject a proposal.
class MetropolisChain {
public:
    using LogTarget = std::function<double(const Eigen::VectorXd&)>;

    MetropolisChain(LogTarget target, Eigen::VectorXd initial, std::vector<Index> free_coordinates,
                    const ChainConfig& config, Rng rng);

    void run_burn_in();
    /// One sweep, or one coordinate update under random scan.
    void step();
    const Eigen::VectorXd& state() const { return x_; }
    ChainDiagnostics diagnostics() const;
    Rng& rng() { return rng_; }

private:
    bool update(std::size_t k, bool adapt);

    LogTarget target_;
    Eigen::VectorXd x_;
    double log_p_;
    std::vector<Index> free_;
    ChainConfig config_;
    Rng rng_;
    std::vector<double> log_step_;
    std::vector<std::size_t> accepted_;
    std::vector<std::size_t> proposed_;
    std::size_t adapt_iter_ = 0;
};

/// Chain on the u-marginal of mu^W started at u = 0.
MetropolisChain make_u_chain(const PinnedGraph& graph, const ChainConfig& config, Rng rng);

struct ChainRun {
    std::vector<Eigen::VectorXd> samples;
    ChainDiagnostics diagnostics;
};

/// Burn-in, then config.samples retained states every config.thinning steps.
ChainRun run_chain(const PinnedGraph& graph, const ChainConfig& config);

using Functional = std::function<double(const FieldConfig&)>;

/// Batch-means estimate of E[f(u, s)] over a stored u sequence. With
/// s_draws > 0 each u is paired with that many fresh s | u draws and f is
/// averaged over them; with s_draws == 0, s = 0. Throws EstimationError on a
/// non-finite value.
McEstimate estimate(const Functional& f, const std::vector<Eigen::VectorXd>& u_samples,
                    int s_draws, const PinnedGraph& graph, Rng& rng);

/// Quantities available to an observable at one retained sample.
struct SampleContext {
    const PinnedGraph& graph;
    const FieldConfig& field;  // u and a fresh s | u draw
    const GreenMatrix& green;
    const BetaField& beta;
};

using Observable = std::function<double(const SampleContext&)>;

struct MonteCarloPlan {
    ChainConfig chain;
    /// independent chains; chain.samples is split between them
    int chains = 4;
    /// s | u draws averaged per retained u (0: s = 0)
    int s_draws = 1;
    /// Multiplies the Green's function and the s | u covariance. 1 except in
    /// mutation tests.
    double green_scale = 1.0;
    /// worker threads (0: hardware concurrency)
    int workers = 0;
};

/// Runs plan.chains independent chains (stream tag `stream`) on the graph and
/// estimates every observable from the same samples.
std::vector<McEstimate> estimate_observables(const PinnedGraph& graph,
                                             const std::vector<Observable>& observables,
                                             const MonteCarloPlan& plan, std::uint64_t stream);

/// Stable 64-bit tag from a string, for naming independent runs.
std::uint64_t stream_tag(const std::string& name);

}  // namespace hsm
