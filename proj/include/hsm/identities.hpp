#pragma once

// Each exact identity of the model turned into a test statistic: Ward
// identities, the generalized Laplace identity, the image-measure identity,
// the martingale hierarchy across wired levels, and closed-form consistency.

#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hsm/fields.hpp"
#include "hsm/graph.hpp"
#include "hsm/sampler.hpp"

namespace hsm {

/// A perfect matching of an index set.
struct Pairing {
    std::vector<std::pair<int, int>> pairs;
};

/// All perfect matchings of `items`, each once, in lexicographic order.
/// Empty input gives one empty pairing; odd input gives none.
std::vector<Pairing> enumerate_pairings(const std::vector<int>& items);

/// sum over even I ⊆ {1..m} and pairings P of I of
///   (-1)^{|I|/2} prod_{k not in I} e^{u_{i_k}} prod_{{k,l} in P} G_{i_k i_l}.
/// Indices are vertex positions; the pin contributes e^0 = 1 and G = 0.
double martingale_term(const std::vector<Index>& indices, const Eigen::VectorXd& u, const GreenMatrix& green);

/// exp(<theta, e^u> - 1/2 <theta, G theta>)
double generating_term(const Eigen::VectorXd& theta, const Eigen::VectorXd& u, const GreenMatrix& green);

/// E[ e^{sum u_{i_k}} sum_{even I} (-1)^{|I|/2} prod_{k in I} s_{i_k} | u ]
/// evaluated pointwise (no conditional expectation), i.e. the Ward integrand.
double ward_integrand(const std::vector<Index>& indices, const FieldConfig& field);

/// Either an exact number or a Monte Carlo estimate.
using Quantity = std::variant<double, McEstimate>;

double value_of(const Quantity& q);

struct IdentityVerdict {
    enum class Kind { Statistical, Exact };

    std::string suite;
    std::string name;
    /// stable label of the identity under test
    std::string anchor;
    Quantity lhs;
    Quantity rhs;
    Kind kind = Kind::Statistical;
    /// z-score (statistical) or relative error (exact)
    double statistic = 0.0;
    double threshold = 3.0;
    bool pass = false;
};

IdentityVerdict statistical_verdict(std::string suite, std::string name, std::string anchor, Quantity lhs,
                                    Quantity rhs, double z, double z_threshold);
IdentityVerdict exact_verdict(std::string suite, std::string name, std::string anchor, double lhs, double rhs,
                              double tolerance);

double relative_error(double a, double b);

/// Suite-level decision: the number of statistical verdicts with |z| above
/// threshold must be plausible under Binomial(k, p_tail) at level `alpha`;
/// exact verdicts must all pass.
struct SuiteOutcome {
    std::size_t statistical = 0;
    std::size_t exceedances = 0;
    double max_abs_z = 0.0;
    std::size_t exact_failures = 0;
    double binomial_tail = 1.0;
    bool pass = true;
};

SuiteOutcome assess(const std::vector<IdentityVerdict>& verdicts, double alpha = 0.01);

struct CheckOptions {
    MonteCarloPlan plan;
    double z_threshold = 3.0;
    /// run tag, so separate checks draw independent streams
    std::string tag = "default";
};

/// E[Ward integrand] = 1 with s | u draws, and the same identity with s
/// integrated out exactly (the integrand's conditional mean is the
/// martingale term). Two verdicts per index tuple.
std::vector<IdentityVerdict> ward_identity_check(const PinnedGraph& graph,
                                                 const std::vector<std::vector<Index>>& index_sets,
                                                 const CheckOptions& options);

/// Re and Im of E[exp<theta, e^u (1 + i s)>] against e^{<theta,1>} and 0,
/// plus the real part with s integrated out (the generating term).
std::vector<IdentityVerdict> exp_ward_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& thetas,
                                            const CheckOptions& options);

/// E[e^{-<lambda_V, beta>}] against the closed-form Laplace transform.
std::vector<IdentityVerdict> laplace_check(const PinnedGraph& graph, const std::vector<ScalingParams>& lambdas,
                                           const CheckOptions& options);

/// E[generating term * e^{-<lambda_V, beta>}] against L(lambda) e^{<theta, sqrt(1+lambda)>}.
std::vector<IdentityVerdict> generalized_laplace_check(const PinnedGraph& graph,
                                                       const std::vector<std::pair<Eigen::VectorXd, ScalingParams>>& cases,
                                                       const CheckOptions& options);

/// Observable for the image-measure identity: g evaluated at a sample of a
/// measure on `graph` (the original weights are passed separately so that
/// g∘S_lambda can be formed).
struct ImageFunctional {
    enum class Kind { One, ExpU, SecondMartingale, Generating };
    Kind kind = Kind::One;
    Index j = 1;
    Index k = 1;
    /// over the vertex set, <= 0; used by Generating
    Eigen::VectorXd theta;

    std::string describe() const;
    /// g(u) on the original graph
    double evaluate(const PinnedGraph& graph, const Eigen::VectorXd& u) const;
    /// E_{mu^W}[g e^{-<lambda,beta>}] in closed form
    double closed_form(const PinnedGraph& graph, const ScalingParams& lambda) const;
};

/// E_{mu^W}[g e^{-<lambda,beta>}] vs L(lambda) E_{mu^{W^lambda}}[g∘S_lambda]
/// from two independent runs, plus each side against the closed form.
std::vector<IdentityVerdict> importance_identity_check(const PinnedGraph& graph, const ScalingParams& lambda,
                                                       const std::vector<ImageFunctional>& functionals,
                                                       const CheckOptions& options);

/// L_n(lambda) = L_{n+1}(lambda) for lambda (host ids) supported in V_n.
IdentityVerdict consistency_check(const HostExhaustion& exhaustion, int n, const VertexMap& lambda,
                                  double tolerance = 1e-12);

/// Martingale-step test function: either a hierarchy term for host vertex ids,
/// or the generating term for theta over host ids.
struct MartingaleProbe {
    std::vector<VertexId> indices;
    VertexMap theta;
    bool generating = false;

    std::string describe() const;
};

/// Level-n graph position of a host vertex: its window position, or the pin
/// when it lies outside V_n.
Index level_position(const PinnedGraph& level_graph, VertexId host_vertex);

/// E_{n+1}[M^{(n+1)} e^{-<lambda,beta>}] = E_n[M^{(n)} e^{-<lambda,beta>}]
/// by two independent runs, and each side against
/// L_n(lambda) prod sqrt(1+lambda_{i_k}) (hierarchy) or
/// L_n(lambda) e^{<theta^{(n)}, sqrt(1+lambda)>} (generating term).
std::vector<IdentityVerdict> martingale_step_check(const HostExhaustion& exhaustion, int n,
                                                   const std::vector<MartingaleProbe>& probes,
                                                   const VertexMap& lambda, const CheckOptions& options);

}  // namespace hsm
