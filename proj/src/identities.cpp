#include "hsm/identities.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "hsm/measure.hpp"

namespace hsm {

namespace {

void pairings_rec(std::vector<int>& rest, std::vector<std::pair<int, int>>& current, std::vector<Pairing>& out) {
    if (rest.empty()) {
        out.push_back(Pairing{current});
        return;
    }
    const int first = rest.front();
    for (std::size_t k = 1; k < rest.size(); ++k) {
        const int partner = rest[k];
        std::vector<int> remaining;
        remaining.reserve(rest.size() - 2);
        for (std::size_t r = 1; r < rest.size(); ++r)
            if (r != k) remaining.push_back(rest[r]);
        current.emplace_back(first, partner);
        pairings_rec(remaining, current, out);
        current.pop_back();
    }
}

std::string join(const std::vector<Index>& v) {
    std::ostringstream os;
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
}

std::string join_ids(const std::vector<VertexId>& v) {
    std::ostringstream os;
    for (std::size_t k = 0; k < v.size(); ++k) os << (k ? "," : "") << v[k];
    return os.str();
}

std::string vec_str(const Eigen::VectorXd& v) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (Index k = 0; k < v.size(); ++k) os << (k ? "," : "") << v(k);
    os << ")";
    return os.str();
}

double exp_beta_weight(const ScalingParams& lambda, const BetaField& beta) {
    const Index n = beta.values.size();
    return std::exp(-lambda.lambda().tail(n).dot(beta.values));
}

void require_indices(const std::vector<Index>& indices, Index size) {
    for (Index i : indices)
        if (i < 0 || i >= size) throw std::invalid_argument("vertex position out of range");
}

}  // namespace

std::vector<Pairing> enumerate_pairings(const std::vector<int>& items) {
    std::vector<Pairing> out;
    if (items.size() % 2 != 0) return out;
    std::vector<int> rest = items;
    std::sort(rest.begin(), rest.end());
    std::vector<std::pair<int, int>> current;
    pairings_rec(rest, current, out);
    return out;
}

double martingale_term(const std::vector<Index>& indices, const Eigen::VectorXd& u, const GreenMatrix& green) {
    const auto m = indices.size();
    if (m > 20) throw std::invalid_argument("martingale_term: too many indices");
    require_indices(indices, u.size());
    double total = 0.0;
    for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
        const int size = std::popcount(mask);
        if (size % 2 != 0) continue;
        std::vector<int> chosen;
        double outside = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            if (mask & (1U << k))
                chosen.push_back(static_cast<int>(k));
            else
                outside *= std::exp(u(indices[k]));
        }
        double paired = 0.0;
        for (const auto& p : enumerate_pairings(chosen)) {
            double prod = 1.0;
            for (const auto& [a, b] : p.pairs)
                prod *= green(indices[static_cast<std::size_t>(a)], indices[static_cast<std::size_t>(b)]);
            paired += prod;
        }
        total += ((size / 2) % 2 == 0 ? 1.0 : -1.0) * outside * paired;
    }
    return total;
}

double generating_term(const Eigen::VectorXd& theta, const Eigen::VectorXd& u, const GreenMatrix& green) {
    if (theta.size() != u.size() || green.size() != u.size())
        throw std::invalid_argument("generating_term: size mismatch");
    return std::exp(theta.dot(u.array().exp().matrix()) - 0.5 * theta.dot(green.matrix() * theta));
}

double ward_integrand(const std::vector<Index>& indices, const FieldConfig& field) {
    const auto m = indices.size();
    if (m > 20) throw std::invalid_argument("ward_integrand: too many indices");
    require_indices(indices, field.size());
    double exp_sum = 0.0;
    for (Index i : indices) exp_sum += field.u()(i);
    double poly = 0.0;
    for (std::uint32_t mask = 0; mask < (1U << m); ++mask) {
        const int size = std::popcount(mask);
        if (size % 2 != 0) continue;
        double prod = 1.0;
        for (std::size_t k = 0; k < m; ++k)
            if (mask & (1U << k)) prod *= field.s()(indices[k]);
        poly += ((size / 2) % 2 == 0 ? 1.0 : -1.0) * prod;
    }
    return std::exp(exp_sum) * poly;
}

double value_of(const Quantity& q) {
    if (const double* d = std::get_if<double>(&q)) return *d;
    return std::get<McEstimate>(q).mean;
}

double relative_error(double a, double b) {
    const double scale = std::max(std::abs(a), std::abs(b));
    return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

IdentityVerdict statistical_verdict(std::string suite, std::string name, std::string anchor, Quantity lhs,
                                    Quantity rhs, double z, double z_threshold) {
    IdentityVerdict v;
    v.suite = std::move(suite);
    v.name = std::move(name);
    v.anchor = std::move(anchor);
    v.lhs = std::move(lhs);
    v.rhs = std::move(rhs);
    v.kind = IdentityVerdict::Kind::Statistical;
    v.statistic = z;
    v.threshold = z_threshold;
    v.pass = std::abs(z) <= z_threshold;
    return v;
}

IdentityVerdict exact_verdict(std::string suite, std::string name, std::string anchor, double lhs, double rhs,
                              double tolerance) {
    IdentityVerdict v;
    v.suite = std::move(suite);
    v.name = std::move(name);
    v.anchor = std::move(anchor);
    v.lhs = lhs;
    v.rhs = rhs;
    v.kind = IdentityVerdict::Kind::Exact;
    v.statistic = relative_error(lhs, rhs);
    v.threshold = tolerance;
    v.pass = v.statistic <= tolerance;
    return v;
}

SuiteOutcome assess(const std::vector<IdentityVerdict>& verdicts, double alpha) {
    SuiteOutcome out;
    double threshold = 3.0;
    for (const auto& v : verdicts) {
        if (v.kind == IdentityVerdict::Kind::Exact) {
            if (!v.pass) ++out.exact_failures;
            continue;
        }
        threshold = v.threshold;
        ++out.statistical;
        out.max_abs_z = std::max(out.max_abs_z, std::abs(v.statistic));
        if (!v.pass) ++out.exceedances;
    }
    // P(Binomial(k, p) >= c), p the two-sided normal tail beyond the threshold
    const double p = std::erfc(threshold / std::sqrt(2.0));
    const auto k = out.statistical;
    double below = 0.0;
    for (std::size_t j = 0; j < out.exceedances; ++j) {
        const double log_term = std::lgamma(static_cast<double>(k) + 1.0) - std::lgamma(static_cast<double>(j) + 1.0) -
                                std::lgamma(static_cast<double>(k - j) + 1.0) + static_cast<double>(j) * std::log(p) +
                                static_cast<double>(k - j) * std::log1p(-p);
        below += std::exp(log_term);
    }
    out.binomial_tail = std::max(0.0, 1.0 - below);
    out.pass = out.exact_failures == 0 && (out.exceedances == 0 || out.binomial_tail >= alpha);
    return out;
}

std::vector<IdentityVerdict> ward_identity_check(const PinnedGraph& graph,
                                                 const std::vector<std::vector<Index>>& index_sets,
                                                 const CheckOptions& options) {
    std::vector<Observable> obs;
    for (const auto& idx : index_sets) {
        if (idx.empty()) throw std::invalid_argument("ward check needs m >= 1 indices");
        require_indices(idx, graph.size());
        obs.push_back([idx](const SampleContext& c) { return ward_integrand(idx, c.field); });
        obs.push_back([idx](const SampleContext& c) { return martingale_term(idx, c.field.u(), c.green); });
    }
    const auto est = estimate_observables(graph, obs, options.plan, stream_tag("ward/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < index_sets.size(); ++k) {
        const std::string label = "m=" + std::to_string(index_sets[k].size()) + " [" + join(index_sets[k]) + "]";
        const auto& with_s = est[2 * k];
        const auto& integrated = est[2 * k + 1];
        out.push_back(statistical_verdict("ward", "ward " + label + " (s sampled)", "ward-identity-moments", with_s,
                                          1.0, with_s.z_against(1.0), options.z_threshold));
        out.push_back(statistical_verdict("ward", "ward " + label + " (s integrated)", "ward-identity-moments",
                                          integrated, 1.0, integrated.z_against(1.0), options.z_threshold));
    }
    return out;
}

std::vector<IdentityVerdict> exp_ward_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& thetas,
                                            const CheckOptions& options) {
    std::vector<Observable> obs;
    for (const auto& theta : thetas) {
        if (theta.size() != graph.size()) throw std::invalid_argument("theta must cover the vertex set");
        require_nonpositive(theta);
        auto phase = [theta](const SampleContext& c, bool imaginary) {
            const Eigen::ArrayXd e = c.field.u().array().exp();
            const double re = theta.dot(e.matrix());
            const double im = theta.dot((e * c.field.s().array()).matrix());
            return std::exp(re) * (imaginary ? std::sin(im) : std::cos(im));
        };
        obs.push_back([phase](const SampleContext& c) { return phase(c, false); });
        obs.push_back([phase](const SampleContext& c) { return phase(c, true); });
        obs.push_back([theta](const SampleContext& c) { return generating_term(theta, c.field.u(), c.green); });
    }
    const auto est = estimate_observables(graph, obs, options.plan, stream_tag("exp-ward/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double target = std::exp(thetas[k].sum());
        const std::string label = "theta=" + vec_str(thetas[k]);
        const auto& re = est[3 * k];
        const auto& im = est[3 * k + 1];
        const auto& integrated = est[3 * k + 2];
        out.push_back(statistical_verdict("ward", "exp-ward Re " + label + " (s sampled)", "ward-identity-exp", re,
                                          target, re.z_against(target), options.z_threshold));
        out.push_back(statistical_verdict("ward", "exp-ward Im " + label + " (s sampled)", "ward-identity-exp", im,
                                          0.0, im.z_against(0.0), options.z_threshold));
        out.push_back(statistical_verdict("ward", "exp-ward Re " + label + " (s integrated)", "ward-identity-exp",
                                          integrated, target, integrated.z_against(target), options.z_threshold));
    }
    return out;
}

std::vector<IdentityVerdict> laplace_check(const PinnedGraph& graph, const std::vector<ScalingParams>& lambdas,
                                           const CheckOptions& options) {
    std::vector<Observable> obs;
    for (const auto& lambda : lambdas) {
        if (lambda.size() != graph.size()) throw std::invalid_argument("lambda must cover the vertex set");
        obs.push_back([lambda](const SampleContext& c) { return exp_beta_weight(lambda, c.beta); });
    }
    const auto est = estimate_observables(graph, obs, options.plan, stream_tag("laplace/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double target = laplace_closed_form(graph, lambdas[k]);
        out.push_back(statistical_verdict("laplace", "laplace lambda=" + vec_str(lambdas[k].lambda()),
                                          "laplace-transform-beta", est[k], target, est[k].z_against(target),
                                          options.z_threshold));
    }
    return out;
}

std::vector<IdentityVerdict> generalized_laplace_check(
    const PinnedGraph& graph, const std::vector<std::pair<Eigen::VectorXd, ScalingParams>>& cases,
    const CheckOptions& options) {
    std::vector<Observable> obs;
    for (const auto& [theta, lambda] : cases) {
        if (theta.size() != graph.size() || lambda.size() != graph.size())
            throw std::invalid_argument("theta and lambda must cover the vertex set");
        require_nonpositive(theta);
        obs.push_back([theta, lambda](const SampleContext& c) {
            return generating_term(theta, c.field.u(), c.green) * exp_beta_weight(lambda, c.beta);
        });
    }
    const auto est = estimate_observables(graph, obs, options.plan, stream_tag("generalized-laplace/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < cases.size(); ++k) {
        const auto& [theta, lambda] = cases[k];
        const double target = laplace_closed_form(graph, lambda) * std::exp(theta.dot(lambda.root()));
        out.push_back(statistical_verdict("generalized-laplace",
                                          "theta=" + vec_str(theta) + " lambda=" + vec_str(lambda.lambda()),
                                          "generalized-laplace-green", est[k], target, est[k].z_against(target),
                                          options.z_threshold));
    }
    return out;
}

std::string ImageFunctional::describe() const {
    switch (kind) {
        case Kind::One: return "g=1";
        case Kind::ExpU: return "g=e^{u_" + std::to_string(k) + "}";
        case Kind::SecondMartingale:
            return "g=e^{u_" + std::to_string(j) + "+u_" + std::to_string(k) + "}-G_" + std::to_string(j) +
                   std::to_string(k);
        case Kind::Generating: return "g=M(theta=" + vec_str(theta) + ")";
    }
    return "g=?";
}

double ImageFunctional::evaluate(const PinnedGraph& graph, const Eigen::VectorXd& u) const {
    switch (kind) {
        case Kind::One: return 1.0;
        case Kind::ExpU: return std::exp(u(k));
        case Kind::SecondMartingale: return martingale_term({j, k}, u, green_function(graph, u));
        case Kind::Generating: return generating_term(theta, u, green_function(graph, u));
    }
    return 0.0;
}

double ImageFunctional::closed_form(const PinnedGraph& graph, const ScalingParams& lambda) const {
    const double l = laplace_closed_form(graph, lambda);
    const Eigen::VectorXd r = lambda.root();
    switch (kind) {
        case Kind::One: return l;
        case Kind::ExpU: return l * r(k);
        case Kind::SecondMartingale: return l * r(j) * r(k);
        case Kind::Generating: return l * std::exp(theta.dot(r));
    }
    return 0.0;
}

std::vector<IdentityVerdict> importance_identity_check(const PinnedGraph& graph, const ScalingParams& lambda,
                                                       const std::vector<ImageFunctional>& functionals,
                                                       const CheckOptions& options) {
    if (lambda.size() != graph.size()) throw std::invalid_argument("lambda must cover the vertex set");
    const PinnedGraph scaled = rescale_weights(graph, lambda);
    const Eigen::VectorXd r = lambda.root();
    const Eigen::VectorXd shift = r.array().log().matrix();

    // g on mu^W, weighted by e^{-<lambda,beta>}
    std::vector<Observable> direct;
    // g∘S_lambda on mu^{W^lambda}; the original-weight Green's function at
    // S_lambda u equals diag(r) G^{W^lambda}(u) diag(r)
    std::vector<Observable> transported;
    for (const auto& g : functionals) {
        if (g.kind == ImageFunctional::Kind::Generating) {
            if (g.theta.size() != graph.size()) throw std::invalid_argument("theta must cover the vertex set");
            require_nonpositive(g.theta);
        } else if (g.j < 0 || g.j >= graph.size() || g.k < 0 || g.k >= graph.size()) {
            throw std::invalid_argument("functional index out of range");
        }
        // g from the sample's u and a Green's function valid at that u
        auto apply = [g](const Eigen::VectorXd& u, const GreenMatrix& green) {
            switch (g.kind) {
                case ImageFunctional::Kind::One: return 1.0;
                case ImageFunctional::Kind::ExpU: return std::exp(u(g.k));
                case ImageFunctional::Kind::SecondMartingale: return martingale_term({g.j, g.k}, u, green);
                case ImageFunctional::Kind::Generating: return generating_term(g.theta, u, green);
            }
            return 0.0;
        };
        direct.push_back([apply, lambda](const SampleContext& c) {
            return apply(c.field.u(), c.green) * exp_beta_weight(lambda, c.beta);
        });
        transported.push_back([apply, r, shift](const SampleContext& c) {
            const GreenMatrix green((r.asDiagonal() * c.green.matrix() * r.asDiagonal()).eval());
            return apply(c.field.u() + shift, green);
        });
    }
    const auto lhs = estimate_observables(graph, direct, options.plan, stream_tag("image/direct/" + options.tag));
    const auto rhs = estimate_observables(scaled, transported, options.plan, stream_tag("image/scaled/" + options.tag));
    const double l = laplace_closed_form(graph, lambda);

    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < functionals.size(); ++k) {
        const auto& g = functionals[k];
        const std::string label = g.describe() + " lambda=" + vec_str(lambda.lambda());
        const double exact = g.closed_form(graph, lambda);
        McEstimate rhs_scaled = rhs[k];
        rhs_scaled.mean *= l;
        rhs_scaled.std_error *= l;
        out.push_back(statistical_verdict("image-measure", label + " two-run", "image-measure-transport", lhs[k],
                                          rhs_scaled, combined_z(lhs[k], rhs[k], l), options.z_threshold));
        out.push_back(statistical_verdict("image-measure", label + " direct vs closed form", "image-measure-transport",
                                          lhs[k], exact, lhs[k].z_against(exact), options.z_threshold));
        out.push_back(statistical_verdict("image-measure", label + " transported vs closed form",
                                          "image-measure-transport", rhs_scaled, exact,
                                          rhs_scaled.z_against(exact), options.z_threshold));
    }
    return out;
}

IdentityVerdict consistency_check(const HostExhaustion& exhaustion, int n, const VertexMap& lambda, double tolerance) {
    if (n < 1 || n >= exhaustion.depth())
        throw GraphError(GraphError::Kind::LevelOutOfRange, "consistency check needs 1 <= n < depth");
    const auto& window = exhaustion.level(n);
    const std::set<VertexId> inside(window.begin(), window.end());
    for (const auto& [id, value] : lambda)
        if (value != 0.0 && !inside.count(id))
            throw std::invalid_argument("lambda must vanish outside V_n");
    const PinnedGraph lower = wired_collapse(exhaustion, n);
    const PinnedGraph upper = wired_collapse(exhaustion, n + 1);
    const double a = laplace_closed_form(lower, ScalingParams(lower.to_vector(lambda)));
    const double b = laplace_closed_form(upper, ScalingParams(upper.to_vector(lambda)));
    std::ostringstream name;
    name << "L_" << n << " = L_" << n + 1;
    return exact_verdict("consistency", name.str(), "kolmogorov-consistency", a, b, tolerance);
}

std::string MartingaleProbe::describe() const {
    if (!generating) return "M_{" + join_ids(indices) + "}";
    std::ostringstream os;
    os << "M(theta";
    for (const auto& [id, v] : theta) os << " " << id << ":" << v;
    os << ")";
    return os.str();
}

Index level_position(const PinnedGraph& level_graph, VertexId host_vertex) {
    auto pos = level_graph.index_of(host_vertex);
    return pos ? *pos : 0;
}

std::vector<IdentityVerdict> martingale_step_check(const HostExhaustion& exhaustion, int n,
                                                   const std::vector<MartingaleProbe>& probes,
                                                   const VertexMap& lambda, const CheckOptions& options) {
    if (n < 1 || n >= exhaustion.depth())
        throw GraphError(GraphError::Kind::LevelOutOfRange, "martingale step needs 1 <= n < depth");
    const auto& window = exhaustion.level(n);
    const std::set<VertexId> inside(window.begin(), window.end());
    for (const auto& [id, value] : lambda)
        if (value != 0.0 && !inside.count(id)) throw std::invalid_argument("lambda must vanish outside V_n");
    for (const auto& p : probes)
        for (VertexId id : p.indices)
            if (!exhaustion.host().contains(id)) throw std::invalid_argument("probe vertex outside the host");

    std::vector<McEstimate> level_est[2];
    for (int side = 0; side < 2; ++side) {
        const int level = n + side;
        const PinnedGraph graph = wired_collapse(exhaustion, level);
        const ScalingParams lam(graph.to_vector(lambda));
        std::vector<Observable> obs;
        for (const auto& p : probes) {
            if (p.generating) {
                const Eigen::VectorXd theta = theta_restriction(p.theta, exhaustion, level);
                obs.push_back([theta, lam](const SampleContext& c) {
                    return generating_term(theta, c.field.u(), c.green) * exp_beta_weight(lam, c.beta);
                });
            } else {
                std::vector<Index> pos;
                for (VertexId id : p.indices) pos.push_back(level_position(graph, id));
                obs.push_back([pos, lam](const SampleContext& c) {
                    return martingale_term(pos, c.field.u(), c.green) * exp_beta_weight(lam, c.beta);
                });
            }
        }
        level_est[side] = estimate_observables(graph, obs, options.plan,
                                               stream_tag("martingale/" + options.tag + "/level" + std::to_string(level)));
    }

    const PinnedGraph lower = wired_collapse(exhaustion, n);
    const ScalingParams lam_lower(lower.to_vector(lambda));
    const double l = laplace_closed_form(lower, lam_lower);
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < probes.size(); ++k) {
        const auto& p = probes[k];
        double exact = l;
        std::string anchor;
        if (p.generating) {
            exact *= std::exp(theta_restriction(p.theta, exhaustion, n).dot(lam_lower.root()));
            anchor = "generating-martingale";
        } else {
            for (VertexId id : p.indices) {
                auto it = lambda.find(id);
                exact *= std::sqrt(1.0 + (it == lambda.end() ? 0.0 : it->second));
            }
            anchor = p.indices.size() == 1 ? "first-martingale" : "martingale-hierarchy";
        }
        const std::string label = p.describe() + " n=" + std::to_string(n);
        const auto& lo = level_est[0][k];
        const auto& hi = level_est[1][k];
        out.push_back(statistical_verdict("martingale", label + " level n+1 vs level n", anchor, hi, lo,
                                          combined_z(hi, lo), options.z_threshold));
        out.push_back(statistical_verdict("martingale", label + " level n vs closed form", anchor, lo, exact,
                                          lo.z_against(exact), options.z_threshold));
        out.push_back(statistical_verdict("martingale", label + " level n+1 vs closed form", anchor, hi, exact,
                                          hi.z_against(exact), options.z_threshold));
    }
    return out;
}

}  // namespace hsm
