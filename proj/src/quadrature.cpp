#include "hsm/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "hsm/fields.hpp"
#include "hsm/measure.hpp"
#include "hsm/sampler.hpp"

namespace hsm {

namespace {

using boost::math::quadrature::tanh_sinh;

// x in (0,1) -> b = x/(1-x); `xc` is boost's distance to the nearest endpoint,
// used to keep 1-x accurate near x = 1.
struct RationalMap {
    double b;
    double log_jacobian;
    bool valid;
};

RationalMap rational_map(double x, double xc) {
    const double one_minus = x > 0.5 ? xc : 1.0 - x;
    if (!(one_minus > 0.0) || !(x > 0.0)) return {0.0, 0.0, false};
    const double b = x / one_minus;
    return {b, -2.0 * std::log(one_minus), std::isfinite(b)};
}

double checked(double value, double error, double l1, const QuadratureSpec& spec, const char* what) {
    if (!std::isfinite(value)) throw QuadratureError(std::string(what) + ": non-finite integral");
    const double allowed = std::max(std::sqrt(spec.rel_tol), 1e-6) * std::max(l1, std::abs(value));
    if (error > allowed) {
        std::ostringstream os;
        os << what << ": no convergence within " << spec.max_refinements << " refinements (error estimate "
           << error << ")";
        throw QuadratureError(os.str());
    }
    return value;
}

void require_positive(const Eigen::VectorXd& v, const char* what) {
    for (Index i = 0; i < v.size(); ++i)
        if (!(v(i) > 0.0)) throw std::invalid_argument(std::string(what) + " entries must be positive");
}

std::string vec_str(const Eigen::VectorXd& v) {
    std::ostringstream os;
    os.precision(6);
    os << "(";
    for (Index k = 0; k < v.size(); ++k) os << (k ? "," : "") << v(k);
    os << ")";
    return os.str();
}

double single_edge_integrand(double w, double c, double t) {
    double log_value = single_edge_log_density(w, t);
    if (c > 0.0) log_value -= c * std::exp(t);
    return std::isnan(log_value) ? 0.0 : std::exp(log_value);
}

}  // namespace

void QuadratureSpec::validate() const {
    if (!(rel_tol > 0.0)) throw std::invalid_argument("quadrature tolerance must be positive");
    if (max_refinements < 1) throw std::invalid_argument("quadrature needs at least one refinement");
    if (!(cone_boundary_scale > 0.0)) throw std::invalid_argument("cone boundary scale must be positive");
}

double letac_lhs(const Eigen::MatrixXd& w, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                 const QuadratureSpec& spec) {
    spec.validate();
    const Index n = phi.size();
    if (theta.size() != n || w.rows() != n || w.cols() != n)
        throw std::invalid_argument("letac_lhs: size mismatch");
    require_positive(phi, "phi");
    require_positive(theta, "theta");
    tanh_sinh<double> integrator(spec.max_refinements);

    if (n == 1) {
        const double p = phi(0), q = theta(0);
        auto f = [&](double x, double xc) {
            const auto [b, log_jac, valid] = rational_map(x, xc);
            if (!valid) return 0.0;
            return std::exp(-p * p * b - q * q / (4.0 * b) - 0.5 * std::log(2.0 * b) + log_jac);
        };
        double error = 0.0, l1 = 0.0;
        const double v = integrator.integrate(f, 0.0, 1.0, spec.rel_tol, &error, &l1);
        return checked(v, error, l1, spec, "letac_lhs");
    }
    if (n == 2) {
        const double w12 = w(0, 1);
        const double p1 = phi(0), p2 = phi(1), q1 = theta(0), q2 = theta(1);
        const double kappa = spec.cone_boundary_scale;
        auto inner = [&](double b1) {
            auto g = [&](double y, double yc) {
                const auto [excess, log_jac, valid] = rational_map(y, yc);
                if (!valid) return 0.0;
                const double b2 = kappa * w12 * w12 / (4.0 * b1) + excess;
                // the cone is parametrized from its boundary curve b1 b2 = W^2/4,
                // where det H_b = 4 b1 b2 - W^2 = 4 b1 * excess
                const double det = 4.0 * b1 * excess;
                if (!(det > 0.0)) return 0.0;
                const double quad_phi = 2.0 * p1 * p1 * b1 + 2.0 * p2 * p2 * b2 - 2.0 * w12 * p1 * p2;
                const double quad_theta = (2.0 * b2 * q1 * q1 + 2.0 * b1 * q2 * q2 + 2.0 * w12 * q1 * q2) / det;
                return std::exp(-0.5 * (quad_phi + quad_theta) - 0.5 * std::log(det) + log_jac);
            };
            double error = 0.0, l1 = 0.0;
            const double v = integrator.integrate(g, 0.0, 1.0, spec.rel_tol, &error, &l1);
            return std::pair{v, error};
        };
        // largest absolute error the inner integrals feed into the outer
        // integrand, which bounds their total effect on a (0,1) integral
        double worst = 0.0;
        auto f = [&](double x, double xc) {
            const auto [b1, log_jac, valid] = rational_map(x, xc);
            if (!valid) return 0.0;
            const auto [v, error] = inner(b1);
            if (error > 0.0) worst = std::max(worst, std::exp(std::log(error) + log_jac));
            return v > 0.0 ? std::exp(std::log(v) + log_jac) : 0.0;
        };
        double error = 0.0, l1 = 0.0;
        const double v = integrator.integrate(f, 0.0, 1.0, spec.rel_tol, &error, &l1);
        if (!(worst <= std::max(std::sqrt(spec.rel_tol), 1e-6) * std::abs(v)))
            throw QuadratureError("letac_lhs: inner integral did not converge");
        return checked(v, error, l1, spec, "letac_lhs");
    }
    throw std::invalid_argument("letac_lhs: quadrature supports |V| = 1 or 2");
}

double letac_lhs(const PinnedGraph& graph, const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                 const QuadratureSpec& spec) {
    return letac_lhs(graph.interior_weights(), phi, theta, spec);
}

double letac_rhs(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta) {
    if (phi.size() != theta.size()) throw std::invalid_argument("letac_rhs: size mismatch");
    require_positive(phi, "phi");
    require_positive(theta, "theta");
    const double n = static_cast<double>(phi.size());
    return std::pow(std::numbers::pi / 2.0, n / 2.0) * std::exp(-phi.dot(theta)) / phi.prod();
}

ScalingReduction scaling_reduction(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta,
                                   const Eigen::MatrixXd& w) {
    if (theta.size() != phi.size() || w.rows() != phi.size() || w.cols() != phi.size())
        throw std::invalid_argument("scaling_reduction: size mismatch");
    require_positive(phi, "phi");
    ScalingReduction r;
    r.theta = phi.cwiseProduct(theta);
    r.weights = phi.asDiagonal() * w * phi.asDiagonal();
    r.jacobian = 1.0 / phi.array().square().prod();
    return r;
}

double cond_exp_quadrature(double w, double c, const QuadratureSpec& spec) {
    spec.validate();
    if (!(w > 0.0)) throw std::invalid_argument("edge weight must be positive");
    if (!(c >= 0.0)) throw std::invalid_argument("c must be non-negative");
    tanh_sinh<double> integrator(spec.max_refinements);
    auto f = [&](double t) { return single_edge_integrand(w, c, t); };
    const double inf = std::numeric_limits<double>::infinity();
    // split at the mode region so each half sees a one-sided tail
    double e1 = 0.0, e2 = 0.0, l1 = 0.0, l2 = 0.0;
    const double a = integrator.integrate(f, -inf, 0.0, spec.rel_tol, &e1, &l1);
    const double b = integrator.integrate(f, 0.0, inf, spec.rel_tol, &e2, &l2);
    return checked(a + b, e1 + e2, l1 + l2, spec, "cond_exp_quadrature");
}

double cond_exp_closed_form(double w, double c) {
    if (!(w > 0.0)) throw std::invalid_argument("edge weight must be positive");
    if (!(c >= 0.0)) throw std::invalid_argument("c must be non-negative");
    return std::exp(w * (1.0 - std::sqrt(1.0 + 2.0 * c / w)));
}

IdentityVerdict cond_exp_closed_form_check(double w, double c, const QuadratureSpec& spec, double tolerance) {
    std::ostringstream name;
    name.precision(6);
    name << "E[exp(-c e^t)] W=" << w << " c=" << c;
    return exact_verdict("cond-exp", name.str(), "single-edge-conditional-expectation",
                         cond_exp_quadrature(w, c, spec), cond_exp_closed_form(w, c), tolerance);
}

SingleEdgeCdf::SingleEdgeCdf(double w) : w_(w), step_(0.01) {
    if (!(w > 0.0)) throw std::invalid_argument("edge weight must be positive");
    // beyond |t| = L the density is below e^{-60}
    const double half_width = std::acosh(1.0 + 60.0 / w) + 2.0;
    lo_ = -half_width;
    const auto cells = static_cast<std::size_t>(std::ceil(2.0 * half_width / step_));
    table_.resize(cells + 1);
    table_[0] = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
        const double a = lo_ + static_cast<double>(k) * step_;
        table_[k + 1] = table_[k] + boost::math::quadrature::gauss<double, 20>::integrate(
                                        [this](double t) { return density(t); }, a, a + step_);
    }
}

double SingleEdgeCdf::density(double t) const { return std::exp(single_edge_log_density(w_, t)); }

double SingleEdgeCdf::operator()(double t) const {
    if (t <= lo_) return 0.0;
    const double pos = (t - lo_) / step_;
    if (pos >= static_cast<double>(table_.size() - 1)) return table_.back();
    const auto k = static_cast<std::size_t>(pos);
    const double a = lo_ + static_cast<double>(k) * step_;
    if (t == a) return table_[k];
    return table_[k] +
           boost::math::quadrature::gauss<double, 20>::integrate([this](double x) { return density(x); }, a, t);
}

double ks_distance(std::vector<double> samples, const SingleEdgeCdf& cdf) {
    if (samples.empty()) throw std::invalid_argument("ks_distance: no samples");
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

namespace {

// Runs plan.chains Metropolis chains for beta ~ nu and returns pooled
// estimates of each observable of (beta, H_beta factor).
using NuObservable = std::function<double(const Eigen::VectorXd&, const SpdFactor&)>;

std::vector<McEstimate> estimate_nu(const PinnedGraph& graph, const std::vector<NuObservable>& observables,
                                    const MonteCarloPlan& plan, std::uint64_t stream) {
    plan.chain.validate();
    if (plan.chains < 1) throw std::invalid_argument("need at least one chain");
    const Index n = graph.interior_size();
    const Eigen::MatrixXd w = graph.interior_weights();
    // the chain runs on x = log beta, so the target picks up the Jacobian sum(x)
    Eigen::VectorXd start(n);
    for (Index i = 0; i < n; ++i) start(i) = std::log(0.5 * (1.0 + w.row(i).sum()));
    std::vector<Index> free(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) free[static_cast<std::size_t>(i)] = i;

    const auto chains = static_cast<std::size_t>(plan.chains);
    const std::size_t per_chain = std::max<std::size_t>(1, plan.chain.samples / chains);
    std::vector<std::vector<McEstimate>> parts(observables.size());
    for (std::size_t c = 0; c < chains; ++c) {
        ChainConfig config = plan.chain;
        config.samples = per_chain;
        MetropolisChain chain(
            [&graph](const Eigen::VectorXd& x) {
                const double value = nu_log_density(graph, x.array().exp().matrix()).value;
                return std::isfinite(value) ? value + x.sum() : -std::numeric_limits<double>::infinity();
            },
            start, free, config, make_rng(plan.chain.seed, stream, c));
        chain.run_burn_in();
        std::vector<BatchMeans> acc(observables.size(), BatchMeans(per_chain));
        for (std::size_t k = 0; k < per_chain; ++k) {
            for (std::size_t t = 0; t < config.thinning; ++t) chain.step();
            const Eigen::VectorXd beta = chain.state().array().exp().matrix();
            const auto factor = SpdFactor::of(h_matrix(w, beta));
            if (!factor) throw NumericError("nu chain left the cone");
            for (std::size_t o = 0; o < observables.size(); ++o) acc[o].add(observables[o](beta, *factor));
        }
        for (std::size_t o = 0; o < observables.size(); ++o) parts[o].push_back(acc[o].result());
    }
    std::vector<McEstimate> out;
    for (const auto& p : parts) out.push_back(pool(p));
    return out;
}

}  // namespace

std::vector<IdentityVerdict> letac_nu_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& thetas,
                                            const CheckOptions& options) {
    std::vector<NuObservable> obs;
    for (const auto& theta : thetas) {
        if (theta.size() != graph.interior_size()) throw std::invalid_argument("theta must live on V");
        require_positive(theta, "theta");
        obs.push_back([theta](const Eigen::VectorXd&, const SpdFactor& h) {
            return std::exp(-0.5 * theta.dot(h.solve(theta)));
        });
    }
    const auto est = estimate_nu(graph, obs, options.plan, stream_tag("letac-nu/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < thetas.size(); ++k) {
        const double target = std::exp(-thetas[k].sum());
        out.push_back(statistical_verdict("letac", "nu route |V|=" + std::to_string(graph.interior_size()) +
                                                       " theta=" + vec_str(thetas[k]),
                                          "letac-formula", est[k], target, est[k].z_against(target),
                                          options.z_threshold));
    }
    return out;
}

std::vector<IdentityVerdict> nu_laplace_check(const PinnedGraph& graph, const std::vector<Eigen::VectorXd>& lambdas,
                                              const CheckOptions& options) {
    std::vector<NuObservable> obs;
    for (const auto& lambda : lambdas) {
        if (lambda.size() != graph.interior_size()) throw std::invalid_argument("lambda must live on V");
        if ((lambda.array() <= -1.0).any()) throw std::invalid_argument("lambda entries must exceed -1");
        obs.push_back([lambda](const Eigen::VectorXd& beta, const SpdFactor&) { return std::exp(-lambda.dot(beta)); });
    }
    const auto est = estimate_nu(graph, obs, options.plan, stream_tag("nu-laplace/" + options.tag));
    std::vector<IdentityVerdict> out;
    for (std::size_t k = 0; k < lambdas.size(); ++k) {
        const double target = nu_laplace_closed_form(graph, lambdas[k]);
        out.push_back(statistical_verdict("letac", "nu laplace lambda=" + vec_str(lambdas[k]), "nu-laplace-transform",
                                          est[k], target, est[k].z_against(target), options.z_threshold));
    }
    return out;
}

}  // namespace hsm
