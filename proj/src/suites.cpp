#include "hsm/suites.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "hsm/fields.hpp"
#include "hsm/quadrature.hpp"

namespace hsm {

namespace {

double tol(const SuiteConfig& config, double fallback) { return config.tolerance.value_or(fallback); }

CheckOptions options_for(const SuiteConfig& config, const std::string& tag) {
    CheckOptions o;
    o.plan.chain = config.chain;
    o.plan.chains = config.chains;
    o.plan.workers = config.workers;
    o.plan.s_draws = config.s_draws;
    o.plan.green_scale = config.green_scale;
    o.z_threshold = config.z_threshold;
    o.tag = tag;
    return o;
}

void append(std::vector<IdentityVerdict>& out, std::vector<IdentityVerdict> more) {
    for (auto& v : more) out.push_back(std::move(v));
}

struct NamedGraph {
    std::string label;
    PinnedGraph graph;
};

std::vector<NamedGraph> graphs_or(const SuiteConfig& config, std::vector<NamedGraph> defaults) {
    if (config.graph) return {NamedGraph{"input", *config.graph}};
    return defaults;
}

// Vector over the vertex set with 0 at the pin and the pattern repeated over V.
Eigen::VectorXd over_interior(const PinnedGraph& g, const std::vector<double>& pattern) {
    Eigen::VectorXd v = Eigen::VectorXd::Zero(g.size());
    for (Index i = 1; i < g.size(); ++i) v(i) = pattern[static_cast<std::size_t>(i - 1) % pattern.size()];
    return v;
}

std::string with_graph(const std::string& label, const std::string& name) { return "[" + label + "] " + name; }

void prefix_names(std::vector<IdentityVerdict>& verdicts, const std::string& label) {
    for (auto& v : verdicts) v.name = with_graph(label, v.name);
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::VectorXd random_pinned_field(Rng& rng, Index size, double scale) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
    for (Index i = 1; i < size; ++i) u(i) = normal(rng);
    return u;
}

// ---------------------------------------------------------------- algebra

std::vector<IdentityVerdict> algebra_suite(const SuiteConfig& config) {
    Rng rng = make_rng(config.chain.seed, stream_tag("algebra"), 0);
    std::uniform_real_distribution<double> lam_dist(-0.9, 4.0);
    std::uniform_real_distribution<double> phi_dist(0.3, 3.0);
    std::uniform_real_distribution<double> b_dist(0.0, 3.0);
    double green_h = 0.0, u_trip = 0.0, beta_trip = 0.0, scaled_a = 0.0, rank1 = 0.0, covariance = 0.0, pin = 0.0;
    const int n_graphs = config.instances;
    for (int k = 0; k < n_graphs; ++k) {
        const PinnedGraph g = random_pinned_graph(rng, 8);
        const Index n = g.interior_size();
        const Eigen::VectorXd u = random_pinned_field(rng, g.size(), 0.8);

        const BetaField beta = beta_field(g, u);
        const Eigen::MatrixXd gh = green_function(g, u).interior() * h_matrix(g, beta.values);
        green_h = std::max(green_h, max_abs(gh - Eigen::MatrixXd::Identity(n, n)));

        const Eigen::VectorXd u_back = reconstruct_u(g, beta);
        u_trip = std::max(u_trip, (u_back - u).cwiseAbs().maxCoeff() / std::max(1.0, u.cwiseAbs().maxCoeff()));
        const Eigen::VectorXd beta_back = beta_field(g, u_back).values;
        beta_trip = std::max(beta_trip, (beta_back - beta.values).cwiseAbs().maxCoeff() / beta.values.cwiseAbs().maxCoeff());

        Eigen::VectorXd lam = Eigen::VectorXd::Zero(g.size());
        for (Index i = 1; i < g.size(); ++i) lam(i) = lam_dist(rng);
        const ScalingParams lambda(lam);
        const Eigen::MatrixXd a_scaled = assemble_laplacian(rescale_weights(g, lambda), u);
        const Eigen::MatrixXd a_orig = assemble_laplacian(g, scale_transform(FieldConfig::from_u(u), lambda).u());
        scaled_a = std::max(scaled_a, max_abs(a_scaled - a_orig) / max_abs(a_orig));

        const PinnedGraph gs = random_pinned_graph(rng, 8, true);
        const Eigen::VectorXd us = random_pinned_field(rng, gs.size(), 0.8);
        const Eigen::MatrixXd g_direct = green_function(gs, us).interior();
        rank1 = std::max(rank1, max_abs(green_rank1_split(gs, us).recombined() - g_direct) / max_abs(g_direct));

        Eigen::VectorXd phi(n), b(n);
        for (Index i = 0; i < n; ++i) {
            phi(i) = phi_dist(rng);
            b(i) = b_dist(rng);
        }
        const Eigen::MatrixXd w = g.interior_weights();
        const Eigen::MatrixXd lhs = phi.asDiagonal() * h_matrix(w, b) * phi.asDiagonal();
        const ScalingReduction red = scaling_reduction(phi, Eigen::VectorXd::Ones(n), w);
        const Eigen::MatrixXd rhs = h_matrix(red.weights, phi.array().square().matrix().cwiseProduct(b));
        covariance = std::max(covariance, max_abs(lhs - rhs) / std::max(1e-300, max_abs(rhs)));

        std::uniform_int_distribution<Index> pick(1, n);
        std::uniform_int_distribution<int> m_dist(1, 5);
        std::vector<Index> idx(static_cast<std::size_t>(m_dist(rng)));
        for (auto& i : idx) i = pick(rng);
        const GreenMatrix green = green_function(g, u);
        const double m0 = martingale_term(idx, u, green);
        idx.push_back(0);
        const double m1 = martingale_term(idx, u, green);
        pin = std::max(pin, std::abs(m1 - m0) / std::max(1.0, std::abs(m0)));
    }
    const double t = tol(config, 1e-10);
    const std::string over = " over " + std::to_string(n_graphs) + " random graphs";
    return {
        tolerance_verdict("algebra", "G_VV H_beta = I" + over, "green-h-inverse", green_h, t),
        tolerance_verdict("algebra", "u -> beta -> u round trip" + over, "beta-reconstruction", u_trip, t),
        tolerance_verdict("algebra", "beta -> u -> beta round trip" + over, "beta-reconstruction", beta_trip, t),
        tolerance_verdict("algebra", "A^{W^lambda}(u) = A^W(S_lambda u)" + over, "scaling-laplacian-invariance",
                          scaled_a, t),
        tolerance_verdict("algebra", "rank-one Green split" + over, "green-rank-one-split", rank1, t),
        tolerance_verdict("algebra", "diag(phi) H_b diag(phi) = H_b'^W'" + over, "letac-scaling-covariance",
                          covariance, t),
        tolerance_verdict("algebra", "martingale term with appended pin" + over, "martingale-pin-reduction", pin, t),
    };
}

// ------------------------------------------------------------ consistency

std::string lambda_label(const VertexMap& lambda) {
    std::ostringstream os;
    os.precision(4);
    os << "lambda={";
    bool first = true;
    for (const auto& [id, v] : lambda) {
        os << (first ? "" : ",") << id << ":" << v;
        first = false;
    }
    os << "}";
    return os.str();
}

VertexMap random_lambda_on(Rng& rng, const std::vector<VertexId>& window) {
    std::uniform_real_distribution<double> dist(-0.9, 4.0);
    VertexMap lambda;
    for (VertexId id : window) lambda[id] = dist(rng);
    return lambda;
}

std::vector<IdentityVerdict> consistency_suite(const SuiteConfig& config) {
    Rng rng = make_rng(config.chain.seed, stream_tag("consistency"), 0);
    const double t = tol(config, 1e-12);
    std::vector<IdentityVerdict> out;
    auto run_on = [&](const HostExhaustion& exh, int n, const std::string& label) {
        const VertexMap lambda = random_lambda_on(rng, exh.level(n));
        IdentityVerdict v = consistency_check(exh, n, lambda, t);
        v.name = with_graph(label, v.name + " " + lambda_label(lambda));
        out.push_back(std::move(v));
    };
    if (config.exhaustion) {
        for (int n = 1; n < config.exhaustion->depth(); ++n)
            for (int rep = 0; rep < 10; ++rep) run_on(*config.exhaustion, n, "input");
        // lambda = 0 gives 1 at every level
        for (int n = 1; n < config.exhaustion->depth(); ++n) {
            IdentityVerdict v = consistency_check(*config.exhaustion, n, {}, t);
            v.name = with_graph("input", v.name + " lambda=0");
            out.push_back(std::move(v));
        }
        return out;
    }
    IdentityVerdict hand = consistency_check(path_host_exhaustion(), 1, {{1, 3.0}}, t);
    hand.name = with_graph("path host", hand.name + " lambda={1:3}");
    out.push_back(std::move(hand));
    for (int k = 0; k < config.instances; ++k) {
        const HostExhaustion exh = random_exhaustion(rng, 9);
        std::uniform_int_distribution<int> level(1, exh.depth() - 1);
        run_on(exh, level(rng), "random #" + std::to_string(k));
    }
    return out;
}

// ---------------------------------------------------------------- laplace

std::vector<IdentityVerdict> laplace_suite(const SuiteConfig& config) {
    std::vector<IdentityVerdict> out;
    for (const auto& [label, g] : graphs_or(config, {{"path", path_graph(2)}, {"triangle", triangle_graph()}})) {
        std::vector<ScalingParams> lambdas;
        for (const auto& pattern : std::vector<std::vector<double>>{
                 {3.0, 0.0}, {0.5}, {-0.3, 1.0}, {2.0}, {0.25, 1.5}})
            lambdas.emplace_back(over_interior(g, pattern));
        auto v = laplace_check(g, lambdas, options_for(config, label));
        prefix_names(v, label);
        append(out, std::move(v));
    }
    return out;
}

// ---------------------------------------------------- generalized laplace

std::vector<IdentityVerdict> generalized_laplace_suite(const SuiteConfig& config) {
    std::vector<IdentityVerdict> out;
    for (const auto& [label, g] : graphs_or(config, {{"path", path_graph(2)}})) {
        const Eigen::VectorXd zero = Eigen::VectorXd::Zero(g.size());
        std::vector<std::pair<Eigen::VectorXd, ScalingParams>> cases;
        cases.emplace_back(zero, ScalingParams(over_interior(g, {0.5, 1.0})));
        cases.emplace_back(over_interior(g, {-1.0}), ScalingParams::zero(g.size()));
        Eigen::VectorXd with_pin = over_interior(g, {-0.5, -1.0});
        with_pin(0) = -0.5;
        cases.emplace_back(with_pin, ScalingParams(over_interior(g, {1.0, 0.5})));
        cases.emplace_back(over_interior(g, {-4.0}), ScalingParams(over_interior(g, {3.0})));
        cases.emplace_back(over_interior(g, {-2.0, -4.0}), ScalingParams(over_interior(g, {1.0, 3.0})));
        cases.emplace_back(over_interior(g, {-6.0}), ScalingParams(over_interior(g, {5.0})));
        auto v = generalized_laplace_check(g, cases, options_for(config, label));
        prefix_names(v, label);
        append(out, std::move(v));
    }
    return out;
}

// ------------------------------------------------------------------- ward

std::vector<IdentityVerdict> ward_suite(const SuiteConfig& config) {
    std::vector<IdentityVerdict> out;
    for (const auto& [label, g] : graphs_or(config, {{"single edge", single_edge_graph()}, {"path", path_graph(2)}})) {
        const Index last = g.size() - 1;
        std::vector<std::vector<Index>> tuples = {{1}};
        if (last != 1) tuples.push_back({last});
        tuples.push_back({1, last == 1 ? Index{1} : last});
        // repeat the vertex next to the pin: e^{2u} far from the pin is heavy-tailed
        tuples.push_back({1, 1, last});
        auto v = ward_identity_check(g, tuples, options_for(config, label));
        prefix_names(v, label);
        append(out, std::move(v));

        std::vector<Eigen::VectorXd> thetas;
        Eigen::VectorXd t = over_interior(g, {-1.0});
        t(0) = -1.0;
        thetas.push_back(t);
        thetas.push_back(over_interior(g, {-2.0}));
        thetas.push_back(over_interior(g, {-4.0}));
        auto e = exp_ward_check(g, thetas, options_for(config, label));
        prefix_names(e, label);
        append(out, std::move(e));
    }
    return out;
}

// ---------------------------------------------------------- image measure

std::vector<IdentityVerdict> image_measure_suite(const SuiteConfig& config) {
    std::vector<IdentityVerdict> out;
    for (const auto& [label, g] : graphs_or(config, {{"path", path_graph(2)}})) {
        const Index last = g.size() - 1;
        std::vector<ImageFunctional> functionals;
        functionals.push_back({ImageFunctional::Kind::One, 1, 1, {}});
        functionals.push_back({ImageFunctional::Kind::ExpU, 1, last, {}});
        functionals.push_back({ImageFunctional::Kind::SecondMartingale, 1, last, {}});
        functionals.push_back({ImageFunctional::Kind::Generating, 1, 1, over_interior(g, {-4.0})});
        const ScalingParams lambda(over_interior(g, {3.0}));
        auto v = importance_identity_check(g, lambda, functionals, options_for(config, label));
        prefix_names(v, label);
        append(out, std::move(v));

        // milder tilt: the transported run estimates e^{<theta,r>} without
        // importance weights, so steeper theta turns it into a rare event
        std::vector<ImageFunctional> tilted;
        tilted.push_back({ImageFunctional::Kind::Generating, 1, 1, over_interior(g, {-2.0})});
        tilted.push_back({ImageFunctional::Kind::Generating, 1, 1, over_interior(g, {-3.0})});
        const ScalingParams mild(over_interior(g, {1.0}));
        auto w = importance_identity_check(g, mild, tilted, options_for(config, label + "/mild"));
        prefix_names(w, label);
        append(out, std::move(w));
    }
    return out;
}

// ------------------------------------------------------------- martingale

std::vector<IdentityVerdict> martingale_suite(const SuiteConfig& config) {
    const HostExhaustion exh = config.exhaustion ? *config.exhaustion : path_host_exhaustion();
    std::vector<IdentityVerdict> out;
    for (int n = 1; n < exh.depth(); ++n) {
        const auto& inner = exh.level(n);
        const auto& outer = exh.level(n + 1);
        std::vector<VertexId> fresh;
        for (VertexId id : outer)
            if (std::find(inner.begin(), inner.end(), id) == inner.end()) fresh.push_back(id);
        const VertexId first = inner.front();
        const VertexId last = inner.back();
        const VertexId added = fresh.front();

        // lambda = 0: hierarchy terms straddling both levels and a generating
        // term with mass outside V_{n+1}
        std::vector<MartingaleProbe> plain;
        plain.push_back({{first}, {}, false});
        plain.push_back({{added}, {}, false});
        plain.push_back({{first, last}, {}, false});
        plain.push_back({{first, last, added}, {}, false});
        VertexMap theta;
        for (VertexId id : outer) theta[id] = -1.0;
        for (VertexId id : exh.host().ids())
            if (!theta.count(id)) {
                theta[id] = -0.5;
                break;
            }
        plain.push_back({{}, theta, true});
        auto v = martingale_step_check(exh, n, plain, {}, options_for(config, "plain/" + std::to_string(n)));
        append(out, std::move(v));

        // lambda tilted on V_n, generating terms only: single-index terms
        // under a steep tilt carry heavy-tailed importance weights
        VertexMap lambda;
        for (VertexId id : inner) lambda[id] = 3.0;
        VertexMap steep;
        for (VertexId id : inner) steep[id] = -4.0;
        VertexMap steeper;
        for (VertexId id : inner) steeper[id] = -6.0;
        std::vector<MartingaleProbe> tilted;
        tilted.push_back({{}, steep, true});
        tilted.push_back({{}, steeper, true});
        auto w = martingale_step_check(exh, n, tilted, lambda, options_for(config, "tilted/" + std::to_string(n)));
        for (auto& x : w) x.name += " " + lambda_label(lambda);
        append(out, std::move(w));
    }
    return out;
}

// ------------------------------------------------------------------ letac

std::string grid_label(const Eigen::VectorXd& phi, const Eigen::VectorXd& theta, double w) {
    std::ostringstream os;
    os.precision(4);
    os << "phi=(";
    for (Index i = 0; i < phi.size(); ++i) os << (i ? "," : "") << phi(i);
    os << ") theta=(";
    for (Index i = 0; i < theta.size(); ++i) os << (i ? "," : "") << theta(i);
    os << ")";
    if (phi.size() == 2) os << " W12=" << w;
    return os.str();
}

std::vector<IdentityVerdict> letac_suite(const SuiteConfig& config) {
    QuadratureSpec spec;
    spec.cone_boundary_scale = config.cone_boundary_scale;
    std::vector<IdentityVerdict> out;
    const double t1 = tol(config, 1e-6);
    const double t2 = tol(config, 1e-4);
    const std::vector<double> grid = {0.5, 1.0, 2.0, 4.0, 8.0};
    for (double p : grid)
        for (double q : grid) {
            const Eigen::VectorXd phi = Eigen::VectorXd::Constant(1, p);
            const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, q);
            out.push_back(exact_verdict("letac", "|V|=1 " + grid_label(phi, theta, 0.0), "letac-formula",
                                        letac_lhs(Eigen::MatrixXd::Zero(1, 1), phi, theta, spec),
                                        letac_rhs(phi, theta), t1));
        }
    for (double w : {0.5, 1.0, 2.0})
        for (const auto& [phi, theta] : std::vector<std::pair<Eigen::Vector2d, Eigen::Vector2d>>{
                 {{1.0, 1.0}, {1.0, 1.0}}, {{2.0, 3.0}, {1.0, 1.0}}, {{0.5, 1.0}, {0.5, 2.0}}, {{1.0, 2.0}, {3.0, 0.25}}}) {
            Eigen::MatrixXd wm(2, 2);
            wm << 0.0, w, w, 0.0;
            out.push_back(exact_verdict("letac", "|V|=2 " + grid_label(phi, theta, w), "letac-formula",
                                        letac_lhs(wm, phi, theta, spec), letac_rhs(phi, theta), t2));
        }

    // phi-scaling: the integral equals the phi = 1 integral with rescaled data
    {
        const Eigen::VectorXd phi = Eigen::VectorXd::Constant(1, 2.0);
        const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 0.7);
        const Eigen::MatrixXd w = Eigen::MatrixXd::Zero(1, 1);
        const ScalingReduction r = scaling_reduction(phi, theta, w);
        out.push_back(exact_verdict("letac", "scaling |V|=1 phi=2 theta=0.7", "letac-scaling",
                                    letac_lhs(w, phi, theta, spec),
                                    letac_lhs(r.weights, Eigen::VectorXd::Ones(1), r.theta, spec) / phi.prod(), t1));
    }
    {
        Eigen::VectorXd phi(2), theta(2);
        phi << 2.0, 3.0;
        theta << 0.5, 0.4;
        Eigen::MatrixXd w(2, 2);
        w << 0.0, 0.3, 0.3, 0.0;
        const ScalingReduction r = scaling_reduction(phi, theta, w);
        out.push_back(exact_verdict("letac", "scaling |V|=2 phi=(2,3) theta=(0.5,0.4) W12=0.3", "letac-scaling",
                                    letac_lhs(w, phi, theta, spec),
                                    letac_lhs(r.weights, Eigen::VectorXd::Ones(2), r.theta, spec) / phi.prod(), t2));
        out.push_back(exact_verdict("letac", "scaling jacobian phi=(2,3)", "letac-scaling", r.jacobian, 1.0 / 36.0,
                                    tol(config, 1e-12)));
    }

    // Monte Carlo route through nu for larger V
    const std::vector<NamedGraph> nu_graphs =
        graphs_or(config, {{"pendant triangle", pendant_triangle_graph()}});
    for (const auto& [label, g] : nu_graphs) {
        const Index n = g.interior_size();
        std::vector<Eigen::VectorXd> thetas = {Eigen::VectorXd::Constant(n, 0.5), Eigen::VectorXd::Constant(n, 1.0)};
        auto v = letac_nu_check(g, thetas, options_for(config, label));
        prefix_names(v, label);
        append(out, std::move(v));
        std::vector<Eigen::VectorXd> lambdas = {Eigen::VectorXd::Constant(n, 1.0), Eigen::VectorXd::Constant(n, 0.25)};
        auto l = nu_laplace_check(g, lambdas, options_for(config, label));
        prefix_names(l, label);
        append(out, std::move(l));

        // the nu transform drops exactly the pin edge factors of L^W
        const auto pin_neighbors = g.neighbors(0);
        if (pin_neighbors.size() == 1) {
            const Index ell = pin_neighbors.front();
            const Eigen::VectorXd lam = lambdas.front();
            Eigen::VectorXd full = Eigen::VectorXd::Zero(g.size());
            full.tail(n) = lam;
            const double w_pin = g.weight(0, ell);
            const double via_mu = laplace_closed_form(g, ScalingParams(full)) *
                                  std::exp(-w_pin * (1.0 - std::sqrt(1.0 + full(ell))));
            out.push_back(exact_verdict("letac", with_graph(label, "nu transform = mu transform x pin-edge factor"),
                                        "nu-mu-relation", nu_laplace_closed_form(g, lam), via_mu,
                                        tol(config, 1e-12)));
        }
    }
    return out;
}

// --------------------------------------------------------------- cond-exp

std::vector<IdentityVerdict> cond_exp_suite(const SuiteConfig& config) {
    QuadratureSpec spec;
    const double t = tol(config, 1e-8);
    std::vector<IdentityVerdict> out;
    for (double w : {0.1, 0.1 * std::pow(10.0, 0.5), 1.0, std::pow(10.0, 0.5), 10.0})
        for (double c : {0.0, 0.1, 0.1 * std::pow(10.0, 0.5), 1.0, std::pow(10.0, 0.5), 10.0})
            out.push_back(cond_exp_closed_form_check(w, c, spec, t));
    out.push_back(cond_exp_closed_form_check(1.0, 1.5, spec, t));
    out.push_back(cond_exp_closed_form_check(1.0, 4.0, spec, t));
    return out;
}

// --------------------------------------------------------- sampler checks

IdentityVerdict range_verdict(std::string suite, std::string name, std::string anchor, double value, double lo,
                              double hi) {
    IdentityVerdict v;
    v.suite = std::move(suite);
    v.name = std::move(name);
    v.anchor = std::move(anchor);
    v.lhs = value;
    v.rhs = 0.5 * (lo + hi);
    v.kind = IdentityVerdict::Kind::Exact;
    v.statistic = value;
    v.threshold = hi;
    v.pass = value >= lo && value <= hi;
    return v;
}

std::vector<IdentityVerdict> sampler_selftest_suite(const SuiteConfig& config) {
    std::vector<IdentityVerdict> out;
    const PinnedGraph edge = single_edge_graph();
    const double z = config.z_threshold;

    // the exact single-edge density integrates to one
    out.push_back(exact_verdict("sampler-selftest", "single-edge density normalization", "sampler-normalization",
                                cond_exp_quadrature(1.0, 0.0, QuadratureSpec{}), 1.0, tol(config, 1e-8)));

    // one long chain: E[e^u] and the Kolmogorov-Smirnov distance
    {
        const ChainRun run = run_chain(edge, config.chain);
        Rng rng = make_rng(config.chain.seed, stream_tag("selftest/s"), 0);
        const McEstimate e = estimate([](const FieldConfig& f) { return std::exp(f.u()(1)); }, run.samples, 0, edge, rng);
        out.push_back(statistical_verdict("sampler-selftest", "single edge E[e^u] = 1", "sampler-first-moment", e, 1.0,
                                          e.z_against(1.0), z));
        std::vector<double> t;
        t.reserve(run.samples.size());
        for (const auto& u : run.samples) t.push_back(u(1));
        const double d = ks_distance(std::move(t), SingleEdgeCdf(1.0));
        std::ostringstream name;
        name << "single edge KS distance vs quadrature CDF (n=" << run.samples.size() << ", ess(e^u)=" << std::llround(e.ess)
             << ")";
        out.push_back(tolerance_verdict("sampler-selftest", name.str(), "sampler-ks", d, tol(config, 0.01)));
    }

    // z-score calibration over 50 independent seeds
    {
        ChainConfig c = config.chain;
        c.samples = std::max<std::size_t>(5000, config.chain.samples / 10);
        c.burn_in = std::max<std::size_t>(1000, config.chain.burn_in / 10);
        std::vector<double> zs;
        for (int k = 0; k < 50; ++k) {
            MonteCarloPlan plan;
            plan.chain = c;
            plan.chains = 1;
            plan.workers = 1;
            plan.s_draws = 0;
            const auto est = estimate_observables(edge, {[](const SampleContext& s) { return std::exp(s.field.u()(1)); }},
                                                  plan, stream_tag("selftest/calibration/" + std::to_string(k)));
            zs.push_back(est.front().z_against(1.0));
        }
        const double mean = std::accumulate(zs.begin(), zs.end(), 0.0) / static_cast<double>(zs.size());
        double ss = 0.0;
        for (double x : zs) ss += (x - mean) * (x - mean);
        const double sd = std::sqrt(ss / static_cast<double>(zs.size() - 1));
        out.push_back(range_verdict("sampler-selftest",
                                    "SD of E[e^u] z-scores over 50 seeds in [0.6, 1.6] (n=" + std::to_string(c.samples) +
                                        " each)",
                                    "sampler-calibration", sd, 0.6, 1.6));
    }

    // reversibility of the random-scan kernel: transition counts between
    // quadrants of (u_1, u_2) on the path must be symmetric
    {
        const PinnedGraph path = path_graph(2);
        ChainConfig c = config.chain;
        c.random_scan = true;
        MetropolisChain chain = make_u_chain(path, c, make_rng(c.seed, stream_tag("selftest/reversibility"), 0));
        chain.run_burn_in();
        auto cell = [](const Eigen::VectorXd& u) { return (u(1) > 0.0 ? 1 : 0) + (u(2) > 0.0 ? 2 : 0); };
        double counts[4][4] = {};
        int prev = cell(chain.state());
        const std::size_t steps = c.samples * 2;
        for (std::size_t k = 0; k < steps; ++k) {
            chain.step();
            const int now = cell(chain.state());
            counts[prev][now] += 1.0;
            prev = now;
        }
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) {
                const double nab = counts[a][b], nba = counts[b][a];
                const double se = std::sqrt(nab + nba);
                const double zz = se > 0.0 ? (nab - nba) / se : 0.0;
                out.push_back(statistical_verdict("sampler-selftest",
                                                  "reversibility N(" + std::to_string(a) + "->" + std::to_string(b) +
                                                      ") = N(" + std::to_string(b) + "->" + std::to_string(a) + ")",
                                                  "sampler-reversibility", nab, nba, zz, z));
            }
    }

    // s | u: E[s_i s_j e^{u_i+u_j} | u] = G_ij at a fixed field
    {
        const PinnedGraph path = path_graph(2);
        Eigen::VectorXd u(3);
        u << 0.0, 0.3, -0.4;
        const GreenMatrix green = green_function(path, u);
        const auto factor = SpdFactor::of(interior_laplacian(path, u));
        Rng rng = make_rng(config.chain.seed, stream_tag("selftest/gaussian"), 0);
        const std::size_t draws = std::max<std::size_t>(10000, config.chain.samples / 2);
        const std::vector<std::pair<Index, Index>> pairs = {{1, 1}, {1, 2}, {2, 2}};
        std::vector<BatchMeans> acc(pairs.size(), BatchMeans(draws));
        for (std::size_t k = 0; k < draws; ++k) {
            const Eigen::VectorXd s = std::sqrt(config.green_scale) * sample_s_given_u(*factor, rng);
            for (std::size_t p = 0; p < pairs.size(); ++p) {
                const auto [i, j] = pairs[p];
                acc[p].add(s(i) * s(j) * std::exp(u(i) + u(j)));
            }
        }
        for (std::size_t p = 0; p < pairs.size(); ++p) {
            const auto [i, j] = pairs[p];
            const McEstimate e = acc[p].result();
            out.push_back(statistical_verdict("sampler-selftest",
                                              "E[s_" + std::to_string(i) + " s_" + std::to_string(j) +
                                                  " e^{u_i+u_j} | u] = G_ij",
                                              "conditional-green", e, green(i, j), e.z_against(green(i, j)), z));
        }
    }
    return out;
}

}  // namespace

IdentityVerdict tolerance_verdict(std::string suite, std::string name, std::string anchor, double discrepancy,
                                  double tolerance) {
    IdentityVerdict v;
    v.suite = std::move(suite);
    v.name = std::move(name);
    v.anchor = std::move(anchor);
    v.lhs = discrepancy;
    v.rhs = 0.0;
    v.kind = IdentityVerdict::Kind::Exact;
    v.statistic = discrepancy;
    v.threshold = tolerance;
    v.pass = discrepancy <= tolerance;
    return v;
}

const std::vector<std::string>& suite_names() {
    static const std::vector<std::string> names = {
        "algebra", "consistency", "laplace", "generalized-laplace", "ward", "image-measure",
        "martingale", "letac", "cond-exp", "sampler-selftest"};
    return names;
}

SuiteResult run_suite(const std::string& name, const SuiteConfig& config) {
    config.chain.validate();
    SuiteResult r;
    r.name = name;
    if (name == "algebra")
        r.verdicts = algebra_suite(config);
    else if (name == "consistency")
        r.verdicts = consistency_suite(config);
    else if (name == "laplace")
        r.verdicts = laplace_suite(config);
    else if (name == "generalized-laplace")
        r.verdicts = generalized_laplace_suite(config);
    else if (name == "ward")
        r.verdicts = ward_suite(config);
    else if (name == "image-measure")
        r.verdicts = image_measure_suite(config);
    else if (name == "martingale")
        r.verdicts = martingale_suite(config);
    else if (name == "letac")
        r.verdicts = letac_suite(config);
    else if (name == "cond-exp")
        r.verdicts = cond_exp_suite(config);
    else if (name == "sampler-selftest")
        r.verdicts = sampler_selftest_suite(config);
    else
        throw std::invalid_argument("unknown suite: " + name);
    r.outcome = assess(r.verdicts);
    return r;
}

PinnedGraph single_edge_graph(double w) { return PinnedGraph::build({0, 1}, 0, {{0, 1, w}}); }

PinnedGraph path_graph(int interior, double w) {
    if (interior < 1) throw std::invalid_argument("path needs at least one interior vertex");
    std::vector<VertexId> vertices;
    std::vector<WeightedEdge> edges;
    for (int i = 0; i <= interior; ++i) vertices.push_back(i);
    for (int i = 0; i < interior; ++i) edges.push_back({i, i + 1, w});
    return PinnedGraph::build(vertices, 0, edges);
}

PinnedGraph triangle_graph() { return PinnedGraph::build({0, 1, 2}, 0, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}}); }

PinnedGraph pendant_triangle_graph() {
    return PinnedGraph::build({0, 1, 2, 3}, 0, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}, {1, 3, 1.0}});
}

HostExhaustion path_host_exhaustion() {
    const WeightedGraph host = WeightedGraph::build({1, 2, 3, 4}, {{1, 2, 1.0}, {2, 3, 1.0}, {3, 4, 1.0}});
    return HostExhaustion::build(host, {{1, 2}, {1, 2, 3}});
}

PinnedGraph random_pinned_graph(Rng& rng, int max_interior, bool single_pin_edge) {
    const int lo = single_pin_edge ? 2 : 1;
    if (max_interior < lo) throw std::invalid_argument("random_pinned_graph: max_interior too small");
    std::uniform_int_distribution<int> size_dist(lo, max_interior);
    std::uniform_real_distribution<double> weight(0.2, 3.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const int n = size_dist(rng);
    std::vector<VertexId> vertices(static_cast<std::size_t>(n) + 1);
    std::iota(vertices.begin(), vertices.end(), 0);
    std::vector<WeightedEdge> edges;
    std::vector<std::vector<bool>> used(static_cast<std::size_t>(n) + 1, std::vector<bool>(static_cast<std::size_t>(n) + 1));
    auto add = [&](int a, int b) {
        if (a == b || used[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]) return;
        used[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = used[static_cast<std::size_t>(b)][static_cast<std::size_t>(a)] = true;
        edges.push_back({a, b, weight(rng)});
    };
    if (single_pin_edge) {
        // pin hangs off vertex 1; the interior is a random connected graph
        add(0, 1);
        for (int v = 2; v <= n; ++v) add(v, std::uniform_int_distribution<int>(1, v - 1)(rng));
        for (int a = 1; a <= n; ++a)
            for (int b = a + 1; b <= n; ++b)
                if (coin(rng) < 0.3) add(a, b);
    } else {
        // random spanning tree plus extra edges
        for (int v = 1; v <= n; ++v) add(v, std::uniform_int_distribution<int>(0, v - 1)(rng));
        for (int a = 0; a <= n; ++a)
            for (int b = a + 1; b <= n; ++b)
                if (coin(rng) < 0.3) add(a, b);
    }
    return PinnedGraph::build(vertices, 0, edges);
}

HostExhaustion random_exhaustion(Rng& rng, int max_vertices) {
    if (max_vertices < 3) throw std::invalid_argument("random_exhaustion: need at least 3 vertices");
    std::uniform_int_distribution<int> size_dist(3, max_vertices);
    std::uniform_real_distribution<double> weight(0.2, 3.0);
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    const int n = size_dist(rng);
    std::vector<VertexId> ids;
    for (int i = 0; i < n; ++i) ids.push_back(10 + 3 * i);
    std::vector<WeightedEdge> edges;
    for (int v = 1; v < n; ++v) {
        const int u = std::uniform_int_distribution<int>(0, v - 1)(rng);
        edges.push_back({ids[static_cast<std::size_t>(u)], ids[static_cast<std::size_t>(v)], weight(rng)});
    }
    for (int a = 0; a < n; ++a)
        for (int b = a + 1; b < n; ++b) {
            const bool tree_edge = std::any_of(edges.begin(), edges.end(), [&](const WeightedEdge& e) {
                return (e.a == ids[static_cast<std::size_t>(a)] && e.b == ids[static_cast<std::size_t>(b)]) ||
                       (e.a == ids[static_cast<std::size_t>(b)] && e.b == ids[static_cast<std::size_t>(a)]);
            });
            if (!tree_edge && coin(rng) < 0.3)
                edges.push_back({ids[static_cast<std::size_t>(a)], ids[static_cast<std::size_t>(b)], weight(rng)});
        }
    WeightedGraph host = WeightedGraph::build(ids, edges);

    std::vector<VertexId> order = ids;
    std::shuffle(order.begin(), order.end(), rng);
    std::uniform_int_distribution<int> depth_dist(2, std::min(3, n - 1));
    const int depth = depth_dist(rng);
    // strictly increasing sizes in [1, n-1]
    std::vector<int> sizes;
    std::vector<int> pool_sizes(static_cast<std::size_t>(n - 1));
    std::iota(pool_sizes.begin(), pool_sizes.end(), 1);
    std::shuffle(pool_sizes.begin(), pool_sizes.end(), rng);
    sizes.assign(pool_sizes.begin(), pool_sizes.begin() + depth);
    std::sort(sizes.begin(), sizes.end());
    std::vector<std::vector<VertexId>> levels;
    for (int s : sizes) levels.emplace_back(order.begin(), order.begin() + s);
    return HostExhaustion::build(std::move(host), std::move(levels));
}

}  // namespace hsm
