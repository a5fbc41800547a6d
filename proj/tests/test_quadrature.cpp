#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/sinh_sinh.hpp>

#include "hsm/measure.hpp"
#include "hsm/quadrature.hpp"
#include "hsm/suites.hpp"

using namespace hsm;
using std::numbers::pi;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Eigen::MatrixXd weights2(double w) {
    Eigen::MatrixXd m(2, 2);
    m << 0, w, w, 0;
    return m;
}

const Eigen::MatrixXd no_weights = Eigen::MatrixXd::Zero(1, 1);

// int_0^inf e^{-phi^2 b - theta^2 / (4 b)} (2 b)^{-1/2} db, straight from the integrand
double one_vertex_oracle(double phi, double theta) {
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate(
        [&](double b) { return std::exp(-phi * phi * b - theta * theta / (4.0 * b)) / std::sqrt(2.0 * b); }, 1e-13);
}

// exp that maps the inf - inf of far tails to the integrand's true value 0
double tail_exp(double x) { return std::isnan(x) ? 0.0 : std::exp(x); }

}  // namespace

TEST_CASE("Letac right-hand side") {
    CHECK(letac_rhs(vec({1}), vec({1})) == doctest::Approx(std::sqrt(pi / 2) * std::exp(-1.0)).epsilon(1e-15));
    CHECK(letac_rhs(vec({1}), vec({1})) == doctest::Approx(0.46108).epsilon(1e-5));
    CHECK(letac_rhs(vec({1, 1}), vec({1e-14, 1e-14})) == doctest::Approx(pi / 2).epsilon(1e-12));
    const Eigen::VectorXd phi = vec({2, 0.5}), theta = vec({0.3, 1.7});
    CHECK(letac_rhs(phi, theta) ==
          doctest::Approx(letac_rhs(vec({1, 1}), phi.cwiseProduct(theta)) / phi.prod()).epsilon(1e-14));
}

TEST_CASE("Letac integral for one vertex") {
    const QuadratureSpec spec;
    CHECK(letac_lhs(no_weights, vec({1}), vec({1}), spec) ==
          doctest::Approx(std::sqrt(pi / 2) * std::exp(-1.0)).epsilon(1e-6));
    CHECK(letac_lhs(no_weights, vec({2}), vec({1}), spec) ==
          doctest::Approx(std::sqrt(pi / 2) * std::exp(-2.0) / 2).epsilon(1e-6));
    for (double phi : {0.5, 1.0, 2.0, 4.0, 8.0})
        for (double theta : {0.5, 1.0, 2.0, 4.0, 8.0}) {
            const double lhs = letac_lhs(no_weights, vec({phi}), vec({theta}), spec);
            CHECK(lhs == doctest::Approx(one_vertex_oracle(phi, theta)).epsilon(1e-8));
            CHECK(lhs == doctest::Approx(letac_rhs(vec({phi}), vec({theta}))).epsilon(1e-6));
        }
}

TEST_CASE("Letac integral for two vertices") {
    const QuadratureSpec spec;
    CHECK(letac_lhs(weights2(1.0), vec({1, 1}), vec({1, 1}), spec) ==
          doctest::Approx(pi / 2 * std::exp(-2.0)).epsilon(1e-4));
    for (double w : {0.5, 2.0}) {
        const Eigen::VectorXd phi = vec({1.5, 0.7}), theta = vec({0.4, 1.2});
        CHECK(letac_lhs(weights2(w), phi, theta, spec) == doctest::Approx(letac_rhs(phi, theta)).epsilon(1e-4));
    }
    // graph overload uses the interior weights only
    const PinnedGraph g = path_graph(2, 1.0);
    CHECK(letac_lhs(g, vec({1, 1}), vec({1, 1}), spec) ==
          doctest::Approx(letac_lhs(weights2(1.0), vec({1, 1}), vec({1, 1}), spec)).epsilon(1e-12));
}

TEST_CASE("moving the cone boundary breaks the two-vertex identity") {
    QuadratureSpec spec;
    spec.cone_boundary_scale = 1.01;
    const double lhs = letac_lhs(weights2(1.0), vec({1, 1}), vec({1, 1}), spec);
    CHECK(relative_error(lhs, letac_rhs(vec({1, 1}), vec({1, 1}))) > 1e-3);
}

TEST_CASE("Letac integral rejects bad input") {
    const QuadratureSpec spec;
    CHECK_THROWS_AS(letac_lhs(Eigen::MatrixXd::Zero(3, 3), vec({1, 1, 1}), vec({1, 1, 1}), spec),
                    std::invalid_argument);
    CHECK_THROWS_AS(letac_lhs(no_weights, vec({-1}), vec({1}), spec), std::invalid_argument);
    CHECK_THROWS_AS(letac_lhs(no_weights, vec({1}), vec({0}), spec), std::invalid_argument);
    QuadratureSpec bad;
    bad.rel_tol = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = QuadratureSpec{};
    bad.max_refinements = 0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("scaling reduction") {
    const ScalingReduction id = scaling_reduction(vec({1, 1}), vec({0.3, 0.5}), weights2(2.0));
    CHECK(id.theta == vec({0.3, 0.5}));
    CHECK(id.weights == weights2(2.0));
    CHECK(id.jacobian == 1.0);

    CHECK(scaling_reduction(vec({2, 3}), vec({1, 1}), weights2(1.0)).jacobian == doctest::Approx(1.0 / 36));

    const QuadratureSpec spec;
    const ScalingReduction r = scaling_reduction(vec({2}), vec({1}), no_weights);
    const double direct = letac_lhs(no_weights, vec({2}), vec({1}), spec);
    const double reduced = letac_lhs(r.weights, vec({1}), r.theta, spec) / 2.0;
    CHECK(direct == doctest::Approx(reduced).epsilon(1e-6));

    const ScalingReduction r2 = scaling_reduction(vec({1.5, 0.8}), vec({0.6, 1.1}), weights2(1.2));
    const double direct2 = letac_lhs(weights2(1.2), vec({1.5, 0.8}), vec({0.6, 1.1}), spec);
    const double reduced2 = letac_lhs(r2.weights, vec({1, 1}), r2.theta, spec) / (1.5 * 0.8);
    CHECK(direct2 == doctest::Approx(reduced2).epsilon(1e-6));
}

TEST_CASE("single-edge conditional expectation") {
    const QuadratureSpec spec;
    CHECK(cond_exp_closed_form(1.0, 0.0) == 1.0);
    CHECK(cond_exp_quadrature(1.0, 0.0, spec) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(cond_exp_closed_form(1.0, 1.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
    CHECK(cond_exp_closed_form(1.0, 4.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-15));
    for (double w : {0.1, 0.5, 2.0, 10.0})
        for (double c : {0.0, 0.2, 3.0, 10.0}) {
            // independent quadrature of the same expectation
            boost::math::quadrature::sinh_sinh<double> integrator;
            const double oracle = integrator.integrate(
                [&](double t) { return tail_exp(single_edge_log_density(w, t) - c * std::exp(t)); }, 1e-12);
            CHECK(cond_exp_quadrature(w, c, spec) == doctest::Approx(oracle).epsilon(1e-9));
            auto v = cond_exp_closed_form_check(w, c, spec);
            CHECK(v.pass);
            CHECK(v.anchor == "single-edge-conditional-expectation");
        }
    CHECK_THROWS_AS(cond_exp_closed_form(0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(cond_exp_closed_form(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("single-edge CDF") {
    for (double w : {0.2, 1.0, 5.0}) {
        const SingleEdgeCdf cdf(w);
        CHECK(cdf(-1e3) == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
        CHECK(cdf(1e3) == doctest::Approx(1.0).epsilon(1e-12));
        double prev = 0.0;
        for (double t = -8.0; t <= 8.0; t += 0.37) {
            const double f = cdf(t);
            CHECK(f >= prev);
            prev = f;
        }
        for (double t : {-1.3, 0.0, 0.45, 2.1}) {
            boost::math::quadrature::exp_sinh<double> integrator;
            // integrate the density over (-inf, t] after s = t - x
            const double oracle = integrator.integrate(
                [&](double x) { return std::exp(single_edge_log_density(w, t - x)); }, 1e-12);
            CHECK(cdf(t) == doctest::Approx(oracle).epsilon(1e-9));
        }
    }
}

TEST_CASE("KS distance") {
    const SingleEdgeCdf cdf(1.0);
    const double f0 = cdf(0.0);
    CHECK(ks_distance({0.0}, cdf) == doctest::Approx(std::max(f0, 1.0 - f0)));
    CHECK_THROWS_AS(ks_distance({}, cdf), std::invalid_argument);
}

TEST_CASE("nu route Monte Carlo checks") {
    CheckOptions o;
    o.plan.chain.seed = 5;
    o.plan.chain.burn_in = 5000;
    o.plan.chain.samples = 100000;
    o.plan.chains = 2;
    const PinnedGraph g = pendant_triangle_graph();
    const Index n = g.interior_size();
    const auto letac = letac_nu_check(g, {Eigen::VectorXd::Constant(n, 0.5)}, o);
    REQUIRE(letac.size() == 1);
    CHECK(letac[0].anchor == "letac-formula");
    CHECK(value_of(letac[0].rhs) == doctest::Approx(std::exp(-0.5 * double(n))));
    CHECK(letac[0].pass);

    const auto lap = nu_laplace_check(g, {Eigen::VectorXd::Constant(n, 1.0)}, o);
    REQUIRE(lap.size() == 1);
    CHECK(value_of(lap[0].rhs) == doctest::Approx(nu_laplace_closed_form(g, Eigen::VectorXd::Constant(n, 1.0))));
    CHECK(lap[0].pass);
    CHECK_THROWS_AS(nu_laplace_check(g, {Eigen::VectorXd::Constant(n, -1.0)}, o), std::invalid_argument);
}
