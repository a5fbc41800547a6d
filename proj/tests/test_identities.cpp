#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "hsm/fields.hpp"
#include "hsm/identities.hpp"
#include "hsm/measure.hpp"
#include "hsm/suites.hpp"

using namespace hsm;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
    Eigen::VectorXd v(static_cast<Index>(xs.size()));
    Index i = 0;
    for (double x : xs) v(i++) = x;
    return v;
}

Eigen::VectorXd random_u(Rng& rng, Index size, double scale = 0.6) {
    std::normal_distribution<double> normal(0.0, scale);
    Eigen::VectorXd u = Eigen::VectorXd::Zero(size);
    for (Index i = 1; i < size; ++i) u(i) = normal(rng);
    return u;
}

long double_factorial(int n) { return n <= 1 ? 1 : n * double_factorial(n - 2); }

CheckOptions quick_options(std::uint64_t seed, std::size_t samples) {
    CheckOptions o;
    o.plan.chain.seed = seed;
    o.plan.chain.burn_in = 5000;
    o.plan.chain.samples = samples;
    o.plan.chains = 2;
    o.tag = "unit";
    return o;
}

}  // namespace

TEST_CASE("pairings of small index sets") {
    const auto empty = enumerate_pairings({});
    REQUIRE(empty.size() == 1);
    CHECK(empty[0].pairs.empty());

    const auto two = enumerate_pairings({1, 2});
    REQUIRE(two.size() == 1);
    CHECK(two[0].pairs == std::vector<std::pair<int, int>>{{1, 2}});

    CHECK(enumerate_pairings({1, 2, 3, 4}).size() == 3);
    CHECK(enumerate_pairings({1, 2, 3}).empty());
}

TEST_CASE("pairing counts are (m-1)!! and each matching is valid and distinct") {
    for (int m = 2; m <= 8; m += 2) {
        std::vector<int> items;
        for (int i = 0; i < m; ++i) items.push_back(10 + i);
        const auto all = enumerate_pairings(items);
        CHECK(static_cast<long>(all.size()) == double_factorial(m - 1));
        std::set<std::vector<std::pair<int, int>>> seen;
        for (const auto& p : all) {
            std::multiset<int> covered;
            for (auto [a, b] : p.pairs) {
                covered.insert(a);
                covered.insert(b);
                CHECK(a != b);
            }
            CHECK(covered == std::multiset<int>(items.begin(), items.end()));
            auto sorted = p.pairs;
            for (auto& [a, b] : sorted)
                if (a > b) std::swap(a, b);
            std::sort(sorted.begin(), sorted.end());
            seen.insert(sorted);
        }
        CHECK(seen.size() == all.size());
    }
}

TEST_CASE("martingale terms for m <= 3 match the expanded forms") {
    Rng rng(1);
    for (int rep = 0; rep < 30; ++rep) {
        auto g = random_pinned_graph(rng, 6);
        const Eigen::VectorXd u = random_u(rng, g.size());
        const GreenMatrix G = green_function(g, u);
        std::uniform_int_distribution<Index> pick(1, g.interior_size());
        const Index j = pick(rng), k = pick(rng), l = pick(rng);
        const double ej = std::exp(u(j)), ek = std::exp(u(k)), el = std::exp(u(l));
        CHECK(martingale_term({j}, u, G) == doctest::Approx(ej).epsilon(1e-14));
        CHECK(martingale_term({j, k}, u, G) == doctest::Approx(ej * ek - G(j, k)).epsilon(1e-12));
        const double third = ej * ek * el - ej * G(k, l) - ek * G(j, l) - el * G(j, k);
        CHECK(martingale_term({j, k, l}, u, G) == doctest::Approx(third).epsilon(1e-12).scale(1.0));
    }
}

TEST_CASE("appending the pin reduces the martingale term") {
    Rng rng(2);
    for (int rep = 0; rep < 100; ++rep) {
        auto g = random_pinned_graph(rng, 8);
        const Eigen::VectorXd u = random_u(rng, g.size());
        const GreenMatrix G = green_function(g, u);
        std::uniform_int_distribution<Index> pick(1, g.interior_size());
        std::uniform_int_distribution<int> m_dist(1, 5);
        std::vector<Index> idx(static_cast<std::size_t>(m_dist(rng)));
        for (auto& i : idx) i = pick(rng);
        const double base = martingale_term(idx, u, G);
        auto extended = idx;
        extended.push_back(0);
        const double scale = std::max(1.0, std::abs(base));
        CHECK(std::abs(martingale_term(extended, u, G) - base) <= 1e-12 * scale);
    }
}

TEST_CASE("generating term hand values") {
    const PinnedGraph edge = single_edge_graph();
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(2);
    const GreenMatrix G = green_function(edge, u0);
    CHECK(generating_term(Eigen::VectorXd::Zero(2), u0, G) == 1.0);
    CHECK(generating_term(vec({0, -1}), u0, G) == doctest::Approx(std::exp(-1.5)).epsilon(1e-15));
}

TEST_CASE("derivatives of the generating term at theta = 0 are the martingale terms") {
    Rng rng(3);
    const double h = 1e-3;
    for (int rep = 0; rep < 20; ++rep) {
        auto g = random_pinned_graph(rng, 5);
        const Eigen::VectorXd u = random_u(rng, g.size(), 0.4);
        const GreenMatrix G = green_function(g, u);
        std::uniform_int_distribution<Index> pick(1, g.interior_size());
        for (int m = 1; m <= 3; ++m) {
            std::vector<Index> idx(static_cast<std::size_t>(m));
            for (auto& i : idx) i = pick(rng);
            // central difference in every listed direction
            double fd = 0.0;
            for (int signs = 0; signs < (1 << m); ++signs) {
                Eigen::VectorXd theta = Eigen::VectorXd::Zero(g.size());
                double sign = 1.0;
                for (int k = 0; k < m; ++k) {
                    const bool minus = signs & (1 << k);
                    theta(idx[static_cast<std::size_t>(k)]) += minus ? -h : h;
                    if (minus) sign = -sign;
                }
                fd += sign * generating_term(theta, u, G);
            }
            fd /= std::pow(2.0 * h, m);
            const double exact = martingale_term(idx, u, G);
            // relative to the leading term e^{sum u}: the expansion can cancel
            // far below the size of the truncation error
            double leading = 0.0;
            for (Index i : idx) leading += u(i);
            const double scale = std::max({1.0, std::abs(exact), std::exp(leading)});
            CHECK(std::abs(fd - exact) <= 1e-4 * scale);
        }
    }
}

TEST_CASE("the s-average of the Ward integrand is the martingale term") {
    Rng rng(4);
    const PinnedGraph g = path_graph(2);
    const Eigen::VectorXd u = vec({0, 0.2, -0.3});
    const GreenMatrix G = green_function(g, u);
    for (const std::vector<Index>& idx : {std::vector<Index>{1, 2}, std::vector<Index>{1, 1, 2}}) {
        const int n = 400000;
        double sum = 0.0, sum_sq = 0.0;
        for (int k = 0; k < n; ++k) {
            const FieldConfig f(u, sample_s_given_u(g, u, rng));
            const double x = ward_integrand(idx, f);
            sum += x;
            sum_sq += x * x;
        }
        const double mean = sum / n, se = std::sqrt((sum_sq / n - mean * mean) / n);
        CHECK(std::abs(mean - martingale_term(idx, u, G)) <= 3.0 * se);
    }
    // with s = 0 only the pure exponential survives
    CHECK(ward_integrand({1, 2}, FieldConfig::from_u(u)) == doctest::Approx(std::exp(u(1) + u(2))));
}

TEST_CASE("verdicts") {
    auto s = statistical_verdict("x", "n", "a", McEstimate{1.0, 0.1, 10, 10}, 1.25, -2.5, 3.0);
    CHECK(s.pass);
    CHECK(s.kind == IdentityVerdict::Kind::Statistical);
    auto s2 = statistical_verdict("x", "n", "a", McEstimate{1.0, 0.1, 10, 10}, 1.35, -3.5, 3.0);
    CHECK_FALSE(s2.pass);

    auto e = exact_verdict("x", "n", "a", 1.0, 1.0 + 1e-11, 1e-10);
    CHECK(e.pass);
    CHECK(e.statistic == doctest::Approx(1e-11).epsilon(1e-3));
    CHECK_FALSE(exact_verdict("x", "n", "a", 1.0, 1.1, 1e-10).pass);
    CHECK(relative_error(0.0, 0.0) == 0.0);
    CHECK(value_of(Quantity{2.0}) == 2.0);
    CHECK(value_of(Quantity{McEstimate{3.0, 0.1, 5, 5}}) == 3.0);
}

TEST_CASE("suite decision follows the binomial tail") {
    auto z = [](double v) { return statistical_verdict("x", "n", "a", 0.0, 0.0, v, 3.0); };
    std::vector<IdentityVerdict> vs{z(0.1), z(-1.0), z(2.0), z(0.5)};
    CHECK(assess(vs).pass);
    vs.push_back(z(3.5));
    auto one = assess(vs);
    CHECK(one.exceedances == 1);
    CHECK(one.pass);
    CHECK(one.max_abs_z == doctest::Approx(3.5));
    vs.push_back(z(-4.0));
    auto two = assess(vs);
    CHECK(two.exceedances == 2);
    CHECK_FALSE(two.pass);
    CHECK(two.binomial_tail < 0.01);

    // a single exceedance among a single test is already implausible
    CHECK_FALSE(assess({z(3.2)}).pass);
    // exact failures always fail
    CHECK_FALSE(assess({z(0.0), exact_verdict("x", "n", "a", 1, 2, 1e-3)}).pass);
}

TEST_CASE("consistency of the Laplace transform across levels") {
    const auto host = WeightedGraph::build({1, 2, 3}, {{1, 2, 1.0}, {2, 3, 1.0}});
    const auto exh = HostExhaustion::build(host, {{1}, {1, 2}});
    auto v = consistency_check(exh, 1, {{1, 3.0}});
    CHECK(v.pass);
    CHECK(value_of(v.lhs) == doctest::Approx(std::exp(-1.0) / 2));
    CHECK(value_of(v.rhs) == doctest::Approx(std::exp(-1.0) / 2));
    CHECK(consistency_check(exh, 1, {}).pass);
    CHECK(value_of(consistency_check(exh, 1, {}).lhs) == 1.0);
    CHECK_THROWS_AS(consistency_check(exh, 1, {{2, 1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(consistency_check(exh, 2, {}), GraphError);
}

TEST_CASE("image functional closed forms") {
    const PinnedGraph g = path_graph(2);
    const ScalingParams lambda(vec({0, 3, 0.5}));
    const double l = laplace_closed_form(g, lambda);
    CHECK(ImageFunctional{ImageFunctional::Kind::One, 1, 1, {}}.closed_form(g, lambda) == doctest::Approx(l));
    CHECK(ImageFunctional{ImageFunctional::Kind::ExpU, 1, 2, {}}.closed_form(g, lambda) ==
          doctest::Approx(l * std::sqrt(1.5)));
    const Eigen::VectorXd theta = vec({0, -1, -2});
    CHECK(ImageFunctional{ImageFunctional::Kind::Generating, 1, 1, theta}.closed_form(g, lambda) ==
          doctest::Approx(l * std::exp(-2.0 - 2.0 * std::sqrt(1.5))));

    const Eigen::VectorXd u = vec({0, 0.3, -0.2});
    const GreenMatrix G = green_function(g, u);
    CHECK(ImageFunctional{ImageFunctional::Kind::SecondMartingale, 1, 2, {}}.evaluate(g, u) ==
          doctest::Approx(std::exp(0.1) - G(1, 2)));
}

TEST_CASE("level positions") {
    const auto exh = path_host_exhaustion();
    const PinnedGraph g1 = wired_collapse(exh, 1);
    CHECK(level_position(g1, exh.level(1).front()) == 1);
    CHECK(level_position(g1, exh.level(2).back()) == 0);
}

TEST_CASE("Monte Carlo checks produce the expected verdict sets") {
    const PinnedGraph edge = single_edge_graph();
    const auto ward = ward_identity_check(edge, {{1}, {1, 1}}, quick_options(1, 60000));
    CHECK(ward.size() == 4);
    for (const auto& v : ward) CHECK(v.anchor == "ward-identity-moments");
    CHECK(assess(ward).pass);

    const auto ew = exp_ward_check(edge, {vec({-1, -1})}, quick_options(2, 60000));
    REQUIRE(ew.size() == 3);
    CHECK(value_of(ew[0].rhs) == doctest::Approx(std::exp(-2.0)));
    CHECK(value_of(ew[1].rhs) == 0.0);
    CHECK(assess(ew).pass);

    const auto lap = laplace_check(path_graph(2), {ScalingParams(vec({0, 3, 0}))}, quick_options(3, 100000));
    REQUIRE(lap.size() == 1);
    CHECK(value_of(lap[0].rhs) == doctest::Approx(std::exp(-2.0) / 2));
    CHECK(lap[0].pass);

    const auto gl = generalized_laplace_check(edge, {{vec({0, -1}), ScalingParams(vec({0, 3}))}},
                                              quick_options(4, 100000));
    REQUIRE(gl.size() == 1);
    CHECK(value_of(gl[0].rhs) == doctest::Approx(std::exp(-1.0) / 2 * std::exp(-2.0)));
    CHECK(gl[0].pass);

    const auto img = importance_identity_check(
        path_graph(2), ScalingParams(vec({0, 1, 1})),
        {{ImageFunctional::Kind::One, 1, 1, {}}, {ImageFunctional::Kind::ExpU, 1, 2, {}}}, quick_options(5, 100000));
    CHECK(img.size() == 6);
    CHECK(assess(img).pass);

    const auto exh = path_host_exhaustion();
    const VertexId first = exh.level(1).front();
    const auto mg = martingale_step_check(exh, 1, {{{first}, {}, false}}, {}, quick_options(6, 100000));
    CHECK(mg.size() == 3);
    CHECK(assess(mg).pass);

    CHECK_THROWS_AS(generalized_laplace_check(edge, {{vec({0, 1}), ScalingParams::zero(2)}}, quick_options(7, 10)),
                    std::invalid_argument);
}
