#include "hsm/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <thread>

namespace hsm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

void ChainConfig::validate() const {
    if (samples < 1) throw std::invalid_argument("chain needs at least one sample");
    if (thinning < 1) throw std::invalid_argument("thinning must be >= 1");
    if (!(target_accept > 0.0 && target_accept < 1.0))
        throw std::invalid_argument("target acceptance must lie in (0, 1)");
    if (!(initial_step_size > 0.0)) throw std::invalid_argument("initial step size must be positive");
}

double McEstimate::z_against(double truth) const {
    const double gap = mean - truth;
    if (std_error > 0.0) return gap / std_error;
    return gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
}

double combined_z(const McEstimate& a, const McEstimate& b, double scale) {
    const double gap = a.mean - scale * b.mean;
    const double se = std::hypot(a.std_error, scale * b.std_error);
    if (se > 0.0) return gap / se;
    return gap == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), gap);
}

double combined_z(const McEstimate& a, const McEstimate& b) { return combined_z(a, b, 1.0); }

McEstimate pool(const std::vector<McEstimate>& parts) {
    McEstimate out;
    out.ess = 0.0;
    for (const auto& p : parts) out.n += p.n;
    if (out.n == 0) throw EstimationError("pooling empty estimates");
    double var = 0.0;
    for (const auto& p : parts) {
        const double w = static_cast<double>(p.n) / static_cast<double>(out.n);
        out.mean += w * p.mean;
        var += w * w * p.std_error * p.std_error;
        out.ess += p.ess;
    }
    out.std_error = std::sqrt(var);
    return out;
}

BatchMeans::BatchMeans(std::size_t expected) : expected_(std::max<std::size_t>(expected, 1)) {
    const auto batches = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(expected_)))));
    batch_size_ = std::max<std::size_t>(1, expected_ / batches);
    batch_means_.reserve(batches + 1);
}

void BatchMeans::add(double x) {
    ++count_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (x - mean_);
    batch_sum_ += x;
    if (++batch_fill_ == batch_size_) {
        batch_means_.push_back(batch_sum_ / static_cast<double>(batch_size_));
        batch_sum_ = 0.0;
        batch_fill_ = 0;
    }
}

McEstimate BatchMeans::result() const {
    McEstimate out;
    out.mean = mean_;
    out.n = count_;
    if (count_ < 2) return out;
    const double iid_var = m2_ / static_cast<double>(count_ - 1);
    const std::size_t b = batch_means_.size();
    double se2;
    if (b >= 2) {
        double m = 0.0;
        for (double v : batch_means_) m += v;
        m /= static_cast<double>(b);
        double ss = 0.0;
        for (double v : batch_means_) ss += (v - m) * (v - m);
        // variance of one batch mean, scaled to the full stream
        const double batch_var = ss / static_cast<double>(b - 1);
        se2 = batch_var * static_cast<double>(batch_size_) / static_cast<double>(count_);
    } else {
        se2 = iid_var / static_cast<double>(count_);
    }
    out.std_error = std::sqrt(se2);
    if (se2 > 0.0)
        out.ess = std::clamp(iid_var / se2, 1.0, static_cast<double>(count_));
    else
        out.ess = static_cast<double>(count_);
    return out;
}

Rng make_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t chain) {
    const std::uint64_t a = splitmix64(seed);
    const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
    const std::uint64_t c = splitmix64(b ^ splitmix64(chain + 0x8cb92ba72f3d8dd7ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return Rng(seq);
}

std::uint64_t stream_tag(const std::string& name) {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : name) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

UMarginalTarget::UMarginalTarget(const PinnedGraph& graph)
    : n_(graph.interior_size()), a_(n_, n_), llt_(n_) {
    for (const auto& e : graph.edges())
        edges_.push_back({*graph.index_of(e.a), *graph.index_of(e.b), e.weight});
}

double UMarginalTarget::operator()(const Eigen::VectorXd& u) {
    a_.setZero();
    double value = 0.0;
    for (const auto& e : edges_) {
        const double c = e.w * std::exp(u(e.i) + u(e.j));
        value -= e.w * (std::cosh(u(e.i) - u(e.j)) - 1.0);
        // positions shift by one: the pin (position 0) is dropped
        if (e.i > 0) a_(e.i - 1, e.i - 1) += c;
        if (e.j > 0) a_(e.j - 1, e.j - 1) += c;
        if (e.i > 0 && e.j > 0) {
            a_(e.i - 1, e.j - 1) -= c;
            a_(e.j - 1, e.i - 1) -= c;
        }
    }
    llt_.compute(a_);
    if (llt_.info() != Eigen::Success) return kNegInf;
    const auto diag = llt_.matrixLLT().diagonal();
    if (!(diag.minCoeff() > 0.0)) return kNegInf;
    value += diag.array().log().sum() - u.sum();
    return std::isfinite(value) ? value : kNegInf;
}

MetropolisChain::MetropolisChain(LogTarget target, Eigen::VectorXd initial,
                                 std::vector<Index> free_coordinates, const ChainConfig& config,
                                 Rng rng)
    : target_(std::move(target)),
      x_(std::move(initial)),
      free_(std::move(free_coordinates)),
      config_(config),
      rng_(std::move(rng)),
      log_step_(free_.size(), std::log(config.initial_step_size)),
      accepted_(free_.size(), 0),
      proposed_(free_.size(), 0) {
    config_.validate();
    if (free_.empty()) throw std::invalid_argument("chain has no free coordinates");
    log_p_ = target_(x_);
    if (!(log_p_ > kNegInf)) throw std::invalid_argument("initial state is outside the target support");
}

bool MetropolisChain::update(std::size_t k, bool adapt) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const Index i = free_[k];
    const double old = x_(i);
    x_(i) = old + std::exp(log_step_[k]) * normal(rng_);
    const double log_q = target_(x_);
    const double log_ratio = log_q - log_p_;
    const bool accept = log_q > kNegInf && (log_ratio >= 0.0 || std::log(uniform(rng_)) < log_ratio);
    if (accept)
        log_p_ = log_q;
    else
        x_(i) = old;
    if (adapt) {
        const double alpha = log_q > kNegInf ? std::min(1.0, std::exp(log_ratio)) : 0.0;
        const double gain = std::pow(static_cast<double>(adapt_iter_) + 1.0, -0.6);
        log_step_[k] = std::clamp(log_step_[k] + gain * (alpha - config_.target_accept), -12.0, 5.0);
    } else {
        ++proposed_[k];
        if (accept) ++accepted_[k];
    }
    return accept;
}

void MetropolisChain::run_burn_in() {
    for (std::size_t t = 0; t < config_.burn_in; ++t) {
        for (std::size_t k = 0; k < free_.size(); ++k) update(k, true);
        ++adapt_iter_;
    }
}

void MetropolisChain::step() {
    if (config_.random_scan) {
        std::uniform_int_distribution<std::size_t> pick(0, free_.size() - 1);
        update(pick(rng_), false);
    } else {
        for (std::size_t k = 0; k < free_.size(); ++k) update(k, false);
    }
}

ChainDiagnostics MetropolisChain::diagnostics() const {
    ChainDiagnostics d;
    const auto m = static_cast<Index>(free_.size());
    d.step_sizes.resize(m);
    d.acceptance.resize(m);
    for (Index k = 0; k < m; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        d.step_sizes(k) = std::exp(log_step_[kk]);
        d.acceptance(k) = proposed_[kk] ? static_cast<double>(accepted_[kk]) / static_cast<double>(proposed_[kk]) : 0.0;
    }
    return d;
}

MetropolisChain make_u_chain(const PinnedGraph& graph, const ChainConfig& config, Rng rng) {
    std::vector<Index> free;
    for (Index i = 1; i < graph.size(); ++i) free.push_back(i);
    auto target = std::make_shared<UMarginalTarget>(graph);
    return MetropolisChain([target](const Eigen::VectorXd& u) { return (*target)(u); },
                           Eigen::VectorXd::Zero(graph.size()), std::move(free), config, std::move(rng));
}

ChainRun run_chain(const PinnedGraph& graph, const ChainConfig& config) {
    MetropolisChain chain = make_u_chain(graph, config, make_rng(config.seed, 0, 0));
    chain.run_burn_in();
    ChainRun run;
    run.samples.reserve(config.samples);
    for (std::size_t k = 0; k < config.samples; ++k) {
        for (std::size_t t = 0; t < config.thinning; ++t) chain.step();
        run.samples.push_back(chain.state());
    }
    run.diagnostics = chain.diagnostics();
    return run;
}

McEstimate estimate(const Functional& f, const std::vector<Eigen::VectorXd>& u_samples, int s_draws,
                    const PinnedGraph& graph, Rng& rng) {
    BatchMeans acc(u_samples.size());
    for (std::size_t k = 0; k < u_samples.size(); ++k) {
        const Eigen::VectorXd& u = u_samples[k];
        double value = 0.0;
        if (s_draws <= 0) {
            value = f(FieldConfig::from_u(u));
        } else {
            auto factor = SpdFactor::of(interior_laplacian(graph, u));
            if (!factor) throw NumericError("interior Laplacian is not positive definite");
            for (int d = 0; d < s_draws; ++d) value += f(FieldConfig(u, sample_s_given_u(*factor, rng)));
            value /= s_draws;
        }
        if (!std::isfinite(value))
            throw EstimationError("functional is not finite at sample " + std::to_string(k));
        acc.add(value);
    }
    return acc.result();
}

namespace {

std::vector<McEstimate> run_one_chain(const PinnedGraph& graph, const std::vector<Observable>& observables,
                                      const MonteCarloPlan& plan, std::size_t samples, Rng rng) {
    ChainConfig config = plan.chain;
    config.samples = samples;
    MetropolisChain chain = make_u_chain(graph, config, std::move(rng));
    chain.run_burn_in();

    std::vector<BatchMeans> acc(observables.size(), BatchMeans(samples));
    std::vector<double> sums(observables.size());
    const Index n = graph.interior_size();
    const double s_scale = std::sqrt(plan.green_scale);
    for (std::size_t k = 0; k < samples; ++k) {
        for (std::size_t t = 0; t < config.thinning; ++t) chain.step();
        const Eigen::VectorXd& u = chain.state();
        auto factor = SpdFactor::of(interior_laplacian(graph, u));
        if (!factor) throw NumericError("interior Laplacian is not positive definite");
        const Eigen::VectorXd e = u.tail(n).array().exp().matrix();
        Eigen::MatrixXd g = Eigen::MatrixXd::Zero(graph.size(), graph.size());
        g.bottomRightCorner(n, n) = plan.green_scale * (e.asDiagonal() * factor->inverse() * e.asDiagonal());
        const GreenMatrix green(std::move(g));
        const BetaField beta = beta_field(graph, u);

        std::fill(sums.begin(), sums.end(), 0.0);
        const int draws = std::max(plan.s_draws, 1);
        for (int d = 0; d < draws; ++d) {
            Eigen::VectorXd s = plan.s_draws > 0 ? Eigen::VectorXd(s_scale * sample_s_given_u(*factor, chain.rng()))
                                                 : Eigen::VectorXd::Zero(graph.size());
            const FieldConfig field(u, std::move(s));
            const SampleContext ctx{graph, field, green, beta};
            for (std::size_t o = 0; o < observables.size(); ++o) sums[o] += observables[o](ctx);
        }
        for (std::size_t o = 0; o < observables.size(); ++o) {
            const double value = sums[o] / draws;
            if (!std::isfinite(value))
                throw EstimationError("observable " + std::to_string(o) + " is not finite at sample " +
                                      std::to_string(k));
            acc[o].add(value);
        }
    }
    std::vector<McEstimate> out;
    for (const auto& a : acc) out.push_back(a.result());
    return out;
}

}  // namespace

std::vector<McEstimate> estimate_observables(const PinnedGraph& graph, const std::vector<Observable>& observables,
                                             const MonteCarloPlan& plan, std::uint64_t stream) {
    plan.chain.validate();
    if (plan.chains < 1) throw std::invalid_argument("need at least one chain");
    const auto chains = static_cast<std::size_t>(plan.chains);
    const std::size_t per_chain = std::max<std::size_t>(1, plan.chain.samples / chains);

    std::vector<std::vector<McEstimate>> results(chains);
    std::vector<std::exception_ptr> errors(chains);
    auto work = [&](std::size_t c) {
        try {
            results[c] = run_one_chain(graph, observables, plan, per_chain, make_rng(plan.chain.seed, stream, c));
        } catch (...) {
            errors[c] = std::current_exception();
        }
    };
    std::size_t workers = plan.workers > 0 ? static_cast<std::size_t>(plan.workers)
                                           : std::max(1U, std::thread::hardware_concurrency());
    workers = std::min(workers, chains);
    if (workers <= 1) {
        for (std::size_t c = 0; c < chains; ++c) work(c);
    } else {
        std::vector<std::thread> pool_threads;
        for (std::size_t w = 0; w < workers; ++w)
            pool_threads.emplace_back([&, w] {
                for (std::size_t c = w; c < chains; c += workers) work(c);
            });
        for (auto& t : pool_threads) t.join();
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);

    std::vector<McEstimate> out;
    for (std::size_t o = 0; o < observables.size(); ++o) {
        std::vector<McEstimate> parts;
        for (std::size_t c = 0; c < chains; ++c) parts.push_back(results[c][o]);
        out.push_back(pool(parts));
    }
    return out;
}

}  // namespace hsm
