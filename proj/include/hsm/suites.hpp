#pragma once

// Named verification suites: each bundles a set of identity checks on default
// (or user-supplied) graphs and reports every verdict plus a suite decision.

#include <optional>
#include <string>
#include <vector>

#include "hsm/graph.hpp"
#include "hsm/identities.hpp"
#include "hsm/measure.hpp"
#include "hsm/sampler.hpp"

namespace hsm {

struct SuiteConfig {
    ChainConfig chain;
    int chains = 4;
    int workers = 0;
    int s_draws = 1;
    double z_threshold = 3.0;
    /// overrides every exact tolerance when set
    std::optional<double> tolerance;
    /// random instances for the algebra and consistency suites
    int instances = 100;
    /// mutation hooks, 1 for correct runs
    double green_scale = 1.0;
    double cone_boundary_scale = 1.0;
    std::optional<PinnedGraph> graph;
    std::optional<HostExhaustion> exhaustion;
};

struct SuiteResult {
    std::string name;
    std::vector<IdentityVerdict> verdicts;
    SuiteOutcome outcome;
};

/// Every suite name accepted by run_suite, in canonical order.
const std::vector<std::string>& suite_names();

/// Throws std::invalid_argument for an unknown name.
SuiteResult run_suite(const std::string& name, const SuiteConfig& config);

/// Verdict on a precomputed discrepancy: pass iff discrepancy <= tolerance.
IdentityVerdict tolerance_verdict(std::string suite, std::string name, std::string anchor, double discrepancy,
                                  double tolerance);

// Default graphs, all with unit weights unless stated.

/// pin 0 -- 1 with weight w
PinnedGraph single_edge_graph(double w = 1.0);
/// pin 0 -- 1 -- 2 -- ... -- interior
PinnedGraph path_graph(int interior, double w = 1.0);
/// triangle on {0 (pin), 1, 2}
PinnedGraph triangle_graph();
/// pin 0 -- 1, interior triangle on {1, 2, 3}
PinnedGraph pendant_triangle_graph();
/// host path 1 -- 2 -- 3 -- 4, levels {1, 2} and {1, 2, 3}
HostExhaustion path_host_exhaustion();

/// Connected pinned graph with 1..max_interior interior vertices and weights
/// in [0.2, 3]. With `single_pin_edge` the pin has exactly one neighbour and
/// |V| >= 2.
PinnedGraph random_pinned_graph(Rng& rng, int max_interior, bool single_pin_edge = false);

/// Connected host on 3..max_vertices vertices with 1..3 random nested levels.
HostExhaustion random_exhaustion(Rng& rng, int max_vertices);

}  // namespace hsm
