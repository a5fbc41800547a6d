#pragma once

// JSON graph files:
//   graph:       {"vertices": [ints], "pin": int, "edges": [[i, j, w], ...]}
//   exhaustion:  {"host": {"vertices": [...], "edges": [...]}, "levels": [[ints], ...]}

#include <filesystem>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "hsm/graph.hpp"

namespace hsm {

/// Unreadable file or malformed document. Graph validation failures surface
/// as GraphError instead.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

PinnedGraph pinned_graph_from_json(const nlohmann::json& doc);
HostExhaustion exhaustion_from_json(const nlohmann::json& doc);

nlohmann::json to_json(const PinnedGraph& graph);
nlohmann::json to_json(const HostExhaustion& exhaustion);

PinnedGraph load_pinned_graph(const std::filesystem::path& path);
HostExhaustion load_exhaustion(const std::filesystem::path& path);

}  // namespace hsm
