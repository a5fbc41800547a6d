#include "hsm/graph_io.hpp"

#include <fstream>

namespace hsm {

namespace {

using nlohmann::json;

const json& field(const json& doc, const char* name) {
    if (!doc.is_object() || !doc.contains(name))
        throw InputError(std::string("missing field '") + name + "'");
    return doc.at(name);
}

std::vector<VertexId> vertex_list(const json& arr, const char* what) {
    if (!arr.is_array()) throw InputError(std::string(what) + " must be an array of ints");
    std::vector<VertexId> out;
    for (const auto& v : arr) {
        if (!v.is_number_integer())
            throw InputError(std::string(what) + " must be an array of ints");
        out.push_back(v.get<VertexId>());
    }
    return out;
}

std::vector<WeightedEdge> edge_list(const json& arr) {
    if (!arr.is_array()) throw InputError("'edges' must be an array of [i, j, weight]");
    std::vector<WeightedEdge> out;
    for (const auto& e : arr) {
        if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() ||
            !e[1].is_number_integer() || !e[2].is_number())
            throw InputError("each edge must be [int, int, number]");
        out.push_back({e[0].get<VertexId>(), e[1].get<VertexId>(), e[2].get<double>()});
    }
    return out;
}

json edges_json(const std::vector<WeightedEdge>& edges) {
    json arr = json::array();
    for (const auto& e : edges) arr.push_back({e.a, e.b, e.weight});
    return arr;
}

json read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

}  // namespace

PinnedGraph pinned_graph_from_json(const json& doc) {
    const auto& pin = field(doc, "pin");
    if (!pin.is_number_integer()) throw InputError("'pin' must be an int");
    return PinnedGraph::build(vertex_list(field(doc, "vertices"), "'vertices'"),
                              pin.get<VertexId>(), edge_list(field(doc, "edges")));
}

HostExhaustion exhaustion_from_json(const json& doc) {
    const auto& host = field(doc, "host");
    WeightedGraph g = WeightedGraph::build(vertex_list(field(host, "vertices"), "'host.vertices'"),
                                           edge_list(field(host, "edges")));
    const auto& levels = field(doc, "levels");
    if (!levels.is_array()) throw InputError("'levels' must be an array of int arrays");
    std::vector<std::vector<VertexId>> out;
    for (const auto& level : levels) out.push_back(vertex_list(level, "each level"));
    return HostExhaustion::build(std::move(g), std::move(out));
}

json to_json(const PinnedGraph& graph) {
    return json{{"vertices", graph.ids()}, {"pin", graph.pin()}, {"edges", edges_json(graph.edges())}};
}

json to_json(const HostExhaustion& exhaustion) {
    json levels = json::array();
    for (int n = 1; n <= exhaustion.depth(); ++n) levels.push_back(exhaustion.level(n));
    return json{{"host",
                 {{"vertices", exhaustion.host().ids()},
                  {"edges", edges_json(exhaustion.host().edges())}}},
                {"levels", levels}};
}

PinnedGraph load_pinned_graph(const std::filesystem::path& path) {
    return pinned_graph_from_json(read_file(path));
}

HostExhaustion load_exhaustion(const std::filesystem::path& path) {
    return exhaustion_from_json(read_file(path));
}

}  // namespace hsm
