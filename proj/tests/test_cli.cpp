#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsm/cli.hpp"

using namespace hsm;

namespace {

struct Outcome {
    int status;
    std::string out;
    std::string err;
};

Outcome invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "verify");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int status = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {status, out.str(), err.str()};
}

std::string data(const std::string& name) { return std::string(HSM_DATA_DIR) + "/" + name; }

std::vector<nlohmann::json> parse_lines(const std::string& text) {
    std::vector<nlohmann::json> out;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);)
        if (!line.empty()) out.push_back(nlohmann::json::parse(line));
    return out;
}

}  // namespace

TEST_CASE("passing suites exit 0") {
    auto r = invoke({"--suite", "cond-exp,letac"});
    CHECK(r.status == kExitPass);
    CHECK(r.out.find("ALL PASS") != std::string::npos);
}

TEST_CASE("a failing suite exits 1") {
    auto r = invoke({"--suite", "letac", "--cone-boundary-scale", "1.01"});
    CHECK(r.status == kExitFailure);
}

TEST_CASE("input problems exit 2") {
    CHECK(invoke({}).status == kExitInputError);
    CHECK(invoke({"--suite", "nonsense"}).status == kExitInputError);
    CHECK(invoke({"--suite", "laplace", "--graph", "/nonexistent.json"}).status == kExitInputError);
    CHECK(invoke({"--suite", "laplace", "--samples", "0"}).status == kExitInputError);
    CHECK(invoke({"--suite", "laplace", "--report", "xml"}).status == kExitInputError);

    const auto bad = std::filesystem::temp_directory_path() / "hsm_cli_bad.json";
    std::ofstream(bad) << R"({"vertices": [0, 1, 2], "pin": 0, "edges": [[0, 1, 1.0]]})";
    auto r = invoke({"--suite", "laplace", "--graph", bad.string()});
    CHECK(r.status == kExitInputError);
    CHECK_FALSE(r.err.empty());
    std::filesystem::remove(bad);
}

TEST_CASE("JSON report is deterministic and labelled") {
    const std::vector<std::string> args{"--suite",  "laplace", "--graph", data("path3.json"), "--samples",
                                        "20000",    "--seed",  "7",       "--report",         "json"};
    auto a = invoke(args);
    auto b = invoke(args);
    REQUIRE(a.status == b.status);
    CHECK(a.out == b.out);

    const auto records = parse_lines(a.out);
    REQUIRE(records.size() >= 2);
    for (std::size_t k = 0; k + 1 < records.size(); ++k) {
        const auto& r = records[k];
        CHECK(r.at("suite") == "laplace");
        CHECK(r.at("anchor") == "laplace-transform-beta");
        CHECK(r.contains("lhs"));
        CHECK(r.contains("rhs"));
        CHECK(r.contains("z_or_relerr"));
        CHECK(r.contains("pass"));
    }
    CHECK(records.back().contains("pass"));

    auto c = invoke({"--suite", "laplace", "--graph", data("path3.json"), "--samples", "20000", "--seed", "8",
                     "--report", "json"});
    CHECK(c.out != a.out);
}

TEST_CASE("exhaustion input drives the consistency suite") {
    auto r = invoke({"--suite", "consistency", "--exhaustion", data("path_host.json"), "--report", "json"});
    CHECK(r.status == kExitPass);
    for (const auto& rec : parse_lines(r.out))
        if (rec.contains("anchor")) CHECK(rec.at("anchor") == "kolmogorov-consistency");
}
