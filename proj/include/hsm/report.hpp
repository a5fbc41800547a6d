#pragma once

// Machine-readable (JSON lines) and plain-text rendering of suite results.
// Both are derived from the same records and contain no timings, so equal
// inputs give byte-identical output.

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsm/identities.hpp"
#include "hsm/suites.hpp"

namespace hsm {

nlohmann::json verdict_record(const IdentityVerdict& v);
nlohmann::json summary_record(const std::vector<SuiteResult>& results);

/// One JSON object per verdict, then one summary object.
std::string render_json_lines(const std::vector<SuiteResult>& results);
std::string render_text(const std::vector<SuiteResult>& results);

bool all_passed(const std::vector<SuiteResult>& results);

}  // namespace hsm
