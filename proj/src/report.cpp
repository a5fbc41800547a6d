#include "hsm/report.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

namespace hsm {

namespace {

nlohmann::json quantity_record(const Quantity& q) {
    if (const double* d = std::get_if<double>(&q)) return *d;
    const auto& e = std::get<McEstimate>(q);
    return {{"mean", e.mean}, {"se", e.std_error}, {"ess", e.ess}, {"n", e.n}};
}

std::string quantity_text(const Quantity& q) {
    std::ostringstream os;
    os << std::setprecision(8);
    if (const double* d = std::get_if<double>(&q)) {
        os << *d;
    } else {
        const auto& e = std::get<McEstimate>(q);
        os << e.mean << " +- " << std::setprecision(3) << e.std_error << " (ess " << std::llround(e.ess) << ")";
    }
    return os.str();
}

}  // namespace

nlohmann::json verdict_record(const IdentityVerdict& v) {
    const bool statistical = v.kind == IdentityVerdict::Kind::Statistical;
    return {{"suite", v.suite},
            {"anchor", v.anchor},
            {"name", v.name},
            {"kind", statistical ? "z" : "relerr"},
            {"lhs", quantity_record(v.lhs)},
            {"rhs", quantity_record(v.rhs)},
            {"z_or_relerr", v.statistic},
            {"threshold", v.threshold},
            {"pass", v.pass}};
}

nlohmann::json summary_record(const std::vector<SuiteResult>& results) {
    nlohmann::json suites = nlohmann::json::array();
    for (const auto& r : results)
        suites.push_back({{"suite", r.name},
                          {"verdicts", r.verdicts.size()},
                          {"statistical", r.outcome.statistical},
                          {"exceedances", r.outcome.exceedances},
                          {"max_abs_z", r.outcome.max_abs_z},
                          {"binomial_tail", r.outcome.binomial_tail},
                          {"exact_failures", r.outcome.exact_failures},
                          {"pass", r.outcome.pass}});
    return {{"summary", true}, {"suites", suites}, {"pass", all_passed(results)}};
}

std::string render_json_lines(const std::vector<SuiteResult>& results) {
    std::string out;
    for (const auto& r : results)
        for (const auto& v : r.verdicts) out += verdict_record(v).dump() + "\n";
    out += summary_record(results).dump() + "\n";
    return out;
}

std::string render_text(const std::vector<SuiteResult>& results) {
    std::ostringstream os;
    for (const auto& r : results) {
        os << "== " << r.name << "\n";
        for (const auto& v : r.verdicts) {
            const bool statistical = v.kind == IdentityVerdict::Kind::Statistical;
            os << (v.pass ? "  ok   " : "  FAIL ") << v.name << "\n"
               << "         lhs " << quantity_text(v.lhs) << "\n"
               << "         rhs " << quantity_text(v.rhs) << "\n"
               << "         " << (statistical ? "z " : "relerr ") << std::setprecision(4) << v.statistic
               << " (limit " << v.threshold << ")  [" << v.anchor << "]\n";
        }
        os << "  -> " << (r.outcome.pass ? "PASS" : "FAIL") << ": " << r.verdicts.size() << " verdicts, "
           << r.outcome.exceedances << "/" << r.outcome.statistical << " above z limit (max |z| "
           << std::setprecision(3) << r.outcome.max_abs_z << ", binomial tail " << r.outcome.binomial_tail << "), "
           << r.outcome.exact_failures << " exact failures\n";
    }
    os << (all_passed(results) ? "ALL PASS" : "FAILURES PRESENT") << "\n";
    return os.str();
}

bool all_passed(const std::vector<SuiteResult>& results) {
    for (const auto& r : results)
        if (!r.outcome.pass) return false;
    return true;
}

}  // namespace hsm
