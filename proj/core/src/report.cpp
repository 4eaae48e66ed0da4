#include "kgads/report.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "kgads/csv.hpp"

namespace kgads {

namespace {

nlohmann::json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

}  // namespace

const CheckRecord& Report::add(std::string check, std::string anchor, double value, double tolerance,
                               Comparison cmp, std::string note) {
    CheckRecord r;
    r.check = std::move(check);
    r.anchor = std::move(anchor);
    r.value = value;
    r.tolerance = tolerance;
    r.comparison = cmp;
    r.note = std::move(note);
    if (!std::isnan(value)) r.pass = cmp == Comparison::at_most ? value <= tolerance : value >= tolerance;
    records_.push_back(std::move(r));
    return records_.back();
}

const CheckRecord& Report::add_flag(std::string check, std::string anchor, bool ok, std::string note) {
    return add(std::move(check), std::move(anchor), ok ? 1.0 : 0.0, 1.0, Comparison::at_least, std::move(note));
}

bool Report::all_pass() const {
    for (const auto& r : records_)
        if (!r.pass) return false;
    return true;
}

std::vector<std::string> Report::failures() const {
    std::vector<std::string> out;
    for (const auto& r : records_)
        if (!r.pass) out.push_back(r.check);
    return out;
}

std::string Report::to_json(int indent) const {
    nlohmann::ordered_json checks = nlohmann::ordered_json::array();
    int passed = 0;
    for (const auto& r : records_) {
        nlohmann::ordered_json j;
        j["check"] = r.check;
        j["value"] = number(r.value);
        j["tolerance"] = number(r.tolerance);
        j["comparison"] = r.comparison == Comparison::at_most ? "<=" : ">=";
        j["pass"] = r.pass;
        j["anchor"] = r.anchor;
        if (!r.note.empty()) j["note"] = r.note;
        checks.push_back(std::move(j));
        passed += r.pass ? 1 : 0;
    }
    nlohmann::ordered_json doc;
    doc["checks"] = std::move(checks);
    doc["passed"] = passed;
    doc["failed"] = static_cast<int>(records_.size()) - passed;
    doc["pass"] = all_pass();
    return doc.dump(indent) + "\n";
}

std::string Report::to_text() const {
    std::ostringstream out;
    for (const auto& r : records_) {
        out << (r.pass ? "PASS " : "FAIL ") << r.check << "  " << csv::format_double(r.value)
            << (r.comparison == Comparison::at_most ? " <= " : " >= ") << csv::format_double(r.tolerance);
        if (!r.note.empty()) out << "  (" << r.note << ")";
        out << "\n";
    }
    return out.str();
}

}  // namespace kgads
