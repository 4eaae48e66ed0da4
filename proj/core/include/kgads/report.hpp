#pragma once

#include <string>
#include <vector>

namespace kgads {

/// How a check value is compared against its tolerance.
enum class Comparison { at_most, at_least };

struct CheckRecord {
    std::string check;
    /// Mathematical identity the check exercises, e.g. "chi_-(D_t) Lambda^+ = 0".
    std::string anchor;
    double value = 0.0;
    double tolerance = 0.0;
    Comparison comparison = Comparison::at_most;
    bool pass = false;
    std::string note;
};

/// Ordered list of check records with a deterministic JSON rendering.
class Report {
public:
    /// Appends a record; pass is derived from value, tolerance and comparison
    /// (a NaN value never passes).
    const CheckRecord& add(std::string check, std::string anchor, double value, double tolerance,
                           Comparison cmp = Comparison::at_most, std::string note = {});
    /// Appends a boolean check (value 1 for true, tolerance 1, at_least).
    const CheckRecord& add_flag(std::string check, std::string anchor, bool ok, std::string note = {});

    const std::vector<CheckRecord>& records() const { return records_; }
    bool all_pass() const;
    std::vector<std::string> failures() const;

    /// {"checks": [...], "passed": n, "failed": n, "pass": bool}; numbers are
    /// written in shortest round-trip form, infinities as strings.
    std::string to_json(int indent = 2) const;
    /// One line per check: PASS/FAIL, name, value, comparison, tolerance.
    std::string to_text() const;

private:
    std::vector<CheckRecord> records_;
};

}  // namespace kgads
