#pragma once

#include <map>
#include <optional>
#include <string>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"

namespace effiforge {

/// The two validation gates, checked in this order so every rejection has
/// exactly one primary reason: INTEGRITY (some reference implementation did
/// not finish cleanly) before CONSISTENCY (they finished but disagreed).
enum class RejectionKind { INTEGRITY, CONSISTENCY };

std::string rejection_name(RejectionKind kind);

struct Rejection {
    RejectionKind kind = RejectionKind::INTEGRITY;
    std::string test_id;
    /// INTEGRITY: every language's status (all three run even after a failure,
    /// for diagnostics). CONSISTENCY: statuses are all OK.
    std::map<SubjectLanguage, RunStatus> statuses;
    /// CONSISTENCY: the disagreeing normalized outputs, truncated for logging.
    std::map<SubjectLanguage, std::string> outputs;
    std::string detail;
};

struct ValidationResult {
    std::optional<TestCase> test;        // set iff accepted
    std::optional<Rejection> rejection;  // set iff rejected

    bool accepted() const { return test.has_value(); }
};

/// Decides whether a candidate input is valid ground truth: runs it on all
/// three reference implementations (precompiled handles, one per language)
/// and accepts iff every run is OK and the normalized outputs are identical.
/// The consensus output becomes the TestCase's expected_output. Runs use the
/// evaluation limits: an input that breaks even one reference is unusable.
ValidationResult validate_test(Runner& runner,
                               const std::map<SubjectLanguage, CompiledHandle>& refs,
                               const TestInput& input, const Limits& limits);

/// One rejection-log line (JSONL) for pipeline audits.
std::string rejection_to_jsonl(const Rejection& rejection);

}  // namespace effiforge
