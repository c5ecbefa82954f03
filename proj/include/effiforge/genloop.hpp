#pragma once

#include <string>
#include <vector>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"
#include "effiforge/synthgen.hpp"
#include "effiforge/validation.hpp"

namespace effiforge {

/// One row of an audit Borda table.
struct BordaRow {
    std::string test_id;
    double borda_time = 0.0;
    double borda_mem = 0.0;
};

/// What one loop iteration did, for the audit trail.
struct IterationAudit {
    int iteration = 0;         // 1-based
    int synthesizers = 0;      // distinct synthesizers obtained
    int candidate_inputs = 0;  // unique inputs their runs produced
    int validated = 0;         // inputs accepted as test cases
    int rejected_integrity = 0;
    int rejected_consistency = 0;
    std::vector<Rejection> rejections;
    std::vector<BordaRow> pool_borda;      // merged pool ranking after update
    std::vector<std::string> pool_added;   // ids entering the pool this iteration
    std::vector<std::string> pool_removed; // ids displaced this iteration
    bool converged = false;
};

struct GenLoopOutcome {
    StressSuite suite;
    bool converged = false;
    /// No iteration produced a single validated test: the problem gets no
    /// stress suite (soft failure, not an error).
    bool no_suite = false;
    bool budget_exhausted = false;
    std::vector<IterationAudit> audits;
};

/// Builds a problem's stress suite: up to cfg.max_iterations rounds of
/// request synthesizers -> run them -> validate inputs -> measure -> rank ->
/// merge the iteration's top picks into the global pool, stopping early once
/// an iteration leaves the pool unchanged. Reference profiles are measured
/// with profile_repeats-run means under `limits` (also the validation limits).
/// A wall-clock budget aborts pathological generation, keeping the partial
/// pool. Throws when reference code fails to compile or the generator backend
/// is entirely unreachable; bad synthesizers and rejected inputs are soft
/// failures recorded in the audits.
GenLoopOutcome generate_stress_tests(Runner& runner, const Problem& problem,
                                     GeneratorClient& client, const GenConfig& cfg,
                                     const Limits& limits,
                                     double budget_seconds = 1800.0,
                                     int profile_repeats = 5);

/// Renders the outcome's audit trail as a JSON document (one iteration record
/// per entry, with rejection details and the pool Borda table).
std::string genloop_audit_json(const GenLoopOutcome& outcome);

}  // namespace effiforge
