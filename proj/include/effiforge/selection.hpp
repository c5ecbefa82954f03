#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "effiforge/model.hpp"

namespace effiforge {

/// Minimal input for ranking: a test id plus its reference-code profiles in
/// every subject language.
struct ProfiledTest {
    std::string test_id;
    std::map<SubjectLanguage, ExecutionProfile> profiles;
};

/// A test with its Borda scores. A score is the sum of the test's per-language
/// ranks, rank 1 being the most resource-intensive; within a language, equal
/// measurements share the averaged (fractional) rank, so scores are reals that
/// stay integral for tie-free inputs.
struct RankedTest {
    std::string test_id;
    double borda_time = 0.0;
    double borda_mem = 0.0;
    std::map<SubjectLanguage, ExecutionProfile> profiles;
};

/// Ranks tests by aggregated computational demand. Both Borda scores are
/// computed; the result is sorted ascending by the requested metric's score
/// (lower = more stressful), ties broken by lexicographic test_id. Throws
/// std::invalid_argument when a test lacks a profile for some language.
std::vector<RankedTest> borda_rank(const std::vector<ProfiledTest>& tests,
                                   MetricKind metric);

/// First K ids of `ranked` not in `exclude`, in rank order; fewer when the
/// input runs out.
std::vector<std::string> select_top(const std::vector<RankedTest>& ranked, int k,
                                    const std::set<std::string>& exclude = {});

/// Merges fresh iteration picks into the global pool and re-ranks: top_time is
/// the overall top-K by TIME, top_mem the top-K by MEM among the rest, and the
/// pool keeps exactly the referenced tests (time picks first, then memory
/// picks, each in rank order). Entries already in the pool keep their measured
/// profiles. Throws std::runtime_error when the incoming pool was measured on
/// a different machine (fingerprint mismatch).
StressSuite update_pool(const StressSuite& pool, const std::vector<SuiteEntry>& fresh,
                        int k);

/// True iff the id sets of top_time and top_mem are unchanged between two
/// consecutive iterations' pools.
bool has_converged(const StressSuite& pool_before, const StressSuite& pool_after);

/// Collects the synthesizers behind the current pool's tests, most stressful
/// first (combined Borda score ascending), deduplicated, truncated to cap.
/// Pool tests missing from synth_index are skipped with a warning.
FewShotExamples update_examples(const StressSuite& pool,
                                const std::map<std::string, Synthesizer>& synth_index,
                                int cap);

}  // namespace effiforge
