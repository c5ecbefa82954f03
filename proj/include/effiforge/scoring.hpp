#pragma once

#include <string>
#include <vector>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"

namespace effiforge {

// ---------------------------------------------------------------------------
// Beyond score
// ---------------------------------------------------------------------------

/// Normalized efficiency percentile of a measurement within the reference
/// spectrum: (max(R) - clip(P, min(R), max(R))) / (max(R) - min(R)) * 100.
/// 100 means at or beyond the best reference, 0 at or beyond the worst.
/// Incorrect translations score 0 regardless of P. A degenerate spectrum
/// (max = min) becomes a step function at the spectrum value. Throws
/// std::invalid_argument on an empty R with correct=true.
double beyond(double measurement, const std::vector<double>& reference, bool correct);

// ---------------------------------------------------------------------------
// Rank correlation
// ---------------------------------------------------------------------------

struct KendallResult {
    double tau = 0.0;  // tau-b, tie-corrected, in [-1, 1]
    double p = 1.0;    // two-sided, normal approximation
};

/// Kendall's tau-b between two equal-length vectors. Throws
/// std::invalid_argument for n < 2, length mismatch, or an all-tied vector
/// (tau undefined).
KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

// ---------------------------------------------------------------------------
// Inefficiency flags
// ---------------------------------------------------------------------------

struct InefficiencyFlag {
    std::size_t member_index = 0;
    std::string producer_tag;
    MetricKind metric = MetricKind::TIME;
    double ratio = 0.0;  // member value / pool minimum
};

/// Flags pool members whose time or memory exceeds `factor` times the most
/// efficient member's value. TIME flags first, then MEM, each in member order.
std::vector<InefficiencyFlag> flag_inefficient(const ReferencePool& pool,
                                               double factor = 2.0);

// ---------------------------------------------------------------------------
// Scoring candidates
// ---------------------------------------------------------------------------

/// How a task-level measurement P is derived for Beyond scoring.
/// TASK_MEAN_FIRST compares suite-wide means (candidate mean vs member
/// means); PER_TEST_MEAN computes Beyond per suite test against the members'
/// per-test values and averages the scores. Both rely on profiles carrying
/// one per_run entry per suite test, in suite pool order.
enum class BeyondAggregation { TASK_MEAN_FIRST, PER_TEST_MEAN };

struct ScoreOptions {
    int repeats = 5;
    BeyondAggregation aggregation = BeyondAggregation::TASK_MEAN_FIRST;
};

/// Scores one candidate translation: correctness is compiling plus passing
/// every original test within limits; a correct candidate is then profiled
/// over the whole stress suite (repeats-run mean per test) and scored against
/// the pool's spectra. A correct candidate that fails a stress test (crash,
/// limit, wrong output) keeps correct=true but scores Beyond 0 on both
/// metrics, with the cause in failure_reason.
TaskScore score_translation(Runner& runner, const CandidateTranslation& candidate,
                            const StressSuite& suite, const ReferencePool& pool,
                            const std::vector<TestCase>& original_tests,
                            const Limits& limits, const ScoreOptions& opts = {});

/// Folds per-task records into one report: Pass, B over all tasks (incorrect
/// contribute 0), and B^P over correct tasks only. Common-subset columns are
/// filled later by fill_common_subset. Throws std::invalid_argument on empty
/// records.
EvalReport aggregate(const std::string& producer_tag, std::vector<TaskScore> records);

/// Computes B^com for every report whose Pass reaches pass_threshold: the mean
/// Beyond over the intersection of those reports' correctly-solved task sets.
/// Reports below the threshold (or an empty intersection) get no value.
void fill_common_subset(std::vector<EvalReport>& reports, double pass_threshold = 85.0);

// ---------------------------------------------------------------------------
// Reference pools
// ---------------------------------------------------------------------------

struct PoolBuildOutcome {
    ReferencePool pool;
    /// (producer_tag, reason) for every candidate that failed verification.
    std::vector<std::pair<std::string, std::string>> rejected;
};

/// Verifies candidates for pool membership: each must compile, pass all
/// original tests, and pass every stress test; survivors are profiled over
/// the suite (per_run = one entry per suite test, in pool order) and become
/// the task's reference spectrum.
PoolBuildOutcome build_reference_pool(Runner& runner, const TranslationTask& task,
                                      const std::vector<CandidateTranslation>& candidates,
                                      const StressSuite& suite,
                                      const std::vector<TestCase>& original_tests,
                                      const Limits& limits, int repeats = 5);

}  // namespace effiforge
