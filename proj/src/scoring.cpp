#include "effiforge/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "effiforge/util.hpp"

namespace effiforge {

double beyond(double measurement, const std::vector<double>& reference, bool correct) {
    if (!correct) return 0.0;
    if (reference.empty())
        throw std::invalid_argument("beyond: empty reference spectrum for a correct "
                                    "translation (pool must exist after pruning)");
    const auto [lo_it, hi_it] = std::minmax_element(reference.begin(), reference.end());
    const double lo = *lo_it, hi = *hi_it;
    if (hi == lo) return measurement <= lo ? 100.0 : 0.0;
    const double clipped = std::clamp(measurement, lo, hi);
    return (hi - clipped) / (hi - lo) * 100.0;
}

// ---------------------------------------------------------------------------
// Kendall's tau-b
// ---------------------------------------------------------------------------

namespace {

struct TieSums {
    double pairs = 0.0;    // sum t(t-1)/2 over tie groups
    double v1_term = 0.0;  // sum t(t-1)(2t+5)
    double v2_term = 0.0;  // sum t(t-1)(t-2)
};

TieSums tie_sums(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    TieSums s;
    std::size_t i = 0;
    while (i < v.size()) {
        std::size_t j = i;
        while (j < v.size() && v[j] == v[i]) ++j;
        const double t = static_cast<double>(j - i);
        s.pairs += t * (t - 1.0) / 2.0;
        s.v1_term += t * (t - 1.0) * (2.0 * t + 5.0);
        s.v2_term += t * (t - 1.0) * (t - 2.0);
        i = j;
    }
    return s;
}

}  // namespace

KendallResult kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
    const std::size_t n = x.size();
    if (n != y.size()) throw std::invalid_argument("kendall_tau: length mismatch");
    if (n < 2) throw std::invalid_argument("kendall_tau: need at least 2 observations");

    double concordant = 0.0, discordant = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double dx = x[i] - x[j];
            const double dy = y[i] - y[j];
            if (dx == 0.0 || dy == 0.0) continue;
            if ((dx > 0.0) == (dy > 0.0)) concordant += 1.0;
            else discordant += 1.0;
        }
    }

    const double nd = static_cast<double>(n);
    const double total_pairs = nd * (nd - 1.0) / 2.0;
    const TieSums tx = tie_sums(x);
    const TieSums ty = tie_sums(y);
    const double denom =
        std::sqrt((total_pairs - tx.pairs) * (total_pairs - ty.pairs));
    if (denom == 0.0)
        throw std::invalid_argument("kendall_tau: tau undefined, a vector has no "
                                    "variation");

    KendallResult r;
    const double s = concordant - discordant;
    r.tau = s / denom;

    // Tie-corrected variance of S for the normal approximation.
    double var = (nd * (nd - 1.0) * (2.0 * nd + 5.0) - tx.v1_term - ty.v1_term) / 18.0 +
                 (2.0 * tx.pairs * ty.pairs) / (nd * (nd - 1.0));
    if (n > 2)
        var += tx.v2_term * ty.v2_term / (9.0 * nd * (nd - 1.0) * (nd - 2.0));
    if (var <= 0.0) {
        r.p = 1.0;  // everything tied away; no evidence either direction
        return r;
    }
    const double z = s / std::sqrt(var);
    r.p = std::erfc(std::abs(z) / std::sqrt(2.0));
    return r;
}

// ---------------------------------------------------------------------------
// Inefficiency flags
// ---------------------------------------------------------------------------

std::vector<InefficiencyFlag> flag_inefficient(const ReferencePool& pool, double factor) {
    if (pool.members.empty())
        throw std::invalid_argument("flag_inefficient: empty pool");
    std::vector<InefficiencyFlag> flags;
    for (MetricKind metric : {MetricKind::TIME, MetricKind::MEM}) {
        auto value = [metric](const PoolMember& m) {
            return metric == MetricKind::TIME ? m.profile.wall_time
                                              : m.profile.peak_memory;
        };
        double best = value(pool.members.front());
        for (const PoolMember& m : pool.members) best = std::min(best, value(m));
        for (std::size_t i = 0; i < pool.members.size(); ++i) {
            const double v = value(pool.members[i]);
            if (v > factor * best)
                flags.push_back(InefficiencyFlag{
                    i, pool.members[i].candidate.producer_tag, metric, v / best});
        }
    }
    return flags;
}

// ---------------------------------------------------------------------------
// Candidate scoring
// ---------------------------------------------------------------------------

namespace {

/// Empty result means all original tests passed.
std::string run_original_tests(Runner& runner, const CompiledHandle& handle,
                               const std::vector<TestCase>& tests,
                               const Limits& limits) {
    for (const TestCase& t : tests) {
        ExecutionOutcome o = runner.execute(handle, t.input, limits);
        if (o.status != RunStatus::OK)
            return status_name(o.status) + " on original test " + t.input.id;
        if (normalize_output(o.stdout_bytes) != t.expected_output)
            return "WRONG_OUTPUT on original test " + t.input.id;
    }
    return "";
}

struct SuiteProfile {
    bool ok = false;
    ExecutionProfile profile;  // per_run = one (time, mem) mean per suite test
    std::string reason;
};

/// Checks correctness on every stress test, then measures repeats-run means
/// per test. The resulting profile aggregates the suite: per_run holds the
/// per-test means in pool order, wall_time/peak_memory their averages.
SuiteProfile profile_over_suite(Runner& runner, const CompiledHandle& handle,
                                const StressSuite& suite, const Limits& limits,
                                int repeats) {
    SuiteProfile result;
    if (suite.pool.empty()) {
        result.reason = "stress suite for " + suite.problem_id + " is empty";
        return result;
    }
    std::vector<std::pair<double, double>> per_test;
    per_test.reserve(suite.pool.size());
    for (const SuiteEntry& entry : suite.pool) {
        const std::string& id = entry.test.input.id;
        ExecutionOutcome o = runner.execute(handle, entry.test.input, limits);
        if (o.status != RunStatus::OK) {
            result.reason = status_name(o.status) + " on stress test " + id;
            return result;
        }
        if (normalize_output(o.stdout_bytes) != entry.test.expected_output) {
            result.reason = "WRONG_OUTPUT on stress test " + id;
            return result;
        }
        ProfileResult pr = runner.profile(handle, entry.test, repeats, limits);
        if (!pr.ok) {
            result.reason = status_name(pr.failure.status) + " while profiling stress test " + id;
            return result;
        }
        per_test.emplace_back(pr.profile.wall_time, pr.profile.peak_memory);
    }
    result.ok = true;
    result.profile = make_profile(std::move(per_test));
    return result;
}

}  // namespace

TaskScore score_translation(Runner& runner, const CandidateTranslation& candidate,
                            const StressSuite& suite, const ReferencePool& pool,
                            const std::vector<TestCase>& original_tests,
                            const Limits& limits, const ScoreOptions& opts) {
    TaskScore score;
    score.task = candidate.task;

    CompiledHandle handle = runner.compile(candidate.task.target_lang,
                                           candidate.source_text);
    if (!handle.ok()) {
        score.failure_reason = "COMPILE_ERROR";
        return score;
    }
    if (std::string fail = run_original_tests(runner, handle, original_tests, limits);
        !fail.empty()) {
        score.failure_reason = fail;
        return score;
    }
    score.correct = true;

    SuiteProfile sp = profile_over_suite(runner, handle, suite, limits, opts.repeats);
    if (!sp.ok) {
        // Original tests passed, so the task counts toward Pass, but the
        // candidate cannot beat any reference it failed to keep up with.
        score.failure_reason = sp.reason;
        return score;
    }
    score.profile = sp.profile;

    if (pool.members.empty())
        throw std::invalid_argument("reference pool for task " +
                                    task_key(candidate.task) + " is empty");

    if (opts.aggregation == BeyondAggregation::TASK_MEAN_FIRST) {
        std::vector<double> ref_time, ref_mem;
        for (const PoolMember& m : pool.members) {
            ref_time.push_back(m.profile.wall_time);
            ref_mem.push_back(m.profile.peak_memory);
        }
        score.beyond_time = beyond(score.profile.wall_time, ref_time, true);
        score.beyond_mem = beyond(score.profile.peak_memory, ref_mem, true);
    } else {
        const std::size_t tests = score.profile.per_run.size();
        for (const PoolMember& m : pool.members)
            if (m.profile.per_run.size() != tests)
                throw std::runtime_error("pool member '" + m.candidate.producer_tag +
                                         "' was profiled against a different suite ("
                                         + std::to_string(m.profile.per_run.size()) +
                                         " tests vs " + std::to_string(tests) + ")");
        double sum_time = 0.0, sum_mem = 0.0;
        for (std::size_t i = 0; i < tests; ++i) {
            std::vector<double> ref_time, ref_mem;
            for (const PoolMember& m : pool.members) {
                ref_time.push_back(m.profile.per_run[i].first);
                ref_mem.push_back(m.profile.per_run[i].second);
            }
            sum_time += beyond(score.profile.per_run[i].first, ref_time, true);
            sum_mem += beyond(score.profile.per_run[i].second, ref_mem, true);
        }
        score.beyond_time = sum_time / static_cast<double>(tests);
        score.beyond_mem = sum_mem / static_cast<double>(tests);
    }
    return score;
}

EvalReport aggregate(const std::string& producer_tag, std::vector<TaskScore> records) {
    if (records.empty())
        throw std::invalid_argument("aggregate: no task records for " + producer_tag);
    EvalReport report;
    report.producer_tag = producer_tag;

    const double n = static_cast<double>(records.size());
    double correct = 0.0, sum_t = 0.0, sum_m = 0.0, sum_t_p = 0.0, sum_m_p = 0.0;
    for (const TaskScore& s : records) {
        sum_t += s.beyond_time;
        sum_m += s.beyond_mem;
        if (s.correct) {
            correct += 1.0;
            sum_t_p += s.beyond_time;
            sum_m_p += s.beyond_mem;
        }
    }
    report.pass = 100.0 * correct / n;
    report.b_time = sum_t / n;
    report.b_mem = sum_m / n;
    report.b_time_p = correct > 0.0 ? sum_t_p / correct : 0.0;
    report.b_mem_p = correct > 0.0 ? sum_m_p / correct : 0.0;
    report.per_task = std::move(records);
    return report;
}

void fill_common_subset(std::vector<EvalReport>& reports, double pass_threshold) {
    for (EvalReport& r : reports) {
        r.b_time_com.reset();
        r.b_mem_com.reset();
    }
    std::vector<EvalReport*> eligible;
    for (EvalReport& r : reports)
        if (r.pass >= pass_threshold) eligible.push_back(&r);
    if (eligible.empty()) return;

    // Intersection of the eligible reports' correctly-solved task sets.
    std::set<std::string> common;
    for (const TaskScore& s : eligible.front()->per_task)
        if (s.correct) common.insert(task_key(s.task));
    for (std::size_t i = 1; i < eligible.size(); ++i) {
        std::set<std::string> mine;
        for (const TaskScore& s : eligible[i]->per_task)
            if (s.correct) mine.insert(task_key(s.task));
        std::set<std::string> kept;
        std::set_intersection(common.begin(), common.end(), mine.begin(), mine.end(),
                              std::inserter(kept, kept.begin()));
        common.swap(kept);
    }
    if (common.empty()) return;

    for (EvalReport* r : eligible) {
        double sum_t = 0.0, sum_m = 0.0, count = 0.0;
        for (const TaskScore& s : r->per_task) {
            if (!common.count(task_key(s.task))) continue;
            sum_t += s.beyond_time;
            sum_m += s.beyond_mem;
            count += 1.0;
        }
        if (count > 0.0) {
            r->b_time_com = sum_t / count;
            r->b_mem_com = sum_m / count;
        }
    }
}

PoolBuildOutcome build_reference_pool(Runner& runner, const TranslationTask& task,
                                      const std::vector<CandidateTranslation>& candidates,
                                      const StressSuite& suite,
                                      const std::vector<TestCase>& original_tests,
                                      const Limits& limits, int repeats) {
    PoolBuildOutcome out;
    out.pool.task = task;
    for (const CandidateTranslation& cand : candidates) {
        if (!(cand.task == task))
            throw std::invalid_argument("candidate '" + cand.producer_tag +
                                        "' belongs to task " + task_key(cand.task) +
                                        ", not " + task_key(task));
        CompiledHandle handle = runner.compile(task.target_lang, cand.source_text);
        if (!handle.ok()) {
            out.rejected.emplace_back(cand.producer_tag, "COMPILE_ERROR");
            continue;
        }
        if (std::string fail = run_original_tests(runner, handle, original_tests, limits);
            !fail.empty()) {
            out.rejected.emplace_back(cand.producer_tag, fail);
            continue;
        }
        SuiteProfile sp = profile_over_suite(runner, handle, suite, limits, repeats);
        if (!sp.ok) {
            out.rejected.emplace_back(cand.producer_tag, sp.reason);
            continue;
        }
        out.pool.members.push_back(PoolMember{cand, std::move(sp.profile)});
    }
    return out;
}

}  // namespace effiforge
