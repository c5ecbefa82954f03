#include "effiforge/selection.hpp"

#include <algorithm>
#include <stdexcept>

#include "effiforge/util.hpp"

namespace effiforge {

namespace {

double metric_value(const ExecutionProfile& p, MetricKind metric) {
    return metric == MetricKind::TIME ? p.wall_time : p.peak_memory;
}

/// Averaged competition rank over one language, rank 1 = largest value:
/// 1 + (#strictly greater) + (#equal others)/2. Equivalent to sorting
/// descending and averaging positions across each tie run.
double fractional_rank(const std::vector<double>& values, std::size_t i) {
    double greater = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < values.size(); ++j) {
        if (j == i) continue;
        if (values[j] > values[i]) greater += 1.0;
        else if (values[j] == values[i]) equal += 1.0;
    }
    return 1.0 + greater + equal / 2.0;
}

std::vector<ProfiledTest> to_profiled(const std::vector<SuiteEntry>& entries) {
    std::vector<ProfiledTest> out;
    out.reserve(entries.size());
    for (const SuiteEntry& e : entries)
        out.push_back(ProfiledTest{e.test.input.id, e.profiles});
    return out;
}

}  // namespace

std::vector<RankedTest> borda_rank(const std::vector<ProfiledTest>& tests,
                                   MetricKind metric) {
    std::vector<RankedTest> ranked;
    ranked.reserve(tests.size());
    for (const ProfiledTest& t : tests) {
        for (SubjectLanguage lang : kAllLanguages)
            if (!t.profiles.count(lang))
                throw std::invalid_argument("borda_rank: test " + t.test_id +
                                            " has no profile for " + lang_name(lang));
        ranked.push_back(RankedTest{t.test_id, 0.0, 0.0, t.profiles});
    }

    for (SubjectLanguage lang : kAllLanguages) {
        for (MetricKind m : {MetricKind::TIME, MetricKind::MEM}) {
            std::vector<double> values;
            values.reserve(tests.size());
            for (const ProfiledTest& t : tests)
                values.push_back(metric_value(t.profiles.at(lang), m));
            for (std::size_t i = 0; i < ranked.size(); ++i) {
                const double r = fractional_rank(values, i);
                if (m == MetricKind::TIME) ranked[i].borda_time += r;
                else ranked[i].borda_mem += r;
            }
        }
    }

    std::sort(ranked.begin(), ranked.end(),
              [metric](const RankedTest& a, const RankedTest& b) {
                  const double sa = metric == MetricKind::TIME ? a.borda_time : a.borda_mem;
                  const double sb = metric == MetricKind::TIME ? b.borda_time : b.borda_mem;
                  if (sa != sb) return sa < sb;
                  return a.test_id < b.test_id;
              });
    return ranked;
}

std::vector<std::string> select_top(const std::vector<RankedTest>& ranked, int k,
                                    const std::set<std::string>& exclude) {
    if (k < 1) throw std::invalid_argument("select_top: k must be >= 1");
    std::vector<std::string> picked;
    for (const RankedTest& t : ranked) {
        if (static_cast<int>(picked.size()) == k) break;
        if (!exclude.count(t.test_id)) picked.push_back(t.test_id);
    }
    return picked;
}

StressSuite update_pool(const StressSuite& pool, const std::vector<SuiteEntry>& fresh,
                        int k) {
    const std::string here = machine_fingerprint();
    if (!pool.pool.empty() && !pool.fingerprint.empty() && pool.fingerprint != here)
        throw std::runtime_error(
            "refusing to merge pools measured on different machines: suite for '" +
            pool.problem_id + "' carries fingerprint '" + pool.fingerprint +
            "', this machine is '" + here + "'");

    // Merge by test id; a test already in the pool keeps its measured profiles.
    std::vector<SuiteEntry> merged = pool.pool;
    std::set<std::string> have;
    for (const SuiteEntry& e : merged) have.insert(e.test.input.id);
    for (const SuiteEntry& e : fresh)
        if (have.insert(e.test.input.id).second) merged.push_back(e);

    const std::vector<ProfiledTest> profiled = to_profiled(merged);
    const std::vector<RankedTest> by_time = borda_rank(profiled, MetricKind::TIME);
    const std::vector<RankedTest> by_mem = borda_rank(profiled, MetricKind::MEM);

    StressSuite next;
    next.problem_id = pool.problem_id;
    next.iterations_run = pool.iterations_run;
    next.fingerprint = here;
    next.top_time = select_top(by_time, k);
    std::set<std::string> taken(next.top_time.begin(), next.top_time.end());
    next.top_mem = select_top(by_mem, k, taken);

    auto entry_by_id = [&merged](const std::string& id) -> const SuiteEntry& {
        for (const SuiteEntry& e : merged)
            if (e.test.input.id == id) return e;
        throw std::logic_error("update_pool: selected id not in merged set");
    };
    for (const std::string& id : next.top_time) next.pool.push_back(entry_by_id(id));
    for (const std::string& id : next.top_mem) next.pool.push_back(entry_by_id(id));
    return next;
}

bool has_converged(const StressSuite& pool_before, const StressSuite& pool_after) {
    auto as_set = [](const std::vector<std::string>& ids) {
        return std::set<std::string>(ids.begin(), ids.end());
    };
    return as_set(pool_before.top_time) == as_set(pool_after.top_time) &&
           as_set(pool_before.top_mem) == as_set(pool_after.top_mem);
}

FewShotExamples update_examples(const StressSuite& pool,
                                const std::map<std::string, Synthesizer>& synth_index,
                                int cap) {
    FewShotExamples examples;
    examples.cap = cap;
    if (pool.pool.empty()) return examples;

    // Combined time+memory score orders the pool most-stressful-first.
    std::vector<RankedTest> ranked = borda_rank(to_profiled(pool.pool), MetricKind::TIME);
    std::sort(ranked.begin(), ranked.end(), [](const RankedTest& a, const RankedTest& b) {
        const double sa = a.borda_time + a.borda_mem;
        const double sb = b.borda_time + b.borda_mem;
        if (sa != sb) return sa < sb;
        return a.test_id < b.test_id;
    });

    std::set<std::string> seen_synths;
    for (const RankedTest& t : ranked) {
        if (static_cast<int>(examples.entries.size()) == cap) break;
        auto it = synth_index.find(t.test_id);
        if (it == synth_index.end()) {
            log_warn("no synthesizer recorded for pool test " + t.test_id +
                     "; skipped as a few-shot example");
            continue;
        }
        if (!seen_synths.insert(it->second.id).second) continue;
        FewShotEntry entry;
        entry.synth = it->second;
        // The summary shown in prompts is the test's most extreme demand.
        for (const auto& [lang, prof] : t.profiles) {
            entry.wall_time = std::max(entry.wall_time, prof.wall_time);
            entry.peak_memory = std::max(entry.peak_memory, prof.peak_memory);
        }
        entry.borda_score = t.borda_time + t.borda_mem;
        examples.entries.push_back(std::move(entry));
    }
    return examples;
}

}  // namespace effiforge
