#include "effiforge/genloop.hpp"

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>

#include "effiforge/selection.hpp"
#include "effiforge/util.hpp"
#include "json.hpp"

namespace effiforge {

namespace {

std::set<std::string> pooled_ids(const StressSuite& suite) {
    std::set<std::string> ids(suite.top_time.begin(), suite.top_time.end());
    ids.insert(suite.top_mem.begin(), suite.top_mem.end());
    return ids;
}

std::vector<ProfiledTest> to_profiled(const std::vector<SuiteEntry>& entries) {
    std::vector<ProfiledTest> out;
    out.reserve(entries.size());
    for (const SuiteEntry& e : entries)
        out.push_back(ProfiledTest{e.test.input.id, e.profiles});
    return out;
}

}  // namespace

GenLoopOutcome generate_stress_tests(Runner& runner, const Problem& problem,
                                     GeneratorClient& client, const GenConfig& cfg,
                                     const Limits& limits, double budget_seconds,
                                     int profile_repeats) {
    const auto started = std::chrono::steady_clock::now();
    auto elapsed = [&] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
            .count();
    };

    std::map<SubjectLanguage, CompiledHandle> refs;
    for (SubjectLanguage lang : kAllLanguages) {
        auto it = problem.reference_code.find(lang);
        if (it == problem.reference_code.end())
            throw std::invalid_argument("problem " + problem.id +
                                        " has no reference code for " + lang_name(lang));
        CompiledHandle h = runner.compile(lang, it->second);
        if (!h.ok())
            throw std::runtime_error("reference code for problem " + problem.id +
                                     " does not compile in " + lang_name(lang) + ":\n" +
                                     h.diagnostics);
        refs[lang] = std::move(h);
    }

    GenLoopOutcome out;
    StressSuite pool;
    pool.problem_id = problem.id;
    pool.fingerprint = machine_fingerprint();

    FewShotExamples examples;  // iteration 1 always runs with no examples
    std::map<std::string, Synthesizer> synth_index;  // test id -> producer
    int completed = 0;

    for (int iteration = 1; iteration <= cfg.max_iterations; ++iteration) {
        if (elapsed() > budget_seconds) {
            log_warn("generation budget exhausted for problem " + problem.id +
                     " after " + std::to_string(completed) +
                     " iteration(s); keeping the partial pool");
            out.budget_exhausted = true;
            break;
        }

        IterationAudit audit;
        audit.iteration = iteration;

        std::vector<Synthesizer> synths =
            request_synthesizers(client, problem, examples, cfg, iteration);
        audit.synthesizers = static_cast<int>(synths.size());

        // Unique candidate inputs of this iteration. Inputs already in the
        // pool are skipped: they are validated and measured already, and the
        // merge would drop the duplicate anyway.
        const std::set<std::string> in_pool = pooled_ids(pool);
        std::vector<TestInput> candidates;
        std::map<std::string, Synthesizer> producer;
        std::set<std::string> seen;
        for (const Synthesizer& s : synths) {
            for (TestInput& input : run_synthesizer(runner, s, cfg.runs_per_synth)) {
                if (!seen.insert(input.id).second) continue;
                if (in_pool.count(input.id)) continue;
                producer.emplace(input.id, s);
                candidates.push_back(std::move(input));
            }
        }
        audit.candidate_inputs = static_cast<int>(seen.size());

        std::vector<SuiteEntry> fresh;
        for (const TestInput& input : candidates) {
            ValidationResult vr = validate_test(runner, refs, input, limits);
            if (!vr.accepted()) {
                if (vr.rejection->kind == RejectionKind::INTEGRITY)
                    ++audit.rejected_integrity;
                else
                    ++audit.rejected_consistency;
                audit.rejections.push_back(std::move(*vr.rejection));
                continue;
            }
            SuiteEntry entry;
            entry.test = std::move(*vr.test);
            bool measured = true;
            for (SubjectLanguage lang : kAllLanguages) {
                ProfileResult pr =
                    runner.profile(refs.at(lang), entry.test, profile_repeats, limits);
                if (!pr.ok) {
                    // Validation passed but a timing run failed; without full
                    // profiles the test cannot be ranked.
                    log_warn("test " + entry.test.input.id + " of problem " +
                             problem.id + " failed while profiling on " +
                             lang_name(lang) + " (" +
                             status_name(pr.failure.status) + "); dropped");
                    measured = false;
                    break;
                }
                entry.profiles[lang] = pr.profile;
            }
            if (!measured) continue;
            ++audit.validated;
            synth_index[entry.test.input.id] = producer.at(entry.test.input.id);
            fresh.push_back(std::move(entry));
        }

        // The iteration's own top picks: top-K by time, then top-K by memory
        // among the rest. Only these compete for pool membership.
        std::vector<SuiteEntry> selected;
        if (!fresh.empty()) {
            const std::vector<ProfiledTest> profiled = to_profiled(fresh);
            const std::vector<std::string> top_t =
                select_top(borda_rank(profiled, MetricKind::TIME), cfg.top_k);
            const std::set<std::string> taken(top_t.begin(), top_t.end());
            const std::vector<std::string> top_m = select_top(
                borda_rank(profiled, MetricKind::MEM), cfg.top_k, taken);
            std::set<std::string> chosen(top_t.begin(), top_t.end());
            chosen.insert(top_m.begin(), top_m.end());
            for (SuiteEntry& e : fresh)
                if (chosen.count(e.test.input.id)) selected.push_back(std::move(e));
        }

        StressSuite next = update_pool(pool, selected, cfg.top_k);
        const std::set<std::string> before = pooled_ids(pool);
        const std::set<std::string> after = pooled_ids(next);
        std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                            std::back_inserter(audit.pool_added));
        std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                            std::back_inserter(audit.pool_removed));
        for (const RankedTest& r :
             borda_rank(to_profiled(next.pool), MetricKind::TIME))
            audit.pool_borda.push_back(BordaRow{r.test_id, r.borda_time, r.borda_mem});

        audit.converged = has_converged(pool, next);
        pool = std::move(next);
        completed = iteration;
        out.audits.push_back(std::move(audit));

        if (out.audits.back().converged) {
            out.converged = true;
            break;
        }
        examples = update_examples(pool, synth_index, examples.cap);
    }

    pool.iterations_run = completed;
    out.no_suite = pool.pool.empty();
    out.suite = std::move(pool);
    return out;
}

std::string genloop_audit_json(const GenLoopOutcome& outcome) {
    using nlohmann::json;
    json iterations = json::array();
    for (const IterationAudit& a : outcome.audits) {
        json borda = json::array();
        for (const BordaRow& row : a.pool_borda)
            borda.push_back(json{{"test_id", row.test_id},
                                 {"borda_time", row.borda_time},
                                 {"borda_mem", row.borda_mem}});
        json rejections = json::array();
        for (const Rejection& r : a.rejections)
            rejections.push_back(json::parse(rejection_to_jsonl(r)));
        iterations.push_back(json{{"iteration", a.iteration},
                                  {"synthesizers", a.synthesizers},
                                  {"candidate_inputs", a.candidate_inputs},
                                  {"validated", a.validated},
                                  {"rejected_integrity", a.rejected_integrity},
                                  {"rejected_consistency", a.rejected_consistency},
                                  {"converged", a.converged},
                                  {"pool_added", a.pool_added},
                                  {"pool_removed", a.pool_removed},
                                  {"pool_borda", std::move(borda)},
                                  {"rejections", std::move(rejections)}});
    }
    json j{{"problem_id", outcome.suite.problem_id},
           {"prompt_template", kPromptTemplateVersion},
           {"fingerprint", outcome.suite.fingerprint},
           {"iterations_run", outcome.suite.iterations_run},
           {"converged", outcome.converged},
           {"no_suite", outcome.no_suite},
           {"budget_exhausted", outcome.budget_exhausted},
           {"iterations", std::move(iterations)}};
    return j.dump(2) + "\n";
}

}  // namespace effiforge
