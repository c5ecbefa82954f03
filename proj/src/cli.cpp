#include "effiforge/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "effiforge/genloop.hpp"
#include "effiforge/pruning.hpp"
#include "effiforge/util.hpp"
#include "effiforge/validation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace effiforge {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitEval = 1;    // the evaluation itself failed
constexpr int kExitConfig = 2;  // bad configuration or broken infrastructure

// ---------------------------------------------------------------------------
// Artifact layout: one file per artifact so runs are inspectable and
// resumable. All names derive from problem ids and task keys.
// ---------------------------------------------------------------------------

fs::path suite_file(const fs::path& dir, const std::string& problem_id) {
    return dir / ("suite." + problem_id + ".json");
}

fs::path audit_file(const fs::path& dir, const std::string& problem_id) {
    return dir / ("audit." + problem_id + ".json");
}

fs::path rejections_file(const fs::path& dir, const std::string& problem_id) {
    return dir / ("rejections." + problem_id + ".jsonl");
}

fs::path pool_file(const fs::path& dir, const std::string& key) {
    return dir / ("pool." + key + ".json");
}

fs::path report_file(const fs::path& dir, const std::string& tag) {
    return dir / ("report." + tag + ".json");
}

/// Problem ids become file names; anything outside [A-Za-z0-9._-] (or a
/// leading dot) would escape the layout.
bool safe_artifact_name(const std::string& name) {
    if (name.empty() || name.size() > 128 || name.front() == '.') return false;
    for (char c : name) {
        const unsigned char u = static_cast<unsigned char>(c);
        if (!std::isalnum(u) && c != '.' && c != '_' && c != '-') return false;
    }
    return true;
}

std::vector<fs::path> list_dir_sorted(const fs::path& dir) {
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(dir)) out.push_back(entry.path());
    std::sort(out.begin(), out.end());
    return out;
}

/// The candidate file for (task dir, producer): any regular file whose stem is
/// the producer tag, extension free. Empty path when there is none.
fs::path find_candidate_file(const fs::path& dir, const std::string& tag) {
    if (!fs::is_directory(dir)) return {};
    std::vector<fs::path> hits;
    for (const fs::path& f : list_dir_sorted(dir))
        if (fs::is_regular_file(f) && f.stem().string() == tag) hits.push_back(f);
    if (hits.empty()) return {};
    if (hits.size() > 1)
        log_warn("multiple candidate files for \"" + tag + "\" under " + dir.string() +
                 "; using " + hits.front().filename().string());
    return hits.front();
}

// ---------------------------------------------------------------------------
// Worker pool. Timed subject runs are serialized inside the runner, so
// threads here only overlap untimed work (compilation, IO, bookkeeping).
// ---------------------------------------------------------------------------

void parallel_for(int jobs, std::size_t count,
                  const std::function<void(std::size_t)>& fn) {
    jobs = std::max(1, jobs);
    if (jobs == 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    const int workers = static_cast<int>(
        std::min<std::size_t>(static_cast<std::size_t>(jobs), count));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&, w] {
            try {
                for (std::size_t i; (i = next.fetch_add(1)) < count;) fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
                next = count;  // stop handing out further work
            }
        });
    }
    for (std::thread& t : threads) t.join();
    for (const std::exception_ptr& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Leaderboard rendering
// ---------------------------------------------------------------------------

std::string fmt1(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
}

std::vector<const EvalReport*> leaderboard_order(const std::vector<EvalReport>& reports) {
    std::vector<const EvalReport*> out;
    out.reserve(reports.size());
    for (const EvalReport& r : reports) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](const EvalReport* a, const EvalReport* b) {
        if (a->pass != b->pass) return a->pass > b->pass;
        if (a->b_time != b->b_time) return a->b_time > b->b_time;
        return a->producer_tag < b->producer_tag;
    });
    return out;
}

std::string render_leaderboard(const std::vector<EvalReport>& reports) {
    std::size_t w = 8;
    for (const EvalReport& r : reports) w = std::max(w, r.producer_tag.size());
    const int tagw = static_cast<int>(w);
    std::ostringstream os;
    os << std::left << std::setw(tagw) << "producer" << std::right << std::setw(7)
       << "pass" << std::setw(7) << "B_T" << std::setw(7) << "B_M" << std::setw(8)
       << "B_T^P" << std::setw(8) << "B_M^P" << std::setw(9) << "B_T^com"
       << std::setw(9) << "B_M^com" << "\n";
    for (const EvalReport* r : leaderboard_order(reports)) {
        os << std::left << std::setw(tagw) << r->producer_tag << std::right
           << std::setw(7) << fmt1(r->pass) << std::setw(7) << fmt1(r->b_time)
           << std::setw(7) << fmt1(r->b_mem) << std::setw(8) << fmt1(r->b_time_p)
           << std::setw(8) << fmt1(r->b_mem_p) << std::setw(9)
           << (r->b_time_com ? fmt1(*r->b_time_com) : "-") << std::setw(9)
           << (r->b_mem_com ? fmt1(*r->b_mem_com) : "-") << "\n";
    }
    return os.str();
}

std::string leaderboard_json(std::uint64_t seed, const std::vector<EvalReport>& reports) {
    json rows = json::array();
    for (const EvalReport* r : leaderboard_order(reports)) {
        json row{{"producer", r->producer_tag},   {"pass", r->pass},
                 {"b_time", r->b_time},           {"b_mem", r->b_mem},
                 {"b_time_p", r->b_time_p},       {"b_mem_p", r->b_mem_p}};
        row["b_time_com"] = r->b_time_com ? json(*r->b_time_com) : json();
        row["b_mem_com"] = r->b_mem_com ? json(*r->b_mem_com) : json();
        rows.push_back(std::move(row));
    }
    return json{{"seed", seed}, {"rows", std::move(rows)}}.dump(2) + "\n";
}

int report_missing_toolchains(const RunnerConfig& cfg) {
    const std::vector<std::string> missing = missing_toolchains(cfg);
    if (missing.empty()) return kExitOk;
    for (const std::string& m : missing)
        std::fprintf(stderr, "error: missing toolchain: %s\n", m.c_str());
    std::fprintf(stderr,
                 "hint: install the tool or point the config's \"toolchains\" "
                 "section at one that exists\n");
    return kExitConfig;
}

// ---------------------------------------------------------------------------
// Subcommand options (CLI11 fills these in run_cli)
// ---------------------------------------------------------------------------

struct GlobalOptions {
    std::string config_path;
    std::uint64_t seed = 0;
    int jobs = 1;
    bool keep_workdirs = false;
};

struct GenTestsOptions {
    std::string problems;
    std::string out;
    std::string generator = "mock";
    bool resume = false;
};

struct PruneOptions {
    std::string suites;
    std::string pools;
    std::string out;
    std::string candidates;
    std::string problems;
    double eps_time = 0.0;
    double eps_mem = 0.0;
    double eps_div = 0.0;
    bool population_cv = false;
    int repeats = 0;
};

struct EvaluateOptions {
    std::string problems;
    std::string suites;
    std::string pools;
    std::string kept;
    std::string candidates;
    std::string out;
    int repeats = 5;
    double common_threshold = 85.0;
    bool per_test_mean = false;
};

struct ReportOptions {
    std::string reports;
    std::string pools;
    double factor = 2.0;
};

// ---------------------------------------------------------------------------
// gen-tests
// ---------------------------------------------------------------------------

int cmd_gen_tests(const GlobalOptions& g, const GenTestsOptions& o, HarnessConfig cfg) {
    cfg.runner.keep_workdirs = cfg.runner.keep_workdirs || g.keep_workdirs;
    if (int rc = report_missing_toolchains(cfg.runner)) return rc;

    std::vector<Problem> problems;
    try {
        problems = load_dataset(o.problems);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }

    fs::create_directories(o.out);
    Runner runner(cfg.runner);

    std::mutex mu;
    int converged = 0, capped = 0, no_suite = 0, resumed = 0, budget_hit = 0;
    bool infra_failed = false;
    std::vector<std::string> failures;
    std::vector<json> rows(problems.size());

    parallel_for(g.jobs, problems.size(), [&](std::size_t i) {
        const Problem& p = problems[i];
        if (!safe_artifact_name(p.id)) {
            std::lock_guard<std::mutex> lock(mu);
            failures.push_back(p.id + ": id unusable as a file name");
            rows[i] = json{{"id", p.id}, {"status", "failed"}};
            return;
        }
        const fs::path spath = suite_file(o.out, p.id);
        if (o.resume && fs::exists(spath)) {
            try {
                const StressSuite existing = load_suite(spath.string());
                std::lock_guard<std::mutex> lock(mu);
                ++resumed;
                rows[i] = json{{"id", p.id},
                               {"status", "resumed"},
                               {"iterations_run", existing.iterations_run},
                               {"pool_size", existing.pool.size()}};
                return;
            } catch (const std::exception& e) {
                log_warn("resume: regenerating " + spath.string() + " (" + e.what() + ")");
            }
        }
        std::unique_ptr<GeneratorClient> client;
        if (o.generator == "mock")
            client = std::make_unique<MockGenerator>(g.seed ^ fnv1a64(p.id),
                                                     cfg.mock_base_bytes, cfg.mock_growth);
        else
            client = std::make_unique<HttpGenerator>(cfg.http);
        try {
            GenLoopOutcome out =
                generate_stress_tests(runner, p, *client, cfg.gen, cfg.limits,
                                      cfg.gen_budget_seconds, cfg.profile_repeats);
            save_suite(out.suite, spath.string());
            write_file(audit_file(o.out, p.id).string(), genloop_audit_json(out));
            std::string rejections;
            for (const IterationAudit& a : out.audits)
                for (const Rejection& r : a.rejections)
                    rejections += rejection_to_jsonl(r) + "\n";
            if (!rejections.empty())
                write_file(rejections_file(o.out, p.id).string(), rejections);

            std::lock_guard<std::mutex> lock(mu);
            const char* status = nullptr;
            if (out.no_suite) {
                ++no_suite;
                status = "no-suite";
            } else if (out.converged) {
                ++converged;
                status = "converged";
            } else {
                ++capped;
                status = "capped";
                if (out.budget_exhausted) ++budget_hit;
            }
            rows[i] = json{{"id", p.id},
                           {"status", status},
                           {"iterations_run", out.suite.iterations_run},
                           {"pool_size", out.suite.pool.size()}};
        } catch (const InfraError& e) {
            std::lock_guard<std::mutex> lock(mu);
            infra_failed = true;
            failures.push_back(p.id + ": " + e.what());
            rows[i] = json{{"id", p.id}, {"status", "failed"}};
        } catch (const std::exception& e) {
            std::lock_guard<std::mutex> lock(mu);
            failures.push_back(p.id + ": " + e.what());
            rows[i] = json{{"id", p.id}, {"status", "failed"}};
        }
    });

    json summary{{"seed", g.seed},
                 {"generator", o.generator},
                 {"max_iterations", cfg.gen.max_iterations},
                 {"top_k", cfg.gen.top_k},
                 {"problems", json::array()}};
    for (json& row : rows)
        if (!row.is_null()) summary["problems"].push_back(std::move(row));
    write_file((fs::path(o.out) / "gen-summary.json").string(), summary.dump(2) + "\n");

    std::printf(
        "gen-tests: %zu problem(s): %d converged, %d capped, %d no-suite, %d "
        "resumed, %zu failed\n",
        problems.size(), converged, capped, no_suite, resumed, failures.size());
    if (budget_hit > 0)
        std::printf("  %d problem(s) stopped by the generation budget\n", budget_hit);
    for (const std::string& f : failures)
        std::fprintf(stderr, "failed: %s\n", f.c_str());
    if (infra_failed) return kExitConfig;
    return failures.empty() ? kExitOk : kExitEval;
}

// ---------------------------------------------------------------------------
// prune
// ---------------------------------------------------------------------------

int cmd_prune(const GlobalOptions& g, const PruneOptions& o, HarnessConfig cfg) {
    cfg.runner.keep_workdirs = cfg.runner.keep_workdirs || g.keep_workdirs;
    fs::create_directories(o.out);

    std::vector<ReferencePool> pools;
    std::vector<PruneDecision> decisions;  // NO_SUITE rows, decided here

    auto has_suite = [&](const std::string& problem_id) {
        return fs::exists(suite_file(o.suites, problem_id));
    };
    auto no_suite_decision = [&](const TranslationTask& task, const std::string& why) {
        log_warn("task " + task_key(task) + ": " + why);
        decisions.push_back(PruneDecision{task, false, PruneRule::NO_SUITE});
    };

    if (!o.candidates.empty()) {
        // Build pools by verifying candidate translations against suites.
        if (o.problems.empty()) {
            std::fprintf(stderr,
                         "error: --candidates needs --problems to verify "
                         "translations against the original tests\n");
            return kExitConfig;
        }
        if (int rc = report_missing_toolchains(cfg.runner)) return rc;
        if (!fs::is_directory(o.candidates)) {
            std::fprintf(stderr, "error: candidate directory %s not found\n",
                         o.candidates.c_str());
            return kExitConfig;
        }
        std::map<std::string, Problem> by_id;
        try {
            for (Problem& p : load_dataset(o.problems)) {
                const std::string id = p.id;
                by_id.emplace(id, std::move(p));
            }
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: %s\n", e.what());
            return kExitConfig;
        }
        fs::create_directories(o.pools);
        Runner runner(cfg.runner);
        for (const fs::path& dir : list_dir_sorted(o.candidates)) {
            if (!fs::is_directory(dir)) continue;
            const std::string key = dir.filename().string();
            TranslationTask task;
            try {
                task = parse_task_key(key);
            } catch (const std::exception& e) {
                log_warn("skipping " + dir.string() + ": " + e.what());
                continue;
            }
            try {
                const auto pit = by_id.find(task.problem_id);
                if (pit == by_id.end()) {
                    no_suite_decision(task, "problem " + task.problem_id +
                                                " not in the dataset");
                    continue;
                }
                if (!has_suite(task.problem_id)) {
                    no_suite_decision(task, "no stress suite for problem " +
                                                task.problem_id);
                    continue;
                }
                const StressSuite suite =
                    load_suite(suite_file(o.suites, task.problem_id).string());
                if (suite.pool.empty()) {
                    no_suite_decision(task, "problem " + task.problem_id +
                                                " has an empty stress suite");
                    continue;
                }
                std::vector<CandidateTranslation> cands;
                for (const fs::path& f : list_dir_sorted(dir)) {
                    if (!fs::is_regular_file(f)) continue;
                    if (f.filename().string().front() == '.') continue;
                    cands.push_back(CandidateTranslation{task, read_file(f.string()),
                                                         f.stem().string()});
                }
                PoolBuildOutcome built = build_reference_pool(
                    runner, task, cands, suite, pit->second.original_tests,
                    cfg.limits, cfg.score_repeats);
                for (const auto& [tag, reason] : built.rejected)
                    log_info("task " + key + ": " + tag + " rejected from the pool (" +
                             reason + ")");
                save_pool(built.pool, pool_file(o.pools, key).string());
                pools.push_back(std::move(built.pool));
            } catch (const InfraError&) {
                throw;
            } catch (const std::exception& e) {
                no_suite_decision(task, std::string("unusable inputs: ") + e.what());
            }
        }
    } else {
        // Read prebuilt pools.
        if (!fs::is_directory(o.pools)) {
            std::fprintf(stderr, "error: pool directory %s not found\n",
                         o.pools.c_str());
            return kExitConfig;
        }
        for (const fs::path& f : list_dir_sorted(o.pools)) {
            const std::string name = f.filename().string();
            if (name.rfind("pool.", 0) != 0 || f.extension() != ".json") continue;
            const std::string key =
                name.substr(5, name.size() - 5 - std::string(".json").size());
            TranslationTask task;
            try {
                task = parse_task_key(key);
            } catch (const std::exception& e) {
                log_warn("skipping " + f.string() + ": " + e.what());
                continue;
            }
            try {
                ReferencePool pool = load_pool(f.string());
                if (!has_suite(pool.task.problem_id)) {
                    no_suite_decision(pool.task, "no stress suite for problem " +
                                                     pool.task.problem_id);
                    continue;
                }
                pools.push_back(std::move(pool));
            } catch (const InfraError&) {
                throw;
            } catch (const std::exception& e) {
                no_suite_decision(task, std::string("unusable pool file: ") + e.what());
            }
        }
    }

    const std::vector<PruneDecision> ruled = prune_tasks(pools, cfg.prune);
    decisions.insert(decisions.end(), ruled.begin(), ruled.end());
    std::sort(decisions.begin(), decisions.end(),
              [](const PruneDecision& a, const PruneDecision& b) {
                  return task_key(a.task) < task_key(b.task);
              });
    const PruneCounts counts = count_decisions(decisions);

    std::string kept_lines;
    for (const PruneDecision& d : decisions)
        if (d.kept) kept_lines += task_key(d.task) + "\n";
    write_file((fs::path(o.out) / "kept-tasks.txt").string(), kept_lines);

    json dec_rows = json::array();
    for (const PruneDecision& d : decisions)
        dec_rows.push_back(json{{"task", task_key(d.task)},
                                {"kept", d.kept},
                                {"rule", rule_name(d.rule)}});
    json report{{"seed", g.seed},
                {"thresholds",
                 {{"eps_time", cfg.prune.eps_time},
                  {"eps_mem", cfg.prune.eps_mem},
                  {"eps_div", cfg.prune.eps_div},
                  {"population_cv", cfg.prune.population_cv}}},
                {"counts",
                 {{"no_suite", counts.no_suite},
                  {"feasibility", counts.feasibility},
                  {"impactfulness", counts.impactfulness},
                  {"diversity", counts.diversity},
                  {"kept", counts.kept}}},
                {"decisions", std::move(dec_rows)}};
    write_file((fs::path(o.out) / "prune-report.json").string(),
               report.dump(2) + "\n");

    std::printf(
        "prune: %zu task(s): kept %d; removed: %d no-suite, %d infeasible, %d "
        "unimpactful, %d undiverse\n",
        decisions.size(), counts.kept, counts.no_suite, counts.feasibility,
        counts.impactfulness, counts.diversity);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

int cmd_evaluate(const GlobalOptions& g, const EvaluateOptions& o, HarnessConfig cfg) {
    cfg.runner.keep_workdirs = cfg.runner.keep_workdirs || g.keep_workdirs;
    if (int rc = report_missing_toolchains(cfg.runner)) return rc;

    std::vector<std::string> keys;
    try {
        std::istringstream in(read_file(o.kept));
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == ' '))
                line.pop_back();
            if (!line.empty()) keys.push_back(line);
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }
    if (keys.empty()) {
        std::printf("evaluate: no kept tasks, nothing to score\n");
        return kExitOk;
    }

    std::map<std::string, Problem> by_id;
    try {
        for (Problem& p : load_dataset(o.problems)) {
            const std::string id = p.id;
            by_id.emplace(id, std::move(p));
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }

    struct TaskBundle {
        TranslationTask task;
        StressSuite suite;
        ReferencePool pool;
        const std::vector<TestCase>* original = nullptr;
    };
    std::vector<TaskBundle> bundles;
    for (const std::string& key : keys) {
        TaskBundle b;
        try {
            b.task = parse_task_key(key);
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: kept-task list %s: %s\n", o.kept.c_str(),
                         e.what());
            return kExitConfig;
        }
        const auto pit = by_id.find(b.task.problem_id);
        if (pit == by_id.end()) {
            std::fprintf(stderr, "error: task %s: problem %s not in %s\n", key.c_str(),
                         b.task.problem_id.c_str(), o.problems.c_str());
            return kExitConfig;
        }
        b.original = &pit->second.original_tests;
        try {
            b.suite = load_suite(suite_file(o.suites, b.task.problem_id).string());
            b.pool = load_pool(pool_file(o.pools, key).string());
        } catch (const std::exception& e) {
            std::fprintf(stderr, "error: task %s: %s\n", key.c_str(), e.what());
            return kExitConfig;
        }
        bundles.push_back(std::move(b));
    }

    std::set<std::string> tags;
    for (const std::string& key : keys) {
        const fs::path dir = fs::path(o.candidates) / key;
        if (!fs::is_directory(dir)) continue;
        for (const fs::path& f : list_dir_sorted(dir)) {
            if (!fs::is_regular_file(f)) continue;
            if (f.filename().string().front() == '.') continue;
            tags.insert(f.stem().string());
        }
    }
    if (tags.empty()) {
        std::printf("evaluate: no candidate translations under %s\n",
                    o.candidates.c_str());
        return kExitOk;
    }

    fs::create_directories(o.out);
    Runner runner(cfg.runner);
    ScoreOptions sopts;
    sopts.repeats = o.repeats;
    sopts.aggregation = o.per_test_mean ? BeyondAggregation::PER_TEST_MEAN
                                        : BeyondAggregation::TASK_MEAN_FIRST;

    std::vector<EvalReport> reports;
    for (const std::string& tag : tags) {
        std::vector<TaskScore> records(bundles.size());
        std::vector<std::string> errors(bundles.size());
        parallel_for(g.jobs, bundles.size(), [&](std::size_t i) {
            const TaskBundle& b = bundles[i];
            const fs::path file =
                find_candidate_file(fs::path(o.candidates) / task_key(b.task), tag);
            if (file.empty()) {
                records[i].task = b.task;
                records[i].correct = false;
                records[i].failure_reason = "MISSING";
                return;
            }
            const CandidateTranslation cand{b.task, read_file(file.string()), tag};
            try {
                records[i] = score_translation(runner, cand, b.suite, b.pool,
                                               *b.original, cfg.limits, sopts);
            } catch (const InfraError&) {
                throw;
            } catch (const std::exception& e) {
                errors[i] = e.what();
            }
        });
        for (std::size_t i = 0; i < errors.size(); ++i) {
            if (errors[i].empty()) continue;
            std::fprintf(stderr, "error: scoring %s for %s: %s\n",
                         task_key(bundles[i].task).c_str(), tag.c_str(),
                         errors[i].c_str());
            return kExitEval;
        }
        reports.push_back(aggregate(tag, std::move(records)));
    }
    fill_common_subset(reports, o.common_threshold);

    for (const EvalReport& r : reports)
        save_report(r, report_file(o.out, r.producer_tag).string());
    write_file((fs::path(o.out) / "leaderboard.json").string(),
               leaderboard_json(g.seed, reports));
    std::fputs(render_leaderboard(reports).c_str(), stdout);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// report
// ---------------------------------------------------------------------------

void print_rank_agreement(const char* label, const std::vector<double>& x,
                          const std::vector<double>& y) {
    try {
        const KendallResult k = kendall_tau(x, y);
        std::printf("rank agreement %s: tau=%.3f p=%.3f\n", label, k.tau, k.p);
    } catch (const std::invalid_argument&) {
        std::printf("rank agreement %s: undefined (constant column)\n", label);
    }
}

int cmd_report(const GlobalOptions&, const ReportOptions& o, const HarnessConfig&) {
    if (!fs::is_directory(o.reports)) {
        std::fprintf(stderr, "error: report directory %s not found\n",
                     o.reports.c_str());
        return kExitConfig;
    }
    std::vector<EvalReport> reports;
    for (const fs::path& f : list_dir_sorted(o.reports)) {
        const std::string name = f.filename().string();
        if (name.rfind("report.", 0) != 0 || f.extension() != ".json") continue;
        reports.push_back(load_report(f.string()));
    }
    if (reports.empty()) {
        std::printf("report: no report files under %s\n", o.reports.c_str());
        return kExitOk;
    }
    std::fputs(render_leaderboard(reports).c_str(), stdout);

    if (reports.size() >= 2) {
        std::vector<double> pass, bt, bm;
        for (const EvalReport* r : leaderboard_order(reports)) {
            pass.push_back(r->pass);
            bt.push_back(r->b_time);
            bm.push_back(r->b_mem);
        }
        print_rank_agreement("pass vs B_T", pass, bt);
        print_rank_agreement("B_T vs B_M", bt, bm);
    }

    if (!o.pools.empty()) {
        if (!fs::is_directory(o.pools)) {
            std::fprintf(stderr, "error: pool directory %s not found\n",
                         o.pools.c_str());
            return kExitConfig;
        }
        int flagged = 0;
        for (const fs::path& f : list_dir_sorted(o.pools)) {
            const std::string name = f.filename().string();
            if (name.rfind("pool.", 0) != 0 || f.extension() != ".json") continue;
            const ReferencePool pool = load_pool(f.string());
            if (pool.members.empty()) continue;
            for (const InefficiencyFlag& flag : flag_inefficient(pool, o.factor)) {
                if (flagged == 0) std::printf("inefficient pool references:\n");
                ++flagged;
                std::printf("  %s: %s %s %.1fx the best\n", task_key(pool.task).c_str(),
                            flag.producer_tag.c_str(),
                            flag.metric == MetricKind::TIME ? "TIME" : "MEM",
                            flag.ratio);
            }
        }
        if (flagged == 0)
            std::printf("no pool reference exceeds %.1fx the most efficient one\n",
                        o.factor);
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Config file
// ---------------------------------------------------------------------------

void reject_unknown(const json& j, const std::string& where,
                    std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw std::runtime_error("unknown key \"" + key + "\" in " + where);
    }
}

ToolchainSpec toolchain_from_json(const json& j, const std::string& where) {
    reject_unknown(j, where,
                   {"kind", "compiler", "compile_flags", "runtime", "runtime_flags"});
    ToolchainSpec t;
    t.kind = j.at("kind").get<std::string>();
    t.compiler = j.value("compiler", "");
    if (j.contains("compile_flags"))
        t.compile_flags = j["compile_flags"].get<std::vector<std::string>>();
    t.runtime = j.value("runtime", "");
    if (j.contains("runtime_flags"))
        t.runtime_flags = j["runtime_flags"].get<std::vector<std::string>>();
    return t;
}

void require_positive(bool ok, const char* what) {
    if (!ok) throw std::runtime_error(std::string(what) + " must be positive");
}

}  // namespace

HarnessConfig default_harness_config() {
    HarnessConfig cfg;
    cfg.runner = default_runner_config();
    return cfg;
}

HarnessConfig load_harness_config(const std::string& path) {
    HarnessConfig cfg = default_harness_config();
    json j;
    try {
        j = json::parse(expand_env(read_file(path)));
    } catch (const json::exception& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
    if (!j.is_object())
        throw std::runtime_error("config " + path + ": top level must be an object");
    try {
        reject_unknown(j, "top level",
                       {"toolchains", "sandbox_root", "poll_interval_ms",
                        "exclusive_timing", "mem_exceeded_rss_fraction", "limits",
                        "gen", "prune", "generator", "scoring"});
        if (j.contains("toolchains"))
            for (const auto& [name, spec] : j["toolchains"].items())
                cfg.runner.toolchains[parse_lang(name)] =
                    toolchain_from_json(spec, "toolchains." + name);
        cfg.runner.sandbox_root = j.value("sandbox_root", cfg.runner.sandbox_root);
        cfg.runner.poll_interval_ms =
            j.value("poll_interval_ms", cfg.runner.poll_interval_ms);
        cfg.runner.exclusive_timing =
            j.value("exclusive_timing", cfg.runner.exclusive_timing);
        cfg.runner.mem_exceeded_rss_fraction =
            j.value("mem_exceeded_rss_fraction", cfg.runner.mem_exceeded_rss_fraction);
        if (j.contains("limits")) {
            const json& l = j["limits"];
            reject_unknown(l, "limits", {"time_limit", "mem_limit_mib"});
            cfg.limits.time_limit = l.value("time_limit", cfg.limits.time_limit);
            cfg.limits.mem_limit_mib = l.value("mem_limit_mib", cfg.limits.mem_limit_mib);
        }
        if (j.contains("gen")) {
            const json& s = j["gen"];
            reject_unknown(s, "gen",
                           {"max_iterations", "top_k", "synths_per_lang",
                            "runs_per_synth", "temperature", "budget_seconds",
                            "profile_repeats"});
            cfg.gen.max_iterations = s.value("max_iterations", cfg.gen.max_iterations);
            cfg.gen.top_k = s.value("top_k", cfg.gen.top_k);
            cfg.gen.synths_per_lang = s.value("synths_per_lang", cfg.gen.synths_per_lang);
            cfg.gen.runs_per_synth = s.value("runs_per_synth", cfg.gen.runs_per_synth);
            cfg.gen.generator_temperature =
                s.value("temperature", cfg.gen.generator_temperature);
            cfg.gen_budget_seconds = s.value("budget_seconds", cfg.gen_budget_seconds);
            cfg.profile_repeats = s.value("profile_repeats", cfg.profile_repeats);
        }
        if (j.contains("prune")) {
            const json& s = j["prune"];
            reject_unknown(s, "prune",
                           {"eps_time", "eps_mem", "eps_div", "population_cv"});
            cfg.prune.eps_time = s.value("eps_time", cfg.prune.eps_time);
            cfg.prune.eps_mem = s.value("eps_mem", cfg.prune.eps_mem);
            cfg.prune.eps_div = s.value("eps_div", cfg.prune.eps_div);
            cfg.prune.population_cv = s.value("population_cv", cfg.prune.population_cv);
        }
        if (j.contains("generator")) {
            const json& s = j["generator"];
            reject_unknown(s, "generator",
                           {"endpoint", "model", "api_key", "request_timeout_s",
                            "max_attempts", "backoff_ms", "mock_base_bytes",
                            "mock_growth"});
            cfg.http.endpoint = s.value("endpoint", cfg.http.endpoint);
            cfg.http.model = s.value("model", cfg.http.model);
            cfg.http.api_key = s.value("api_key", cfg.http.api_key);
            cfg.http.request_timeout_s =
                s.value("request_timeout_s", cfg.http.request_timeout_s);
            cfg.http.max_attempts = s.value("max_attempts", cfg.http.max_attempts);
            cfg.http.backoff_ms = s.value("backoff_ms", cfg.http.backoff_ms);
            cfg.mock_base_bytes = s.value("mock_base_bytes", cfg.mock_base_bytes);
            cfg.mock_growth = s.value("mock_growth", cfg.mock_growth);
        }
        if (j.contains("scoring")) {
            const json& s = j["scoring"];
            reject_unknown(s, "scoring",
                           {"repeats", "per_test_mean", "common_threshold",
                            "inefficiency_factor"});
            cfg.score_repeats = s.value("repeats", cfg.score_repeats);
            cfg.beyond_per_test = s.value("per_test_mean", cfg.beyond_per_test);
            cfg.common_threshold = s.value("common_threshold", cfg.common_threshold);
            cfg.inefficiency_factor =
                s.value("inefficiency_factor", cfg.inefficiency_factor);
        }
    } catch (const json::exception& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    } catch (const std::invalid_argument& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("config " + path + ": " + e.what());
    }
    require_positive(cfg.limits.time_limit > 0, "limits.time_limit");
    require_positive(cfg.limits.mem_limit_mib > 0, "limits.mem_limit_mib");
    require_positive(cfg.gen.max_iterations >= 1, "gen.max_iterations");
    require_positive(cfg.gen.top_k >= 1, "gen.top_k");
    require_positive(cfg.gen.synths_per_lang >= 1, "gen.synths_per_lang");
    require_positive(cfg.gen.runs_per_synth >= 1, "gen.runs_per_synth");
    require_positive(cfg.profile_repeats >= 1, "gen.profile_repeats");
    require_positive(cfg.score_repeats >= 1, "scoring.repeats");
    require_positive(cfg.mock_base_bytes > 0, "generator.mock_base_bytes");
    require_positive(cfg.mock_growth > 0, "generator.mock_growth");
    return cfg;
}

// ---------------------------------------------------------------------------
// Entry point
// ---------------------------------------------------------------------------

int run_cli(int argc, char** argv) {
    CLI::App app{
        "Builds stress-test suites for code translations and scores how far "
        "translations fall behind verified references."};
    app.name("effi-forge");
    app.require_subcommand(1);

    GlobalOptions g;
    app.add_option("--config", g.config_path,
                   "JSON config file; ${VAR} references are expanded from the "
                   "environment")
        ->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed,
                   "Root seed for all randomness; recorded in outputs");
    app.add_option("--jobs", g.jobs,
                   "Worker threads for untimed work; timed runs stay serialized")
        ->check(CLI::PositiveNumber);
    app.add_flag("--keep-workdirs", g.keep_workdirs,
                 "Keep sandbox directories for inspection");

    GenTestsOptions go;
    int gen_iters = 0;
    int gen_k = 0;
    CLI::App* cgen =
        app.add_subcommand("gen-tests", "Generate a stress-test suite per problem");
    cgen->fallthrough();
    cgen->add_option("--problems", go.problems, "JSONL problem dataset")
        ->required()
        ->check(CLI::ExistingFile);
    cgen->add_option("--out", go.out, "Output directory for suites and audits")
        ->required();
    cgen->add_option("--generator", go.generator, "Synthesizer backend")
        ->check(CLI::IsMember({"mock", "http"}))
        ->capture_default_str();
    cgen->add_option("--iters", gen_iters, "Maximum loop iterations");
    cgen->add_option("--k", gen_k, "Tests kept per resource ranking");
    cgen->add_flag("--resume", go.resume,
                   "Skip problems whose suite file already loads");

    PruneOptions po;
    CLI::App* cprune = app.add_subcommand(
        "prune", "Filter tasks down to efficiency-distinguishing ones");
    cprune->fallthrough();
    cprune->add_option("--suites", po.suites, "Directory of stress suites")
        ->required();
    cprune
        ->add_option("--pools", po.pools,
                     "Directory of reference pools (read, or written when "
                     "--candidates is given)")
        ->required();
    cprune
        ->add_option("--out", po.out,
                     "Output directory for the kept-task list and prune report")
        ->required();
    cprune->add_option("--candidates", po.candidates,
                       "Directory of candidate translations; build pools from "
                       "them instead of reading prebuilt ones");
    cprune->add_option("--problems", po.problems,
                       "JSONL problem dataset (required with --candidates)");
    cprune->add_option("--eps-time", po.eps_time,
                       "Impactfulness time threshold, seconds");
    cprune->add_option("--eps-mem", po.eps_mem,
                       "Impactfulness memory threshold, MiB");
    cprune->add_option("--eps-div", po.eps_div, "Diversity CV threshold");
    cprune->add_flag("--population-cv", po.population_cv,
                     "Population (n) CV instead of sample (n-1)");
    cprune->add_option("--repeats", po.repeats,
                       "Measurements per suite test when building pools");

    EvaluateOptions eo;
    CLI::App* ceval = app.add_subcommand(
        "evaluate", "Score candidate translations against reference pools");
    ceval->fallthrough();
    ceval->add_option("--problems", eo.problems, "JSONL problem dataset")
        ->required()
        ->check(CLI::ExistingFile);
    ceval->add_option("--suites", eo.suites, "Directory of stress suites")
        ->required();
    ceval->add_option("--pools", eo.pools, "Directory of reference pools")
        ->required();
    ceval->add_option("--kept", eo.kept, "Kept-task list from prune")
        ->required()
        ->check(CLI::ExistingFile);
    ceval
        ->add_option("--candidates", eo.candidates,
                     "Directory of candidate translations (one subdirectory per "
                     "task, one file per producer)")
        ->required();
    ceval->add_option("--out", eo.out, "Output directory for reports")->required();
    ceval->add_option("--repeats", eo.repeats,
                      "Measurements per suite test per candidate");
    ceval->add_option("--common-threshold", eo.common_threshold,
                      "Pass %% needed to join the common-subset columns");
    ceval->add_flag("--per-test-mean", eo.per_test_mean,
                    "Average per-test Beyond scores instead of comparing "
                    "suite-wide means");

    ReportOptions ro;
    CLI::App* crep = app.add_subcommand(
        "report", "Re-render the leaderboard from saved evaluation reports");
    crep->fallthrough();
    crep->add_option("--reports", ro.reports, "Directory of evaluation reports")
        ->required();
    crep->add_option("--pools", ro.pools,
                     "Reference pools; adds inefficiency flags to the output");
    crep->add_option("--factor", ro.factor, "Inefficiency ratio threshold");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitConfig;
    }

    HarnessConfig cfg;
    try {
        cfg = g.config_path.empty() ? default_harness_config()
                                    : load_harness_config(g.config_path);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    }

    // Command-line overrides, applied only when the flag was actually given.
    if (cgen->count("--iters")) cfg.gen.max_iterations = gen_iters;
    if (cgen->count("--k")) cfg.gen.top_k = gen_k;
    if (cprune->count("--eps-time")) cfg.prune.eps_time = po.eps_time;
    if (cprune->count("--eps-mem")) cfg.prune.eps_mem = po.eps_mem;
    if (cprune->count("--eps-div")) cfg.prune.eps_div = po.eps_div;
    if (cprune->count("--population-cv")) cfg.prune.population_cv = po.population_cv;
    if (cprune->count("--repeats")) cfg.score_repeats = po.repeats;
    if (!ceval->count("--repeats")) eo.repeats = cfg.score_repeats;
    if (!ceval->count("--common-threshold")) eo.common_threshold = cfg.common_threshold;
    if (!ceval->count("--per-test-mean")) eo.per_test_mean = cfg.beyond_per_test;
    if (!crep->count("--factor")) ro.factor = cfg.inefficiency_factor;
    if (cfg.gen.max_iterations < 1 || cfg.gen.top_k < 1 ||
        (ceval->parsed() && eo.repeats < 1) ||
        (cprune->parsed() && cfg.score_repeats < 1)) {
        std::fprintf(stderr, "error: iteration, k, and repeat counts must be >= 1\n");
        return kExitConfig;
    }

    try {
        if (cgen->parsed()) return cmd_gen_tests(g, go, cfg);
        if (cprune->parsed()) return cmd_prune(g, po, cfg);
        if (ceval->parsed()) return cmd_evaluate(g, eo, cfg);
        return cmd_report(g, ro, cfg);
    } catch (const InfraError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitEval;
    }
}

}  // namespace effiforge
