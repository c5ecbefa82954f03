#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace effiforge {

// ---------------------------------------------------------------------------
// Subject languages
// ---------------------------------------------------------------------------

/// The three languages whose programs the harness compiles, runs, and
/// compares. Distinct from the harness's own implementation language.
enum class SubjectLanguage { CPP, JAVA, PYTHON };

inline constexpr std::array<SubjectLanguage, 3> kAllLanguages = {
    SubjectLanguage::CPP, SubjectLanguage::JAVA, SubjectLanguage::PYTHON};

/// Canonical lowercase name: "cpp", "java", "python".
std::string lang_name(SubjectLanguage lang);

/// Throws std::invalid_argument on anything but the three canonical names.
SubjectLanguage parse_lang(const std::string& name);

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

/// Payloads larger than this are refused at construction to bound storage.
inline constexpr std::size_t kDefaultPayloadCap = 64ull * 1024 * 1024;

/// Where a test input came from: which loop iteration and which synthesizer.
/// Original dataset tests carry iteration 0 and synthesizer_id "original".
struct TestOrigin {
    int iteration = 0;
    std::string synthesizer_id = "original";

    bool operator==(const TestOrigin&) const = default;
};

/// A candidate stdin payload. The id is a content hash of the payload, so
/// identical bytes always collapse to one input.
struct TestInput {
    std::string id;
    std::string payload;
    TestOrigin origin;

    bool operator==(const TestInput&) const = default;
};

/// Builds a TestInput with a content-hash id. Throws std::invalid_argument
/// when the payload exceeds cap.
TestInput make_test_input(std::string payload, TestOrigin origin,
                          std::size_t cap = kDefaultPayloadCap);

/// A validated input paired with the consensus expected stdout (normalized).
/// Construction happens in the validation module, which enforces that every
/// reference implementation produces exactly this output.
struct TestCase {
    TestInput input;
    std::string expected_output;

    bool operator==(const TestCase&) const = default;
};

// ---------------------------------------------------------------------------
// Problems and tasks
// ---------------------------------------------------------------------------

/// A coding challenge: reference code in every subject language plus the
/// source benchmark's original simple tests.
struct Problem {
    std::string id;
    std::map<SubjectLanguage, std::string> reference_code;
    std::vector<TestCase> original_tests;
};

struct TranslationTask {
    std::string problem_id;
    SubjectLanguage source_lang = SubjectLanguage::CPP;
    SubjectLanguage target_lang = SubjectLanguage::PYTHON;

    bool operator==(const TranslationTask&) const = default;
    auto operator<=>(const TranslationTask&) const = default;
};

/// Filesystem-safe identity, e.g. "p42.cpp-to-python". Throws
/// std::invalid_argument when source and target coincide.
std::string task_key(const TranslationTask& task);

/// Inverse of task_key.
TranslationTask parse_task_key(const std::string& key);

// ---------------------------------------------------------------------------
// Synthesizers
// ---------------------------------------------------------------------------

/// A standalone generated program (in the interpreted subject language) whose
/// stdout is one test input. Id is a content hash of source_text.
struct Synthesizer {
    std::string id;
    std::string source_text;
    SubjectLanguage seed_lang = SubjectLanguage::PYTHON;
    int iteration = 0;

    bool operator==(const Synthesizer&) const = default;
};

Synthesizer make_synthesizer(std::string source_text, SubjectLanguage seed_lang,
                             int iteration);

/// Which resource a ranking or score refers to.
enum class MetricKind { TIME, MEM };

// ---------------------------------------------------------------------------
// Measurements
// ---------------------------------------------------------------------------

/// Per-(program, test) resource usage aggregated over repeated runs.
/// wall_time and peak_memory are exact arithmetic means of per_run.
struct ExecutionProfile {
    double wall_time = 0.0;     // seconds
    double peak_memory = 0.0;   // mebibytes
    int repeats = 0;
    std::vector<std::pair<double, double>> per_run;  // (seconds, mebibytes)

    bool operator==(const ExecutionProfile&) const = default;
};

/// Recomputes the means from per_run so the aggregate invariant holds by
/// construction.
ExecutionProfile make_profile(std::vector<std::pair<double, double>> per_run);

// ---------------------------------------------------------------------------
// Stress suites
// ---------------------------------------------------------------------------

/// A pool test together with its reference-code profiles in every language.
struct SuiteEntry {
    TestCase test;
    std::map<SubjectLanguage, ExecutionProfile> profiles;

    bool operator==(const SuiteEntry&) const = default;
};

/// The global stress pool for one problem: at most K top-time tests plus
/// K top-memory tests, the two id lists disjoint.
struct StressSuite {
    std::string problem_id;
    std::vector<SuiteEntry> pool;
    std::vector<std::string> top_time;
    std::vector<std::string> top_mem;
    int iterations_run = 0;
    std::string fingerprint;  // machine identity the profiles were measured on

    bool operator==(const StressSuite&) const = default;
};

// ---------------------------------------------------------------------------
// Few-shot examples
// ---------------------------------------------------------------------------

/// One prompt example: a synthesizer that produced a surviving pool test,
/// with that test's measured demand and combined Borda score (lower = more
/// stressful).
struct FewShotEntry {
    Synthesizer synth;
    double wall_time = 0.0;
    double peak_memory = 0.0;
    double borda_score = 0.0;

    bool operator==(const FewShotEntry&) const = default;
};

struct FewShotExamples {
    std::vector<FewShotEntry> entries;  // sorted by borda_score ascending
    int cap = 4;
};

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct GenConfig {
    int max_iterations = 5;
    int top_k = 5;
    int synths_per_lang = 3;
    int runs_per_synth = 3;
    double generator_temperature = 0.8;
};

struct PruneConfig {
    double eps_time = 0.001;  // seconds
    double eps_mem = 1.5;     // mebibytes
    double eps_div = 0.05;    // coefficient-of-variation threshold
    bool population_cv = false;  // n denominator instead of n-1
};

// ---------------------------------------------------------------------------
// Candidates and reference pools
// ---------------------------------------------------------------------------

struct CandidateTranslation {
    TranslationTask task;
    std::string source_text;
    std::string producer_tag;  // model or author label

    bool operator==(const CandidateTranslation&) const = default;
};

struct PoolMember {
    CandidateTranslation candidate;
    ExecutionProfile profile;  // aggregated over the task's stress suite

    bool operator==(const PoolMember&) const = default;
};

/// Verified correct translations for a task. Every member passed both the
/// original tests and the stress tests; the member profiles form the
/// efficiency spectrum candidates are scored against.
struct ReferencePool {
    TranslationTask task;
    std::vector<PoolMember> members;

    bool operator==(const ReferencePool&) const = default;
};

// ---------------------------------------------------------------------------
// Evaluation reports
// ---------------------------------------------------------------------------

struct TaskScore {
    TranslationTask task;
    bool correct = false;
    std::string failure_reason;  // empty when correct
    double beyond_time = 0.0;    // percent
    double beyond_mem = 0.0;     // percent
    ExecutionProfile profile;    // suite aggregate; empty when not measured

    bool operator==(const TaskScore&) const = default;
};

struct EvalReport {
    std::string producer_tag;
    std::vector<TaskScore> per_task;
    double pass = 0.0;    // percent correct
    double b_time = 0.0;  // mean beyond_time over ALL tasks, incorrect = 0
    double b_mem = 0.0;
    double b_time_p = 0.0;  // mean over correct tasks only
    double b_mem_p = 0.0;
    std::optional<double> b_time_com;  // common-subset means; set by report step
    std::optional<double> b_mem_com;

    bool operator==(const EvalReport&) const = default;
};

// ---------------------------------------------------------------------------
// Dataset and artifact IO
// ---------------------------------------------------------------------------

/// Loads a JSONL dataset, one problem per line:
///   {"id", "code": {"cpp","java","python"}, "tests": [{"input","output"}]}
/// Throws std::runtime_error naming the line on malformed records and listing
/// the offending id on duplicates.
std::vector<Problem> load_dataset(const std::string& path);

/// Suite files carry "version": 1; unknown versions are rejected.
void save_suite(const StressSuite& suite, const std::string& path);
StressSuite load_suite(const std::string& path);

/// Canonical serialization of a suite with all timing fields zeroed.
/// Two generation runs agree on this string iff they picked the same tests.
std::string suite_identity(const StressSuite& suite);

void save_pool(const ReferencePool& pool, const std::string& path);
ReferencePool load_pool(const std::string& path);

void save_report(const EvalReport& report, const std::string& path);
EvalReport load_report(const std::string& path);

}  // namespace effiforge
