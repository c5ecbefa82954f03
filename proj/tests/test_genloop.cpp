#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "effiforge/genloop.hpp"
#include "effiforge/util.hpp"
#include "support.hpp"

using namespace effiforge;
using nlohmann::json;

namespace {

/// References that loop n times (n from stdin) and print n, so any agreeing
/// output is trivially the input number while the work scales with it.
Problem busy_problem() {
    Problem p;
    p.id = "busywork";
    p.reference_code[SubjectLanguage::CPP] = R"(#include <cstdio>
int main() {
    long long n;
    if (std::scanf("%lld", &n) != 1) return 1;
    volatile long long s = 0;
    for (long long i = 0; i < n; ++i) s += i;
    std::printf("%lld\n", n);
    return 0;
}
)";
    p.reference_code[SubjectLanguage::JAVA] =
        "const n = parseInt(require('fs').readFileSync(0, 'utf8').trim(), 10);\n"
        "let s = 0;\n"
        "for (let i = 0; i < n; i++) s += i;\n"
        "console.log(String(n));\n";
    p.reference_code[SubjectLanguage::PYTHON] =
        "import sys\n"
        "n = int(sys.stdin.read().split()[0])\n"
        "s = 0\n"
        "for i in range(n):\n"
        "    s += i\n"
        "print(n)\n";
    return p;
}

GenConfig tiny_config() {
    GenConfig cfg;
    cfg.max_iterations = 2;
    cfg.top_k = 5;
    cfg.synths_per_lang = 1;
    cfg.runs_per_synth = 1;
    return cfg;
}

struct ScriptedClient : GeneratorClient {
    std::vector<std::string> canned;
    std::vector<std::string> send(const std::string&, int, double) override {
        return canned;
    }
};

const SuiteEntry& entry_with_payload(const StressSuite& suite, const std::string& payload) {
    for (const SuiteEntry& e : suite.pool)
        if (e.test.input.payload == payload) return e;
    FAIL("no pool entry with payload " << payload);
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("a scaling generator makes each iteration's pool more demanding") {
    Runner runner(effitest::test_runner_config());
    MockGenerator gen(21, 1e6, 2.0);
    const GenLoopOutcome out =
        generate_stress_tests(runner, busy_problem(), gen, tiny_config(),
                              effitest::test_limits(), 300.0, 1);

    CHECK(!out.no_suite);
    CHECK(!out.budget_exhausted);
    CHECK(!out.converged);  // every iteration added a fresh, heavier test
    CHECK(out.suite.iterations_run == 2);
    REQUIRE(out.audits.size() == 2);

    // Three per-language requests emit the same payload in iteration one, so
    // they collapse into a single unique input.
    CHECK(out.audits[0].synthesizers == 3);
    CHECK(out.audits[0].candidate_inputs == 1);
    CHECK(out.audits[0].validated == 1);
    CHECK(out.audits[0].pool_added.size() == 1);
    CHECK(out.audits[0].pool_removed.empty());
    CHECK(out.audits[1].pool_added.size() == 1);

    REQUIRE(out.suite.pool.size() == 2);
    CHECK(out.suite.top_time.size() == 2);
    CHECK(out.suite.fingerprint == machine_fingerprint());

    const SuiteEntry& small = entry_with_payload(out.suite, "1000000\n");
    const SuiteEntry& big = entry_with_payload(out.suite, "2000000\n");
    CHECK(small.test.expected_output == "1000000");
    CHECK(big.test.expected_output == "2000000");
    CHECK(big.profiles.at(SubjectLanguage::PYTHON).wall_time >
          small.profiles.at(SubjectLanguage::PYTHON).wall_time);
    // The heavier test outranks the lighter one.
    CHECK(out.suite.top_time.front() == big.test.input.id);
}

TEST_CASE("a generator stuck on one input converges in the second iteration") {
    Runner runner(effitest::test_runner_config());
    ScriptedClient client;
    client.canned = {"print(7)\n"};
    GenConfig cfg = tiny_config();
    cfg.max_iterations = 5;

    const GenLoopOutcome out = generate_stress_tests(
        runner, busy_problem(), client, cfg, effitest::test_limits(), 300.0, 1);
    CHECK(out.converged);
    CHECK(!out.no_suite);
    CHECK(out.suite.iterations_run == 2);  // early stop, not the cap
    REQUIRE(out.audits.size() == 2);
    CHECK(!out.audits[0].converged);
    CHECK(out.audits[1].converged);
    CHECK(out.audits[1].validated == 0);  // the rerun input was already pooled
    REQUIRE(out.suite.pool.size() == 1);
    CHECK(out.suite.pool[0].test.input.payload == "7\n");
}

TEST_CASE("synthesizers that never produce output leave no suite behind") {
    Runner runner(effitest::test_runner_config());
    ScriptedClient client;
    client.canned = {"import sys\nsys.exit(1)\n"};

    const GenLoopOutcome out =
        generate_stress_tests(runner, busy_problem(), client, tiny_config(),
                              effitest::test_limits(), 300.0, 1);
    CHECK(out.no_suite);
    CHECK(out.suite.pool.empty());
    CHECK(out.suite.top_time.empty());
    REQUIRE(!out.audits.empty());
    CHECK(out.audits[0].candidate_inputs == 0);
    CHECK(out.audits[0].validated == 0);
}

TEST_CASE("inputs that break a reference are logged and kept out of the pool") {
    Runner runner(effitest::test_runner_config());
    // The python reference rejects odd numbers, so "print(7)" can never
    // validate while "print(8)" can.
    Problem p = busy_problem();
    p.reference_code[SubjectLanguage::PYTHON] =
        "import sys\n"
        "n = int(sys.stdin.read().split()[0])\n"
        "if n % 2:\n"
        "    raise ValueError('odd')\n"
        "print(n)\n";

    ScriptedClient client;
    client.canned = {"print(7)\n", "print(8)\n"};
    GenConfig cfg = tiny_config();
    cfg.max_iterations = 1;
    cfg.synths_per_lang = 2;

    const GenLoopOutcome out = generate_stress_tests(
        runner, p, client, cfg, effitest::test_limits(), 300.0, 1);
    REQUIRE(out.audits.size() == 1);
    CHECK(out.audits[0].candidate_inputs == 2);
    CHECK(out.audits[0].validated == 1);
    CHECK(out.audits[0].rejected_integrity == 1);
    CHECK(out.audits[0].rejected_consistency == 0);
    REQUIRE(out.audits[0].rejections.size() == 1);
    CHECK(out.audits[0].rejections[0].kind == RejectionKind::INTEGRITY);
    REQUIRE(out.suite.pool.size() == 1);
    CHECK(out.suite.pool[0].test.input.payload == "8\n");
}

TEST_CASE("identical seeds reproduce the identical suite") {
    Runner runner(effitest::test_runner_config());
    const GenConfig cfg = tiny_config();
    MockGenerator first(5, 1000.0, 2.0);
    const GenLoopOutcome a = generate_stress_tests(
        runner, busy_problem(), first, cfg, effitest::test_limits(), 300.0, 1);
    MockGenerator second(5, 1000.0, 2.0);
    const GenLoopOutcome b = generate_stress_tests(
        runner, busy_problem(), second, cfg, effitest::test_limits(), 300.0, 1);

    CHECK(!a.no_suite);
    CHECK(suite_identity(a.suite) == suite_identity(b.suite));
}

TEST_CASE("broken reference material fails loudly before any generation") {
    Runner runner(effitest::test_runner_config());
    ScriptedClient client;
    client.canned = {"print(1)\n"};

    Problem missing = busy_problem();
    missing.reference_code.erase(SubjectLanguage::PYTHON);
    CHECK_THROWS_AS(generate_stress_tests(runner, missing, client, tiny_config(),
                                          effitest::test_limits(), 300.0, 1),
                    std::invalid_argument);

    Problem unbuildable = busy_problem();
    unbuildable.reference_code[SubjectLanguage::CPP] = "int main() { return oops; }\n";
    CHECK_THROWS_WITH_AS(generate_stress_tests(runner, unbuildable, client, tiny_config(),
                                               effitest::test_limits(), 300.0, 1),
                         doctest::Contains("does not compile"), std::runtime_error);
}

TEST_CASE("an exhausted budget keeps the partial pool and says so") {
    Runner runner(effitest::test_runner_config());
    ScriptedClient client;
    client.canned = {"print(7)\n"};

    const GenLoopOutcome out = generate_stress_tests(
        runner, busy_problem(), client, tiny_config(), effitest::test_limits(), 0.0, 1);
    CHECK(out.budget_exhausted);
    CHECK(out.no_suite);
    CHECK(out.audits.empty());
    CHECK(out.suite.iterations_run == 0);
}

TEST_CASE("the audit document serializes every iteration") {
    Runner runner(effitest::test_runner_config());
    MockGenerator gen(9, 1000.0, 2.0);
    const GenLoopOutcome out =
        generate_stress_tests(runner, busy_problem(), gen, tiny_config(),
                              effitest::test_limits(), 300.0, 1);

    const json audit = json::parse(genloop_audit_json(out));
    CHECK(audit.at("problem_id") == "busywork");
    CHECK(audit.at("prompt_template") == kPromptTemplateVersion);
    CHECK(audit.at("fingerprint") == machine_fingerprint());
    CHECK(audit.at("iterations_run") == out.suite.iterations_run);
    CHECK(audit.at("converged") == out.converged);
    CHECK(audit.at("no_suite") == out.no_suite);
    REQUIRE(audit.at("iterations").size() == out.audits.size());
    const json& first = audit.at("iterations")[0];
    CHECK(first.at("iteration") == 1);
    CHECK(first.at("synthesizers") == out.audits[0].synthesizers);
    CHECK(first.at("pool_borda").is_array());
    CHECK(first.at("pool_added").is_array());
}
