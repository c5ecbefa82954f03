#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <string>

#include "json.hpp"

#include "effiforge/validation.hpp"
#include "support.hpp"

using namespace effiforge;
using nlohmann::json;

namespace {

std::map<SubjectLanguage, CompiledHandle> compile_refs(
    Runner& runner, const std::map<SubjectLanguage, std::string>& sources) {
    std::map<SubjectLanguage, CompiledHandle> refs;
    for (const auto& [lang, src] : sources) {
        refs[lang] = runner.compile(lang, src);
        REQUIRE(refs[lang].ok());
    }
    return refs;
}

/// References that agree: each sums the integers on the first stdin line.
std::map<SubjectLanguage, std::string> summing_refs() {
    return {
        {SubjectLanguage::CPP, R"(#include <cstdio>
int main() {
    long long x, total = 0;
    while (std::scanf("%lld", &x) == 1) total += x;
    std::printf("%lld\n", total);
    return 0;
}
)"},
        {SubjectLanguage::JAVA,
         "const parts = require('fs').readFileSync(0, 'utf8').trim().split(/\\s+/);\n"
         "let total = 0n;\n"
         "for (const p of parts) if (p.length) total += BigInt(p);\n"
         "console.log(total.toString());\n"},
        {SubjectLanguage::PYTHON,
         "import sys\nprint(sum(int(t) for t in sys.stdin.read().split()))\n"},
    };
}

}  // namespace

TEST_CASE("agreeing references produce an accepted test with consensus output") {
    Runner runner(effitest::test_runner_config());
    const auto refs = compile_refs(runner, summing_refs());
    const TestInput input = effitest::input_of("3 4\n", 1, "s1");

    const ValidationResult r =
        validate_test(runner, refs, input, effitest::test_limits());
    REQUIRE(r.accepted());
    CHECK(!r.rejection.has_value());
    CHECK(r.test->input.id == input.id);
    CHECK(r.test->expected_output == "7");
}

TEST_CASE("validation verdicts are reproducible for the same input") {
    Runner runner(effitest::test_runner_config());
    const auto refs = compile_refs(runner, summing_refs());
    const TestInput input = effitest::input_of("10 20 30\n");
    const ValidationResult a = validate_test(runner, refs, input, effitest::test_limits());
    const ValidationResult b = validate_test(runner, refs, input, effitest::test_limits());
    REQUIRE(a.accepted());
    REQUIRE(b.accepted());
    CHECK(a.test->expected_output == b.test->expected_output);
}

TEST_CASE("numeric overflow in one reference is caught as disagreement") {
    Runner runner(effitest::test_runner_config());
    // The C++ reference sums into 32 bits; the other two are exact. Inputs
    // beyond INT_MAX make it wrap while node and python agree on the truth.
    auto sources = summing_refs();
    sources[SubjectLanguage::CPP] = R"(#include <cstdio>
int main() {
    long long x;
    int total = 0;
    while (std::scanf("%lld", &x) == 1) total += (int)x;
    std::printf("%d\n", total);
    return 0;
}
)";
    const auto refs = compile_refs(runner, sources);

    const ValidationResult small =
        validate_test(runner, refs, effitest::input_of("5 6\n"), effitest::test_limits());
    CHECK(small.accepted());  // agreement within 32-bit range

    const ValidationResult big = validate_test(
        runner, refs, effitest::input_of("2147483647 2147483647\n"),
        effitest::test_limits());
    REQUIRE(!big.accepted());
    REQUIRE(big.rejection.has_value());
    CHECK(big.rejection->kind == RejectionKind::CONSISTENCY);
    // All three ran fine; only the outputs differ.
    for (const auto& [lang, status] : big.rejection->statuses)
        CHECK(status == RunStatus::OK);
    CHECK(big.rejection->outputs.size() == 3);
    CHECK(big.rejection->outputs.at(SubjectLanguage::JAVA) ==
          big.rejection->outputs.at(SubjectLanguage::PYTHON));
    CHECK(big.rejection->outputs.at(SubjectLanguage::CPP) !=
          big.rejection->outputs.at(SubjectLanguage::PYTHON));
}

TEST_CASE("a reference crash is an integrity rejection before any comparison") {
    Runner runner(effitest::test_runner_config());
    auto sources = summing_refs();
    sources[SubjectLanguage::PYTHON] =
        "import sys\n"
        "vals = [int(t) for t in sys.stdin.read().split()]\n"
        "if any(v < 0 for v in vals):\n"
        "    raise RuntimeError('negative')\n"
        "print(sum(vals))\n";
    const auto refs = compile_refs(runner, sources);

    const ValidationResult r = validate_test(
        runner, refs, effitest::input_of("-1 5\n"), effitest::test_limits());
    REQUIRE(!r.accepted());
    REQUIRE(r.rejection.has_value());
    CHECK(r.rejection->kind == RejectionKind::INTEGRITY);
    CHECK(r.rejection->statuses.at(SubjectLanguage::PYTHON) == RunStatus::RUNTIME_ERROR);
    // The healthy references are still reported for diagnostics.
    CHECK(r.rejection->statuses.at(SubjectLanguage::CPP) == RunStatus::OK);
    CHECK(r.rejection->statuses.at(SubjectLanguage::JAVA) == RunStatus::OK);
    CHECK(!r.rejection->detail.empty());
}

TEST_CASE("a reference timeout poisons the input") {
    Runner runner(effitest::test_runner_config());
    auto sources = summing_refs();
    sources[SubjectLanguage::PYTHON] =
        "import sys\n"
        "data = sys.stdin.read()\n"
        "if 'spin' in data:\n"
        "    while True: pass\n"
        "print(sum(int(t) for t in data.split()))\n";
    const auto refs = compile_refs(runner, sources);
    const ValidationResult r = validate_test(
        runner, refs, effitest::input_of("spin\n"), Limits{1.0, 2048.0});
    REQUIRE(!r.accepted());
    CHECK(r.rejection->kind == RejectionKind::INTEGRITY);
    CHECK(r.rejection->statuses.at(SubjectLanguage::PYTHON) == RunStatus::TIMEOUT);
}

TEST_CASE("output comparison ignores trailing whitespace but not content") {
    Runner runner(effitest::test_runner_config());
    auto sources = summing_refs();
    // Same number, different trailing decoration.
    sources[SubjectLanguage::CPP] = R"(#include <cstdio>
int main() {
    long long x, total = 0;
    while (std::scanf("%lld", &x) == 1) total += x;
    std::printf("%lld   \n\n", total);
    return 0;
}
)";
    const auto refs = compile_refs(runner, sources);
    const ValidationResult r =
        validate_test(runner, refs, effitest::input_of("1 2\n"), effitest::test_limits());
    CHECK(r.accepted());
    CHECK(r.test->expected_output == "3");
}

TEST_CASE("rejection log lines are single-line JSON with truncated outputs") {
    Rejection rej;
    rej.kind = RejectionKind::CONSISTENCY;
    rej.test_id = "abc123";
    rej.statuses[SubjectLanguage::CPP] = RunStatus::OK;
    rej.statuses[SubjectLanguage::JAVA] = RunStatus::OK;
    rej.statuses[SubjectLanguage::PYTHON] = RunStatus::OK;
    rej.outputs[SubjectLanguage::CPP] = std::string(1000, 'x');
    rej.outputs[SubjectLanguage::JAVA] = "short";
    rej.outputs[SubjectLanguage::PYTHON] = "short";
    rej.detail = "reference implementations disagree";

    const std::string line = rejection_to_jsonl(rej);
    CHECK(line.find('\n') == std::string::npos);

    const json parsed = json::parse(line);
    CHECK(parsed.at("reason") == "CONSISTENCY");
    CHECK(parsed.at("test_id") == "abc123");
    CHECK(parsed.at("statuses").at("cpp") == "OK");
    const std::string cpp_out = parsed.at("outputs").at("cpp").get<std::string>();
    CHECK(cpp_out.size() < 300);
    CHECK(cpp_out.substr(cpp_out.size() - 3) == "...");
}

TEST_CASE("rejection kinds have stable names") {
    CHECK(rejection_name(RejectionKind::INTEGRITY) == "INTEGRITY");
    CHECK(rejection_name(RejectionKind::CONSISTENCY) == "CONSISTENCY");
}
