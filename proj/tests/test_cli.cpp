// Drives the installed command-line binary end to end. The binary's path
// arrives as the last command-line argument (ctest passes it) or via the
// EFFIFORGE_CLI environment variable.
#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "effiforge/util.hpp"
#include "support.hpp"

using namespace effiforge;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string g_cli_path;
fs::path g_ws;

std::string shq(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q += c;
    }
    q += "'";
    return q;
}

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

CliResult run(const std::vector<std::string>& args) {
    static int seq = 0;
    const fs::path out_file = g_ws / ("stdout." + std::to_string(seq));
    const fs::path err_file = g_ws / ("stderr." + std::to_string(++seq));
    std::string cmd = "EFFIFORGE_SBX_SUFFIX=abc " + shq(g_cli_path);
    for (const std::string& a : args) cmd += " " + shq(a);
    cmd += " > " + shq(out_file.string()) + " 2> " + shq(err_file.string());

    const int status = std::system(cmd.c_str());
    CliResult r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = read_file(out_file.string());
    r.err = read_file(err_file.string());
    return r;
}

json problem_record(const std::string& id) {
    return json{
        {"id", id},
        {"code",
         {{"cpp", effitest::kCppEcho},
          {"java", effitest::kJsEcho},
          {"python", effitest::kPyEcho}}},
        {"tests", json::array({json{{"input", "5\n"}, {"output", "5\n"}}})}};
}

void write_workspace() {
    fs::create_directories(g_ws);
    write_file((g_ws / "problems.jsonl").string(),
               problem_record("echo1").dump() + "\n" + problem_record("echo2").dump() +
                   "\n");

    const json config{
        {"toolchains", {{"java", {{"kind", "node"}, {"runtime", "node"}}}}},
        {"sandbox_root", (g_ws / "sbx-${EFFIFORGE_SBX_SUFFIX}").string()},
        {"limits", {{"time_limit", 10.0}, {"mem_limit_mib", 2048.0}}},
        {"gen",
         {{"max_iterations", 2},
          {"synths_per_lang", 1},
          {"runs_per_synth", 1},
          {"profile_repeats", 1}}},
        {"generator", {{"mock_base_bytes", 2000.0}, {"mock_growth", 2.0}}},
        {"scoring", {{"repeats", 1}}}};
    write_file((g_ws / "config.json").string(), config.dump(2) + "\n");

    // Candidate translations for both tasks. "partial" exists only for the
    // first task; "bad" answers wrongly everywhere.
    const std::string slow_echo =
        "import sys\n"
        "data = sys.stdin.read()\n"
        "s = 0\n"
        "for i in range(2000000):\n"
        "    s += i\n"
        "sys.stdout.write(data)\n";
    for (const std::string task : {"echo1.cpp-to-python", "echo2.cpp-to-python"}) {
        const fs::path dir = g_ws / "candidates" / task;
        fs::create_directories(dir);
        write_file((dir / "good.py").string(), effitest::kPyEcho);
        write_file((dir / "slow.py").string(), slow_echo);
        write_file((dir / "bad.py").string(), "print('nope')\n");
    }
    write_file((g_ws / "candidates/echo1.cpp-to-python/partial.py").string(),
               effitest::kPyEcho);
}

std::vector<std::string> with_config(std::vector<std::string> args) {
    args.push_back("--config");
    args.push_back((g_ws / "config.json").string());
    return args;
}

}  // namespace

TEST_CASE("gen-tests writes a suite and audit per problem") {
    const CliResult r = run(with_config({"gen-tests", "--problems",
                                         (g_ws / "problems.jsonl").string(), "--out",
                                         (g_ws / "gen").string(), "--generator", "mock",
                                         "--seed", "7"}));
    CAPTURE(r.out);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("gen-tests: 2 problem(s)") != std::string::npos);
    CHECK(r.out.find("2 capped") != std::string::npos);  // the mock never converges
    for (const std::string id : {"echo1", "echo2"}) {
        CHECK(fs::exists(g_ws / "gen" / ("suite." + id + ".json")));
        CHECK(fs::exists(g_ws / "gen" / ("audit." + id + ".json")));
        // Echo references accept every input, so no rejection log appears.
        CHECK(!fs::exists(g_ws / "gen" / ("rejections." + id + ".jsonl")));
    }

    const json summary = json::parse(read_file((g_ws / "gen/gen-summary.json").string()));
    CHECK(summary.at("seed") == 7);
    CHECK(summary.at("generator") == "mock");
    CHECK(summary.at("problems").size() == 2);

    // The configured sandbox root came through environment expansion.
    CHECK(fs::exists(g_ws / "sbx-abc"));

    // Two iterations of one growing payload each.
    const StressSuite suite = load_suite((g_ws / "gen/suite.echo1.json").string());
    CHECK(suite.pool.size() == 2);
    CHECK(suite.iterations_run == 2);
}

TEST_CASE("gen-tests --resume regenerates only what is missing") {
    REQUIRE(fs::exists(g_ws / "gen/suite.echo1.json"));
    fs::remove(g_ws / "gen/suite.echo2.json");

    const CliResult r = run(with_config({"gen-tests", "--problems",
                                         (g_ws / "problems.jsonl").string(), "--out",
                                         (g_ws / "gen").string(), "--generator", "mock",
                                         "--seed", "7", "--resume"}));
    CAPTURE(r.out);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("1 resumed") != std::string::npos);
    CHECK(fs::exists(g_ws / "gen/suite.echo2.json"));
}

TEST_CASE("a missing compiler is reported actionably and exits with config rc") {
    json config = json::parse(read_file((g_ws / "config.json").string()));
    config["toolchains"]["cpp"] = {{"kind", "gcc"},
                                   {"compiler", "definitely-missing-compiler-xyz"}};
    write_file((g_ws / "config-bad.json").string(), config.dump(2) + "\n");

    const CliResult r = run({"gen-tests", "--problems",
                             (g_ws / "problems.jsonl").string(), "--out",
                             (g_ws / "gen2").string(), "--generator", "mock",
                             "--config", (g_ws / "config-bad.json").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("missing toolchain") != std::string::npos);
    CHECK(r.err.find("definitely-missing-compiler-xyz") != std::string::npos);
    CHECK(r.err.find("hint") != std::string::npos);
}

TEST_CASE("prune verifies candidates into pools and keeps diverse tasks") {
    const CliResult r = run(with_config(
        {"prune", "--suites", (g_ws / "gen").string(), "--pools",
         (g_ws / "pools").string(), "--out", (g_ws / "prune").string(),
         "--candidates", (g_ws / "candidates").string(), "--problems",
         (g_ws / "problems.jsonl").string(), "--seed", "7"}));
    CAPTURE(r.out);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("prune: 2 task(s): kept 2") != std::string::npos);

    const std::string kept = read_file((g_ws / "prune/kept-tasks.txt").string());
    CHECK(kept == "echo1.cpp-to-python\necho2.cpp-to-python\n");

    const json report = json::parse(read_file((g_ws / "prune/prune-report.json").string()));
    CHECK(report.at("seed") == 7);
    CHECK(report.at("counts").at("kept") == 2);
    CHECK(report.at("decisions").size() == 2);

    // Wrong-answer candidates never reach the reference pool.
    const ReferencePool pool =
        load_pool((g_ws / "pools/pool.echo1.cpp-to-python.json").string());
    REQUIRE(pool.members.size() == 3);
    for (const PoolMember& m : pool.members) CHECK(m.candidate.producer_tag != "bad");
}

TEST_CASE("prune reads existing pools and honors threshold overrides") {
    // A spread requirement nothing can meet removes every task.
    const CliResult strict = run(with_config(
        {"prune", "--suites", (g_ws / "gen").string(), "--pools",
         (g_ws / "pools").string(), "--out", (g_ws / "prune-strict").string(),
         "--eps-div", "10.0"}));
    CAPTURE(strict.out);
    REQUIRE(strict.code == 0);
    CHECK(strict.out.find("kept 0") != std::string::npos);
    CHECK(strict.out.find("2 undiverse") != std::string::npos);
    CHECK(read_file((g_ws / "prune-strict/kept-tasks.txt").string()).empty());

    const json report =
        json::parse(read_file((g_ws / "prune-strict/prune-report.json").string()));
    CHECK(report.at("counts").at("diversity") == 2);
    CHECK(report.at("thresholds").at("eps_div") == doctest::Approx(10.0));
}

TEST_CASE("prune over an empty pool directory yields an empty report") {
    fs::create_directories(g_ws / "pools-empty");
    const CliResult r = run(with_config(
        {"prune", "--suites", (g_ws / "gen").string(), "--pools",
         (g_ws / "pools-empty").string(), "--out", (g_ws / "prune-empty").string()}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("prune: 0 task(s)") != std::string::npos);
    const json report =
        json::parse(read_file((g_ws / "prune-empty/prune-report.json").string()));
    CHECK(report.at("decisions").empty());
}

TEST_CASE("evaluate scores every producer found under the candidate tree") {
    const CliResult r = run(with_config(
        {"evaluate", "--problems", (g_ws / "problems.jsonl").string(), "--suites",
         (g_ws / "gen").string(), "--pools", (g_ws / "pools").string(), "--kept",
         (g_ws / "prune/kept-tasks.txt").string(), "--candidates",
         (g_ws / "candidates").string(), "--out", (g_ws / "eval").string(), "--seed",
         "7"}));
    CAPTURE(r.out);
    CAPTURE(r.err);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("producer") != std::string::npos);  // leaderboard header

    const json board = json::parse(read_file((g_ws / "eval/leaderboard.json").string()));
    CHECK(board.at("seed") == 7);
    REQUIRE(board.at("rows").size() == 4);

    std::map<std::string, json> rows;
    for (const json& row : board.at("rows"))
        rows[row.at("producer").get<std::string>()] = row;
    CHECK(rows.at("good").at("pass") == doctest::Approx(100.0));
    CHECK(rows.at("slow").at("pass") == doctest::Approx(100.0));
    CHECK(rows.at("partial").at("pass") == doctest::Approx(50.0));
    CHECK(rows.at("bad").at("pass") == doctest::Approx(0.0));
    CHECK(rows.at("bad").at("b_time") == doctest::Approx(0.0));
    CHECK(rows.at("bad").at("b_mem") == doctest::Approx(0.0));

    // Producers at full pass rate get common-subset columns; the rest stay
    // blank.
    CHECK(rows.at("good").at("b_time_com").is_number());
    CHECK(rows.at("slow").at("b_time_com").is_number());
    CHECK(rows.at("partial").at("b_time_com").is_null());
    CHECK(rows.at("bad").at("b_time_com").is_null());

    // The task with no candidate file is failed as missing, not skipped.
    const EvalReport partial =
        load_report((g_ws / "eval/report.partial.json").string());
    REQUIRE(partial.per_task.size() == 2);
    bool missing_seen = false;
    for (const TaskScore& s : partial.per_task)
        if (!s.correct && s.failure_reason == "MISSING") missing_seen = true;
    CHECK(missing_seen);
}

TEST_CASE("evaluate with an empty kept list is a clean no-op") {
    write_file((g_ws / "kept-none.txt").string(), "");
    const CliResult r = run(with_config(
        {"evaluate", "--problems", (g_ws / "problems.jsonl").string(), "--suites",
         (g_ws / "gen").string(), "--pools", (g_ws / "pools").string(), "--kept",
         (g_ws / "kept-none.txt").string(), "--candidates",
         (g_ws / "candidates").string(), "--out", (g_ws / "eval-none").string()}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("no kept tasks") != std::string::npos);
}

TEST_CASE("report reprints the leaderboard with agreement and waste analysis") {
    const CliResult r = run(with_config({"report", "--reports", (g_ws / "eval").string(),
                                         "--pools", (g_ws / "pools").string()}));
    CAPTURE(r.out);
    REQUIRE(r.code == 0);
    CHECK(r.out.find("producer") != std::string::npos);
    CHECK(r.out.find("rank agreement pass vs B_T") != std::string::npos);
    CHECK(r.out.find("rank agreement B_T vs B_M") != std::string::npos);
    CHECK(r.out.find("slow TIME") != std::string::npos);
    CHECK(r.out.find("x the best") != std::string::npos);
}

TEST_CASE("report on an empty directory notes the absence and succeeds") {
    fs::create_directories(g_ws / "eval-empty");
    const CliResult r =
        run(with_config({"report", "--reports", (g_ws / "eval-empty").string()}));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("no report files") != std::string::npos);
}

TEST_CASE("usage errors and help exit with the conventional codes") {
    CHECK(run({}).code == 2);  // a subcommand is required
    CHECK(run({"--help"}).code == 0);
    CHECK(run({"gen-tests", "--help"}).code == 0);
    // A nonexistent config file fails option validation.
    CHECK(run({"gen-tests", "--problems", (g_ws / "problems.jsonl").string(), "--out",
               (g_ws / "gen3").string(), "--config", "/nonexistent/config.json"})
              .code == 2);
    // Zero iterations are rejected before any work happens.
    CHECK(run(with_config({"gen-tests", "--problems",
                           (g_ws / "problems.jsonl").string(), "--out",
                           (g_ws / "gen3").string(), "--iters", "0"}))
              .code == 2);
}

int main(int argc, char** argv) {
    int dt_argc = argc;
    if (argc >= 2 && argv[argc - 1][0] != '-') {
        g_cli_path = argv[argc - 1];
        dt_argc = argc - 1;
    }
    if (g_cli_path.empty())
        if (const char* env = std::getenv("EFFIFORGE_CLI")) g_cli_path = env;
    if (g_cli_path.empty() || !fs::exists(g_cli_path)) {
        std::fprintf(stderr, "usage: test_cli [doctest options] <path-to-effi-forge>\n");
        return 1;
    }
    g_cli_path = fs::absolute(g_cli_path).string();

    g_ws = fs::temp_directory_path() / "effiforge-cli-test";
    std::error_code ec;
    fs::remove_all(g_ws, ec);
    fs::create_directories(g_ws);
    write_workspace();

    doctest::Context ctx(dt_argc, argv);
    const int rc = ctx.run();
    if (rc == 0) fs::remove_all(g_ws, ec);
    return rc;
}
