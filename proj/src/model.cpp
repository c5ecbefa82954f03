#include "effiforge/model.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

#include "effiforge/util.hpp"
#include "json.hpp"

namespace effiforge {

using nlohmann::json;

std::string lang_name(SubjectLanguage lang) {
    switch (lang) {
        case SubjectLanguage::CPP: return "cpp";
        case SubjectLanguage::JAVA: return "java";
        case SubjectLanguage::PYTHON: return "python";
    }
    throw std::logic_error("unreachable: bad SubjectLanguage");
}

SubjectLanguage parse_lang(const std::string& name) {
    if (name == "cpp") return SubjectLanguage::CPP;
    if (name == "java") return SubjectLanguage::JAVA;
    if (name == "python") return SubjectLanguage::PYTHON;
    throw std::invalid_argument("unknown subject language: '" + name +
                                "' (expected cpp, java, or python)");
}

TestInput make_test_input(std::string payload, TestOrigin origin, std::size_t cap) {
    if (payload.size() > cap)
        throw std::invalid_argument("test payload exceeds cap of " +
                                    std::to_string(cap) + " bytes (" +
                                    std::to_string(payload.size()) + ")");
    TestInput in;
    in.id = content_id(payload);
    in.payload = std::move(payload);
    in.origin = std::move(origin);
    return in;
}

std::string task_key(const TranslationTask& task) {
    if (task.source_lang == task.target_lang)
        throw std::invalid_argument("translation task " + task.problem_id +
                                    ": source and target language coincide");
    return task.problem_id + "." + lang_name(task.source_lang) + "-to-" +
           lang_name(task.target_lang);
}

TranslationTask parse_task_key(const std::string& key) {
    // Problem ids may contain dots; the language suffix never does, so the
    // last dot is the authoritative split point.
    const std::size_t dot = key.rfind('.');
    const std::size_t sep = key.find("-to-", dot == std::string::npos ? 0 : dot);
    if (dot == std::string::npos || sep == std::string::npos || dot == 0)
        throw std::invalid_argument("malformed task key: '" + key + "'");
    TranslationTask task;
    task.problem_id = key.substr(0, dot);
    task.source_lang = parse_lang(key.substr(dot + 1, sep - dot - 1));
    task.target_lang = parse_lang(key.substr(sep + 4));
    if (task.source_lang == task.target_lang)
        throw std::invalid_argument("malformed task key (source = target): '" + key + "'");
    return task;
}

Synthesizer make_synthesizer(std::string source_text, SubjectLanguage seed_lang,
                             int iteration) {
    if (source_text.empty())
        throw std::invalid_argument("synthesizer source_text is empty");
    Synthesizer s;
    s.id = content_id(source_text);
    s.source_text = std::move(source_text);
    s.seed_lang = seed_lang;
    s.iteration = iteration;
    return s;
}

ExecutionProfile make_profile(std::vector<std::pair<double, double>> per_run) {
    if (per_run.empty())
        throw std::invalid_argument("profile needs at least one run");
    ExecutionProfile p;
    p.repeats = static_cast<int>(per_run.size());
    double t = 0.0, m = 0.0;
    for (const auto& [sec, mib] : per_run) {
        t += sec;
        m += mib;
    }
    p.wall_time = t / static_cast<double>(per_run.size());
    p.peak_memory = m / static_cast<double>(per_run.size());
    p.per_run = std::move(per_run);
    return p;
}

// ---------------------------------------------------------------------------
// JSON helpers
// ---------------------------------------------------------------------------

namespace {

// Byte strings are stored as UTF-8 when possible and base64 otherwise, with
// an explicit encoding tag so readers never have to guess.
json encode_bytes(std::string_view data) {
    if (is_valid_utf8(data))
        return json{{"encoding", "utf8"}, {"data", std::string(data)}};
    return json{{"encoding", "base64"}, {"data", base64_encode(data)}};
}

std::string decode_bytes(const json& j) {
    const std::string enc = j.at("encoding").get<std::string>();
    const std::string data = j.at("data").get<std::string>();
    if (enc == "utf8") return data;
    if (enc == "base64") return base64_decode(data);
    throw std::runtime_error("unknown byte encoding: '" + enc + "'");
}

json profile_to_json(const ExecutionProfile& p) {
    json runs = json::array();
    for (const auto& [sec, mib] : p.per_run) runs.push_back(json::array({sec, mib}));
    return json{{"wall_time", p.wall_time},
                {"peak_memory", p.peak_memory},
                {"repeats", p.repeats},
                {"per_run", std::move(runs)}};
}

ExecutionProfile profile_from_json(const json& j) {
    ExecutionProfile p;
    p.wall_time = j.at("wall_time").get<double>();
    p.peak_memory = j.at("peak_memory").get<double>();
    p.repeats = j.at("repeats").get<int>();
    for (const auto& run : j.at("per_run"))
        p.per_run.emplace_back(run.at(0).get<double>(), run.at(1).get<double>());
    return p;
}

json input_to_json(const TestInput& in) {
    return json{{"id", in.id},
                {"payload", encode_bytes(in.payload)},
                {"origin",
                 json{{"iteration", in.origin.iteration},
                      {"synthesizer_id", in.origin.synthesizer_id}}}};
}

TestInput input_from_json(const json& j) {
    TestInput in;
    in.id = j.at("id").get<std::string>();
    in.payload = decode_bytes(j.at("payload"));
    in.origin.iteration = j.at("origin").at("iteration").get<int>();
    in.origin.synthesizer_id = j.at("origin").at("synthesizer_id").get<std::string>();
    return in;
}

json task_to_json(const TranslationTask& t) {
    return json{{"problem_id", t.problem_id},
                {"source_lang", lang_name(t.source_lang)},
                {"target_lang", lang_name(t.target_lang)}};
}

TranslationTask task_from_json(const json& j) {
    TranslationTask t;
    t.problem_id = j.at("problem_id").get<std::string>();
    t.source_lang = parse_lang(j.at("source_lang").get<std::string>());
    t.target_lang = parse_lang(j.at("target_lang").get<std::string>());
    return t;
}

constexpr int kSchemaVersion = 1;

void check_version(const json& j, const std::string& path) {
    if (!j.contains("version"))
        throw std::runtime_error(path + ": missing schema version");
    const int v = j.at("version").get<int>();
    if (v != kSchemaVersion)
        throw std::runtime_error(path + ": unsupported schema version " +
                                 std::to_string(v) + " (this build reads version " +
                                 std::to_string(kSchemaVersion) + ")");
}

}  // namespace

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

std::vector<Problem> load_dataset(const std::string& path) {
    const std::string text = read_file(path);
    std::vector<Problem> problems;
    std::vector<std::string> seen_ids;

    std::istringstream lines(text);
    std::string line;
    int lineno = 0;
    while (std::getline(lines, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed problem record: " + e.what());
        }
        try {
            Problem p;
            p.id = j.at("id").get<std::string>();
            const json& code = j.at("code");
            for (SubjectLanguage lang : kAllLanguages)
                p.reference_code[lang] = code.at(lang_name(lang)).get<std::string>();
            for (const json& t : j.at("tests")) {
                TestCase tc;
                tc.input = make_test_input(t.at("input").get<std::string>(),
                                           TestOrigin{0, "original"});
                tc.expected_output =
                    normalize_output(t.at("output").get<std::string>());
                p.original_tests.push_back(std::move(tc));
            }
            if (std::find(seen_ids.begin(), seen_ids.end(), p.id) != seen_ids.end())
                throw std::runtime_error("duplicate problem id \"" + p.id + "\"");
            seen_ids.push_back(p.id);
            problems.push_back(std::move(p));
        } catch (const json::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": invalid problem record: " + e.what());
        }
    }
    return problems;
}

// ---------------------------------------------------------------------------
// Suites
// ---------------------------------------------------------------------------

namespace {

json suite_to_json(const StressSuite& suite) {
    json pool = json::array();
    for (const SuiteEntry& entry : suite.pool) {
        json profiles = json::object();
        for (const auto& [lang, prof] : entry.profiles)
            profiles[lang_name(lang)] = profile_to_json(prof);
        pool.push_back(json{{"test",
                             json{{"input", input_to_json(entry.test.input)},
                                  {"expected_output",
                                   encode_bytes(entry.test.expected_output)}}},
                            {"profiles", std::move(profiles)}});
    }
    return json{{"version", kSchemaVersion},
                {"problem_id", suite.problem_id},
                {"iterations_run", suite.iterations_run},
                {"fingerprint", suite.fingerprint},
                {"pool", std::move(pool)},
                {"top_time", suite.top_time},
                {"top_mem", suite.top_mem}};
}

}  // namespace

void save_suite(const StressSuite& suite, const std::string& path) {
    write_file(path, suite_to_json(suite).dump(2) + "\n");
}

StressSuite load_suite(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed suite file: " + e.what());
    }
    check_version(j, path);
    StressSuite suite;
    suite.problem_id = j.at("problem_id").get<std::string>();
    suite.iterations_run = j.at("iterations_run").get<int>();
    suite.fingerprint = j.value("fingerprint", std::string());
    for (const json& entry : j.at("pool")) {
        SuiteEntry e;
        e.test.input = input_from_json(entry.at("test").at("input"));
        e.test.expected_output = decode_bytes(entry.at("test").at("expected_output"));
        for (const auto& [name, prof] : entry.at("profiles").items())
            e.profiles[parse_lang(name)] = profile_from_json(prof);
        suite.pool.push_back(std::move(e));
    }
    suite.top_time = j.at("top_time").get<std::vector<std::string>>();
    suite.top_mem = j.at("top_mem").get<std::vector<std::string>>();
    return suite;
}

std::string suite_identity(const StressSuite& suite) {
    // Everything except measurements: which tests were picked, their payloads
    // and expected outputs. Pool positions and the top lists are ordered by
    // measured rank, which noise can flip between equally stressful tests,
    // so the identity sorts members by id and keeps the top lists as sets.
    // nlohmann objects keep keys sorted, so dump() is canonical.
    std::vector<const SuiteEntry*> members;
    for (const SuiteEntry& entry : suite.pool) members.push_back(&entry);
    std::sort(members.begin(), members.end(),
              [](const SuiteEntry* a, const SuiteEntry* b) {
                  return a->test.input.id < b->test.input.id;
              });
    json pool = json::array();
    for (const SuiteEntry* entry : members)
        pool.push_back(json{{"input", input_to_json(entry->test.input)},
                            {"expected_output",
                             encode_bytes(entry->test.expected_output)}});
    std::vector<std::string> top_time = suite.top_time;
    std::vector<std::string> top_mem = suite.top_mem;
    std::sort(top_time.begin(), top_time.end());
    std::sort(top_mem.begin(), top_mem.end());
    json j{{"problem_id", suite.problem_id},
           {"iterations_run", suite.iterations_run},
           {"pool", std::move(pool)},
           {"top_time", std::move(top_time)},
           {"top_mem", std::move(top_mem)}};
    return j.dump();
}

// ---------------------------------------------------------------------------
// Pools
// ---------------------------------------------------------------------------

void save_pool(const ReferencePool& pool, const std::string& path) {
    json members = json::array();
    for (const PoolMember& m : pool.members)
        members.push_back(json{{"producer_tag", m.candidate.producer_tag},
                               {"source_text", encode_bytes(m.candidate.source_text)},
                               {"profile", profile_to_json(m.profile)}});
    json j{{"version", kSchemaVersion},
           {"task", task_to_json(pool.task)},
           {"members", std::move(members)}};
    write_file(path, j.dump(2) + "\n");
}

ReferencePool load_pool(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed pool file: " + e.what());
    }
    check_version(j, path);
    ReferencePool pool;
    pool.task = task_from_json(j.at("task"));
    for (const json& m : j.at("members")) {
        PoolMember member;
        member.candidate.task = pool.task;
        member.candidate.producer_tag = m.at("producer_tag").get<std::string>();
        member.candidate.source_text = decode_bytes(m.at("source_text"));
        member.profile = profile_from_json(m.at("profile"));
        pool.members.push_back(std::move(member));
    }
    return pool;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void save_report(const EvalReport& report, const std::string& path) {
    json tasks = json::array();
    for (const TaskScore& s : report.per_task)
        tasks.push_back(json{{"task", task_to_json(s.task)},
                             {"correct", s.correct},
                             {"failure_reason", s.failure_reason},
                             {"beyond_time", s.beyond_time},
                             {"beyond_mem", s.beyond_mem},
                             {"profile", profile_to_json(s.profile)}});
    json agg{{"pass", report.pass},
             {"b_time", report.b_time},
             {"b_mem", report.b_mem},
             {"b_time_p", report.b_time_p},
             {"b_mem_p", report.b_mem_p},
             {"b_time_com", report.b_time_com ? json(*report.b_time_com) : json()},
             {"b_mem_com", report.b_mem_com ? json(*report.b_mem_com) : json()}};
    json j{{"version", kSchemaVersion},
           {"producer_tag", report.producer_tag},
           {"aggregates", std::move(agg)},
           {"per_task", std::move(tasks)}};
    write_file(path, j.dump(2) + "\n");
}

EvalReport load_report(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw std::runtime_error(path + ": malformed report file: " + e.what());
    }
    check_version(j, path);
    EvalReport report;
    report.producer_tag = j.at("producer_tag").get<std::string>();
    const json& agg = j.at("aggregates");
    report.pass = agg.at("pass").get<double>();
    report.b_time = agg.at("b_time").get<double>();
    report.b_mem = agg.at("b_mem").get<double>();
    report.b_time_p = agg.at("b_time_p").get<double>();
    report.b_mem_p = agg.at("b_mem_p").get<double>();
    if (!agg.at("b_time_com").is_null())
        report.b_time_com = agg.at("b_time_com").get<double>();
    if (!agg.at("b_mem_com").is_null())
        report.b_mem_com = agg.at("b_mem_com").get<double>();
    for (const json& t : j.at("per_task")) {
        TaskScore s;
        s.task = task_from_json(t.at("task"));
        s.correct = t.at("correct").get<bool>();
        s.failure_reason = t.at("failure_reason").get<std::string>();
        s.beyond_time = t.at("beyond_time").get<double>();
        s.beyond_mem = t.at("beyond_mem").get<double>();
        s.profile = profile_from_json(t.at("profile"));
        report.per_task.push_back(std::move(s));
    }
    return report;
}

}  // namespace effiforge
