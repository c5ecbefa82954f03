#include "effiforge/synthgen.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <thread>

#include "effiforge/util.hpp"
#include "httplib.h"
#include "json.hpp"

namespace effiforge {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

namespace {

std::string format_metric(double value, const char* fmt) {
    char buf[64];
    std::snprintf(buf, sizeof buf, fmt, value);
    return buf;
}

}  // namespace

Prompt create_prompt(const Problem& problem, SubjectLanguage seed_lang,
                     const FewShotExamples& examples, std::size_t max_len) {
    const std::string& code = problem.reference_code.at(seed_lang);

    std::string base;
    base += "Generate standalone Python 3 test-input synthesizer programs for the "
            "coding problem below.\n";
    base += "Each program must write exactly one test input to standard output and "
            "nothing else.\n";
    base += "Solutions read that input from standard input and write their answer to "
            "standard output.\n";
    base += "Aim for inputs that maximize the solution's execution time and peak "
            "memory while staying valid for the problem.\n";
    base += "\n## Reference solution (" + lang_name(seed_lang) + ")\n";
    base += "```" + lang_name(seed_lang) + "\n" + code + "\n```\n";

    Prompt prompt;
    prompt.text = base;

    // Best examples first, added while they fit; reference code always wins
    // over examples when the cap bites.
    int cap = examples.cap;
    std::string section = "\n## Example synthesizers that produced highly demanding "
                          "tests (best first)\n";
    bool section_added = false;
    for (const FewShotEntry& e : examples.entries) {
        if (prompt.examples_included == cap) break;
        std::string block = "\n### Example (achieved " +
                            format_metric(e.wall_time, "%.3f") + " s wall time, " +
                            format_metric(e.peak_memory, "%.1f") + " MiB peak memory)\n";
        block += "```python\n" + e.synth.source_text + "\n```\n";
        const std::size_t extra = (section_added ? 0 : section.size()) + block.size();
        if (prompt.text.size() + extra > max_len) {
            log_info("prompt cap reached for problem " + problem.id + "; dropped " +
                     std::to_string(examples.entries.size() - prompt.examples_included) +
                     " example(s)");
            break;
        }
        if (!section_added) {
            prompt.text += section;
            section_added = true;
        }
        prompt.text += block;
        ++prompt.examples_included;
    }
    return prompt;
}

// ---------------------------------------------------------------------------
// MockGenerator
// ---------------------------------------------------------------------------

MockGenerator::MockGenerator(std::uint64_t seed, double base_payload, double growth)
    : seed_(seed), base_payload_(base_payload), growth_(growth) {}

std::vector<std::string> MockGenerator::send(const std::string& /*prompt*/, int n,
                                             double /*temperature*/) {
    // One round = the three per-language requests of a loop iteration, so the
    // scale steps up exactly once per iteration.
    const int round = calls_ / 3;
    const int call = calls_;
    ++calls_;

    std::vector<std::string> sources;
    sources.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double scale =
            base_payload_ * std::pow(growth_, round) * (1.0 + static_cast<double>(j) / 8.0);
        const long long payload = std::llround(scale);
        std::string src;
        src += "# template synthesizer seed=" + std::to_string(seed_) +
               " round=" + std::to_string(round) + " call=" + std::to_string(call) +
               " variant=" + std::to_string(j) + "\n";
        src += "print(" + std::to_string(payload) + ")\n";
        sources.push_back(std::move(src));
    }
    return sources;
}

// ---------------------------------------------------------------------------
// HttpGenerator
// ---------------------------------------------------------------------------

std::vector<std::string> extract_code_blocks(const std::string& text) {
    std::vector<std::string> blocks;
    std::size_t pos = 0;
    while (true) {
        const std::size_t open = text.find("```", pos);
        if (open == std::string::npos) break;
        const std::size_t lang_end = text.find('\n', open);
        if (lang_end == std::string::npos) break;
        const std::size_t close = text.find("```", lang_end + 1);
        if (close == std::string::npos) break;
        blocks.push_back(text.substr(lang_end + 1, close - lang_end - 1));
        pos = close + 3;
    }
    if (blocks.empty()) blocks.push_back(text);
    return blocks;
}

HttpGenerator::HttpGenerator(Options opts) : opts_(std::move(opts)) {
    if (opts_.endpoint.empty())
        throw InfraError("http generator: no endpoint configured");
}

std::vector<std::string> HttpGenerator::send(const std::string& prompt, int n,
                                             double temperature) {
    const std::size_t scheme = opts_.endpoint.find("://");
    if (scheme == std::string::npos)
        throw InfraError("http generator: endpoint must include a scheme: " +
                         opts_.endpoint);
    const std::size_t slash = opts_.endpoint.find('/', scheme + 3);
    const std::string origin =
        slash == std::string::npos ? opts_.endpoint : opts_.endpoint.substr(0, slash);
    const std::string path =
        slash == std::string::npos ? "/" : opts_.endpoint.substr(slash);

    json body{{"model", opts_.model},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})},
              {"n", n},
              {"temperature", temperature}};
    httplib::Headers headers;
    if (!opts_.api_key.empty())
        headers.emplace("Authorization", "Bearer " + opts_.api_key);

    std::string last_error;
    for (int attempt = 1; attempt <= opts_.max_attempts; ++attempt) {
        httplib::Client client(origin);
        client.set_connection_timeout(opts_.request_timeout_s, 0);
        client.set_read_timeout(opts_.request_timeout_s, 0);
        auto res = client.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
        } else if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
        } else {
            try {
                json reply = json::parse(res->body);
                std::vector<std::string> sources;
                for (const json& choice : reply.at("choices")) {
                    const std::string content =
                        choice.at("message").at("content").get<std::string>();
                    sources.push_back(extract_code_blocks(content).front());
                }
                return sources;
            } catch (const json::exception& e) {
                last_error = std::string("malformed response: ") + e.what();
            }
        }
        if (attempt < opts_.max_attempts) {
            const int delay = opts_.backoff_ms << (attempt - 1);
            log_warn("generator request attempt " + std::to_string(attempt) +
                     " failed (" + last_error + "); retrying in " +
                     std::to_string(delay) + " ms");
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
        }
    }
    throw InfraError("generator backend failed after " +
                     std::to_string(opts_.max_attempts) + " attempts: " + last_error);
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

std::vector<Synthesizer> request_synthesizers(GeneratorClient& client,
                                              const Problem& problem,
                                              const FewShotExamples& examples,
                                              const GenConfig& cfg, int iteration) {
    std::vector<Synthesizer> result;
    std::set<std::string> seen;
    std::string last_error = "backend returned no usable synthesizer programs";

    for (SubjectLanguage lang : kAllLanguages) {
        const Prompt prompt = create_prompt(problem, lang, examples);
        std::vector<std::string> texts;
        try {
            texts = client.send(prompt.text, cfg.synths_per_lang,
                                cfg.generator_temperature);
        } catch (const InfraError& e) {
            last_error = e.what();
            log_warn("synthesizer request seeded from " + lang_name(lang) +
                     " failed for problem " + problem.id + ": " + e.what());
            continue;
        }
        for (std::string& text : texts) {
            if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
                log_warn("generator returned an empty synthesizer for problem " +
                         problem.id + "; skipped");
                continue;
            }
            Synthesizer s = make_synthesizer(std::move(text), lang, iteration);
            if (seen.insert(s.id).second) result.push_back(std::move(s));
        }
    }
    if (result.empty())
        throw InfraError("no synthesizers obtained for problem " + problem.id + ": " +
                         last_error);
    return result;
}

std::vector<TestInput> run_synthesizer(Runner& runner, const Synthesizer& synth,
                                       int runs, const Limits& limits) {
    if (runs < 1) throw std::invalid_argument("run_synthesizer: runs must be >= 1");

    // Synthesizers are untrusted generated code; they run in the same sandbox
    // as subject programs, only with tighter limits and an empty stdin.
    CompiledHandle handle = runner.compile(SubjectLanguage::PYTHON, synth.source_text);
    if (!handle.ok()) {
        log_warn("synthesizer " + synth.id + " failed the syntax check; skipped");
        return {};
    }
    TestInput empty_stdin;
    empty_stdin.id = "empty";

    std::vector<TestInput> inputs;
    std::set<std::string> seen;
    for (int i = 0; i < runs; ++i) {
        ExecutionOutcome o = runner.execute(handle, empty_stdin, limits);
        if (o.status != RunStatus::OK) {
            log_warn("synthesizer " + synth.id + " run " + std::to_string(i + 1) +
                     ": " + status_name(o.status) + "; run skipped");
            continue;
        }
        try {
            TestInput input = make_test_input(std::move(o.stdout_bytes),
                                              TestOrigin{synth.iteration, synth.id});
            if (seen.insert(input.id).second) inputs.push_back(std::move(input));
        } catch (const std::invalid_argument& e) {
            log_warn("synthesizer " + synth.id + " run " + std::to_string(i + 1) +
                     ": " + e.what() + "; run skipped");
        }
    }
    return inputs;
}

}  // namespace effiforge
