#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"

namespace effiforge {

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

/// The prompt template is versioned; the tag is embedded in audit records so
/// archived results stay interpretable after template changes.
inline constexpr const char* kPromptTemplateVersion = "effi-forge-prompt/1";

inline constexpr std::size_t kDefaultPromptCap = 32768;  // bytes

struct Prompt {
    std::string text;
    int examples_included = 0;
};

/// Renders the generation prompt: the seed language's reference code, the
/// stdin/stdout payload convention, and up to examples.cap example
/// synthesizers, most stressful first. When the cap bites, examples are
/// dropped before reference code (a truncated example block would mislead the
/// generator more than a missing one).
Prompt create_prompt(const Problem& problem, SubjectLanguage seed_lang,
                     const FewShotExamples& examples,
                     std::size_t max_len = kDefaultPromptCap);

// ---------------------------------------------------------------------------
// Generator backends
// ---------------------------------------------------------------------------

/// A source of synthesizer programs. send() returns up to n program texts;
/// backend trouble is reported by throwing InfraError.
class GeneratorClient {
  public:
    virtual ~GeneratorClient() = default;
    virtual std::vector<std::string> send(const std::string& prompt, int n,
                                          double temperature) = 0;
};

/// Deterministic offline backend. Emits template synthesizers that print a
/// single integer payload whose magnitude grows geometrically per request
/// round (one round = the three per-language requests of one loop iteration),
/// so later iterations yield strictly more demanding inputs. Within a round,
/// the n requested variants scale the payload slightly apart so they stay
/// distinct. Identical (seed, call sequence) reproduces identical output.
class MockGenerator : public GeneratorClient {
  public:
    explicit MockGenerator(std::uint64_t seed, double base_payload = 4.0 * 1024 * 1024,
                           double growth = 2.0);
    std::vector<std::string> send(const std::string& prompt, int n,
                                  double temperature) override;

  private:
    std::uint64_t seed_;
    double base_payload_;
    double growth_;
    int calls_ = 0;
};

/// HTTP backend speaking the common chat-completions shape: POST to
/// `endpoint` with {model, messages, n, temperature}, read one synthesizer
/// program per choice (first fenced code block, else the whole message).
/// Each send() retries with exponential backoff before giving up.
class HttpGenerator : public GeneratorClient {
  public:
    struct Options {
        std::string endpoint;  // e.g. "http://host:port/v1/chat/completions"
        std::string model;
        std::string api_key;   // sent as a bearer token when non-empty
        int request_timeout_s = 60;
        int max_attempts = 3;
        int backoff_ms = 500;  // doubled per retry
    };
    explicit HttpGenerator(Options opts);
    std::vector<std::string> send(const std::string& prompt, int n,
                                  double temperature) override;

  private:
    Options opts_;
};

/// Extracts fenced code blocks (``` ... ```); a text without fences is
/// returned whole. Exposed for the HTTP response parser's tests.
std::vector<std::string> extract_code_blocks(const std::string& text);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Requests synths_per_lang synthesizers seeded from each subject language's
/// reference code (one backend call per language), tags them, and removes
/// content-hash duplicates. A language whose request ultimately fails is
/// skipped with a warning; all three failing is an error (InfraError).
std::vector<Synthesizer> request_synthesizers(GeneratorClient& client,
                                              const Problem& problem,
                                              const FewShotExamples& examples,
                                              const GenConfig& cfg, int iteration);

/// Executes a synthesizer `runs` times under tight limits; every successful
/// run's stdout becomes a candidate payload, deduplicated by content. Crashes,
/// limit hits, and oversized payloads are soft failures: logged, skipped.
std::vector<TestInput> run_synthesizer(Runner& runner, const Synthesizer& synth,
                                       int runs, const Limits& limits = kSynthesizerLimits);

}  // namespace effiforge
