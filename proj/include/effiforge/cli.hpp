#pragma once

#include <string>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"
#include "effiforge/scoring.hpp"
#include "effiforge/synthgen.hpp"

namespace effiforge {

/// Everything a subcommand needs, assembled from built-in defaults, the
/// optional config file, and command-line overrides (flags win).
struct HarnessConfig {
    RunnerConfig runner;
    Limits limits;             // per-run limits for subject programs
    GenConfig gen;
    PruneConfig prune;
    HttpGenerator::Options http;

    double mock_base_bytes = 4.0 * 1024 * 1024;  // mock synthesizer payload, round 0
    double mock_growth = 2.0;                    // payload growth per iteration

    double gen_budget_seconds = 1800.0;  // wall-clock cap per problem
    int profile_repeats = 5;             // reference measurements per suite test

    int score_repeats = 5;               // candidate measurements per suite test
    bool beyond_per_test = false;        // per-test Beyond averaging instead of
                                         // suite-mean comparison
    double common_threshold = 85.0;      // pass % gating the common subset
    double inefficiency_factor = 2.0;    // pool-member flagging ratio
};

HarnessConfig default_harness_config();

/// Parses a JSON config file over the defaults. ${VAR} references anywhere
/// in the file are replaced from the environment before parsing, so secrets
/// (API keys) stay out of the file. Unknown keys are rejected. Throws
/// InfraError when the file cannot be read, std::runtime_error on bad
/// content.
HarnessConfig load_harness_config(const std::string& path);

/// Command-line entry point. Returns the process exit code: 0 success (soft
/// failures summarized on stderr), 1 evaluation-level failure, 2
/// configuration or infrastructure failure.
int run_cli(int argc, char** argv);

}  // namespace effiforge
