#pragma once

// Shared test fixtures. The CI environment has no JDK, so the java toolchain
// slot is pointed at node wherever a test needs all three subject languages;
// the runner only cares about the slot's ToolchainSpec, not the label.

#include <array>
#include <string>
#include <utility>

#include "effiforge/model.hpp"
#include "effiforge/runner.hpp"
#include "effiforge/selection.hpp"

namespace effitest {

using namespace effiforge;

inline RunnerConfig test_runner_config() {
    RunnerConfig cfg = default_runner_config();
    ToolchainSpec node;
    node.kind = "node";
    node.runtime = "node";
    cfg.toolchains[SubjectLanguage::JAVA] = node;
    return cfg;
}

// Node refuses to start under an address-space cap below about 1 GiB, so the
// shared limit stays comfortably above that.
inline Limits test_limits() { return Limits{20.0, 2048.0}; }

// Identity programs: read all of stdin, write it back unchanged.
inline const char* kCppEcho = R"(#include <cstdio>
int main() {
    int c;
    while ((c = getchar()) != EOF) putchar(c);
    return 0;
}
)";

inline const char* kJsEcho = "process.stdout.write(require('fs').readFileSync(0));\n";

inline const char* kPyEcho = "import sys\nsys.stdout.write(sys.stdin.read())\n";

inline ExecutionProfile prof(double wall, double mem) {
    return make_profile({{wall, mem}});
}

/// times/mems are (cpp, java, python).
inline ProfiledTest make_profiled(std::string id, std::array<double, 3> times,
                                  std::array<double, 3> mems) {
    ProfiledTest t;
    t.test_id = std::move(id);
    t.profiles[SubjectLanguage::CPP] = prof(times[0], mems[0]);
    t.profiles[SubjectLanguage::JAVA] = prof(times[1], mems[1]);
    t.profiles[SubjectLanguage::PYTHON] = prof(times[2], mems[2]);
    return t;
}

inline TestInput input_of(const std::string& payload, int iteration = 0,
                          const std::string& synth = "original") {
    return make_test_input(payload, TestOrigin{iteration, synth});
}

}  // namespace effitest
