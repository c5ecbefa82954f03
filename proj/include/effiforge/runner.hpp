#pragma once

#include <map>
#include <string>
#include <vector>

#include "effiforge/model.hpp"

namespace effiforge {

// ---------------------------------------------------------------------------
// Outcomes and limits
// ---------------------------------------------------------------------------

enum class RunStatus { OK, COMPILE_ERROR, RUNTIME_ERROR, TIMEOUT, MEMORY_EXCEEDED };

std::string status_name(RunStatus status);

/// Result of one sandboxed run. Any status other than OK is treated as an
/// incorrect execution downstream; infrastructure trouble (cannot spawn,
/// sandbox unwritable) throws InfraError instead and is never folded into
/// these statuses.
struct ExecutionOutcome {
    RunStatus status = RunStatus::OK;
    std::string stdout_bytes;
    std::string stderr_bytes;
    double wall_time = 0.0;    // seconds around the subject process only
    double peak_memory = 0.0;  // max resident set, mebibytes
    int exit_code = 0;         // exit status, or -signal when killed
};

struct Limits {
    double time_limit = 180.0;     // seconds
    double mem_limit_mib = 4096.0;
};

/// Short limits for running untrusted synthesizer programs.
inline constexpr Limits kSynthesizerLimits{30.0, 1024.0};

// ---------------------------------------------------------------------------
// Toolchains
// ---------------------------------------------------------------------------

/// How one subject language is compiled and run. `kind` selects the command
/// shape and the memory-limit mechanism:
///   gcc    - compile with `compiler`, run the produced binary; RLIMIT_AS
///   jvm    - javac/java; memory limited via -Xmx (the JVM reserves address
///            space far beyond its heap, so RLIMIT_AS would kill it at start)
///   python - syntax check via py_compile, run with interpreter; RLIMIT_AS
///   node   - syntax check via --check, run with node; RLIMIT_AS (V8 tolerates
///            address-space caps of 1 GiB and above)
struct ToolchainSpec {
    std::string kind;
    std::string compiler;  // empty for pure interpreters
    std::vector<std::string> compile_flags;
    std::string runtime;   // empty for native binaries
    std::vector<std::string> runtime_flags;
};

struct RunnerConfig {
    std::map<SubjectLanguage, ToolchainSpec> toolchains;
    std::string sandbox_root;  // empty = system temp dir
    int poll_interval_ms = 10;
    bool exclusive_timing = true;  // serialize timed runs machine-wide
    bool keep_workdirs = false;
    /// An abnormal exit is classified MEMORY_EXCEEDED when peak RSS reached
    /// this fraction of the limit (or peak address space reached the limit).
    double mem_exceeded_rss_fraction = 0.9;
};

/// g++ / javac+java / python3 with optimizing flags on the compiled languages.
RunnerConfig default_runner_config();

/// Human-readable descriptions of toolchain executables that cannot be
/// resolved; empty means everything needed is present.
std::vector<std::string> missing_toolchains(const RunnerConfig& cfg);

// ---------------------------------------------------------------------------
// Compiled programs
// ---------------------------------------------------------------------------

/// A runnable program in its private working directory. Valid for execution
/// only while the owning Runner is alive and status == OK.
struct CompiledHandle {
    SubjectLanguage lang = SubjectLanguage::CPP;
    RunStatus status = RunStatus::OK;  // OK or COMPILE_ERROR
    std::string diagnostics;           // compiler stderr when compilation failed
    std::string workdir;

    // Run-command ingredients, filled by Runner::compile.
    std::string kind;
    std::string runtime;
    std::vector<std::string> runtime_flags;

    bool ok() const { return status == RunStatus::OK; }
};

/// profile() outcome: either a complete ExecutionProfile or the first failing
/// run's outcome.
struct ProfileResult {
    bool ok = false;
    ExecutionProfile profile;
    ExecutionOutcome failure;  // meaningful only when !ok
};

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

/// Compiles and executes subject-language programs under resource limits.
/// Wall time is measured around the child process only (compilation excluded);
/// peak memory is the child's maximum resident set, taken from OS accounting
/// at exit combined with periodic /proc sampling to catch transient peaks.
///
/// Working directories live under a per-Runner session directory, removed on
/// destruction unless keep_workdirs is set. Timed runs are serialized through
/// a process-wide mutex while exclusive_timing is on.
class Runner {
  public:
    explicit Runner(RunnerConfig cfg);
    ~Runner();
    Runner(const Runner&) = delete;
    Runner& operator=(const Runner&) = delete;

    const RunnerConfig& config() const { return cfg_; }
    const std::string& session_dir() const { return session_dir_; }

    /// Compiles source in a fresh working directory. Interpreted languages get
    /// a syntax check only. Failures are reported in the handle, not thrown;
    /// a missing toolchain executable throws InfraError.
    CompiledHandle compile(SubjectLanguage lang, const std::string& source);

    /// Runs the program once with the payload on stdin. Throws InfraError when
    /// the process cannot be spawned at all.
    ExecutionOutcome execute(const CompiledHandle& handle, const TestInput& input,
                             const Limits& limits);

    /// Runs `execute` repeats times and aggregates. Stops at the first non-OK
    /// run and reports it as the failure.
    ProfileResult profile(const CompiledHandle& handle, const TestCase& test,
                          int repeats, const Limits& limits);

  private:
    std::string fresh_workdir(const std::string& tag);

    RunnerConfig cfg_;
    std::string session_dir_;
    int seq_ = 0;
};

}  // namespace effiforge
