#include "effiforge/runner.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <time.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "effiforge/util.hpp"

namespace fs = std::filesystem;

namespace effiforge {

std::string status_name(RunStatus status) {
    switch (status) {
        case RunStatus::OK: return "OK";
        case RunStatus::COMPILE_ERROR: return "COMPILE_ERROR";
        case RunStatus::RUNTIME_ERROR: return "RUNTIME_ERROR";
        case RunStatus::TIMEOUT: return "TIMEOUT";
        case RunStatus::MEMORY_EXCEEDED: return "MEMORY_EXCEEDED";
    }
    throw std::logic_error("unreachable: bad RunStatus");
}

RunnerConfig default_runner_config() {
    RunnerConfig cfg;
    cfg.toolchains[SubjectLanguage::CPP] =
        ToolchainSpec{"gcc", "g++", {"-O2", "-std=c++17"}, "", {}};
    cfg.toolchains[SubjectLanguage::JAVA] = ToolchainSpec{"jvm", "javac", {}, "java", {}};
    cfg.toolchains[SubjectLanguage::PYTHON] = ToolchainSpec{"python", "", {}, "python3", {}};
    return cfg;
}

namespace {

bool executable_resolves(const std::string& exe) {
    if (exe.find('/') != std::string::npos) return access(exe.c_str(), X_OK) == 0;
    const char* path = std::getenv("PATH");
    if (!path) return false;
    std::string dirs(path);
    std::size_t pos = 0;
    while (pos <= dirs.size()) {
        std::size_t colon = dirs.find(':', pos);
        std::string dir = dirs.substr(pos, colon == std::string::npos ? colon : colon - pos);
        if (!dir.empty() && access((dir + "/" + exe).c_str(), X_OK) == 0) return true;
        if (colon == std::string::npos) break;
        pos = colon + 1;
    }
    return false;
}

}  // namespace

std::vector<std::string> missing_toolchains(const RunnerConfig& cfg) {
    std::vector<std::string> missing;
    for (SubjectLanguage lang : kAllLanguages) {
        auto it = cfg.toolchains.find(lang);
        if (it == cfg.toolchains.end()) {
            missing.push_back(lang_name(lang) + ": no toolchain configured");
            continue;
        }
        for (const std::string& exe : {it->second.compiler, it->second.runtime})
            if (!exe.empty() && !executable_resolves(exe))
                missing.push_back(lang_name(lang) + ": '" + exe + "' not found on PATH");
    }
    return missing;
}

// ---------------------------------------------------------------------------
// Low-level spawn
// ---------------------------------------------------------------------------

namespace {

// Timed runs must not share the machine; one process-wide lock is enough
// because the harness itself is the only timing source in a run.
std::mutex g_timing_mutex;

double now_seconds() {
    timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return static_cast<double>(ts.tv_sec) + static_cast<double>(ts.tv_nsec) * 1e-9;
}

void set_nonblocking(int fd) { fcntl(fd, F_SETFL, fcntl(fd, F_GETFL) | O_NONBLOCK); }

/// Reads VmPeak/VmHWM (kB) from /proc; false once the process is gone.
bool sample_proc_status(pid_t pid, double& vm_peak_kb, double& vm_hwm_kb) {
    char path[64];
    std::snprintf(path, sizeof path, "/proc/%d/status", static_cast<int>(pid));
    int fd = open(path, O_RDONLY);
    if (fd < 0) return false;
    char buf[4096];
    ssize_t n = read(fd, buf, sizeof buf - 1);
    close(fd);
    if (n <= 0) return false;
    buf[n] = '\0';
    if (const char* p = std::strstr(buf, "VmPeak:")) vm_peak_kb = std::strtod(p + 7, nullptr);
    if (const char* p = std::strstr(buf, "VmHWM:")) vm_hwm_kb = std::strtod(p + 6, nullptr);
    return true;
}

constexpr std::size_t kCaptureCap = 256ull * 1024 * 1024;

struct RawRun {
    bool timed_out = false;  // the wall-clock watchdog fired
    bool signaled = false;
    int exit_code = 0;
    int term_signal = 0;
    std::string out, err;
    double wall = 0.0;
    double peak_rss_mib = 0.0;
    double vm_peak_mib = 0.0;
};

/// Forks, execs argv inside workdir with stdin from stdin_path, and collects
/// output, wall time, and memory peaks. rlimit_as_bytes <= 0 disables the
/// address-space limit (needed for JVMs). Throws InfraError when the process
/// cannot be spawned; every failure of the subject program itself comes back
/// as RawRun data.
RawRun spawn_and_collect(const std::vector<std::string>& argv, const std::string& workdir,
                         const std::string& stdin_path, double time_limit_s,
                         long rlimit_as_bytes, int poll_ms) {
    int in_fd = open(stdin_path.c_str(), O_RDONLY);
    if (in_fd < 0)
        throw InfraError("cannot open stdin file '" + stdin_path + "': " +
                         std::strerror(errno));
    int out_pipe[2], err_pipe[2], status_pipe[2];
    if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0 ||
        pipe2(status_pipe, O_CLOEXEC) != 0) {
        close(in_fd);
        throw InfraError(std::string("pipe: ") + std::strerror(errno));
    }

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const std::string& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    const double start = now_seconds();
    const pid_t pid = fork();
    if (pid < 0) {
        close(in_fd);
        for (int fd : {out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1],
                       status_pipe[0], status_pipe[1]})
            close(fd);
        throw InfraError(std::string("fork: ") + std::strerror(errno));
    }

    if (pid == 0) {
        // Child. Own process group so the watchdog can kill descendants too.
        setpgid(0, 0);
        dup2(in_fd, 0);
        dup2(out_pipe[1], 1);
        dup2(err_pipe[1], 2);
        for (int fd : {in_fd, out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1],
                       status_pipe[0]})
            close(fd);
        int err = 0;
        if (chdir(workdir.c_str()) != 0) {
            err = errno;
            [[maybe_unused]] ssize_t w = write(status_pipe[1], &err, sizeof err);
            _exit(127);
        }
        rlimit no_core{0, 0};
        setrlimit(RLIMIT_CORE, &no_core);
        // CPU backstop a little above the wall limit; the watchdog normally
        // fires first, this catches it if the parent ever stalls.
        const rlim_t cpu_s = static_cast<rlim_t>(std::ceil(time_limit_s)) + 2;
        rlimit cpu{cpu_s, cpu_s + 1};
        setrlimit(RLIMIT_CPU, &cpu);
        if (rlimit_as_bytes > 0) {
            rlimit as{static_cast<rlim_t>(rlimit_as_bytes),
                      static_cast<rlim_t>(rlimit_as_bytes)};
            setrlimit(RLIMIT_AS, &as);
        }
        execvp(cargv[0], cargv.data());
        err = errno;
        [[maybe_unused]] ssize_t w = write(status_pipe[1], &err, sizeof err);
        _exit(127);
    }

    // Parent.
    close(in_fd);
    close(out_pipe[1]);
    close(err_pipe[1]);
    close(status_pipe[1]);

    // The status pipe is CLOEXEC: EOF means exec succeeded, a payload is the
    // child-side errno.
    int spawn_errno = 0;
    {
        ssize_t n = read(status_pipe[0], &spawn_errno, sizeof spawn_errno);
        if (n <= 0) spawn_errno = 0;
    }
    close(status_pipe[0]);
    if (spawn_errno != 0) {
        kill(pid, SIGKILL);
        waitpid(pid, nullptr, 0);
        close(out_pipe[0]);
        close(err_pipe[0]);
        throw InfraError("cannot exec '" + argv[0] + "': " + std::strerror(spawn_errno));
    }

    set_nonblocking(out_pipe[0]);
    set_nonblocking(err_pipe[0]);

    RawRun rr;
    bool out_open = true, err_open = true;
    bool reaped = false, killed = false, truncated = false;
    int status = 0;
    rusage ru{};
    const double deadline = start + time_limit_s;
    double last_sample = 0.0;
    double wall_end = start;

    auto drain = [&](int fd, std::string& buf, bool& open_flag) {
        char tmp[65536];
        while (open_flag) {
            ssize_t n = read(fd, tmp, sizeof tmp);
            if (n > 0) {
                std::size_t room = kCaptureCap - std::min(kCaptureCap, buf.size());
                if (static_cast<std::size_t>(n) > room) truncated = true;
                buf.append(tmp, std::min(static_cast<std::size_t>(n), room));
            } else if (n == 0) {
                open_flag = false;
            } else if (errno == EINTR) {
                continue;
            } else {
                break;  // EAGAIN: drained for now
            }
        }
    };

    auto kill_group = [&] {
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
        killed = true;
    };

    while (!reaped) {
        const double now = now_seconds();
        if (!killed && now >= deadline) {
            rr.timed_out = true;
            kill_group();
        }
        if (!killed && truncated) kill_group();

        int wait_ms = poll_ms;
        if (!killed)
            wait_ms = std::min<double>(poll_ms, std::max(0.0, (deadline - now) * 1000.0) + 1.0);
        pollfd fds[2];
        nfds_t nf = 0;
        if (out_open) fds[nf++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nf++] = {err_pipe[0], POLLIN, 0};
        if (nf > 0)
            poll(fds, nf, wait_ms);
        else
            std::this_thread::sleep_for(std::chrono::milliseconds(1));

        drain(out_pipe[0], rr.out, out_open);
        drain(err_pipe[0], rr.err, err_open);

        const double t = now_seconds();
        if (t - last_sample >= poll_ms / 1000.0) {
            last_sample = t;
            double vp = 0.0, vh = 0.0;
            if (sample_proc_status(pid, vp, vh)) {
                rr.vm_peak_mib = std::max(rr.vm_peak_mib, vp / 1024.0);
                rr.peak_rss_mib = std::max(rr.peak_rss_mib, vh / 1024.0);
            }
        }

        int r = wait4(pid, &status, WNOHANG, &ru);
        if (r == pid || (r < 0 && errno == ECHILD)) {
            reaped = true;
            wall_end = now_seconds();
        }
    }

    // Whatever the dead child left in the pipe buffers.
    while (out_open || err_open) {
        pollfd fds[2];
        nfds_t nf = 0;
        if (out_open) fds[nf++] = {out_pipe[0], POLLIN, 0};
        if (err_open) fds[nf++] = {err_pipe[0], POLLIN, 0};
        if (poll(fds, nf, 100) <= 0) break;  // a grandchild may hold the pipe open
        drain(out_pipe[0], rr.out, out_open);
        drain(err_pipe[0], rr.err, err_open);
    }
    close(out_pipe[0]);
    close(err_pipe[0]);
    kill(-pid, SIGKILL);  // reap-proof stragglers in the group

    rr.wall = wall_end - start;
    rr.peak_rss_mib =
        std::max(rr.peak_rss_mib, static_cast<double>(ru.ru_maxrss) / 1024.0);
    if (WIFSIGNALED(status)) {
        rr.signaled = true;
        rr.term_signal = WTERMSIG(status);
    } else if (WIFEXITED(status)) {
        rr.exit_code = WEXITSTATUS(status);
    }
    if (truncated) rr.err += "\n[output truncated at capture cap]";
    return rr;
}

constexpr double kCompileTimeLimit = 120.0;  // seconds
constexpr long kCompileAsBytes = 4096l * 1024 * 1024;

std::string source_file_name(const std::string& kind) {
    if (kind == "gcc") return "main.cpp";
    if (kind == "jvm") return "Main.java";
    if (kind == "python") return "main.py";
    if (kind == "node") return "main.js";
    throw InfraError("unknown toolchain kind: '" + kind + "'");
}

bool whitespace_only(const std::string& s) {
    return s.find_first_not_of(" \t\r\n") == std::string::npos;
}

}  // namespace

// ---------------------------------------------------------------------------
// Runner
// ---------------------------------------------------------------------------

Runner::Runner(RunnerConfig cfg) : cfg_(std::move(cfg)) {
    fs::path root = cfg_.sandbox_root.empty()
                        ? fs::temp_directory_path() / "effiforge-sandbox"
                        : fs::path(cfg_.sandbox_root);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw InfraError("cannot create sandbox root " + root.string() + ": " + ec.message());
    std::string tmpl = (root / "run-XXXXXX").string();
    if (!mkdtemp(tmpl.data()))
        throw InfraError("mkdtemp failed under " + root.string() + ": " + std::strerror(errno));
    session_dir_ = tmpl;
}

Runner::~Runner() {
    if (!cfg_.keep_workdirs) {
        std::error_code ec;
        fs::remove_all(session_dir_, ec);
    }
}

std::string Runner::fresh_workdir(const std::string& tag) {
    static std::atomic<int> counter{0};
    std::string dir = session_dir_ + "/" + tag + "-" + std::to_string(counter++);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InfraError("cannot create workdir " + dir + ": " + ec.message());
    return dir;
}

CompiledHandle Runner::compile(SubjectLanguage lang, const std::string& source) {
    auto it = cfg_.toolchains.find(lang);
    if (it == cfg_.toolchains.end())
        throw InfraError("no toolchain configured for " + lang_name(lang));
    const ToolchainSpec& tc = it->second;
    for (const std::string& exe : {tc.compiler, tc.runtime})
        if (!exe.empty() && !executable_resolves(exe))
            throw InfraError(lang_name(lang) + " toolchain: '" + exe +
                             "' not found on PATH");

    CompiledHandle h;
    h.lang = lang;
    h.kind = tc.kind;
    h.runtime = tc.runtime;
    h.runtime_flags = tc.runtime_flags;
    h.workdir = fresh_workdir(lang_name(lang));

    if (whitespace_only(source)) {
        h.status = RunStatus::COMPILE_ERROR;
        h.diagnostics = "empty source";
        return h;
    }

    const std::string unit = source_file_name(tc.kind);
    write_file(h.workdir + "/" + unit, source);

    std::vector<std::string> argv;
    if (tc.kind == "gcc") {
        argv.push_back(tc.compiler);
        argv.insert(argv.end(), tc.compile_flags.begin(), tc.compile_flags.end());
        argv.insert(argv.end(), {unit, "-o", "prog"});
    } else if (tc.kind == "jvm") {
        argv.push_back(tc.compiler);
        argv.insert(argv.end(), tc.compile_flags.begin(), tc.compile_flags.end());
        argv.push_back(unit);
    } else if (tc.kind == "python") {
        argv = {tc.runtime, "-m", "py_compile", unit};
    } else if (tc.kind == "node") {
        argv = {tc.runtime, "--check", unit};
    }

    RawRun rr = spawn_and_collect(argv, h.workdir, "/dev/null", kCompileTimeLimit,
                                  tc.kind == "jvm" ? 0 : kCompileAsBytes,
                                  cfg_.poll_interval_ms);
    if (rr.signaled || rr.exit_code != 0) {
        h.status = RunStatus::COMPILE_ERROR;
        h.diagnostics = rr.err.empty() ? rr.out : rr.err;
        if (rr.timed_out) h.diagnostics += "\n[compiler timed out]";
    }
    return h;
}

ExecutionOutcome Runner::execute(const CompiledHandle& handle, const TestInput& input,
                                 const Limits& limits) {
    if (!handle.ok())
        throw std::invalid_argument("execute called on a handle that failed to compile");

    std::vector<std::string> argv;
    if (handle.kind == "gcc") {
        argv.push_back("./prog");
    } else if (handle.kind == "jvm") {
        argv.push_back(handle.runtime);
        argv.push_back("-Xmx" + std::to_string(static_cast<long>(std::llround(
                                    limits.mem_limit_mib))) + "m");
        argv.insert(argv.end(), handle.runtime_flags.begin(), handle.runtime_flags.end());
        argv.push_back("Main");
    } else if (handle.kind == "python" || handle.kind == "node") {
        argv.push_back(handle.runtime);
        argv.insert(argv.end(), handle.runtime_flags.begin(), handle.runtime_flags.end());
        argv.push_back(source_file_name(handle.kind));
    } else {
        throw InfraError("unknown toolchain kind: '" + handle.kind + "'");
    }

    static std::atomic<long> stdin_seq{0};
    const std::string stdin_path =
        handle.workdir + "/stdin-" + std::to_string(stdin_seq++) + ".txt";
    write_file(stdin_path, input.payload);

    const long as_bytes = handle.kind == "jvm"
                              ? 0
                              : static_cast<long>(limits.mem_limit_mib * 1024.0 * 1024.0);

    RawRun rr;
    {
        std::unique_lock<std::mutex> lock(g_timing_mutex, std::defer_lock);
        if (cfg_.exclusive_timing) lock.lock();
        rr = spawn_and_collect(argv, handle.workdir, stdin_path, limits.time_limit,
                               as_bytes, cfg_.poll_interval_ms);
    }
    if (!cfg_.keep_workdirs) {
        std::error_code ec;
        fs::remove(stdin_path, ec);
    }

    ExecutionOutcome o;
    o.stdout_bytes = std::move(rr.out);
    o.stderr_bytes = std::move(rr.err);
    o.wall_time = rr.wall;
    o.peak_memory = rr.peak_rss_mib;
    o.exit_code = rr.signaled ? -rr.term_signal : rr.exit_code;

    const bool mem_evidence =
        rr.peak_rss_mib >= cfg_.mem_exceeded_rss_fraction * limits.mem_limit_mib ||
        rr.vm_peak_mib >= limits.mem_limit_mib;
    if (rr.timed_out || (rr.signaled && rr.term_signal == SIGXCPU)) {
        o.status = RunStatus::TIMEOUT;
        o.wall_time = std::max(o.wall_time, limits.time_limit);
    } else if (rr.signaled || rr.exit_code != 0) {
        o.status = mem_evidence ? RunStatus::MEMORY_EXCEEDED : RunStatus::RUNTIME_ERROR;
    } else {
        o.status = RunStatus::OK;
    }
    return o;
}

ProfileResult Runner::profile(const CompiledHandle& handle, const TestCase& test,
                              int repeats, const Limits& limits) {
    if (repeats < 1) throw std::invalid_argument("profile needs repeats >= 1");
    std::vector<std::pair<double, double>> runs;
    runs.reserve(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        ExecutionOutcome o = execute(handle, test.input, limits);
        if (o.status != RunStatus::OK) {
            ProfileResult r;
            r.ok = false;
            r.failure = std::move(o);
            return r;
        }
        runs.emplace_back(o.wall_time, o.peak_memory);
    }
    ProfileResult r;
    r.ok = true;
    r.profile = make_profile(std::move(runs));
    return r;
}

}  // namespace effiforge
