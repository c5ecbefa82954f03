#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace effiforge {

/// Raised for environment problems (spawn failure, unwritable sandbox,
/// missing toolchain). Deliberately distinct from subject-program failures,
/// which are reported as statuses, never as exceptions.
struct InfraError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Content addressing
// ---------------------------------------------------------------------------

/// FNV-1a 64-bit hash of a byte string.
std::uint64_t fnv1a64(std::string_view data);

/// Stable content id: 16 lowercase hex digits of fnv1a64. Same bytes, same id.
std::string content_id(std::string_view data);

// ---------------------------------------------------------------------------
// Encoding
// ---------------------------------------------------------------------------

/// True iff data is well-formed UTF-8 (no overlongs, surrogates, or > U+10FFFF).
bool is_valid_utf8(std::string_view data);

std::string base64_encode(std::string_view data);

/// Throws std::invalid_argument on malformed input.
std::string base64_decode(std::string_view text);

// ---------------------------------------------------------------------------
// Output comparison
// ---------------------------------------------------------------------------

/// Canonical form for stdout comparison: trailing spaces/tabs/CR stripped from
/// every line, trailing newlines dropped. Interior bytes untouched.
std::string normalize_output(std::string_view raw);

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Arithmetic mean; throws std::invalid_argument on empty input.
double mean(const std::vector<double>& xs);

/// Sample standard deviation (n-1 denominator); 0 when n < 2.
double sample_stddev(const std::vector<double>& xs);

/// Population standard deviation (n denominator); 0 when n < 1.
double population_stddev(const std::vector<double>& xs);

// ---------------------------------------------------------------------------
// Filesystem helpers
// ---------------------------------------------------------------------------

/// Whole-file read; throws InfraError when the file cannot be opened.
std::string read_file(const std::string& path);

/// Atomic whole-file write (temp file + rename); throws InfraError on failure.
void write_file(const std::string& path, std::string_view data);

// ---------------------------------------------------------------------------
// Misc
// ---------------------------------------------------------------------------

/// Expands ${VAR} references from the environment; unset variables expand
/// to the empty string. Used for secrets in config files.
std::string expand_env(std::string_view text);

/// Host + toolchain identity string recorded in suites and audit records so
/// profile sets measured on different machines are never merged silently.
std::string machine_fingerprint();

/// Stderr logging. Soft failures (bad synthesizers, rejected tests) are
/// expected during generation and must not abort the pipeline, so they are
/// reported through these instead of exceptions.
void log_warn(const std::string& msg);
void log_info(const std::string& msg);

}  // namespace effiforge
