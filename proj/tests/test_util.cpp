#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "effiforge/util.hpp"

using namespace effiforge;

TEST_CASE("fnv1a64 matches published reference values") {
    // Reference digests of the 64-bit FNV-1a specification.
    CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
    CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("content_id is 16 lowercase hex digits and content-stable") {
    const std::string id = content_id("payload");
    CHECK(id.size() == 16);
    for (char c : id) CHECK(((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f')));
    CHECK(content_id("payload") == id);
    CHECK(content_id("payload2") != id);
}

TEST_CASE("is_valid_utf8 accepts real text and rejects malformed bytes") {
    CHECK(is_valid_utf8("plain ascii"));
    CHECK(is_valid_utf8("sch\xc3\xb6n \xe2\x82\xac \xf0\x9f\x8e\x89"));
    CHECK(is_valid_utf8(""));
    CHECK_FALSE(is_valid_utf8("\xff"));
    CHECK_FALSE(is_valid_utf8("\xc3"));              // truncated sequence
    CHECK_FALSE(is_valid_utf8("\xc0\xaf"));          // overlong encoding
    CHECK_FALSE(is_valid_utf8("\xed\xa0\x80"));      // surrogate half
    CHECK_FALSE(is_valid_utf8("\xf4\x90\x80\x80"));  // above U+10FFFF
}

TEST_CASE("base64 round-trips arbitrary bytes") {
    const std::string bytes = std::string("\x00\x01\xfe\xff", 4) + "data";
    CHECK(base64_decode(base64_encode(bytes)) == bytes);
    CHECK(base64_encode("") == "");
    CHECK(base64_decode("") == "");
    CHECK(base64_encode("f") == "Zg==");
    CHECK(base64_encode("fo") == "Zm8=");
    CHECK(base64_encode("foo") == "Zm9v");
}

TEST_CASE("base64_decode rejects malformed input") {
    CHECK_THROWS_AS(base64_decode("abc"), std::invalid_argument);      // bad length
    CHECK_THROWS_AS(base64_decode("ab!="), std::invalid_argument);     // bad char
    CHECK_THROWS_AS(base64_decode("=abc"), std::invalid_argument);     // bad padding
}

TEST_CASE("normalize_output strips trailing whitespace per line and final newlines") {
    CHECK(normalize_output("a \nb\t\nc") == "a\nb\nc");
    CHECK(normalize_output("x\r\ny\r\n") == "x\ny");
    CHECK(normalize_output("one\n\n\n") == "one");
    CHECK(normalize_output("") == "");
    CHECK(normalize_output("  \n  \n") == "");
    // Interior blank lines survive; only trailing ones go.
    CHECK(normalize_output("a\n\nb\n") == "a\n\nb");
}

TEST_CASE("mean and standard deviations") {
    CHECK(mean({2.0, 4.0}) == doctest::Approx(3.0));
    CHECK_THROWS_AS(mean({}), std::invalid_argument);
    CHECK(sample_stddev({1.0, 2.0, 3.0}) == doctest::Approx(1.0));
    CHECK(sample_stddev({5.0}) == 0.0);
    CHECK(population_stddev({1.0, 2.0, 3.0}) == doctest::Approx(0.81649658092));
}

TEST_CASE("read_file and write_file round-trip binary content") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "effiforge-util-test";
    fs::create_directories(dir);
    const std::string path = (dir / "blob.bin").string();
    const std::string content = std::string("\x00\xff", 2) + "tail\n";
    write_file(path, content);
    CHECK(read_file(path) == content);
    write_file(path, "shorter");  // overwrite must truncate
    CHECK(read_file(path) == "shorter");
    fs::remove_all(dir);
    CHECK_THROWS_AS(read_file((dir / "missing").string()), InfraError);
}

TEST_CASE("expand_env substitutes ${VAR} and drops unset variables") {
    ::setenv("EFFIFORGE_TEST_VAR", "xyz", 1);
    CHECK(expand_env("a ${EFFIFORGE_TEST_VAR} b") == "a xyz b");
    CHECK(expand_env("${EFFIFORGE_TEST_UNSET_VAR}") == "");
    CHECK(expand_env("no refs") == "no refs");
    ::unsetenv("EFFIFORGE_TEST_VAR");
}

TEST_CASE("machine_fingerprint is non-empty and stable within a process") {
    const std::string fp = machine_fingerprint();
    CHECK_FALSE(fp.empty());
    CHECK(machine_fingerprint() == fp);
}
