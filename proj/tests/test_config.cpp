#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "pavg/config.hpp"
#include "pavg/runio.hpp"

using namespace pavg;

namespace {

const char* kSampleConfig = R"(# sample experiment
scheme = partial
m = 4
K = 20
tau = 2
seed = 7
repetitions = 2

[lr]
eta = 0.05

[objective]
kind = quadratic
d = 6
curvature = 1
sigma = 0.5
init = ones

[metrics]
out_dir = {OUT}
)";

std::string sample_with_out(const std::string& out_dir) {
    std::string text = kSampleConfig;
    const auto pos = text.find("{OUT}");
    text.replace(pos, 5, out_dir);
    return text;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pavg_test_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

} // namespace

TEST_CASE("config parsing: sections, comments, overrides") {
    Config cfg = Config::from_string("a = 1\n# note\n[sec]\nkey = two\n");
    CHECK(cfg.get_u64("a", 0) == 1);
    CHECK(cfg.get_string("sec.key", "") == "two");
    cfg.set("sec.key", "three");
    CHECK(cfg.get_string("sec.key", "") == "three");
    CHECK(cfg.get_double("missing", 2.5) == 2.5);

    CHECK_THROWS_AS(Config::from_string("not a pair\n"), ConfigError);
    CHECK_THROWS_AS(Config::from_file("/nonexistent/path.cfg"), ConfigError);

    Config bad = Config::from_string("a = x\n");
    CHECK_THROWS_AS(bad.get_double("a", 0.0), ConfigError);
}

TEST_CASE("build_run validates and rejects unknown keys") {
    TempDir tmp;
    Config cfg = Config::from_string(sample_with_out(tmp.path.string()));
    const BuiltRun run = build_run(cfg);
    CHECK(run.sim.objective->num_workers() == 4);
    CHECK(run.sim.iterations == 20);
    CHECK(run.repetitions == 2);
    // defaults are recorded: the effective map names every parameter
    CHECK(run.effective.count("optimizer.momentum") == 1);
    CHECK(run.effective.count("participation.active_ratio") == 1);
    CHECK(run.effective.count("lr.schedule") == 1);

    Config typo = Config::from_string(sample_with_out(tmp.path.string()) + "[scheme]\ntua = 3\n");
    CHECK_THROWS_AS(build_run(typo), ConfigError);

    Config bad_scheme = Config::from_string(sample_with_out(tmp.path.string()));
    bad_scheme.set("scheme", "adaptive");
    CHECK_THROWS_AS(build_run(bad_scheme), ConfigError);

    Config bad_tau = Config::from_string(sample_with_out(tmp.path.string()));
    bad_tau.set("tau", "9"); // exceeds objective.d = 6
    CHECK_THROWS_AS(build_run(bad_tau), ConfigError);
}

TEST_CASE("effective config echo reparses to the same run") {
    TempDir tmp;
    Config cfg = Config::from_string(sample_with_out(tmp.path.string()));
    const BuiltRun first = build_run(cfg);
    const std::string echo = format_config(first.effective);
    Config cfg2 = Config::from_string(echo);
    const BuiltRun second = build_run(cfg2);
    CHECK(first.effective == second.effective);
}

TEST_CASE("execute_repetition writes reproducible outputs and a live manifest") {
    TempDir tmp;
    Config cfg = Config::from_string(sample_with_out(tmp.path.string()));
    BuiltRun run = build_run(cfg);
    run.repetitions = 1;

    const RunOutputs a = execute_repetition(run, 0);
    const RunOutputs b = execute_repetition(run, 0);
    CHECK(a.iter_hash == b.iter_hash);
    CHECK(a.round_hash == b.round_hash);
    CHECK(read_file(a.iter_csv) == read_file(b.iter_csv));

    // repetition seeds differ
    const RunOutputs c = execute_repetition(run, 1);
    CHECK(c.directory != a.directory);
    CHECK(c.iter_hash != a.iter_hash);

    // manifest fidelity: rerunning from the echoed config reproduces bytes
    Config manifest_cfg = Config::from_file(a.manifest);
    manifest_cfg.set("metrics.out_dir", (tmp.path / "rerun").string());
    BuiltRun rerun = build_run(manifest_cfg);
    const RunOutputs d = execute_repetition(rerun, 0);
    CHECK(d.iter_hash == a.iter_hash);
    CHECK(d.round_hash == a.round_hash);
}

TEST_CASE("content hash is stable") {
    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") != fnv1a64("b"));
    CHECK(hash_hex(0x1234) == "0000000000001234");
}
