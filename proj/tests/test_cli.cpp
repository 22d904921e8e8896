#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct CmdResult {
    int exit_code;
    std::string output;
};

CmdResult run_cmd(const std::string& cmd) {
    std::array<char, 4096> buf{};
    std::string out;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    while (fgets(buf.data(), buf.size(), pipe) != nullptr) out += buf.data();
    const int status = pclose(pipe);
    return {WEXITSTATUS(status), out};
}

std::string cli_path() {
    const char* env = std::getenv("RESCALE_CLI");
    REQUIRE(env != nullptr);
    return env;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / "rescale_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

}  // namespace

TEST_CASE("cli: missing config file exits 2") {
    auto r = run_cmd(cli_path() + " run --config /nonexistent.ini --out /tmp/nowhere");
    REQUIRE(r.exit_code == 2);
}

TEST_CASE("cli: malformed config exits 2") {
    const fs::path dir = fresh_dir("badcfg");
    write_file(dir / "bad.ini", "[run]\nmax_tau = 1\nnot_a_key = 3\n");
    auto r = run_cmd(cli_path() + " run --config " + (dir / "bad.ini").string() + " --out " +
                     (dir / "out").string());
    REQUIRE(r.exit_code == 2);
    REQUIRE(r.output.find("config error") != std::string::npos);
}

TEST_CASE("cli: run, laws and resume round trip") {
    const fs::path dir = fresh_dir("ok");
    write_file(dir / "cfg.ini",
               "[run]\nscenario = paper_1d\nmax_tau = 1\nrecord_every = 20\n"
               "[mesh]\nM = 150\nL = 200\n");
    auto r = run_cmd(cli_path() + " run --config " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "out" / "timeseries.csv"));
    REQUIRE(fs::exists(dir / "out" / "summary.json"));
    REQUIRE(fs::exists(dir / "out" / "checkpoint.txt"));

    auto laws = run_cmd(cli_path() + " laws --timeseries " +
                        (dir / "out" / "timeseries.csv").string());
    REQUIRE(laws.exit_code == 0);
    REQUIRE(laws.output.find("law_cu_fitted") != std::string::npos);

    auto resumed = run_cmd(cli_path() + " resume --checkpoint " +
                           (dir / "out" / "checkpoint.txt").string() + " --max-tau 2");
    REQUIRE(resumed.exit_code == 0);
    REQUIRE(resumed.output.find("\"exit_reason\": \"max_tau\"") != std::string::npos);
}

TEST_CASE("cli: singular normalization exits 4") {
    // a constant field has u_hat_ii(0) = 0: the modulation system is unsolvable
    const fs::path dir = fresh_dir("singular");
    write_file(dir / "cfg.ini",
               "[run]\nscenario = custom\nmax_tau = 1\n"
               "[scenario]\ninitial = 0.5\nn = 1\nlambda0 = 1\n"
               "[mesh]\nM = 150\nL = 200\n");
    auto r = run_cmd(cli_path() + " run --config " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string());
    REQUIRE(r.exit_code == 4);
}

TEST_CASE("cli: numerical blowup exits 3") {
    // the quadratic reaction of a 1e160-amplitude field overflows immediately
    const fs::path dir = fresh_dir("blowup");
    write_file(dir / "cfg.ini",
               "[run]\nscenario = custom\nmax_tau = 1\n"
               "[scenario]\ninitial = (1 + z^2/8)^(-1) * 1e160\nn = 1\nlambda0 = 1\n"
               "[mesh]\nM = 150\nL = 200\n");
    auto r = run_cmd(cli_path() + " run --config " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string());
    REQUIRE(r.exit_code == 3);
    // partial outputs preserved
    REQUIRE(fs::exists(dir / "out" / "timeseries.csv"));
    REQUIRE(fs::exists(dir / "out" / "summary.json"));
}

TEST_CASE("cli: sweep writes per-value directories and an index") {
    const fs::path dir = fresh_dir("sweep");
    write_file(dir / "cfg.ini",
               "[run]\nscenario = theorem\nmax_tau = 0.5\nrecord_every = 20\n"
               "[scenario]\namplitude = 0.01\nlambda0 = 0.01\n"
               "[mesh]\nM = 150\nL = 200\n");
    auto r = run_cmd(cli_path() + " sweep --config " + (dir / "cfg.ini").string() + " --out " +
                     (dir / "out").string() + " --param amplitude --values 0,0.01");
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "out" / "index.csv"));
    REQUIRE(fs::exists(dir / "out" / "amplitude_0" / "summary.json"));
    REQUIRE(fs::exists(dir / "out" / "amplitude_0.01" / "summary.json"));
}

TEST_CASE("cli: RESCALE_LOG controls verbosity") {
    const fs::path dir = fresh_dir("logenv");
    write_file(dir / "cfg.ini",
               "[run]\nscenario = paper_1d\nmax_tau = 0.2\n[mesh]\nM = 150\nL = 200\n");
    auto quiet = run_cmd("RESCALE_LOG=quiet " + cli_path() + " run --config " +
                         (dir / "cfg.ini").string() + " --out " + (dir / "out_q").string());
    REQUIRE(quiet.exit_code == 0);
    REQUIRE(quiet.output.find("[rescale]") == std::string::npos);
    auto info = run_cmd("RESCALE_LOG=info " + cli_path() + " run --config " +
                        (dir / "cfg.ini").string() + " --out " + (dir / "out_i").string());
    REQUIRE(info.exit_code == 0);
    REQUIRE(info.output.find("[rescale]") != std::string::npos);
}
