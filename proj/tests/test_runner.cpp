// SPDX-License-Identifier: Apache-2.0
#include "catch_amalgamated.hpp"

#include "relaylab/runner.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

using namespace relaylab;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::StartsWith;

namespace fs = std::filesystem;

namespace {

struct TempDir
{
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / ("relaylab-test-" + std::to_string(::getpid())))
    {
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path &p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream b;
    b << in.rdbuf();
    return b.str();
}

std::vector<std::string> lines(const std::string &text)
{
    std::vector<std::string> out;
    std::istringstream in(text);
    for (std::string l; std::getline(in, l);)
        out.push_back(l);
    return out;
}

int run_cli(const std::string &args)
{
    const int status = std::system((std::string(RELAYLAB_CLI) + " " + args + " > /dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

} // namespace

TEST_CASE("number formatting round-trips", "[runner]")
{
    for (double v : {0.1, 1.0 / 3.0, 5.83035e-4, 1e300, 0.0, 150.0})
        CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()).empty());
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("SHA-256 test vector", "[runner]")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("analytic run writes CSV and sidecar", "[runner]")
{
    TempDir dir;
    const auto cfg = parse_config_text("[run]\nschemes = basic, selection\n"
                                       "[sweep]\naxis = kr\nvalues = 2, 3\n"
                                       "[position]\nd_ub = 250\ntheta_u = 0.2\n");
    const auto csv = dir.path / "out" / "r.csv";
    cmd_run(cfg, csv);
    const auto text = slurp(csv);
    const auto l = lines(text);
    REQUIRE(l.size() == 5);
    CHECK(l[0] + "\n" == run_csv_header());
    CHECK_THAT(l[1], StartsWith("basic,sic,off,kr,2,"));
    CHECK_THAT(l[4], StartsWith("selection,sic,off,kr,3,"));

    const auto side = nlohmann::json::parse(slurp(csv.string() + ".json"));
    CHECK(side["status"] == "ok");
    CHECK(side["rows"] == 4);
    CHECK(side["content_sha256"] == sha256_hex(text));
    CHECK(side["config_sha256"] == sha256_hex(side["config"].dump()));
}

TEST_CASE("a failing sweep point leaves finished rows on disk", "[runner]")
{
    TempDir dir;
    // At the second point the relay sits on the UE, which is rejected.
    const auto cfg = parse_config_text("[run]\nschemes = basic, feedback\n[sweep]\naxis = d_rb\nvalues = 100, 200\n"
                                       "[position]\nd_ub = 200\n");
    const auto csv = dir.path / "partial.csv";
    CHECK_THROWS(cmd_run(cfg, csv));
    const auto side = nlohmann::json::parse(slurp(csv.string() + ".json"));
    CHECK_THAT(side["status"].get<std::string>(), StartsWith("failed"));
    CHECK(side["rows"] == 2);
    CHECK(lines(slurp(csv)).size() == 3);
}

TEST_CASE("command-line exit codes", "[runner][cli]")
{
    TempDir dir;
    auto write = [&](const std::string &name, const std::string &text) {
        std::ofstream(dir.path / name) << text;
        return (dir.path / name).string();
    };
    const auto ok = write("ok.cfg", "[run]\nschemes = basic\n[position]\nd_ub = 200\n");
    CHECK(run_cli("run --config " + ok + " --out " + (dir.path / "ok.csv").string()) == 0);
    CHECK(fs::exists(dir.path / "ok.csv"));

    const auto bad_key = write("bad.cfg", "[params]\nthetadb = 3\n");
    CHECK(run_cli("run --config " + bad_key) == 2);
    const auto bad_theta = write("theta.cfg", "[params]\ntheta_db = -0.5\n");
    CHECK(run_cli("run --config " + bad_theta) == 2);
    CHECK(run_cli("run --config " + (dir.path / "missing.cfg").string()) == 2);

    // A tampered tolerance makes the validation report a failure.
    const auto tampered = write("tampered.cfg", "[validate]\nidentity_tol = 1e-20\ncriteria = 1\n");
    CHECK(run_cli("validate --config " + tampered) == 1);
    const auto fine = write("fine.cfg", "[validate]\ncriteria = 1, 5\n");
    CHECK(run_cli("validate --config " + fine) == 0);
}
