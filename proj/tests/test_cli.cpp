#include <catch_amalgamated.hpp>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Sandbox {
    fs::path dir;
    Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("nsssm_cli_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Sandbox() { fs::remove_all(dir); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(NSSSM_CLI) + " --out-dir " + dir.string() + " " + args + " > " +
                                (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
        const int rc = std::system(cmd.c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    }
    std::string read(const std::string& name) const {
        std::ifstream in(dir / name);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
    fs::path write(const std::string& name, const json& j) const {
        std::ofstream(dir / name) << j.dump();
        return dir / name;
    }
};

int lines(const std::string& s) {
    int n = 0;
    for (char c : s) n += c == '\n';
    return n;
}

}  // namespace

TEST_CASE("validate-tables writes the table and a manifest") {
    Sandbox s("tables");
    s.run("validate-tables");
    const std::string csv = s.read("tables.csv");
    CHECK(lines(csv) == 65);
    const json m = json::parse(s.read("run_manifest.json"));
    CHECK(m["command"] == "validate-tables");
    CHECK(m["config_hash"].get<std::string>().size() == 40);
    CHECK(m["outputs"].contains("tables.csv"));
}

TEST_CASE("flipped entry is named in the failure") {
    Sandbox s("flip");
    CHECK(s.run("validate-tables --flip 0") != 0);
    CHECK(s.read("stdout.txt").find("plus.h1(2,0)") != std::string::npos);
}

TEST_CASE("unknown config key gives a structured error") {
    Sandbox s("badkey");
    const auto cfg = s.write("cfg.json", json{{"simulate", {{"t_end", 1.0}}}});
    CHECK(s.run("--config " + cfg.string() + " simulate") == 2);
    const json e = json::parse(s.read("stderr.txt"));
    CHECK(e["error"] == "config");
    CHECK(e["message"].get<std::string>().find("t_end") != std::string::npos);
}

TEST_CASE("empty time span writes only the header") {
    Sandbox s("empty");
    REQUIRE(s.run("simulate --t1 0") == 0);
    const std::string csv = s.read("trajectory.csv");
    CHECK(lines(csv) == 1);
    CHECK(csv.rfind("t,x1,x2,x3,x4,branch", 0) == 0);
}

TEST_CASE("fitted Shaw-Pierre model drives a ROM simulation") {
    Sandbox s("fit");
    const auto cfg = s.write("cfg.json", json{{"fit", {{"order_m", 3}, {"order_r", 3}, {"t_end", 30.0}}}});
    REQUIRE(s.run("--config " + cfg.string() + " fit") == 0);
    CHECK(fs::exists(s.dir / "model_plus.json"));
    CHECK(fs::exists(s.dir / "model_minus.json"));
    CHECK(fs::exists(s.dir / "model_report.json"));
    REQUIRE(s.run("--config " + cfg.string() + " simulate --rom " + (s.dir / "model_plus.json").string() +
                  " --t1 5") == 0);
    const std::string csv = s.read("trajectory.csv");
    CHECK(lines(csv) > 400);
    CHECK(csv.rfind("t,x1,x2,x3,x4,branch,xi1,xi2", 0) == 0);
}
