#include "doctest.h"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result run(const std::string &args) {
    std::string cmd = std::string(DELAYOCO_CLI) + " " + args + " 2>&1";
    Result r;
    FILE *p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0)
        r.out.append(buf, n);
    int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string &name)
        : path(fs::temp_directory_path() / ("delayoco_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &f) const { return (path / f).string(); }
};

const char *kSmall = R"yaml(
seed: 3
T: 300
domain: {kind: ball, dim: 2, radius: 1.0}
losses:
  seed: 5
  components:
    - {kind: linear, mean: [0.2, 0], noise: 0.6}
delays: {kind: uniform, dmax: 10, seed: 2}
player: {compose: "oco(pftrl)"}
players:
  - {name: pftrl, compose: "oco(pftrl)"}
  - {name: skip, compose: "skip(oco(omd))"}
sweep: {T_grid: [64, 128, 256], reps: 2}
verify: {random_schedules: 50, max_T: 60}
)yaml";

void write(const std::string &path, const std::string &text) {
    std::ofstream(path) << text;
}

} // namespace

TEST_CASE("verify on the default config exits 0") {
    TempDir d("verify_default");
    auto r = run("verify --out " + d.path.string());
    CHECK_MESSAGE(r.code == 0, r.out);
    auto report = slurp(d.path / "verify.json");
    CHECK(report.find("\"pass\": true") != std::string::npos);
    CHECK(report.find("\"failed\": 0") != std::string::npos);
}

TEST_CASE("verify with an injected fault exits 1 and names the identity") {
    TempDir d("verify_fault");
    for (const char *fault : {"sigma", "d_star", "sigma_star", "beta", "d"}) {
        std::string y = kSmall;
        y.replace(y.find("max_T: 60}"), 10, std::string("max_T: 60, inject_fault: ") + fault + "}");
        write(d / "c.yaml", y);
        auto r = run("verify --config " + (d / "c.yaml") + " --out " + (d / "o"));
        CHECK_MESSAGE(r.code == 1, r.out);
        CHECK(r.out.find("FAIL") != std::string::npos);
        auto report = slurp(d.path / "o" / "verify.json");
        CHECK(report.find("\"pass\": false") != std::string::npos);
    }
    std::string y = kSmall;
    y.replace(y.find("max_T: 60}"), 10, "max_T: 60, inject_fault: sigma}");
    write(d / "c.yaml", y);
    auto r = run("verify --config " + (d / "c.yaml") + " --out " + (d / "o"));
    CHECK(r.out.find("sum_sigma") != std::string::npos);
}

TEST_CASE("config errors exit 2 with the field path") {
    TempDir d("bad");
    std::string y = kSmall;
    y.replace(y.find("  seed: 5\n"), 10, "  seed: 5\n  G: -1\n");
    write(d / "c.yaml", y);
    auto r = run("run --config " + (d / "c.yaml") + " --out " + (d / "o"));
    CHECK(r.code == 2);
    CHECK(r.out.find("config: losses.G: must be positive") != std::string::npos);
    CHECK_FALSE(fs::exists(d.path / "o" / "episode.csv"));

    CHECK(run("run --config " + (d / "missing.yaml")).code == 2);
    CHECK(run("frobnicate").code == 2);
    CHECK(run("run --threads nope").code == 2);
}

TEST_CASE("run and sweep are byte-identical on rerun") {
    TempDir d("rerun");
    write(d / "c.yaml", kSmall);
    for (const char *cmd : {"run", "sweep"}) {
        auto a = run(std::string(cmd) + " --config " + (d / "c.yaml") + " --out " + (d / "a"));
        auto b = run(std::string(cmd) + " --config " + (d / "c.yaml") + " --out " + (d / "b") +
                     " --threads 2");
        REQUIRE_MESSAGE(a.code == 0, a.out);
        REQUIRE_MESSAGE(b.code == 0, b.out);
    }
    std::size_t compared = 0;
    for (const auto &e : fs::directory_iterator(d.path / "a")) {
        auto other = d.path / "b" / e.path().filename();
        REQUIRE(fs::exists(other));
        CHECK_MESSAGE(slurp(e.path()) == slurp(other), e.path().filename().string());
        ++compared;
    }
    CHECK(compared >= 8);
    CHECK(fs::exists(d.path / "a" / "trace.csv"));
    CHECK(fs::exists(d.path / "a" / "table_pftrl.csv"));
    CHECK(fs::exists(d.path / "a" / "episodes_skip.csv"));
    CHECK(slurp(d.path / "a" / "fits.csv").rfind("curve,", 0) == 0);

    auto c = run("run --config " + (d / "c.yaml") + " --out " + (d / "c") + " --seed 4");
    REQUIRE(c.code == 0);
    CHECK(slurp(d.path / "c" / "episode.csv") != slurp(d.path / "a" / "episode.csv"));
}

TEST_CASE("report reproduces sweep points") {
    TempDir d("report");
    write(d / "c.yaml", kSmall);
    REQUIRE(run("sweep --config " + (d / "c.yaml") + " --out " + (d / "s")).code == 0);
    auto r = run("report " + (d / "s/plot_regret.csv") + " --out " + (d / "r") + " --svg");
    REQUIRE_MESSAGE(r.code == 0, r.out);
    CHECK(slurp(d.path / "r" / "plot_regret.csv") == slurp(d.path / "s" / "plot_regret.csv"));
    CHECK(slurp(d.path / "r" / "plot_loglog.csv") == slurp(d.path / "s" / "plot_loglog.csv"));
    CHECK(fs::exists(d.path / "r" / "regret.svg"));

    auto t = run("report " + (d / "s/table_pftrl.csv") + " " + (d / "s/table_skip.csv") +
                 " --out " + (d / "t"));
    REQUIRE_MESSAGE(t.code == 0, t.out);
    CHECK(slurp(d.path / "t" / "plot_regret.csv") == slurp(d.path / "s" / "plot_regret.csv"));

    CHECK(run("report " + (d / "nothing.csv") + " --out " + (d / "x")).code == 2);
}
