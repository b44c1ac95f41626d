#include "doctest.h"

#include "delayoco/config.hpp"
#include "delayoco/report.hpp"

#include <filesystem>
#include <fstream>

using namespace delayoco;
using namespace delayoco::config;
namespace fs = std::filesystem;

namespace {

const char *kBase = R"yaml(
T: 200
domain: {kind: ball, dim: 2, radius: 1.0}
losses:
  components:
    - {kind: linear, mean: [0.1, 0], noise: 0.5}
delays: {kind: constant, d: 4}
player: {compose: "oco(pftrl)"}
)yaml";

std::string error_of(const std::string &yaml) {
    try {
        parse_config(yaml);
    } catch (const ValidationError &e) {
        return e.what();
    }
    return "";
}

} // namespace

TEST_CASE("default config is valid") {
    auto c = default_config();
    CHECK(c.env.T == 1000);
    CHECK(c.env.family.dim() == 3);
    CHECK(c.env.delays.kind == harness::DelayKind::Uniform);
    CHECK(c.env.delays.dmax == 20);
    CHECK(c.T_grid == std::vector<std::int64_t>{256, 512, 1024});
    CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3});
    CHECK(c.curves.size() == 1);
    CHECK(wrappers::to_string(c.player.composition) == "oco(pftrl)");
}

TEST_CASE("base config parses") {
    auto c = parse_config(kBase);
    CHECK(c.env.T == 200);
    CHECK(c.env.delays.kind == harness::DelayKind::Constant);
    CHECK(c.env.delays.d == 4);
    CHECK(c.T_grid == std::vector<std::int64_t>{200});
    CHECK(c.seeds == std::vector<std::uint64_t>{1});
    CHECK(c.out_dir == "out");
    CHECK(c.env.family.G() > 0);
}

TEST_CASE("config errors name the field") {
    struct Case {
        std::string yaml, field;
    };
    std::string b = kBase;
    std::vector<Case> cases{
        {b + "bogus: 1\n", "config: bogus: unknown key"},
        {b + "threads: 0\n", "config: threads:"},
        {std::string(kBase).replace(b.find("T: 200"), 6, "T: 0"), "config: T:"},
        {std::string(kBase).replace(b.find("dim: 2"), 6, "dim: -1"), "config: domain.dim"},
        {std::string(kBase).replace(b.find("kind: ball"), 10, "kind: cube"), "config: domain.kind"},
        {std::string(kBase).replace(b.find("mean: [0.1, 0]"), 14, "mean: [0.1]"),
         "config: losses.components[0].mean"},
        {std::string(kBase).replace(b.find("noise: 0.5"), 10, "noise: -1"),
         "config: losses.components[0].noise"},
        {std::string(kBase).replace(b.find("d: 4"), 4, "d: -4"), "config: delays.d"},
        {std::string(kBase).replace(b.find("kind: constant"), 14, "kind: weibull"),
         "config: delays.kind"},
        {std::string(kBase).replace(b.find("oco(pftrl)"), 10, "oco(sgd)"), "config: player.compose"},
        {b + "sweep: {reps: 0}\n", "config: sweep.reps"},
        {b + "verify: {inject_fault: rho}\n", "config: verify.inject_fault"},
        {b + "comparator: {eps_scale: 0}\n", "config: comparator.eps_scale"},
        {"T: [1\n", "YAML syntax error"},
    };
    for (const auto &c : cases) {
        std::string e = error_of(c.yaml);
        CHECK_MESSAGE(e.find(c.field) != std::string::npos, c.field << " vs " << e);
    }
}

TEST_CASE("cross-field checks") {
    std::string b = kBase;
    auto strongly = std::string(kBase).replace(b.find("{compose: \"oco(pftrl)\"}"), 23,
                                               "{compose: \"oco(pftrl)\", schedule: strongly_convex}");
    CHECK(error_of(strongly).find("config: player.schedule") != std::string::npos);

    auto bco_sched = std::string(kBase).replace(b.find("{compose: \"oco(pftrl)\"}"), 23,
                                                "{compose: \"oco(pftrl)\", schedule: bco}");
    CHECK(error_of(bco_sched).find("config: player.schedule") != std::string::npos);

    auto z1 = std::string(kBase).replace(b.find("{compose: \"oco(pftrl)\"}"), 23,
                                         "{compose: \"oco(pftrl)\", z1: [2, 0]}");
    CHECK(error_of(z1).find("config: player.z1") != std::string::npos);

    auto zeroG = b + "";
    zeroG.replace(zeroG.find("losses:\n"), 8, "losses:\n  G: 0\n");
    CHECK(error_of(zeroG).find("config: losses.G: must be positive") != std::string::npos);

    auto nu = b;
    nu.replace(nu.find("losses:\n"), 8, "losses:\n  G: 1\n  M: 1\n  nu: 5\n");
    CHECK(error_of(nu).find("config: losses.nu") != std::string::npos);

    auto grid = b;
    grid.replace(grid.find("delays: {kind: constant, d: 4}"), 30,
                 "delays: {kind: file, schedule: [1, 0, 0]}");
    CHECK(error_of(grid).find("config: delays") != std::string::npos);
}

TEST_CASE("players, sweep and verify sections") {
    std::string y = std::string(kBase) + R"yaml(
players:
  - {name: plain, compose: "oco(pftrl)"}
  - {compose: "skip(oco(omd))"}
sweep: {T_grid: [64, 128], seeds: [4, 9]}
output: {dir: results, keep_rounds: false}
verify: {random_schedules: 10, max_T: 30, inject_fault: none}
threads: 2
)yaml";
    auto c = parse_config(y);
    REQUIRE(c.curves.size() == 2);
    CHECK(c.curves[0].name == "plain");
    CHECK(c.curves[1].name == "skip(oco(omd))");
    CHECK(c.T_grid == std::vector<std::int64_t>{64, 128});
    CHECK(c.seeds == std::vector<std::uint64_t>{4, 9});
    CHECK(c.out_dir == "results");
    CHECK_FALSE(c.keep_rounds);
    CHECK(c.verify.random_schedules == 10);
    CHECK(c.verify.inject_fault.empty());
    CHECK(c.threads == 2);
}

TEST_CASE("delay schedule file is read relative to the config") {
    fs::path dir = fs::temp_directory_path() / "delayoco_config_test";
    fs::create_directories(dir);
    {
        std::ofstream(dir / "d.csv") << "t,d\n1,2\n2,0\n3,0\n";
        std::ofstream(dir / "c.yaml")
            << "T: 3\ndomain: {kind: box, lo: [-1], hi: [1]}\n"
               "losses: {components: [{kind: linear, mean: [0.5]}]}\n"
               "delays: {kind: file, file: d.csv}\nplayer: {compose: \"oco(omd)\"}\n";
    }
    auto c = load_config((dir / "c.yaml").string());
    CHECK(c.env.delays.kind == harness::DelayKind::Fixed);
    CHECK(c.env.delays.fixed.d == std::vector<std::int64_t>{2, 0, 0});
    CHECK_THROWS_WITH_AS(load_config((dir / "missing.yaml").string()),
                         doctest::Contains("cannot open"), ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("report helpers") {
    std::vector<report::Series> s{{"a", {1, 2, 4}, {1.5, 0.25, 3}}, {"b", {1}, {0}}};
    auto text = report::series_csv(s);
    auto back = report::parse_series_csv(text);
    REQUIRE(back.size() == 2);
    CHECK(back[0].x == s[0].x);
    CHECK(back[0].y == s[0].y);
    CHECK(report::series_csv(back) == text);
    auto ll = report::log_log(s);
    CHECK(ll[1].x.empty());
    CHECK(report::slug("skip(oco(pftrl))") == "skip_oco_pftrl");
    CHECK(report::slug("()") == "curve");
    CHECK_THROWS(report::series_csv({{"b,c", {1}, {1}}}));
    auto svg = report::svg_chart(s, "t", "x", "y");
    CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("write_all removes partial output") {
    fs::path dir = fs::temp_directory_path() / "delayoco_write_all";
    fs::remove_all(dir);
    fs::create_directories(dir / "b.csv"); // a directory blocks the rename
    CHECK_THROWS(report::write_all(dir.string(), {{"a.csv", "x\n"}, {"b.csv", "y\n"}}));
    CHECK_FALSE(fs::exists(dir / "a.csv"));
    report::write_all(dir.string(), {{"a.csv", "x\n"}});
    std::ifstream in(dir / "a.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "x");
    fs::remove_all(dir);
}
