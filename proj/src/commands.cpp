#include "delayoco/commands.hpp"

#include "delayoco/report.hpp"
#include "delayoco/rng.hpp"

#include "json.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

namespace delayoco::commands {

namespace {

using nlohmann::json;

struct Checks {
    json items = json::array();
    int failed = 0;

    void add(const std::string &suite, const std::string &name, bool pass,
             const std::string &detail = "", std::int64_t index = -1) {
        json j{{"suite", suite}, {"name", name}, {"pass", pass}};
        if (index >= 0)
            j["index"] = index;
        if (!detail.empty())
            j["detail"] = detail;
        items.push_back(std::move(j));
        if (!pass)
            ++failed;
    }
};

void inject(timeline::DelayProfile &p, const std::string &fault) {
    if (fault.empty())
        return;
    const auto last = p.d.size() - 1;
    if (fault == "d")
        p.d[0] += 1;
    else if (fault == "sigma")
        p.sigma[last] += 1;
    else if (fault == "d_star")
        p.d_star[0] += 1;
    else if (fault == "sigma_star")
        p.sigma_star[0] += 1;
    else if (fault == "beta" && p.beta.size() >= 2)
        std::swap(p.beta[0], p.beta[1]);
}

std::string join_ints(const std::vector<std::int64_t> &v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + std::to_string(v[i]);
    return s + "]";
}

// Per-episode audits shared by verify and run.
void audit_episode(Checks &c, const std::string &suite, const harness::RegretTrace &tr,
                   std::int64_t T) {
    c.add(suite, "packets_delivered", tr.packets == T,
          std::to_string(tr.packets) + " of " + std::to_string(T));
    if (!tr.rounds.empty()) {
        double sum = 0.0;
        for (const auto &r : tr.rounds)
            sum += r.loss - r.comparator_loss;
        c.add(suite, "regret_recomputed",
              std::abs(sum - tr.regret) <= 1e-9 * std::max(1.0, std::abs(tr.regret)),
              harness::fmt_double(sum) + " vs " + harness::fmt_double(tr.regret));
    }
    if (tr.decomposition_checked)
        c.add(suite, "decomposition", tr.decomposition_pass,
              harness::fmt_double(tr.decomposition_lhs) + " <= " +
                  harness::fmt_double(tr.decomposition_rhs));
    if (tr.dual_audit)
        c.add(suite, "dual_audit", tr.dual_audit->ok(), tr.dual_audit->detail);
    if (tr.skip_invariants)
        c.add(suite, "skip_invariants", tr.skip_invariants->all(), tr.skip_invariants->detail);
}

std::string out_dir(const config::ExperimentConfig &cfg, const Options &opt) {
    return opt.out ? *opt.out : cfg.out_dir;
}

} // namespace

timeline::DelaySchedule random_schedule(std::int64_t T, std::uint64_t seed,
                                        std::uint64_t index) {
    CounterRng rng = substream(seed, StreamTag::Validation, index);
    const auto style = rng.below(3);
    std::vector<std::int64_t> d(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t) {
        const auto room = static_cast<std::uint64_t>(T - 1 - t);
        std::uint64_t v = 0;
        if (style == 0)
            v = rng.below(room + 1);
        else if (style == 1)
            v = std::min<std::uint64_t>(rng.below(6), room);
        else
            v = rng.below(10) == 0 ? rng.below(room + 1) : 0;
        d[t] = static_cast<std::int64_t>(v);
    }
    return timeline::DelaySchedule(std::move(d));
}

int cmd_verify(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log) {
    Checks c;
    const auto &vc = cfg.verify;

    // Reference instance with known profile.
    {
        timeline::DelaySchedule s({4, 2, 0, 0, 0});
        auto p = timeline::profile(timeline::realize(s));
        inject(p, vc.inject_fault);
        c.add("reference", "sigma", p.sigma == std::vector<std::int64_t>{0, 1, 2, 2, 1},
              join_ints(p.sigma));
        c.add("reference", "d_star", p.d_star == std::vector<std::int64_t>{3, 1, 0, 1, 1},
              join_ints(p.d_star));
        c.add("reference", "sigma_star",
              p.sigma_star == std::vector<std::int64_t>{1, 2, 2, 1, 0}, join_ints(p.sigma_star));
        c.add("reference", "beta", p.beta == std::vector<std::int64_t>{3, 1, 0, 2, 4},
              join_ints(p.beta));
        for (const auto &ic : timeline::verify_identities(p).checks)
            c.add("reference", ic.name, ic.pass, ic.detail, ic.index);
    }

    // Randomized identity run.
    {
        const std::uint64_t seed = opt.seed ? *opt.seed : vc.seed;
        std::map<std::string, int> fails;
        std::map<std::string, std::string> first;
        int roundtrip_fail = 0;
        for (int i = 0; i < vc.random_schedules; ++i) {
            CounterRng rng = substream(seed, StreamTag::Validation, 1000000 + i);
            auto T = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(vc.max_T))) + 1;
            auto s = random_schedule(T, seed, static_cast<std::uint64_t>(i));
            auto order = timeline::realize(s);
            if (timeline::reconstruct_schedule(order).d != s.d)
                ++roundtrip_fail;
            for (const auto &ic : timeline::verify_identities(timeline::profile(order)).checks)
                if (!ic.pass && fails[ic.name]++ == 0)
                    first[ic.name] = "schedule " + std::to_string(i) + ": " + ic.detail;
        }
        c.add("random", "identities", fails.empty(),
              fails.empty() ? std::to_string(vc.random_schedules) + " schedules"
                            : fails.begin()->first + " (" + first.begin()->second + ")");
        c.add("random", "round_trip", roundtrip_fail == 0,
              std::to_string(roundtrip_fail) + " mismatches");
    }

    // Episode audits on short random schedules and on the configured episode.
    {
        harness::EpisodeOptions eo;
        eo.audit = true;
        eo.validate = false;
        eo.keep_rounds = true;
        wrappers::PlayerSpec skipped = cfg.player;
        skipped.composition.skip = true;
        const int episodes = std::min(vc.random_schedules, 50);
        const std::uint64_t seed = opt.seed ? *opt.seed : vc.seed;
        int bad = 0;
        std::string detail;
        for (int i = 0; i < episodes; ++i) {
            auto s = random_schedule(std::min<std::int64_t>(vc.max_T, 120), seed,
                                     500000 + static_cast<std::uint64_t>(i));
            harness::Environment env = cfg.env;
            env.T = s.horizon();
            env.delays.kind = harness::DelayKind::Fixed;
            env.delays.fixed = s;
            for (const wrappers::PlayerSpec *spec : std::array<const wrappers::PlayerSpec *, 2>{&cfg.player, &skipped}) {
                Checks sub;
                audit_episode(sub, "", harness::run_episode(env, *spec, seed + i, eo), env.T);
                if (sub.failed && bad++ == 0)
                    detail = "episode " + std::to_string(i) + ": " + sub.items.dump();
            }
        }
        c.add("episodes", "random_schedule_audits", bad == 0,
              bad ? detail : std::to_string(2 * episodes) + " episodes");

        eo.validate = true;
        auto tr = harness::run_episode(cfg.env, cfg.player, opt.seed ? *opt.seed : cfg.seed, eo);
        audit_episode(c, "configured", tr, cfg.env.T);
    }

    json rep{{"pass", c.failed == 0}, {"failed", c.failed}, {"checks", c.items}};
    report::write_all(out_dir(cfg, opt), {{"verify.json", rep.dump(2) + "\n"}});
    for (const auto &j : c.items)
        if (!j["pass"].get<bool>())
            log << "FAIL " << j["suite"].get<std::string>() << '/'
                << j["name"].get<std::string>()
                << (j.contains("detail") ? ": " + j["detail"].get<std::string>() : "") << '\n';
    log << (c.failed ? "verify: " + std::to_string(c.failed) + " check(s) failed"
                     : "verify: all " + std::to_string(c.items.size()) + " checks passed")
        << '\n';
    return c.failed ? CheckFailed : Ok;
}

int cmd_run(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log) {
    harness::EpisodeOptions eo;
    eo.audit = opt.audit;
    eo.keep_rounds = true;
    const std::uint64_t seed = opt.seed ? *opt.seed : cfg.seed;
    auto tr = harness::run_episode(cfg.env, cfg.player, seed, eo);
    Checks c;
    audit_episode(c, "run", tr, cfg.env.T);

    std::vector<report::OutputFile> files{
        {"episode.csv", harness::episodes_csv({harness::to_row(tr)})},
        {"schedule.csv", timeline::schedule_to_csv(tr.schedule)},
    };
    if (cfg.keep_rounds)
        files.push_back({"trace.csv", harness::rounds_csv(tr)});
    if (c.failed == 0)
        report::write_all(out_dir(cfg, opt), files);
    log << "run: T=" << tr.T << " seed=" << seed << " regret=" << harness::fmt_double(tr.regret)
        << " d_tot=" << tr.d_tot << " sigma_max=" << tr.sigma_max << " skips=" << tr.skips
        << " fingerprint=" << tr.fingerprint << '\n';
    for (const auto &j : c.items)
        if (!j["pass"].get<bool>())
            log << "FAIL " << j.dump() << '\n';
    return c.failed ? CheckFailed : Ok;
}

int cmd_sweep(const config::ExperimentConfig &cfg, const Options &opt, std::ostream &log) {
    harness::EpisodeOptions eo;
    eo.audit = opt.audit;
    const int threads = opt.threads ? *opt.threads : cfg.threads;
    std::vector<std::uint64_t> seeds = cfg.seeds;
    if (opt.seed) {
        seeds = harness::seed_list(*opt.seed, static_cast<int>(cfg.seeds.size()));
    }
    std::vector<report::OutputFile> files;
    std::vector<report::Series> curves;
    std::string fits = "curve,slope,intercept,residual\n";
    for (const auto &curve : cfg.curves) {
        auto res = harness::sweep(cfg.T_grid, seeds, cfg.env, curve.player, threads, eo);
        const std::string tag = report::slug(curve.name);
        files.push_back({"episodes_" + tag + ".csv", harness::episodes_csv(res.episodes)});
        files.push_back({"table_" + tag + ".csv", harness::table_csv(res.table)});
        report::Series s{tag, {}, {}};
        for (const auto &r : res.table) {
            s.x.push_back(static_cast<double>(r.T));
            s.y.push_back(r.mean);
        }
        curves.push_back(s);
        if (res.table.size() >= 2) {
            bool positive = std::all_of(res.table.begin(), res.table.end(),
                                        [](const harness::SweepRow &r) { return r.mean > 0; });
            if (positive) {
                auto f = harness::fit_scaling(res.table);
                fits += tag + ',' + harness::fmt_double(f.slope) + ',' +
                        harness::fmt_double(f.intercept) + ',' + harness::fmt_double(f.residual) +
                        '\n';
                log << "sweep: " << curve.name << " slope=" << harness::fmt_double(f.slope)
                    << '\n';
            } else {
                fits += tag + ",nan,nan,nan\n";
                log << "sweep: " << curve.name << " has non-positive mean regret; no fit\n";
            }
        }
    }
    files.push_back({"fits.csv", fits});
    files.push_back({"plot_regret.csv", report::series_csv(curves)});
    files.push_back({"plot_loglog.csv", report::series_csv(report::log_log(curves))});
    if (opt.svg)
        files.push_back({"regret_loglog.svg",
                         report::svg_chart(report::log_log(curves), "mean regret vs T",
                                           "ln T", "ln mean regret")});
    report::write_all(out_dir(cfg, opt), files);
    return Ok;
}

int cmd_report(const std::vector<std::string> &inputs, const Options &opt, std::ostream &log) {
    require(!inputs.empty(), "report: no input files");
    std::vector<report::Series> curves;
    for (const auto &path : inputs) {
        std::ifstream in(path);
        require(static_cast<bool>(in), "report: cannot open `" + path + "`");
        std::stringstream ss;
        ss << in.rdbuf();
        const std::string text = ss.str();
        if (text.rfind("curve,x,y", 0) == 0) {
            for (auto &s : report::parse_series_csv(text))
                curves.push_back(std::move(s));
        } else {
            std::string stem = std::filesystem::path(path).stem().string();
            if (stem.rfind("table_", 0) == 0)
                stem = stem.substr(6);
            curves.push_back(report::series_from_table(report::slug(stem), text));
        }
    }
    std::vector<report::OutputFile> files{
        {"plot_regret.csv", report::series_csv(curves)},
        {"plot_loglog.csv", report::series_csv(report::log_log(curves))},
    };
    if (opt.svg) {
        files.push_back({"regret.svg", report::svg_chart(curves, "mean regret vs T", "T",
                                                         "mean regret")});
        files.push_back({"regret_loglog.svg",
                         report::svg_chart(report::log_log(curves), "mean regret vs T",
                                           "ln T", "ln mean regret")});
    }
    const std::string dir = opt.out ? *opt.out : "out";
    report::write_all(dir, files);
    log << "report: " << curves.size() << " curve(s) written to " << dir << '\n';
    return Ok;
}

} // namespace delayoco::commands
