#include "delayoco/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace delayoco::config {

namespace {

[[noreturn]] void fail(const std::string &path, const std::string &msg) {
    throw ValidationError("config: " + path + ": " + msg);
}

std::string join(const std::string &a, const std::string &b) {
    return a.empty() ? b : a + "." + b;
}

void check_keys(const YAML::Node &n, const std::string &path,
                std::initializer_list<const char *> allowed) {
    if (!n)
        return;
    if (!n.IsMap())
        fail(path.empty() ? "<root>" : path, "expected a mapping");
    for (const auto &kv : n) {
        auto key = kv.first.as<std::string>();
        if (std::none_of(allowed.begin(), allowed.end(),
                         [&](const char *a) { return key == a; }))
            fail(join(path, key), "unknown key");
    }
}

template <class T> T scalar(const YAML::Node &n, const std::string &path) {
    try {
        return n.as<T>();
    } catch (const YAML::Exception &) {
        fail(path, "bad value `" + (n.IsScalar() ? n.Scalar() : std::string("<non-scalar>")) +
                       "`");
    }
}

template <class T>
T get(const YAML::Node &parent, const std::string &path, const char *key, T dflt) {
    YAML::Node n = parent[key];
    if (!n)
        return dflt;
    return scalar<T>(n, join(path, key));
}

template <class T>
std::optional<T> get_opt(const YAML::Node &parent, const std::string &path, const char *key) {
    YAML::Node n = parent[key];
    if (!n)
        return std::nullopt;
    return scalar<T>(n, join(path, key));
}

double get_double(const YAML::Node &parent, const std::string &path, const char *key,
                  double dflt) {
    double v = get<double>(parent, path, key, dflt);
    if (!std::isfinite(v))
        fail(join(path, key), "must be finite");
    return v;
}

Vector vec(const YAML::Node &n, const std::string &path, int dim = -1) {
    if (!n.IsSequence())
        fail(path, "expected a list of numbers");
    Vector v(static_cast<Eigen::Index>(n.size()));
    for (std::size_t i = 0; i < n.size(); ++i) {
        v[static_cast<Eigen::Index>(i)] = scalar<double>(n[i], path + "[" + std::to_string(i) + "]");
        if (!std::isfinite(v[static_cast<Eigen::Index>(i)]))
            fail(path, "entries must be finite");
    }
    if (dim >= 0 && v.size() != dim)
        fail(path, "has length " + std::to_string(v.size()) + ", domain dimension is " +
                       std::to_string(dim));
    return v;
}

Vector vec_or(const YAML::Node &parent, const std::string &path, const char *key, int dim,
              Vector dflt) {
    YAML::Node n = parent[key];
    if (!n)
        return dflt;
    return vec(n, join(path, key), dim);
}

geometry::Domain parse_domain(const YAML::Node &n) {
    const std::string p = "domain";
    if (!n)
        fail(p, "missing");
    check_keys(n, p, {"kind", "dim", "radius", "center", "lo", "hi", "D", "r", "R"});
    std::string kind = get<std::string>(n, p, "kind", "ball");
    geometry::Radii declared;
    declared.D = get_opt<double>(n, p, "D");
    declared.r = get_opt<double>(n, p, "r");
    declared.R = get_opt<double>(n, p, "R");
    try {
        if (kind == "ball") {
            double radius = get_double(n, p, "radius", 1.0);
            if (n["center"]) {
                Vector c = vec(n["center"], p + ".center");
                if (n["dim"] && get<int>(n, p, "dim", 0) != c.size())
                    fail(p + ".center", "length disagrees with domain.dim");
                return geometry::Domain::ball(c, radius, declared);
            }
            int dim = get<int>(n, p, "dim", 0);
            if (dim < 1)
                fail(p + ".dim", "must be a positive integer");
            return geometry::Domain::ball(dim, radius, declared);
        }
        if (kind == "box") {
            if (!n["lo"] || !n["hi"])
                fail(p, "box needs lo and hi");
            Vector lo = vec(n["lo"], p + ".lo");
            Vector hi = vec(n["hi"], p + ".hi", static_cast<int>(lo.size()));
            return geometry::Domain::box(lo, hi, declared);
        }
    } catch (const ValidationError &e) {
        std::string m = e.what();
        if (m.rfind("config:", 0) == 0)
            throw;
        fail(p, m);
    }
    fail(p + ".kind", "unknown domain kind `" + kind + "` (ball | box)");
}

std::vector<Vector> vec_list(const YAML::Node &n, const std::string &path, int dim) {
    if (!n.IsSequence())
        fail(path, "expected a list of vectors");
    std::vector<Vector> out;
    for (std::size_t i = 0; i < n.size(); ++i)
        out.push_back(vec(n[i], path + "[" + std::to_string(i) + "]", dim));
    return out;
}

losses::Component parse_component(const YAML::Node &n, const std::string &p, int dim) {
    std::string kind = get<std::string>(n, p, "kind", "");
    if (kind == "linear") {
        check_keys(n, p, {"kind", "mean", "noise", "fixed"});
        losses::LinearSpec s;
        s.mean = vec_or(n, p, "mean", dim, Vector::Zero(dim));
        s.noise = get_double(n, p, "noise", 0.0);
        if (s.noise < 0)
            fail(p + ".noise", "must be non-negative");
        if (n["fixed"])
            s.fixed = vec_list(n["fixed"], p + ".fixed", dim);
        return s;
    }
    if (kind == "quadratic") {
        check_keys(n, p, {"kind", "lambda", "center", "spread", "b_mean", "b_noise", "fixed_theta"});
        losses::QuadraticSpec s;
        s.lambda = get_double(n, p, "lambda", 1.0);
        if (s.lambda <= 0)
            fail(p + ".lambda", "must be positive");
        s.center = vec_or(n, p, "center", dim, Vector::Zero(dim));
        s.spread = get_double(n, p, "spread", 0.0);
        s.b_mean = vec_or(n, p, "b_mean", dim, Vector());
        s.b_noise = get_double(n, p, "b_noise", 0.0);
        if (s.spread < 0 || s.b_noise < 0)
            fail(p, "spread and b_noise must be non-negative");
        if (n["fixed_theta"])
            s.fixed_theta = vec_list(n["fixed_theta"], p + ".fixed_theta", dim);
        return s;
    }
    if (kind == "piecewise") {
        check_keys(n, p, {"kind", "scale", "direction", "offset", "spread", "width", "fixed_theta"});
        losses::PiecewiseSpec s;
        s.scale = get_double(n, p, "scale", 1.0);
        if (s.scale <= 0)
            fail(p + ".scale", "must be positive");
        Vector e1 = Vector::Zero(dim);
        e1[0] = 1.0;
        s.direction = vec_or(n, p, "direction", dim, e1);
        if (s.direction.norm() == 0)
            fail(p + ".direction", "must be non-zero");
        s.offset = get_double(n, p, "offset", 0.0);
        s.spread = get_double(n, p, "spread", 0.0);
        s.width = get_double(n, p, "width", 0.0);
        if (s.spread < 0)
            fail(p + ".spread", "must be non-negative");
        if (n["fixed_theta"]) {
            const auto &f = n["fixed_theta"];
            if (!f.IsSequence())
                fail(p + ".fixed_theta", "expected a list of numbers");
            for (std::size_t i = 0; i < f.size(); ++i)
                s.fixed_theta.push_back(
                    scalar<double>(f[i], p + ".fixed_theta[" + std::to_string(i) + "]"));
        }
        return s;
    }
    fail(p + ".kind", "unknown loss kind `" + kind + "` (linear | quadratic | piecewise)");
}

losses::LossFamily parse_losses(const YAML::Node &n, const geometry::Domain &K) {
    const std::string p = "losses";
    if (!n)
        fail(p, "missing");
    check_keys(n, p, {"seed", "G", "M", "lambda", "nu", "components"});
    const YAML::Node comps = n["components"];
    if (!comps || !comps.IsSequence() || comps.size() == 0)
        fail(p + ".components", "need a non-empty list");
    std::vector<losses::Component> cs;
    for (std::size_t i = 0; i < comps.size(); ++i)
        cs.push_back(parse_component(comps[i], p + ".components[" + std::to_string(i) + "]",
                                     K.dim()));
    losses::Constants c;
    try {
        c = losses::analytic_constants(K, cs);
    } catch (const ValidationError &e) {
        fail(p + ".components", e.what());
    }
    c.G = get_double(n, p, "G", c.G);
    c.M = get_double(n, p, "M", c.M);
    c.lambda = get_double(n, p, "lambda", c.lambda);
    if (c.G <= 0)
        fail(p + ".G", "must be positive");
    if (c.M < 0)
        fail(p + ".M", "must be non-negative");
    if (c.lambda < 0)
        fail(p + ".lambda", "must be non-negative");
    if (auto nu = get_opt<double>(n, p, "nu")) {
        double want = c.M / (c.G * K.r());
        if (std::abs(*nu - want) > 1e-9 * std::max(1.0, want))
            fail(p + ".nu", "declared " + harness::fmt_double(*nu) + " but M/(G r) = " +
                                harness::fmt_double(want));
    }
    auto seed = get<std::uint64_t>(n, p, "seed", 0);
    try {
        return losses::LossFamily(K, std::move(cs), c, seed);
    } catch (const ValidationError &e) {
        fail(p, e.what());
    }
}

harness::DelayGenerator parse_delays(const YAML::Node &n, const std::string &base_dir) {
    const std::string p = "delays";
    harness::DelayGenerator g;
    if (!n)
        return g;
    check_keys(n, p, {"kind", "d", "dmax", "p", "seed", "file", "schedule"});
    std::string kind = get<std::string>(n, p, "kind", "zero");
    try {
        g.kind = harness::parse_delay_kind(kind);
    } catch (const ValidationError &e) {
        fail(p + ".kind", e.what());
    }
    g.d = get<std::int64_t>(n, p, "d", 0);
    g.dmax = get<std::int64_t>(n, p, "dmax", 0);
    g.p = get_double(n, p, "p", 0.5);
    g.seed = get<std::uint64_t>(n, p, "seed", 0);
    if (g.d < 0)
        fail(p + ".d", "must be non-negative");
    if (g.dmax < 0)
        fail(p + ".dmax", "must be non-negative");
    if (!(g.p > 0 && g.p <= 1))
        fail(p + ".p", "must lie in (0, 1]");
    if (g.kind == harness::DelayKind::Fixed) {
        try {
            if (n["file"]) {
                std::filesystem::path f = get<std::string>(n, p, "file", "");
                if (f.is_relative())
                    f = std::filesystem::path(base_dir) / f;
                std::ifstream in(f);
                if (!in)
                    fail(p + ".file", "cannot open " + f.string());
                std::stringstream ss;
                ss << in.rdbuf();
                g.fixed = timeline::schedule_from_csv(ss.str());
            } else if (n["schedule"]) {
                const auto &s = n["schedule"];
                if (!s.IsSequence())
                    fail(p + ".schedule", "expected a list of delays");
                std::vector<std::int64_t> d;
                for (std::size_t i = 0; i < s.size(); ++i)
                    d.push_back(scalar<std::int64_t>(s[i], p + ".schedule[" + std::to_string(i) + "]"));
                g.fixed = timeline::DelaySchedule(std::move(d));
            } else {
                fail(p, "kind file needs `file` or `schedule`");
            }
        } catch (const ValidationError &e) {
            std::string m = e.what();
            if (m.rfind("config:", 0) == 0)
                throw;
            fail(p, m);
        }
    }
    return g;
}

wrappers::PlayerSpec parse_player(const YAML::Node &n, const std::string &p, int dim) {
    if (!n)
        fail(p, "missing");
    check_keys(n, p, {"name", "compose", "schedule", "smoothing", "smoothing_value", "z1"});
    wrappers::PlayerSpec s;
    try {
        s.composition = wrappers::parse_composition(get<std::string>(n, p, "compose", "oco(pftrl)"));
    } catch (const ValidationError &e) {
        fail(p + ".compose", e.what());
    }
    const auto model = s.composition.model;
    std::string dflt_schedule = model == wrappers::FeedbackModel::Value       ? "bco"
                                : model == wrappers::FeedbackModel::TwoValues ? "two_point"
                                                                              : "general";
    try {
        s.schedule = olo::parse_schedule(get<std::string>(n, p, "schedule", dflt_schedule));
    } catch (const ValidationError &e) {
        fail(p + ".schedule", e.what());
    }
    std::string dflt_smooth =
        model == wrappers::FeedbackModel::TwoValues ? "twopoint_convex" : "bco_convex";
    try {
        s.smoothing.kind = estimators::parse_smoothing(get<std::string>(n, p, "smoothing", dflt_smooth));
    } catch (const ValidationError &e) {
        fail(p + ".smoothing", e.what());
    }
    s.smoothing.value = get_double(n, p, "smoothing_value", 0.0);
    if (s.smoothing.value < 0)
        fail(p + ".smoothing_value", "must be non-negative");
    if (n["z1"])
        s.z1 = vec(n["z1"], p + ".z1", dim);
    if (s.schedule.kind == olo::ScheduleKind::Bco && model != wrappers::FeedbackModel::Value)
        fail(p + ".schedule", "bco schedule needs a bco(...) composition");
    if (s.schedule.kind == olo::ScheduleKind::TwoPoint &&
        model != wrappers::FeedbackModel::TwoValues)
        fail(p + ".schedule", "two_point schedule needs a two_point(...) composition");
    return s;
}

void cross_check(const wrappers::PlayerSpec &s, const std::string &p,
                 const losses::LossFamily &f) {
    if (s.schedule.kind == olo::ScheduleKind::StronglyConvex && !(f.lambda() > 0))
        fail(p + ".schedule", "strongly_convex schedule requires losses.lambda > 0");
    if (s.composition.model != wrappers::FeedbackModel::Gradient && !(f.M() > 0))
        fail(p + ".compose", "bandit wrappers need losses.M > 0");
    if (s.z1 && !f.domain().contains(*s.z1, 1e-12))
        fail(p + ".z1", "outside the domain");
}

std::vector<std::int64_t> int_list(const YAML::Node &n, const std::string &p) {
    if (!n.IsSequence() || n.size() == 0)
        fail(p, "need a non-empty list");
    std::vector<std::int64_t> v;
    for (std::size_t i = 0; i < n.size(); ++i) {
        auto x = scalar<std::int64_t>(n[i], p + "[" + std::to_string(i) + "]");
        if (x < 1)
            fail(p + "[" + std::to_string(i) + "]", "must be at least 1");
        v.push_back(x);
    }
    return v;
}

} // namespace

ExperimentConfig parse_config(const std::string &yaml_text, const std::string &base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::Exception &e) {
        throw ValidationError("config: <root>: YAML syntax error: " + std::string(e.what()));
    }
    if (!root || root.IsNull())
        root = YAML::Node(YAML::NodeType::Map);
    check_keys(root, "", {"seed", "T", "threads", "domain", "losses", "delays", "player",
                          "players", "sweep", "comparator", "output", "verify"});

    geometry::Domain K = parse_domain(root["domain"]);
    losses::LossFamily fam = parse_losses(root["losses"], K);
    harness::DelayGenerator delays = parse_delays(root["delays"], base_dir);

    std::int64_t T = get<std::int64_t>(root, "", "T", 1000);
    if (T < 1)
        fail("T", "must be at least 1");
    if (delays.kind == harness::DelayKind::Fixed && delays.fixed.horizon() != T)
        fail("delays", "schedule horizon " + std::to_string(delays.fixed.horizon()) +
                           " differs from T = " + std::to_string(T));

    losses::ComparatorOptions copt;
    if (const auto c = root["comparator"]) {
        check_keys(c, "comparator", {"max_iterations", "eps_scale"});
        copt.max_iterations = get<std::int64_t>(c, "comparator", "max_iterations", copt.max_iterations);
        copt.eps_scale = get_double(c, "comparator", "eps_scale", copt.eps_scale);
        if (copt.max_iterations < 1)
            fail("comparator.max_iterations", "must be at least 1");
        if (!(copt.eps_scale > 0))
            fail("comparator.eps_scale", "must be positive");
    }

    wrappers::PlayerSpec player = parse_player(root["player"], "player", K.dim());
    cross_check(player, "player", fam);

    std::vector<Curve> curves;
    if (const auto ps = root["players"]) {
        if (!ps.IsSequence() || ps.size() == 0)
            fail("players", "need a non-empty list");
        for (std::size_t i = 0; i < ps.size(); ++i) {
            std::string p = "players[" + std::to_string(i) + "]";
            Curve c;
            c.player = parse_player(ps[i], p, K.dim());
            cross_check(c.player, p, fam);
            c.name = get<std::string>(ps[i], p, "name", wrappers::to_string(c.player.composition));
            curves.push_back(std::move(c));
        }
    } else {
        curves.push_back({wrappers::to_string(player.composition), player});
    }

    std::uint64_t seed = get<std::uint64_t>(root, "", "seed", 1);
    std::vector<std::int64_t> T_grid{T};
    std::vector<std::uint64_t> seeds{seed};
    if (const auto sw = root["sweep"]) {
        check_keys(sw, "sweep", {"T_grid", "reps", "seeds"});
        if (sw["T_grid"])
            T_grid = int_list(sw["T_grid"], "sweep.T_grid");
        if (sw["seeds"]) {
            seeds.clear();
            for (auto x : int_list(sw["seeds"], "sweep.seeds"))
                seeds.push_back(static_cast<std::uint64_t>(x));
        } else {
            int reps = get<int>(sw, "sweep", "reps", 1);
            if (reps < 1)
                fail("sweep.reps", "must be at least 1");
            seeds = harness::seed_list(seed, reps);
        }
        if (delays.kind == harness::DelayKind::Fixed)
            for (auto t : T_grid)
                if (t != T)
                    fail("sweep.T_grid", "a fixed delay schedule only covers T = " +
                                             std::to_string(T));
    }

    std::string out_dir = "out";
    bool keep_rounds = true;
    if (const auto o = root["output"]) {
        check_keys(o, "output", {"dir", "keep_rounds"});
        out_dir = get<std::string>(o, "output", "dir", out_dir);
        keep_rounds = get<bool>(o, "output", "keep_rounds", keep_rounds);
    }

    VerifyConfig vc;
    if (const auto v = root["verify"]) {
        check_keys(v, "verify", {"random_schedules", "max_T", "seed", "inject_fault"});
        vc.random_schedules = get<int>(v, "verify", "random_schedules", vc.random_schedules);
        vc.max_T = get<std::int64_t>(v, "verify", "max_T", vc.max_T);
        vc.seed = get<std::uint64_t>(v, "verify", "seed", vc.seed);
        vc.inject_fault = get<std::string>(v, "verify", "inject_fault", "");
        if (vc.random_schedules < 0)
            fail("verify.random_schedules", "must be non-negative");
        if (vc.max_T < 1)
            fail("verify.max_T", "must be at least 1");
        static const char *faults[] = {"", "none", "d", "sigma", "d_star", "sigma_star", "beta"};
        if (std::find(std::begin(faults), std::end(faults), vc.inject_fault) == std::end(faults))
            fail("verify.inject_fault",
                 "unknown fault `" + vc.inject_fault + "` (d | sigma | d_star | sigma_star | beta)");
        if (vc.inject_fault == "none")
            vc.inject_fault.clear();
    }

    int threads = get<int>(root, "", "threads", 1);
    if (threads < 1)
        fail("threads", "must be at least 1");

    return ExperimentConfig{
        .env = harness::Environment{std::move(fam), std::move(delays), T, copt},
        .player = std::move(player),
        .curves = std::move(curves),
        .T_grid = std::move(T_grid),
        .seeds = std::move(seeds),
        .seed = seed,
        .out_dir = out_dir,
        .threads = threads,
        .keep_rounds = keep_rounds,
        .verify = vc,
    };
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("config: cannot open `" + path + "`");
    std::stringstream ss;
    ss << in.rdbuf();
    auto dir = std::filesystem::path(path).parent_path();
    return parse_config(ss.str(), dir.empty() ? "." : dir.string());
}

ExperimentConfig default_config() {
    return parse_config(R"yaml(
seed: 1
T: 1000
domain: {kind: ball, dim: 3, radius: 1.0}
losses:
  seed: 7
  components:
    - {kind: linear, mean: [0.1, 0, 0], noise: 0.9}
delays: {kind: uniform, dmax: 20, seed: 3}
player: {compose: "oco(pftrl)", schedule: general}
sweep: {T_grid: [256, 512, 1024], reps: 3}
)yaml");
}

} // namespace delayoco::config
