#include "delayoco/harness.hpp"

#include "delayoco/rng.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace delayoco::harness {

namespace {

std::int64_t isqrt(std::int64_t n) {
    auto r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
    while (r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

std::uint64_t fnv1a(const std::string &s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

timeline::DelaySchedule spike_schedule(std::int64_t T) {
    require(T > 0, "spike: T must be positive");
    const std::int64_t head = isqrt(T);
    const std::int64_t cap = (T + 1) / 2;
    std::vector<std::int64_t> d(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t) {
        std::int64_t room = T - 1 - t;
        d[t] = t < head ? std::min(room, cap) : std::min<std::int64_t>(room, 1);
    }
    return timeline::DelaySchedule(std::move(d));
}

timeline::DelaySchedule DelayGenerator::generate(std::int64_t T,
                                                 std::uint64_t episode_seed) const {
    require(T > 0, "delays: T must be positive");
    if (kind == DelayKind::Spike)
        return spike_schedule(T);
    if (kind == DelayKind::Fixed) {
        require(fixed.horizon() == T, "delays: fixed schedule has horizon " +
                                          std::to_string(fixed.horizon()) +
                                          ", episode has T = " + std::to_string(T));
        return fixed;
    }
    const std::uint64_t key = derive_key(seed, episode_seed);
    std::vector<std::int64_t> d(static_cast<std::size_t>(T), 0);
    for (std::int64_t t = 0; t < T; ++t) {
        const std::int64_t room = T - 1 - t;
        std::int64_t v = 0;
        switch (kind) {
        case DelayKind::Zero:
            break;
        case DelayKind::Constant:
            v = this->d;
            break;
        case DelayKind::Uniform: {
            CounterRng rng = substream(key, StreamTag::Delays, static_cast<std::uint64_t>(t));
            v = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(dmax) + 1));
            break;
        }
        case DelayKind::Geometric: {
            CounterRng rng = substream(key, StreamTag::Delays, static_cast<std::uint64_t>(t));
            double u = rng.uniform_open();
            double g = p >= 1.0 ? 0.0 : std::floor(std::log(u) / std::log1p(-p));
            v = g > static_cast<double>(room) ? room : static_cast<std::int64_t>(g);
            break;
        }
        default:
            break;
        }
        d[t] = std::min(v, room);
    }
    return timeline::DelaySchedule(std::move(d));
}

DelayKind parse_delay_kind(const std::string &name) {
    if (name == "zero")
        return DelayKind::Zero;
    if (name == "constant")
        return DelayKind::Constant;
    if (name == "uniform")
        return DelayKind::Uniform;
    if (name == "spike")
        return DelayKind::Spike;
    if (name == "geometric")
        return DelayKind::Geometric;
    if (name == "file" || name == "fixed")
        return DelayKind::Fixed;
    throw ValidationError("unknown delay kind `" + name +
                          "` (zero | constant | uniform | spike | geometric | file)");
}

std::string to_string(DelayKind k) {
    switch (k) {
    case DelayKind::Zero:
        return "zero";
    case DelayKind::Constant:
        return "constant";
    case DelayKind::Uniform:
        return "uniform";
    case DelayKind::Spike:
        return "spike";
    case DelayKind::Geometric:
        return "geometric";
    case DelayKind::Fixed:
        break;
    }
    return "file";
}

wrappers::WrapperContext make_context(const Environment &env, std::uint64_t seed,
                                      const EpisodeOptions &opt) {
    const auto &f = env.family;
    const auto &K = f.domain();
    wrappers::WrapperContext ctx{K, {}, seed, opt.audit, opt.diagnostics};
    ctx.params.D = K.D();
    ctx.params.G = f.G();
    ctx.params.lambda = f.lambda();
    ctx.params.nu = f.nu();
    ctx.params.r = K.r();
    ctx.params.k = K.dim();
    return ctx;
}

wrappers::PlayerSpec complete_spec(wrappers::PlayerSpec spec, const Environment &env) {
    const auto &f = env.family;
    spec.smoothing.r = f.domain().r();
    spec.smoothing.nu = f.nu();
    spec.smoothing.k = f.dim();
    spec.smoothing.horizon = env.T;
    if (spec.schedule.kind == olo::ScheduleKind::StronglyConvex)
        require(f.lambda() > 0, "player: strongly_convex schedule requires lambda > 0");
    return spec;
}

RegretTrace run_episode(const Environment &env, const wrappers::PlayerSpec &player_spec,
                        std::uint64_t seed, const EpisodeOptions &opt) {
    const std::int64_t T = env.T;
    require(T > 0, "episode: T must be positive");
    const losses::LossFamily fam =
        env.family.with_seed(derive_key(env.family.seed(), seed));
    const auto &K = fam.domain();
    if (opt.validate)
        losses::validate_constants(fam, T, 10000, seed);

    RegretTrace tr;
    tr.seed = seed;
    tr.T = T;
    tr.schedule = env.delays.generate(T, seed);

    losses::Comparator cmp = losses::best_in_hindsight(fam, T, env.comparator);
    tr.eps_opt = env.comparator.eps_scale * static_cast<double>(T) * fam.G() * K.D();
    if (!cmp.converged)
        throw CheckFailure("comparator did not converge in " +
                           std::to_string(cmp.iterations) +
                           " iterations; gradient-mapping norm " +
                           fmt_double(cmp.grad_map_norm));
    tr.x_star = cmp.x;
    tr.comparator_converged = true;

    wrappers::PlayerSpec spec = complete_spec(player_spec, env);
    wrappers::WrapperContext ctx = make_context(env, seed, opt);
    std::unique_ptr<wrappers::Player> player = wrappers::make_player(spec, ctx);
    const auto model = player->model();

    {
        std::ostringstream fp;
        fp << wrappers::to_string(spec.composition) << '|'
           << olo::to_string(spec.schedule) << '|'
           << estimators::to_string(spec.smoothing.kind) << '|' << fam.kind() << '|'
           << fmt_double(fam.G()) << ',' << fmt_double(fam.M()) << ','
           << fmt_double(fam.lambda()) << '|' << env.family.seed() << '|'
           << to_string(env.delays.kind) << ':' << env.delays.d << ':'
           << env.delays.dmax << ':' << fmt_double(env.delays.p) << ':'
           << env.delays.seed << '|' << T << '|' << seed;
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a(fp.str())));
        tr.fingerprint = buf;
    }

    std::vector<std::vector<std::int64_t>> arrivals(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t)
        arrivals[static_cast<std::size_t>(t + tr.schedule.d[t])].push_back(t);
    std::vector<wrappers::Payload> payloads(static_cast<std::size_t>(T));
    if (opt.keep_rounds)
        tr.rounds.reserve(static_cast<std::size_t>(T));

    for (std::int64_t t = 0; t < T; ++t) {
        wrappers::Play play = player->predict(t);
        if (!K.contains(play.x, 1e-9) || (play.x2 && !K.contains(*play.x2, 1e-9)))
            throw CheckFailure("prediction outside the domain at round " +
                               std::to_string(t + 1));
        losses::RoundLoss L = fam.round(t);
        double loss = 0.0;
        auto &slot = payloads[static_cast<std::size_t>(t)];
        switch (model) {
        case wrappers::FeedbackModel::Gradient:
            loss = L.value(play.x);
            slot = L.grad(play.x);
            break;
        case wrappers::FeedbackModel::Value:
            loss = L.value(play.x);
            slot = loss;
            break;
        case wrappers::FeedbackModel::TwoValues: {
            double f1 = L.value(play.x), f2 = L.value(*play.x2);
            loss = 0.5 * (f1 + f2);
            slot = std::make_pair(f1, f2);
            break;
        }
        }
        double comp = L.value(cmp.x);
        tr.total_loss += loss;
        tr.comparator_total += comp;
        const auto &arr = arrivals[static_cast<std::size_t>(t)];
        for (std::int64_t s : arr) {
            player->receive({s, std::move(payloads[static_cast<std::size_t>(s)]), t});
            payloads[static_cast<std::size_t>(s)] = wrappers::Payload{};
            ++tr.packets;
        }
        if (opt.keep_rounds)
            tr.rounds.push_back({std::move(play.x), std::move(play.x2), loss, comp,
                                 static_cast<std::int32_t>(arr.size())});
    }
    player->finish();
    tr.regret = tr.total_loss - tr.comparator_total;

    const auto &core = player->core();
    const auto &ledger = core.base().ledger();
    tr.lin_regret = ledger.linear_regret(cmp.x);
    tr.drift = ledger.drift();
    tr.h_eta = ledger.h_eta();
    tr.updates = ledger.updates();
    tr.d_tot = tr.schedule.total();
    timeline::DelayProfile prof = timeline::profile(timeline::realize(tr.schedule));
    tr.sigma_max = prof.sigma_max();
    tr.dprime_tot = tr.d_tot;
    if (model != wrappers::FeedbackModel::Gradient) {
        tr.delta_min = INFINITY;
        for (std::int64_t t = 0; t < T; ++t) {
            tr.delta_tot += core.delta_of(t);
            tr.delta_min = std::min(tr.delta_min, core.delta_of(t));
        }
    }

    const auto *skip = dynamic_cast<const wrappers::SkipWrapper *>(player.get());
    if (skip) {
        tr.skip = skip->stats();
        tr.skips = static_cast<std::int64_t>(skip->stats().skipped.size());
        tr.dprime_tot = skip->stats().dprime_total();
        tr.skip_invariants = wrappers::check_skip_invariants(skip->stats(), tr.schedule);
    }
    if (opt.audit) {
        wrappers::DualAudit a = wrappers::audit_duals(core);
        if (!skip && timeline::reconstruct_schedule(core.event_log()).d != tr.schedule.d) {
            a.online_matches_offline = false;
            if (a.detail.empty())
                a.detail = "wrapper event log disagrees with the schedule";
        }
        tr.dual_audit = a;
    }

    if (!skip && model == wrappers::FeedbackModel::Gradient) {
        const auto &z = ledger.z_history();
        const double G = fam.G();
        for (std::int64_t n = 0; n < T; ++n) {
            std::int64_t t = prof.rho[n];
            const Vector &zl = z[static_cast<std::size_t>(n - prof.d_star[t])];
            const Vector &zn = z[static_cast<std::size_t>(n)];
            losses::RoundLoss L = fam.round(t);
            double fs = L.value(cmp.x);
            tr.decomposition_lhs += L.value(zl) - fs;
            tr.decomposition_rhs += L.value(zn) - fs + G * (zn - zl).norm();
        }
        tr.decomposition_checked = true;
        tr.decomposition_pass = tr.decomposition_lhs <= tr.decomposition_rhs + 1e-6;
    }
    if (opt.diagnostics)
        tr.ledger = ledger;
    return tr;
}

EpisodeRow to_row(const RegretTrace &t) {
    return {t.T,      t.seed,       t.regret, t.d_tot,      t.sigma_max,
            t.skips,  t.dprime_tot, t.drift,  t.lin_regret, t.h_eta};
}

std::vector<std::uint64_t> seed_list(std::uint64_t base, int reps) {
    require(reps >= 1, "sweep: reps must be at least 1");
    std::vector<std::uint64_t> s;
    for (int i = 0; i < reps; ++i)
        s.push_back(base + static_cast<std::uint64_t>(i));
    return s;
}

SweepResult sweep(const std::vector<std::int64_t> &T_grid,
                  const std::vector<std::uint64_t> &seeds, const Environment &env,
                  const wrappers::PlayerSpec &player, int threads,
                  const EpisodeOptions &opt) {
    require(!T_grid.empty() && !seeds.empty(), "sweep: empty T grid or seed list");
    struct Task {
        std::int64_t T;
        std::uint64_t seed;
    };
    std::vector<Task> tasks;
    for (auto T : T_grid)
        for (auto s : seeds)
            tasks.push_back({T, s});
    std::vector<EpisodeRow> rows(tasks.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto work = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= tasks.size())
                return;
            try {
                Environment e = env;
                e.T = tasks[i].T;
                rows[i] = to_row(run_episode(e, player, tasks[i].seed, opt));
            } catch (...) {
                std::lock_guard<std::mutex> lk(err_mu);
                if (!err)
                    err = std::current_exception();
                next = tasks.size();
                return;
            }
        }
    };
    threads = std::max(1, threads);
    if (threads == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i)
            pool.emplace_back(work);
        for (auto &th : pool)
            th.join();
    }
    if (err)
        std::rethrow_exception(err);

    SweepResult out;
    out.episodes = rows;
    std::sort(out.episodes.begin(), out.episodes.end(),
              [](const EpisodeRow &a, const EpisodeRow &b) {
                  return a.T != b.T ? a.T < b.T : a.seed < b.seed;
              });
    std::map<std::int64_t, std::vector<double>> by_T;
    for (const auto &r : out.episodes)
        by_T[r.T].push_back(r.regret);
    for (const auto &[T, v] : by_T) {
        SweepRow row;
        row.T = T;
        row.n = static_cast<std::int64_t>(v.size());
        double sum = 0.0;
        for (double x : v)
            sum += x;
        row.mean = sum / static_cast<double>(v.size());
        double ss = 0.0;
        for (double x : v)
            ss += (x - row.mean) * (x - row.mean);
        row.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
        row.min = *std::min_element(v.begin(), v.end());
        row.max = *std::max_element(v.begin(), v.end());
        out.table.push_back(row);
    }
    return out;
}

ScalingFit fit_scaling(const std::vector<double> &T, const std::vector<double> &y) {
    require(T.size() == y.size() && T.size() >= 2,
            "fit_scaling: need at least two matching points");
    const auto n = static_cast<double>(T.size());
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < T.size(); ++i) {
        require(T[i] > 0 && y[i] > 0, "fit_scaling: T and mean regret must be positive "
                                      "(point " + std::to_string(i) + ")");
        lx.push_back(std::log(T[i]));
        ly.push_back(std::log(y[i]));
    }
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    require(sxx > 0, "fit_scaling: T values must differ");
    ScalingFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double rss = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
        double e = ly[i] - (f.intercept + f.slope * lx[i]);
        rss += e * e;
    }
    f.residual = std::sqrt(rss / n);
    return f;
}

ScalingFit fit_scaling(const std::vector<SweepRow> &table) {
    std::vector<double> T, y;
    for (const auto &r : table) {
        T.push_back(static_cast<double>(r.T));
        y.push_back(r.mean);
    }
    return fit_scaling(T, y);
}

double bound_oco_general(double G, double D, double d_tot, double T) {
    return 6.0 * G * D * (std::sqrt(d_tot) + std::sqrt(T));
}

double bound_sc_pftrl(double G, double lambda, double sigma_max, double d_tot, double T) {
    const double lg = std::log(std::numbers::e * T);
    return 9.0 * G * G / lambda * (std::min(sigma_max * lg, 2.0 * std::sqrt(d_tot)) + lg);
}

double bound_sc_omd(double G, double lambda, double sigma_max, double T) {
    return 3.0 * G * G / lambda * (sigma_max + 1.0) * std::log(std::numbers::e * T);
}

double bound_bco_convex(double G, double D, double T, double d_tot, double nu, int k,
                        double r, double delta_T, double delta_tot) {
    // D^2/eta_T + 5G^2 sum + GD H + 6GD delta_tot/r with the three
    // component bounds 1, 2D/G and 8 times the same bracket
    const double q = std::sqrt(T + d_tot) + nu * k * r / delta_T * std::sqrt(T);
    return G * D * (19.0 * q + 6.0 * delta_tot / r);
}

double bound_2p_convex(double G, double D, double T, double d_tot, int k, double r,
                       double delta_tot, double moment_c) {
    const double q = std::sqrt(d_tot) + std::sqrt(T * k);
    return G * D * ((1.0 + 10.0 * (moment_c + 1.0) + 4.0) * q + 7.0 * delta_tot / r);
}

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string episodes_csv(const std::vector<EpisodeRow> &rows) {
    std::string s = "T,seed,regret,d_tot,sigma_max,skips,dprime_tot,drift,lin_regret,H_eta\n";
    for (const auto &r : rows) {
        s += std::to_string(r.T) + ',' + std::to_string(r.seed) + ',' +
             fmt_double(r.regret) + ',' + std::to_string(r.d_tot) + ',' +
             std::to_string(r.sigma_max) + ',' + std::to_string(r.skips) + ',' +
             std::to_string(r.dprime_tot) + ',' + fmt_double(r.drift) + ',' +
             fmt_double(r.lin_regret) + ',' + fmt_double(r.h_eta) + '\n';
    }
    return s;
}

std::string table_csv(const std::vector<SweepRow> &rows) {
    std::string s = "T,mean,std,min,max,n\n";
    for (const auto &r : rows)
        s += std::to_string(r.T) + ',' + fmt_double(r.mean) + ',' + fmt_double(r.std) +
             ',' + fmt_double(r.min) + ',' + fmt_double(r.max) + ',' +
             std::to_string(r.n) + '\n';
    return s;
}

std::string rounds_csv(const RegretTrace &t) {
    std::string s = "t,loss,comparator_loss,cum_regret,arrivals";
    const int k = t.rounds.empty() ? 0 : static_cast<int>(t.rounds.front().x.size());
    const bool two = !t.rounds.empty() && t.rounds.front().x2.has_value();
    for (int i = 0; i < k; ++i)
        s += ",x" + std::to_string(i + 1);
    if (two)
        for (int i = 0; i < k; ++i)
            s += ",y" + std::to_string(i + 1);
    s += '\n';
    double cum = 0.0;
    for (std::size_t r = 0; r < t.rounds.size(); ++r) {
        const auto &rec = t.rounds[r];
        cum += rec.loss - rec.comparator_loss;
        s += std::to_string(r + 1) + ',' + fmt_double(rec.loss) + ',' +
             fmt_double(rec.comparator_loss) + ',' + fmt_double(cum) + ',' +
             std::to_string(rec.arrivals);
        for (int i = 0; i < k; ++i)
            s += ',' + fmt_double(rec.x[i]);
        if (two)
            for (int i = 0; i < k; ++i)
                s += ',' + fmt_double((*rec.x2)[i]);
        s += '\n';
    }
    return s;
}

} // namespace delayoco::harness
