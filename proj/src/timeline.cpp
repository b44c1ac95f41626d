#include "delayoco/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace delayoco::timeline {

DelaySchedule::DelaySchedule(std::vector<std::int64_t> delays)
    : d(std::move(delays)) {
    validate(*this);
}

std::int64_t DelaySchedule::total() const {
    return std::accumulate(d.begin(), d.end(), std::int64_t{0});
}

std::int64_t DelaySchedule::max() const {
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}

void validate(const DelaySchedule &s) {
    const std::int64_t T = s.horizon();
    require(T > 0, "delay schedule: horizon must be positive");
    for (std::int64_t t = 0; t < T; ++t) {
        std::int64_t dt = s.d[static_cast<std::size_t>(t)];
        if (dt < 0 || dt > T - 1 - t)
            throw ValidationError(
                "delay schedule: round " + std::to_string(t + 1) +
                " has delay " + std::to_string(dt) + ", allowed range is 0.." +
                std::to_string(T - 1 - t));
    }
}

void validate(const EventOrder &order) {
    const std::int64_t T = order.T;
    require(T > 0, "event order: T must be positive");
    require(static_cast<std::int64_t>(order.events.size()) == 2 * T,
            "event order: expected 2T events");
    std::vector<std::int64_t> lpos(T, -1), rpos(T, -1);
    std::int64_t next_pred = 0;
    for (std::size_t i = 0; i < order.events.size(); ++i) {
        const Event &e = order.events[i];
        require(e.round >= 0 && e.round < T, "event order: round out of range");
        auto pos = static_cast<std::int64_t>(i);
        if (e.kind == EventKind::Pred) {
            require(e.round == next_pred,
                    "event order: Pred(" + std::to_string(e.round + 1) +
                        ") out of index order");
            ++next_pred;
            lpos[e.round] = pos;
        } else {
            require(rpos[e.round] < 0, "event order: duplicate Obs(" +
                                           std::to_string(e.round + 1) + ")");
            require(lpos[e.round] >= 0, "event order: Obs(" +
                                            std::to_string(e.round + 1) +
                                            ") before its Pred");
            rpos[e.round] = pos;
        }
    }
}

EventOrder realize(const DelaySchedule &s) {
    validate(s);
    const std::int64_t T = s.horizon();
    std::vector<std::vector<std::int32_t>> arrivals(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t)
        arrivals[static_cast<std::size_t>(t + s.d[t])].push_back(
            static_cast<std::int32_t>(t));
    EventOrder order;
    order.T = T;
    order.events.reserve(static_cast<std::size_t>(2 * T));
    for (std::int64_t a = 0; a < T; ++a) {
        order.events.push_back({EventKind::Pred, static_cast<std::int32_t>(a)});
        // buckets fill in ascending t already
        for (std::int32_t t : arrivals[static_cast<std::size_t>(a)])
            order.events.push_back({EventKind::Obs, t});
    }
    return order;
}

std::int64_t DelayProfile::sigma_max() const {
    return sigma.empty() ? 0 : *std::max_element(sigma.begin(), sigma.end());
}
std::int64_t DelayProfile::d_max() const {
    return d.empty() ? 0 : *std::max_element(d.begin(), d.end());
}
std::int64_t DelayProfile::d_star_max() const {
    return d_star.empty() ? 0 : *std::max_element(d_star.begin(), d_star.end());
}

DelayProfile profile(const EventOrder &order) {
    validate(order);
    const std::int64_t T = order.T;
    const auto n_ev = order.events.size();
    DelayProfile p;
    p.T = T;
    p.pred_pos.assign(T, 0);
    p.obs_pos.assign(T, 0);
    // preds_before[i] / obs_before[i]: counts over positions < i
    std::vector<std::int64_t> preds_before(n_ev + 1, 0), obs_before(n_ev + 1, 0);
    for (std::size_t i = 0; i < n_ev; ++i) {
        const Event &e = order.events[i];
        preds_before[i + 1] = preds_before[i] + (e.kind == EventKind::Pred);
        obs_before[i + 1] = obs_before[i] + (e.kind == EventKind::Obs);
        if (e.kind == EventKind::Pred)
            p.pred_pos[e.round] = static_cast<std::int64_t>(i);
        else
            p.obs_pos[e.round] = static_cast<std::int64_t>(i);
    }
    p.d.resize(T);
    p.sigma.resize(T);
    p.d_star.resize(T);
    p.sigma_star.resize(T);
    p.rho.resize(T);
    p.beta.resize(T);
    for (std::int64_t t = 0; t < T; ++t) {
        auto l = static_cast<std::size_t>(p.pred_pos[t]);
        auto r = static_cast<std::size_t>(p.obs_pos[t]);
        // Pred(s) in I_t
        p.d[t] = preds_before[r] - preds_before[l] - 1;
        // Pred(t) in I_s: s predicted before l_t and not yet observed
        p.sigma[t] = preds_before[l] - obs_before[l];
        // Obs(s) in I_t
        p.d_star[t] = obs_before[r] - obs_before[l];
        // Obs(t) in I_s, s != t
        p.sigma_star[t] = preds_before[r] - obs_before[r] - 1;
        p.rho[obs_before[r]] = t;
    }
    for (std::int64_t n = 0; n < T; ++n)
        p.beta[p.rho[n]] = n;
    p.d_tot = std::accumulate(p.d.begin(), p.d.end(), std::int64_t{0});
    return p;
}

DelaySchedule reconstruct_schedule(const EventOrder &order) {
    DelayProfile p = profile(order);
    DelaySchedule s;
    s.d = p.d;
    return s;
}

bool IdentityReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const IdentityCheck &c) { return c.pass; });
}

const IdentityCheck *IdentityReport::find(const std::string &name) const {
    for (const auto &c : checks)
        if (c.name == name)
            return &c;
    return nullptr;
}

double sum_sigma_star_over_n(const DelayProfile &p) {
    double acc = 0.0;
    for (std::int64_t n = 0; n < p.T; ++n)
        acc += static_cast<double>(p.sigma_star[p.rho[n]]) /
               static_cast<double>(n + 1);
    return acc;
}

double sum_d_star_over_n(const DelayProfile &p) {
    double acc = 0.0;
    for (std::int64_t n = 0; n < p.T; ++n)
        acc += static_cast<double>(p.d_star[p.rho[n]]) /
               static_cast<double>(n + 1);
    return acc;
}

namespace {

struct Recorder {
    IdentityReport &rep;
    IdentityCheck &open(const std::string &name) {
        rep.checks.push_back({name, true, -1, {}});
        return rep.checks.back();
    }
    static void fail(IdentityCheck &c, std::int64_t idx, std::string detail) {
        if (!c.pass)
            return;
        c.pass = false;
        c.index = idx;
        c.detail = std::move(detail);
    }
};

std::int64_t sum_of(const std::vector<std::int64_t> &v) {
    return std::accumulate(v.begin(), v.end(), std::int64_t{0});
}

std::int64_t max_of(const std::vector<std::int64_t> &v) {
    return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

} // namespace

IdentityReport verify_identities(const DelayProfile &p) {
    IdentityReport rep;
    Recorder rec{rep};
    const std::int64_t T = p.T;
    auto sz = static_cast<std::size_t>(T);
    bool shapes_ok = p.d.size() == sz && p.sigma.size() == sz &&
                     p.d_star.size() == sz && p.sigma_star.size() == sz &&
                     p.rho.size() == sz && p.beta.size() == sz;
    {
        auto &c = rec.open("shapes");
        if (!shapes_ok) {
            Recorder::fail(c, -1, "sequence lengths differ from T");
            return rep;
        }
    }
    {
        auto &c = rec.open("sum_d");
        if (sum_of(p.d) != p.d_tot)
            Recorder::fail(c, -1, "sum d = " + std::to_string(sum_of(p.d)) +
                                      ", d_tot = " + std::to_string(p.d_tot));
    }
    {
        auto &c = rec.open("sum_sigma");
        if (sum_of(p.sigma) != p.d_tot)
            Recorder::fail(c, -1, "sum sigma = " + std::to_string(sum_of(p.sigma)));
    }
    {
        auto &c = rec.open("sum_d_star");
        if (sum_of(p.d_star) != p.d_tot)
            Recorder::fail(c, -1, "sum d* = " + std::to_string(sum_of(p.d_star)));
    }
    {
        auto &c = rec.open("sum_sigma_star");
        if (sum_of(p.sigma_star) != p.d_tot)
            Recorder::fail(c, -1,
                           "sum sigma* = " + std::to_string(sum_of(p.sigma_star)));
    }
    {
        auto &c = rec.open("max_sigma_eq_max_sigma_star");
        if (max_of(p.sigma) != max_of(p.sigma_star))
            Recorder::fail(c, -1, "max sigma != max sigma*");
    }
    {
        auto &c = rec.open("max_d_star_within_factor_two");
        std::int64_t dm = max_of(p.d), dsm = max_of(p.d_star);
        if (!(dm <= 2 * dsm && dsm <= 2 * dm))
            Recorder::fail(c, -1,
                           "max d = " + std::to_string(dm) +
                               ", max d* = " + std::to_string(dsm));
    }
    {
        auto &c = rec.open("beta_inverse_of_rho");
        std::vector<char> seen(sz, 0);
        for (std::int64_t n = 0; n < T; ++n) {
            std::int64_t t = p.rho[n];
            if (t < 0 || t >= T || seen[t]) {
                Recorder::fail(c, n, "rho is not a permutation");
                break;
            }
            seen[t] = 1;
            if (p.beta[t] != n) {
                Recorder::fail(c, t, "beta(rho(n)) != n");
                break;
            }
        }
    }
    if (!rep.checks.back().pass)
        return rep; // remaining checks index through rho
    {
        auto &c = rec.open("dual_delay_relation");
        for (std::int64_t t = 0; t < T; ++t)
            if (p.d_star[t] != p.sigma[t] + p.beta[t] - t) {
                Recorder::fail(c, t, "d*_t != sigma_t + beta(t) - t");
                break;
            }
    }
    {
        auto &c = rec.open("dual_backlog_relation");
        for (std::int64_t t = 0; t < T; ++t)
            if (p.sigma_star[t] != p.d[t] + t - p.beta[t]) {
                Recorder::fail(c, t, "sigma*_t != d_t + t - beta(t)");
                break;
            }
    }
    {
        auto &c = rec.open("prefix_domination");
        std::int64_t a = 0, b = 0;
        for (std::int64_t n = 0; n < T; ++n) {
            a += p.d_star[p.rho[n]];
            b += p.sigma_star[p.rho[n]];
            if (a > b) {
                Recorder::fail(c, n, "prefix sum of d~* exceeds that of sigma~*");
                break;
            }
        }
    }
    {
        auto &c = rec.open("backlog_increment");
        for (std::int64_t t = 0; t + 1 < T; ++t)
            if (p.sigma[t + 1] > p.sigma[t] + 1) {
                Recorder::fail(c, t, "sigma_{t+1} > sigma_t + 1");
                break;
            }
    }
    {
        auto &c = rec.open("dual_backlog_decrement");
        for (std::int64_t n = 0; n + 1 < T; ++n)
            if (p.sigma_star[p.rho[n + 1]] < p.sigma_star[p.rho[n]] - 1) {
                Recorder::fail(c, n, "sigma~*_{n+1} < sigma~*_n - 1");
                break;
            }
    }
    {
        // m - d~*_m <= n < m counts outstanding earlier observations (1-based)
        auto &c = rec.open("outstanding_count");
        std::vector<std::int64_t> diff(sz + 1, 0);
        for (std::int64_t m = 0; m < T; ++m) {
            std::int64_t lo = m - p.d_star[p.rho[m]];
            if (lo < 0 || lo > m) {
                Recorder::fail(c, m, "d~*_m out of range");
                break;
            }
            diff[lo] += 1;
            diff[m] -= 1;
        }
        std::int64_t run = 0;
        for (std::int64_t n = 0; n < T && c.pass; ++n) {
            run += diff[n];
            if (run != p.sigma_star[p.rho[n]])
                Recorder::fail(c, n, "sigma~*_n != #{m : m - d~*_m <= n < m}");
        }
    }
    {
        auto &c = rec.open("placement");
        const bool have_pos = p.pred_pos.size() == sz && p.obs_pos.size() == sz;
        if (!have_pos) {
            Recorder::fail(c, -1, "event positions missing");
        } else {
            for (std::int64_t n = 0; n < T; ++n) {
                std::int64_t t = p.rho[n];
                std::int64_t hi = n - p.d_star[t];
                std::int64_t l = p.pred_pos[t];
                bool ok = hi >= 0 && hi < T && l < p.obs_pos[p.rho[hi]];
                if (ok && hi >= 1)
                    ok = p.obs_pos[p.rho[hi - 1]] < l;
                if (!ok) {
                    Recorder::fail(c, n, "Pred of n-th observed round is not "
                                         "between the bracketing observations");
                    break;
                }
            }
        }
    }
    {
        const double lg = std::log(std::exp(1.0) * static_cast<double>(T));
        const double smax = static_cast<double>(max_of(p.sigma));
        auto &c1 = rec.open("telescoping_sigma_star");
        double s1 = sum_sigma_star_over_n(p);
        if (s1 > smax * lg + 1e-9)
            Recorder::fail(c1, -1, "sum sigma~*_n/n = " + std::to_string(s1));
        auto &c2 = rec.open("telescoping_d_star");
        double s2 = sum_d_star_over_n(p);
        double cap = std::min(smax * lg,
                              2.0 * std::sqrt(static_cast<double>(p.d_tot)));
        if (s2 > cap + 1e-9)
            Recorder::fail(c2, -1, "sum d~*_n/n = " + std::to_string(s2));
    }
    return rep;
}

std::string schedule_to_csv(const DelaySchedule &s) {
    std::ostringstream os;
    os << "t,d\n";
    for (std::size_t t = 0; t < s.d.size(); ++t)
        os << (t + 1) << ',' << s.d[t] << '\n';
    return os.str();
}

DelaySchedule schedule_from_csv(const std::string &text) {
    std::istringstream is(text);
    std::string line;
    require(static_cast<bool>(std::getline(is, line)), "delay csv: empty input");
    if (!line.empty() && line.back() == '\r')
        line.pop_back();
    require(line == "t,d", "delay csv: expected header `t,d`");
    std::vector<std::int64_t> d;
    std::int64_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        auto comma = line.find(',');
        require(comma != std::string::npos,
                "delay csv: line " + std::to_string(lineno) + " lacks a comma");
        std::int64_t t = 0, dt = 0;
        try {
            t = std::stoll(line.substr(0, comma));
            dt = std::stoll(line.substr(comma + 1));
        } catch (const std::exception &) {
            throw ValidationError("delay csv: line " + std::to_string(lineno) +
                                  " is not two integers");
        }
        require(t == static_cast<std::int64_t>(d.size()) + 1,
                "delay csv: rounds must be listed 1..T in order (line " +
                    std::to_string(lineno) + ")");
        d.push_back(dt);
    }
    return DelaySchedule(std::move(d));
}

} // namespace delayoco::timeline
