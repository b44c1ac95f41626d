#pragma once

// Brute-force reference implementations used only by tests.

#include "delayoco/rng.hpp"
#include "delayoco/timeline.hpp"

#include <algorithm>
#include <tuple>
#include <vector>

namespace oracle {

using delayoco::timeline::DelaySchedule;
using delayoco::timeline::Event;
using delayoco::timeline::EventKind;
using delayoco::timeline::EventOrder;

// Orders events by the timestamps l_t = t, r_t = t + d_t + 1 - 2^{-t}
// (1-based t). The fractional part 1 - 2^{-t} is increasing in t, so it is
// represented by its rank t; predictions have fractional part 0.
inline EventOrder realize_by_timestamps(const DelaySchedule &s) {
    const auto T = s.horizon();
    std::vector<std::tuple<std::int64_t, std::int64_t, Event>> keyed;
    for (std::int64_t t = 1; t <= T; ++t) {
        keyed.push_back({t, 0, Event{EventKind::Pred, static_cast<std::int32_t>(t - 1)}});
        keyed.push_back({t + s.d[t - 1], t, Event{EventKind::Obs, static_cast<std::int32_t>(t - 1)}});
    }
    std::sort(keyed.begin(), keyed.end(), [](const auto &a, const auto &b) {
        return std::tie(std::get<0>(a), std::get<1>(a)) < std::tie(std::get<0>(b), std::get<1>(b));
    });
    EventOrder o;
    o.T = T;
    for (auto &k : keyed)
        o.events.push_back(std::get<2>(k));
    return o;
}

struct Counts {
    std::vector<std::int64_t> d, sigma, d_star, sigma_star, rho, beta;
};

// Direct counting of the four interval definitions, O(T^2).
inline Counts count_profile(const EventOrder &o) {
    const auto T = static_cast<std::size_t>(o.T);
    std::vector<std::int64_t> l(T), r(T);
    Counts c;
    for (std::size_t i = 0; i < o.events.size(); ++i) {
        const auto &e = o.events[i];
        if (e.kind == EventKind::Pred) {
            l[e.round] = static_cast<std::int64_t>(i);
        } else {
            r[e.round] = static_cast<std::int64_t>(i);
            c.rho.push_back(e.round);
        }
    }
    auto inside = [&](std::int64_t p, std::size_t t) { return l[t] < p && p < r[t]; };
    c.d.assign(T, 0);
    c.sigma.assign(T, 0);
    c.d_star.assign(T, 0);
    c.sigma_star.assign(T, 0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t s = 0; s < T; ++s) {
            c.d[t] += inside(l[s], t);
            c.sigma[t] += inside(l[t], s);
            c.d_star[t] += inside(r[s], t);
            c.sigma_star[t] += inside(r[t], s);
        }
    c.beta.assign(T, 0);
    for (std::size_t n = 0; n < T; ++n)
        c.beta[static_cast<std::size_t>(c.rho[n])] = static_cast<std::int64_t>(n);
    return c;
}

// Random schedule: mixes dense, short and sparse-spike delays.
inline DelaySchedule random_schedule(std::int64_t T, delayoco::CounterRng &rng) {
    const auto style = rng.below(4);
    std::vector<std::int64_t> d(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t) {
        auto room = static_cast<std::uint64_t>(T - 1 - t);
        std::uint64_t v = 0;
        switch (style) {
        case 0: v = rng.below(room + 1); break;
        case 1: v = std::min<std::uint64_t>(rng.below(4), room); break;
        case 2: v = rng.below(8) == 0 ? room : 0; break;
        default: v = std::min<std::uint64_t>(rng.below(30), room); break;
        }
        d[static_cast<std::size_t>(t)] = static_cast<std::int64_t>(v);
    }
    return DelaySchedule(std::move(d));
}

} // namespace oracle
