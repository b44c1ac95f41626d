#pragma once

#include "delayoco/common.hpp"

#include <cstdint>
#include <string>
#include <vector>

// Rounds are 0-based throughout the C++ API: round t in [0, T) is the
// (t+1)-th round of the protocol. Permutations rho/beta map 0-based indices
// to 0-based indices. CSV output uses 1-based rounds.
namespace delayoco::timeline {

struct DelaySchedule {
    std::vector<std::int64_t> d;

    DelaySchedule() = default;
    explicit DelaySchedule(std::vector<std::int64_t> delays);

    std::int64_t horizon() const { return static_cast<std::int64_t>(d.size()); }
    std::int64_t total() const;
    std::int64_t max() const;
};

// Throws ValidationError naming the first round with d[t] outside [0, T-1-t].
void validate(const DelaySchedule &s);

enum class EventKind : std::uint8_t { Pred, Obs };

struct Event {
    EventKind kind;
    std::int32_t round;
    bool operator==(const Event &) const = default;
};

struct EventOrder {
    std::int64_t T = 0;
    std::vector<Event> events;
};

// Pred events in index order, each Obs once and after its Pred. The round
// of arrival is read back from the order, so round consistency follows.
void validate(const EventOrder &order);

EventOrder realize(const DelaySchedule &s);

struct DelayProfile {
    std::int64_t T = 0;
    std::vector<std::int64_t> d, sigma, d_star, sigma_star;
    std::vector<std::int64_t> rho, beta;
    std::int64_t d_tot = 0;
    // event positions of Pred(t) / Obs(t), kept for ordering checks
    std::vector<std::int64_t> pred_pos, obs_pos;

    std::int64_t sigma_max() const;
    std::int64_t d_max() const;
    std::int64_t d_star_max() const;
};

DelayProfile profile(const EventOrder &order);

// Delay of each round read back from an order: number of Pred events
// strictly between Pred(t) and Obs(t).
DelaySchedule reconstruct_schedule(const EventOrder &order);

template <typename T>
std::vector<T> observation_reorder(const DelayProfile &p,
                                   const std::vector<T> &seq) {
    require(static_cast<std::int64_t>(seq.size()) == p.T,
            "observation_reorder: length " + std::to_string(seq.size()) +
                " != T " + std::to_string(p.T));
    std::vector<T> out(seq.size());
    for (std::size_t n = 0; n < seq.size(); ++n)
        out[n] = seq[static_cast<std::size_t>(p.rho[n])];
    return out;
}

// Inverse of observation_reorder: out[t] = seq[beta(t)].
template <typename T>
std::vector<T> round_reorder(const DelayProfile &p, const std::vector<T> &seq) {
    require(static_cast<std::int64_t>(seq.size()) == p.T,
            "round_reorder: length mismatch");
    std::vector<T> out(seq.size());
    for (std::size_t t = 0; t < seq.size(); ++t)
        out[t] = seq[static_cast<std::size_t>(p.beta[t])];
    return out;
}

struct IdentityCheck {
    std::string name;
    bool pass = true;
    std::int64_t index = -1; // first counterexample (0-based), -1 if none
    std::string detail;
};

struct IdentityReport {
    std::vector<IdentityCheck> checks;
    bool all_pass() const;
    const IdentityCheck *find(const std::string &name) const;
};

IdentityReport verify_identities(const DelayProfile &p);

// Telescoping diagnostics; n is 1-based inside the sums.
double sum_sigma_star_over_n(const DelayProfile &p);
double sum_d_star_over_n(const DelayProfile &p);

// CSV with header `t,d`, 1-based t.
std::string schedule_to_csv(const DelaySchedule &s);
DelaySchedule schedule_from_csv(const std::string &text);

} // namespace delayoco::timeline
