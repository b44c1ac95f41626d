#pragma once

#include "delayoco/base_olo.hpp"
#include "delayoco/common.hpp"
#include "delayoco/estimators.hpp"
#include "delayoco/geometry.hpp"
#include "delayoco/timeline.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace delayoco::wrappers {

enum class FeedbackModel { Gradient, Value, TwoValues };

using Payload = std::variant<Vector, double, std::pair<double, double>>;

// Rounds are 0-based.
struct FeedbackPacket {
    std::int64_t origin = 0;
    Payload payload;
    std::int64_t arrival = 0;
};

Payload zero_payload(FeedbackModel m, int k);

struct Play {
    Vector x;                // x_t, or x^1_t for two-point
    std::optional<Vector> x2; // x^2_t for two-point
};

// One forwarded update as seen by the base learner.
struct ForwardRecord {
    std::int64_t origin;
    std::int64_t d_star;
    std::int64_t sigma_star;
    std::int64_t read_stamp; // event-log length when the values were read
};

class ReductionWrapper;

class Player {
  public:
    virtual ~Player() = default;
    virtual FeedbackModel model() const = 0;
    virtual Play predict(std::int64_t t) = 0;
    virtual void receive(const FeedbackPacket &p) = 0;
    virtual void finish() {}
    // innermost reduction
    virtual const ReductionWrapper &core() const = 0;
};

struct WrapperContext {
    geometry::Domain domain;
    olo::ScheduleParams params;
    std::uint64_t seed = 0;
    bool audit = false;
    bool diagnostics = false;
};

// Shared body of W_OCO, W_BCO and W_2p-BCO.
class ReductionWrapper : public Player {
  public:
    ReductionWrapper(FeedbackModel model, std::unique_ptr<olo::Learner> base,
                     olo::LearningRate lr, estimators::SmoothingSchedule smoothing,
                     WrapperContext ctx);

    FeedbackModel model() const override { return model_; }
    Play predict(std::int64_t t) override;
    void receive(const FeedbackPacket &p) override;
    void finish() override;
    const ReductionWrapper &core() const override { return *this; }

    const Vector &z_bar() const { return base_->current(); }
    const olo::Learner &base() const { return *base_; }
    std::int64_t update_count() const { return base_->updates(); }
    std::int64_t outstanding() const { return outstanding_; }
    // Event order as this wrapper observed it; complete after finish().
    const timeline::EventOrder &event_log() const { return log_; }
    const std::vector<ForwardRecord> &forwards() const { return forwards_; }
    // delta_t stamped on round t (bandit models)
    double delta_of(std::int64_t t) const;

  private:
    struct Pending {
        std::int64_t obs_at_pred = 0;
        double delta = 0.0;
        Vector u;
        bool open = false;
    };

    FeedbackModel model_;
    std::unique_ptr<olo::Learner> base_;
    olo::LearningRate lr_;
    estimators::SmoothingSchedule smoothing_;
    WrapperContext ctx_;
    std::vector<Pending> pending_;
    std::int64_t obs_count_ = 0;
    std::int64_t outstanding_ = 0;
    timeline::EventOrder log_;
    std::vector<ForwardRecord> forwards_;
};

struct SkipStats {
    std::vector<std::int64_t> skipped;      // Q*, in skip order
    std::vector<std::int64_t> dprime;       // d'_t
    std::vector<std::int64_t> cumulative;   // D_t per round
    std::int64_t dropped = 0;               // late true packets discarded
    std::int64_t dprime_total() const;
};

// Skipping scheme around any inner player: rounds that stay outstanding too
// long get a zero-feedback packet early.
class SkipWrapper : public Player {
  public:
    explicit SkipWrapper(std::unique_ptr<Player> inner);

    FeedbackModel model() const override { return inner_->model(); }
    Play predict(std::int64_t t) override;
    void receive(const FeedbackPacket &p) override;
    void finish() override;
    const ReductionWrapper &core() const override { return inner_->core(); }

    const SkipStats &stats() const { return stats_; }
    const Player &inner() const { return *inner_; }
    std::int64_t cumulative() const { return D_; }
    const std::set<std::int64_t> &tracking() const { return S_; }

  private:
    std::unique_ptr<Player> inner_;
    std::set<std::int64_t> S_;
    std::vector<char> skipped_flag_;
    std::int64_t D_ = 0;
    std::int64_t round_ = -1;
    SkipStats stats_;
};

// One round of the skipping scheme: predict, then deliver the
// packets arriving this round.
Play skip_round(SkipWrapper &w, std::int64_t t,
                const std::vector<FeedbackPacket> &incoming);

struct SkipInvariants {
    bool q_bound = true;       // |Q*| <= 2 sqrt(d'_tot)
    bool dprime_le_d = true;   // d'_t <= d_t
    bool dprime_sqrt = true;   // d'_s <= sqrt(D_{tau-1}) + 1, tau = s + d'_s
    bool threshold = true;     // skipped s had (tau - s)^2 > D_tau
    bool comparison = true;    // |Q*| + sqrt(d'_tot) <= 3 min_Q (|Q| + sqrt(sum_{t not in Q} d_t))
    std::string detail;
    bool all() const {
        return q_bound && dprime_le_d && dprime_sqrt && threshold && comparison;
    }
};

SkipInvariants check_skip_invariants(const SkipStats &s,
                                     const timeline::DelaySchedule &d);

// Parsed composition, e.g. "skip(oco(pftrl))".
struct Composition {
    bool skip = false;
    FeedbackModel model = FeedbackModel::Gradient;
    olo::LearnerKind learner = olo::LearnerKind::Pftrl;
};

Composition parse_composition(const std::string &text);
std::string to_string(const Composition &c);
std::string to_string(FeedbackModel m);

struct PlayerSpec {
    Composition composition;
    olo::ScheduleSpec schedule;
    estimators::SmoothingSchedule smoothing; // r, nu, k, horizon filled by caller
    std::optional<Vector> z1;
};

std::unique_ptr<Player> make_player(const PlayerSpec &spec, const WrapperContext &ctx);

struct DualAudit {
    bool online_matches_offline = true;
    bool no_lookahead = true;
    std::string detail;
    bool ok() const { return online_matches_offline && no_lookahead; }
};

// Compares forwarded (d*, sigma*) with the timeline profile of the wrapper's
// own event log, and checks every read used only the log prefix.
DualAudit audit_duals(const ReductionWrapper &w);

} // namespace delayoco::wrappers
