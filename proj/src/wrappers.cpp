#include "delayoco/wrappers.hpp"

#include "delayoco/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace delayoco::wrappers {

Payload zero_payload(FeedbackModel m, int k) {
    switch (m) {
    case FeedbackModel::Gradient:
        return Vector(Vector::Zero(k));
    case FeedbackModel::Value:
        return 0.0;
    case FeedbackModel::TwoValues:
        break;
    }
    return std::make_pair(0.0, 0.0);
}

ReductionWrapper::ReductionWrapper(FeedbackModel model,
                                   std::unique_ptr<olo::Learner> base,
                                   olo::LearningRate lr,
                                   estimators::SmoothingSchedule smoothing,
                                   WrapperContext ctx)
    : model_(model), base_(std::move(base)), lr_(std::move(lr)),
      smoothing_(smoothing), ctx_(std::move(ctx)) {
    require(base_ != nullptr, "wrapper: missing base learner");
    if (model_ != FeedbackModel::Gradient)
        estimators::validate(smoothing_);
    if (lr_.spec().kind == olo::ScheduleKind::Bco)
        require(model_ == FeedbackModel::Value,
                "wrapper: the bco schedule needs the one-point wrapper");
}

double ReductionWrapper::delta_of(std::int64_t t) const {
    require(t >= 0 && t < static_cast<std::int64_t>(pending_.size()),
            "wrapper: round not yet predicted");
    return pending_[static_cast<std::size_t>(t)].delta;
}

Play ReductionWrapper::predict(std::int64_t t) {
    require(t == static_cast<std::int64_t>(pending_.size()),
            "wrapper: predict called out of order (round " +
                std::to_string(t + 1) + ")");
    Pending rec;
    rec.obs_at_pred = obs_count_;
    rec.open = true;
    Play play;
    const Vector &z = base_->current();
    if (model_ == FeedbackModel::Gradient) {
        play.x = z;
    } else {
        const int k = ctx_.domain.dim();
        const double delta = smoothing_.delta_at(static_cast<double>(t + 1));
        CounterRng rng = substream(ctx_.seed, StreamTag::Player,
                                   static_cast<std::uint64_t>(t));
        rec.u = estimators::sample_sphere(rng, k);
        rec.delta = delta;
        auto sh = geometry::shrink_for_delta(ctx_.domain, delta);
        Vector base = sh(z);
        play.x = base + delta * rec.u;
        if (model_ == FeedbackModel::TwoValues)
            play.x2 = base - delta * rec.u;
    }
    pending_.push_back(std::move(rec));
    ++outstanding_;
    log_.events.push_back({timeline::EventKind::Pred, static_cast<std::int32_t>(t)});
    return play;
}

void ReductionWrapper::receive(const FeedbackPacket &p) {
    const std::int64_t s = p.origin;
    require(s >= 0 && s < static_cast<std::int64_t>(pending_.size()),
            "wrapper: feedback for unknown round " + std::to_string(s + 1));
    Pending &rec = pending_[static_cast<std::size_t>(s)];
    require(rec.open, "wrapper: duplicate feedback for round " + std::to_string(s + 1));
    const int k = ctx_.domain.dim();

    Vector g;
    switch (model_) {
    case FeedbackModel::Gradient: {
        auto v = std::get_if<Vector>(&p.payload);
        require(v != nullptr, "wrapper: expected a gradient payload");
        require(v->size() == k, "wrapper: gradient dimension mismatch");
        g = *v;
        break;
    }
    case FeedbackModel::Value: {
        auto v = std::get_if<double>(&p.payload);
        require(v != nullptr, "wrapper: expected a value payload");
        g = estimators::one_point_estimate(*v, rec.delta, rec.u, k);
        break;
    }
    case FeedbackModel::TwoValues: {
        auto v = std::get_if<std::pair<double, double>>(&p.payload);
        require(v != nullptr, "wrapper: expected a two-value payload");
        g = estimators::two_point_estimate(v->first, v->second, rec.delta, rec.u, k);
        break;
    }
    }

    const std::int64_t d_star = obs_count_ - rec.obs_at_pred;
    const std::int64_t sigma_star = outstanding_ - 1;
    log_.events.push_back({timeline::EventKind::Obs, static_cast<std::int32_t>(s)});
    if (ctx_.audit)
        forwards_.push_back(
            {s, d_star, sigma_star, static_cast<std::int64_t>(log_.events.size())});

    // delta of the latest predicted round is the arrival-round delta
    double delta_prime = pending_.back().delta;
    double eta = lr_.next(sigma_star, delta_prime);
    base_->step({std::move(g), d_star, sigma_star}, eta);

    rec.open = false;
    rec.u.resize(0);
    --outstanding_;
    ++obs_count_;
}

void ReductionWrapper::finish() {
    log_.T = static_cast<std::int64_t>(pending_.size());
    if (outstanding_ != 0)
        throw CheckFailure("wrapper: " + std::to_string(outstanding_) +
                           " rounds never received feedback");
}

std::int64_t SkipStats::dprime_total() const {
    std::int64_t s = 0;
    for (auto v : dprime)
        s += v;
    return s;
}

SkipWrapper::SkipWrapper(std::unique_ptr<Player> inner) : inner_(std::move(inner)) {
    require(inner_ != nullptr, "skip: missing inner player");
}

Play SkipWrapper::predict(std::int64_t t) {
    require(t == round_ + 1, "skip: round counter regression at round " +
                                 std::to_string(t + 1));
    round_ = t;
    D_ += static_cast<std::int64_t>(S_.size());
    stats_.cumulative.push_back(D_);
    // stale rounds form a prefix of S in ascending order
    const int k = core().base().domain().dim();
    while (!S_.empty()) {
        std::int64_t s = *S_.begin();
        std::int64_t gap = t - s;
        if (gap * gap <= D_)
            break;
        inner_->receive({s, zero_payload(inner_->model(), k), t});
        stats_.dprime[static_cast<std::size_t>(s)] = gap;
        stats_.skipped.push_back(s);
        skipped_flag_[static_cast<std::size_t>(s)] = 1;
        S_.erase(S_.begin());
    }
    Play play = inner_->predict(t);
    S_.insert(t);
    stats_.dprime.push_back(0);
    skipped_flag_.push_back(0);
    return play;
}

void SkipWrapper::receive(const FeedbackPacket &p) {
    const std::int64_t s = p.origin;
    require(s >= 0 && s <= round_, "skip: feedback for unknown round " +
                                       std::to_string(s + 1));
    auto it = S_.find(s);
    if (it == S_.end()) {
        require(skipped_flag_[static_cast<std::size_t>(s)] != 0,
                "skip: duplicate feedback for round " + std::to_string(s + 1));
        ++stats_.dropped;
        return;
    }
    stats_.dprime[static_cast<std::size_t>(s)] = round_ - s;
    S_.erase(it);
    inner_->receive(p);
}

void SkipWrapper::finish() {
    if (!S_.empty())
        throw CheckFailure("skip: " + std::to_string(S_.size()) +
                           " tracked rounds never resolved");
    inner_->finish();
}

Play skip_round(SkipWrapper &w, std::int64_t t,
                const std::vector<FeedbackPacket> &incoming) {
    Play play = w.predict(t);
    for (const auto &p : incoming)
        w.receive(p);
    return play;
}

SkipInvariants check_skip_invariants(const SkipStats &s,
                                     const timeline::DelaySchedule &d) {
    SkipInvariants out;
    const auto T = static_cast<std::size_t>(d.horizon());
    require(s.dprime.size() == T && s.cumulative.size() == T,
            "skip invariants: stats do not cover the horizon");
    auto note = [&](bool &flag, const std::string &msg) {
        if (flag && out.detail.empty())
            out.detail = msg;
        flag = false;
    };
    const std::int64_t dp_tot = s.dprime_total();
    const auto q = static_cast<std::int64_t>(s.skipped.size());
    if (q * q > 4 * dp_tot)
        note(out.q_bound, "|Q*|^2 > 4 d'_tot");
    for (std::size_t t = 0; t < T; ++t) {
        std::int64_t dp = s.dprime[t];
        if (dp > d.d[t])
            note(out.dprime_le_d, "d'_t > d_t at round " + std::to_string(t + 1));
        if (dp >= 1) {
            std::size_t tau = t + static_cast<std::size_t>(dp);
            std::int64_t Dprev = s.cumulative[tau - 1];
            if ((dp - 1) * (dp - 1) > Dprev)
                note(out.dprime_sqrt,
                     "d'_t > sqrt(D) + 1 at round " + std::to_string(t + 1));
        }
    }
    for (auto t : s.skipped) {
        std::int64_t dp = s.dprime[static_cast<std::size_t>(t)];
        std::int64_t Dtau = s.cumulative[static_cast<std::size_t>(t + dp)];
        if (dp * dp <= Dtau)
            note(out.threshold, "round " + std::to_string(t + 1) +
                                    " skipped below the threshold");
    }
    // min over {empty, Q*, top-j delay sets}
    std::vector<std::int64_t> sorted(d.d.begin(), d.d.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const std::int64_t d_tot = d.total();
    double best = std::sqrt(static_cast<double>(d_tot));
    std::int64_t removed = 0;
    for (std::size_t j = 0; j < sorted.size(); ++j) {
        removed += sorted[j];
        best = std::min(best, static_cast<double>(j + 1) +
                                  std::sqrt(static_cast<double>(d_tot - removed)));
    }
    std::int64_t rest = d_tot;
    for (auto t : s.skipped)
        rest -= d.d[static_cast<std::size_t>(t)];
    best = std::min(best, static_cast<double>(q) + std::sqrt(static_cast<double>(rest)));
    double lhs = static_cast<double>(q) + std::sqrt(static_cast<double>(dp_tot));
    if (lhs > 3.0 * best * (1 + 1e-15))
        note(out.comparison, "|Q*| + sqrt(d'_tot) exceeds 3 min_Q");
    return out;
}

Composition parse_composition(const std::string &raw) {
    std::string text;
    for (char ch : raw)
        if (!std::isspace(static_cast<unsigned char>(ch)))
            text += ch;
    const std::string original = raw;
    auto strip = [&](std::string &s, const std::string &head) {
        if (s.rfind(head + "(", 0) == 0 && s.back() == ')') {
            s = s.substr(head.size() + 1, s.size() - head.size() - 2);
            return true;
        }
        return false;
    };
    Composition c;
    c.skip = strip(text, "skip");
    if (strip(text, "oco"))
        c.model = FeedbackModel::Gradient;
    else if (strip(text, "bco"))
        c.model = FeedbackModel::Value;
    else if (strip(text, "two_point"))
        c.model = FeedbackModel::TwoValues;
    else
        throw ValidationError("composition `" + original +
                              "`: expected [skip(]oco|bco|two_point(pftrl|omd)[)]");
    try {
        c.learner = olo::parse_learner(text);
    } catch (const ValidationError &) {
        throw ValidationError("composition `" + original + "`: unknown learner `" +
                              text + "`");
    }
    return c;
}

std::string to_string(FeedbackModel m) {
    switch (m) {
    case FeedbackModel::Gradient:
        return "oco";
    case FeedbackModel::Value:
        return "bco";
    case FeedbackModel::TwoValues:
        break;
    }
    return "two_point";
}

std::string to_string(const Composition &c) {
    std::string s = to_string(c.model) + "(" + olo::to_string(c.learner) + ")";
    return c.skip ? "skip(" + s + ")" : s;
}

std::unique_ptr<Player> make_player(const PlayerSpec &spec, const WrapperContext &ctx) {
    const auto &K = ctx.domain;
    Vector z1 = spec.z1 ? *spec.z1 : geometry::project(K, Vector::Zero(K.dim()));
    require(K.contains(z1, 1e-12), "player: z1 outside the domain");
    if (spec.composition.model != FeedbackModel::Gradient) {
        // shrink needs factor * z1 in K; the origin-centered start is safe
        require(K.contains(Vector::Zero(K.dim())), "player: domain misses the origin");
    }
    auto base = olo::make_learner(spec.composition.learner, K, z1, ctx.diagnostics);
    olo::LearningRate lr(spec.schedule, ctx.params);
    std::unique_ptr<Player> p = std::make_unique<ReductionWrapper>(
        spec.composition.model, std::move(base), std::move(lr), spec.smoothing, ctx);
    if (spec.composition.skip)
        p = std::make_unique<SkipWrapper>(std::move(p));
    return p;
}

DualAudit audit_duals(const ReductionWrapper &w) {
    DualAudit out;
    const auto &log = w.event_log();
    timeline::DelayProfile prof = timeline::profile(log);
    const auto &fw = w.forwards();
    if (static_cast<std::int64_t>(fw.size()) != prof.T) {
        out.online_matches_offline = false;
        out.detail = "audit records missing (audit mode off?)";
        return out;
    }
    // prefix counters rebuilt while walking the log
    std::int64_t preds = 0, obs = 0;
    std::vector<std::int64_t> obs_at_pred(static_cast<std::size_t>(prof.T), 0);
    std::size_t next = 0;
    for (std::size_t i = 0; i < log.events.size(); ++i) {
        const auto &e = log.events[i];
        if (e.kind == timeline::EventKind::Pred) {
            obs_at_pred[static_cast<std::size_t>(e.round)] = obs;
            ++preds;
            continue;
        }
        const ForwardRecord &r = fw[next];
        const auto n = static_cast<std::int64_t>(next);
        ++next;
        std::int64_t d_pref = obs - obs_at_pred[static_cast<std::size_t>(e.round)];
        std::int64_t s_pref = preds - obs - 1;
        ++obs;
        if (r.origin != e.round || r.read_stamp != static_cast<std::int64_t>(i) + 1 ||
            r.d_star != d_pref || r.sigma_star != s_pref) {
            if (out.no_lookahead)
                out.detail = "update " + std::to_string(n + 1) +
                             " read beyond its log prefix";
            out.no_lookahead = false;
        }
        std::int64_t t = prof.rho[n];
        if (r.origin != t || r.d_star != prof.d_star[t] ||
            r.sigma_star != prof.sigma_star[t]) {
            if (out.online_matches_offline)
                out.detail = "update " + std::to_string(n + 1) +
                             " differs from the offline profile";
            out.online_matches_offline = false;
        }
    }
    return out;
}

} // namespace delayoco::wrappers
