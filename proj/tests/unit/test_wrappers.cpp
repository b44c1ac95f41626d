#include "doctest.h"

#include "delayoco/base_olo.hpp"
#include "delayoco/rng.hpp"
#include "delayoco/timeline.hpp"
#include "delayoco/wrappers.hpp"
#include "oracles.hpp"

#include <cmath>
#include <functional>

using namespace delayoco;
using namespace delayoco::wrappers;
using timeline::DelaySchedule;

namespace {

using Feedback = std::function<Payload(std::int64_t, const Play &)>;

// Plays a schedule through `p`: predict, then the round's arrivals in
// ascending origin.
std::vector<Play> drive(Player &p, const DelaySchedule &s, const Feedback &fb,
                        const std::function<void(std::int64_t)> &after = {}) {
    const auto T = s.horizon();
    std::vector<std::vector<std::int64_t>> arrive(static_cast<std::size_t>(T));
    for (std::int64_t t = 0; t < T; ++t)
        arrive[static_cast<std::size_t>(t + s.d[t])].push_back(t);
    std::vector<Play> plays;
    for (std::int64_t t = 0; t < T; ++t) {
        plays.push_back(p.predict(t));
        for (auto o : arrive[static_cast<std::size_t>(t)])
            p.receive({o, fb(o, plays[static_cast<std::size_t>(o)]), t});
        if (after)
            after(t);
    }
    p.finish();
    return plays;
}

WrapperContext context(int k, std::uint64_t seed = 11, bool audit = true) {
    WrapperContext c{geometry::Domain::ball(k, 1.0), {}, seed, audit, true};
    c.params.D = 2.0;
    c.params.G = 1.0;
    c.params.k = k;
    c.params.r = 1.0;
    return c;
}

PlayerSpec spec_of(const std::string &comp, int k, std::int64_t T = 100) {
    PlayerSpec s;
    s.composition = parse_composition(comp);
    s.schedule.kind = s.composition.model == FeedbackModel::Value
                          ? olo::ScheduleKind::Bco
                      : s.composition.model == FeedbackModel::TwoValues
                          ? olo::ScheduleKind::TwoPoint
                          : olo::ScheduleKind::General;
    s.smoothing.kind = s.composition.model == FeedbackModel::TwoValues
                           ? estimators::SmoothingKind::TwoPointConvex
                           : estimators::SmoothingKind::BcoConvex;
    s.smoothing.k = k;
    s.smoothing.horizon = T;
    return s;
}

Vector gradient_at(std::int64_t t, int k) {
    CounterRng rng = substream(99, StreamTag::Test, static_cast<std::uint64_t>(t));
    Vector g(k);
    for (int i = 0; i < k; ++i)
        g[i] = rng.normal();
    return g;
}

// Arbitrary feedback of the right type for round t.
Payload payload_for(FeedbackModel m, std::int64_t t, int k) {
    switch (m) {
    case FeedbackModel::Gradient:
        return gradient_at(t, k);
    case FeedbackModel::Value:
        return gradient_at(t, 1)[0];
    case FeedbackModel::TwoValues:
        break;
    }
    return std::make_pair(gradient_at(t, 2)[0], gradient_at(t, 2)[1]);
}

} // namespace

TEST_CASE("zero delays reproduce the base learner run directly") {
    for (auto kind : {olo::LearnerKind::Pftrl, olo::LearnerKind::Omd}) {
        const int k = 3;
        const std::int64_t T = 60;
        auto ctx = context(k);
        Vector z1 = Vector::Zero(k);
        olo::LearningRate lr({}, ctx.params);
        ReductionWrapper w(FeedbackModel::Gradient,
                           olo::make_learner(kind, ctx.domain, z1), lr, {}, ctx);
        auto direct = olo::make_learner(kind, ctx.domain, z1);
        olo::LearningRate lr2({}, ctx.params);

        DelaySchedule zero(std::vector<std::int64_t>(T, 0));
        auto plays = drive(w, zero, [&](std::int64_t t, const Play &) {
            return Payload(gradient_at(t, k));
        });
        for (std::int64_t t = 0; t < T; ++t) {
            CHECK((plays[static_cast<std::size_t>(t)].x - direct->current()).norm() == 0.0);
            direct->step({gradient_at(t, k), 0, 0}, lr2.next(0));
        }
        CHECK((w.z_bar() - direct->current()).norm() == 0.0);
    }
}

TEST_CASE("reference delays are consumed in observation order") {
    DelaySchedule ref(std::vector<std::int64_t>{4, 2, 0, 0, 0});
    auto ctx = context(2);
    auto p = make_player(spec_of("oco(pftrl)", 2), ctx);
    drive(*p, ref, [](std::int64_t t, const Play &) { return Payload(gradient_at(t, 2)); });
    std::vector<std::int64_t> origins;
    for (const auto &r : p->core().forwards())
        origins.push_back(r.origin);
    CHECK(origins == std::vector<std::int64_t>{2, 1, 3, 0, 4});
    CHECK(audit_duals(p->core()).ok());
}

TEST_CASE("forwarded duals equal the offline profile reordered") {
    for (std::uint64_t rep = 0; rep < 40; ++rep) {
        CounterRng rng = substream(rep, StreamTag::Test, 3);
        DelaySchedule s = oracle::random_schedule(50, rng);
        for (const char *comp : {"oco(pftrl)", "bco(omd)", "two_point(pftrl)"}) {
            auto ctx = context(2, rep);
            auto p = make_player(spec_of(comp, 2, 50), ctx);
            drive(*p, s, [&](std::int64_t t, const Play &) {
                return payload_for(p->model(), t, 2);
            });
            auto prof = timeline::profile(timeline::realize(s));
            auto ds = timeline::observation_reorder(prof, prof.d_star);
            auto ss = timeline::observation_reorder(prof, prof.sigma_star);
            const auto &fw = p->core().forwards();
            REQUIRE(fw.size() == 50);
            for (std::size_t n = 0; n < fw.size(); ++n) {
                CHECK(fw[n].d_star == ds[n]);
                CHECK(fw[n].sigma_star == ss[n]);
                CHECK(fw[n].origin == prof.rho[n]);
            }
            auto audit = audit_duals(p->core());
            CHECK_MESSAGE(audit.ok(), audit.detail);
        }
    }
}

TEST_CASE("wrapper rejects bad packets") {
    auto ctx = context(2);
    auto p = make_player(spec_of("oco(pftrl)", 2), ctx);
    p->predict(0);
    p->predict(1);
    CHECK_THROWS_AS(p->receive({2, Payload(Vector(Vector::Zero(2))), 1}), ValidationError);
    CHECK_THROWS_AS(p->receive({-1, Payload(Vector(Vector::Zero(2))), 1}), ValidationError);
    CHECK_THROWS_AS(p->receive({0, Payload(1.0), 1}), ValidationError);
    CHECK_THROWS_AS(p->receive({0, Payload(Vector(Vector::Zero(3))), 1}), ValidationError);
    p->receive({0, Payload(Vector(Vector::Ones(2))), 1});
    CHECK_THROWS_AS(p->receive({0, Payload(Vector(Vector::Ones(2))), 1}), ValidationError);
    CHECK_THROWS_AS(p->predict(3), ValidationError);
    CHECK_THROWS_AS(p->finish(), CheckFailure);

    auto b = make_player(spec_of("bco(pftrl)", 2), ctx);
    b->predict(0);
    CHECK_THROWS_AS(b->receive({0, Payload(std::make_pair(0.0, 0.0)), 0}), ValidationError);
    CHECK_THROWS_WITH_AS(b->receive({0, Payload(Vector(Vector::Zero(2))), 0}),
                         doctest::Contains("value payload"), ValidationError);
}

TEST_CASE("bco schedule requires the one-point wrapper") {
    auto ctx = context(2);
    auto s = spec_of("oco(pftrl)", 2);
    s.schedule.kind = olo::ScheduleKind::Bco;
    CHECK_THROWS_AS(make_player(s, ctx), ValidationError);
}

TEST_CASE("predictions move only when feedback arrives") {
    CounterRng rng = substream(4, StreamTag::Test, 0);
    DelaySchedule s = oracle::random_schedule(120, rng);
    for (const char *comp : {"oco(pftrl)", "oco(omd)", "bco(pftrl)", "two_point(omd)"}) {
        auto ctx = context(3);
        auto p = make_player(spec_of(comp, 3, 120), ctx);
        std::vector<Vector> zbar;
        std::vector<std::int64_t> updates;
        Feedback fb = [&](std::int64_t t, const Play &) {
            return payload_for(p->model(), t, 3);
        };
        drive(*p, s, fb, [&](std::int64_t) {
            zbar.push_back(p->core().z_bar());
            updates.push_back(p->core().update_count());
        });
        for (std::size_t t = 1; t < zbar.size(); ++t)
            if (updates[t] == updates[t - 1])
                CHECK((zbar[t] - zbar[t - 1]).norm() == 0.0);
    }
}

TEST_CASE("one-point wrapper with delta = r plays on the inscribed sphere") {
    auto ctx = context(3);
    auto s = spec_of("bco(pftrl)", 3);
    s.smoothing.kind = estimators::SmoothingKind::Fixed;
    s.smoothing.value = 1.0;
    s.z1 = Vector::Constant(3, 0.2);
    auto p = make_player(s, ctx);
    for (std::int64_t t = 0; t < 50; ++t) {
        Play x = p->predict(t);
        CHECK(x.x.norm() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(p->core().delta_of(t) == 1.0);
        p->receive({t, Payload(0.5), t});
    }
}

TEST_CASE("zero values leave omd at its start") {
    auto ctx = context(2);
    auto s = spec_of("bco(omd)", 2, 200);
    Vector z1(2);
    z1 << 0.3, -0.1;
    s.z1 = z1;
    auto p = make_player(s, ctx);
    CounterRng rng = substream(8, StreamTag::Test, 0);
    drive(*p, oracle::random_schedule(200, rng),
          [](std::int64_t, const Play &) { return Payload(0.0); });
    CHECK((p->core().z_bar() - z1).norm() == 0.0);
    for (const auto &c : p->core().base().ledger().c_history())
        CHECK(c.norm() == 0.0);
}

TEST_CASE("bandit predictions stay inside the ball") {
    for (const char *comp : {"bco(pftrl)", "two_point(pftrl)"}) {
        const int k = 4;
        const std::int64_t T = 10000;
        auto ctx = context(k, 5);
        auto p = make_player(spec_of(comp, k, T), ctx);
        CounterRng rng = substream(6, StreamTag::Test, 0);
        DelaySchedule s(std::vector<std::int64_t>(T, 0));
        for (std::int64_t t = 0; t < T; ++t)
            s.d[t] = std::min<std::int64_t>(static_cast<std::int64_t>(rng.below(6)), T - 1 - t);
        // large values push z-bar to the boundary
        auto plays = drive(*p, s, [&](std::int64_t t, const Play &pl) -> Payload {
            if (!pl.x2)
                return 40.0 * gradient_at(t, 1)[0];
            return std::make_pair(40.0 * gradient_at(t, 1)[0], -3.0);
        });
        std::int64_t outside = 0;
        for (const auto &pl : plays) {
            outside += !ctx.domain.contains(pl.x, 1e-12);
            if (pl.x2)
                outside += !ctx.domain.contains(*pl.x2, 1e-12);
        }
        CHECK(outside == 0);
    }
}

TEST_CASE("two-point predictions are symmetric about the shrunk center") {
    const int k = 3;
    auto ctx = context(k);
    auto s = spec_of("two_point(pftrl)", k, 300);
    Vector a(k);
    a << 0.4, -0.7, 0.2;
    CounterRng rng = substream(2, StreamTag::Test, 0);
    DelaySchedule sched = oracle::random_schedule(300, rng);
    std::vector<Vector> us;
    auto q = make_player(s, ctx);
    std::vector<std::vector<std::int64_t>> arrive(300);
    for (std::int64_t t = 0; t < 300; ++t)
        arrive[static_cast<std::size_t>(t + sched.d[t])].push_back(t);
    std::vector<Play> replay;
    for (std::int64_t t = 0; t < 300; ++t) {
        Vector zb = q->core().z_bar();
        Play pl = q->predict(t);
        double delta = q->core().delta_of(t);
        Vector sum = pl.x + *pl.x2;
        CHECK((sum - 2.0 * (1.0 - delta) * zb).norm() <= 1e-14);
        us.push_back((pl.x - *pl.x2) / (2.0 * delta));
        replay.push_back(pl);
        for (auto o : arrive[static_cast<std::size_t>(t)]) {
            const Play &po = replay[static_cast<std::size_t>(o)];
            q->receive({o, Payload(std::make_pair(a.dot(po.x), a.dot(*po.x2))), t});
        }
    }
    q->finish();
    const auto &c = q->core().base().ledger().c_history();
    const auto &fw = q->core().forwards();
    REQUIRE(c.size() == 300);
    for (std::size_t n = 0; n < c.size(); ++n) {
        const Vector &u = us[static_cast<std::size_t>(fw[n].origin)];
        Vector expect = (k * a.dot(u)) * u;
        CHECK((c[n] - expect).norm() <= 1e-9);
        CHECK(c[n].norm() <= k * a.norm() * (1 + 1e-9));
    }
}

TEST_CASE("skipping with zero delays skips nothing") {
    auto ctx = context(2);
    auto p = make_player(spec_of("skip(oco(pftrl))", 2), ctx);
    DelaySchedule zero(std::vector<std::int64_t>(30, 0));
    drive(*p, zero, [](std::int64_t t, const Play &) { return Payload(gradient_at(t, 2)); });
    auto &w = dynamic_cast<SkipWrapper &>(*p);
    CHECK(w.stats().skipped.empty());
    CHECK(w.stats().dprime == std::vector<std::int64_t>(30, 0));
    CHECK(w.stats().dropped == 0);
    CHECK(check_skip_invariants(w.stats(), zero).all());
}

TEST_CASE("skipping a single long delay") {
    // 12 rounds, round 1 delayed by 10
    std::vector<std::int64_t> d(12, 0);
    d[0] = 10;
    DelaySchedule s(d);
    auto ctx = context(2);
    auto p = make_player(spec_of("skip(oco(pftrl))", 2, 12), ctx);
    std::vector<std::int64_t> after_round;
    auto &w = dynamic_cast<SkipWrapper &>(*p);
    drive(*p, s, [](std::int64_t t, const Play &) { return Payload(gradient_at(t, 2)); },
          [&](std::int64_t) { after_round.push_back(static_cast<std::int64_t>(w.stats().skipped.size())); });
    CHECK(w.stats().skipped == std::vector<std::int64_t>{0});
    CHECK(after_round[1] == 0);
    CHECK(after_round[2] == 1);
    CHECK(w.stats().cumulative[2] == 2);
    CHECK(w.stats().dprime[0] == 2);
    CHECK(w.stats().dprime_total() == 2);
    CHECK(w.stats().dropped == 1);
    auto inv = check_skip_invariants(w.stats(), s);
    CHECK_MESSAGE(inv.all(), inv.detail);

    // the prediction-round reading d'_t <= sqrt(D_{t-1}) + 1 fails here
    const auto &st = w.stats();
    CHECK(static_cast<double>(st.dprime[0]) > 0.0 + 1.0);

    // the inner learner sees a valid schedule, the skipped round one shorter
    const auto &log = w.core().event_log();
    timeline::validate(log);
    auto seen = timeline::reconstruct_schedule(log);
    CHECK(seen.d[0] == 1);
    for (std::size_t t = 1; t < 12; ++t)
        CHECK(seen.d[t] == 0);
    CHECK(audit_duals(w.core()).ok());
}

TEST_CASE("skipping invariants on the spike instance") {
    const std::int64_t T = 400;
    std::vector<std::int64_t> d(T, 0);
    for (std::int64_t t = 0; t < 20; ++t)
        d[t] = T - 1 - t;
    DelaySchedule s(d);
    auto ctx = context(2);
    auto p = make_player(spec_of("skip(oco(omd))", 2, T), ctx);
    drive(*p, s, [](std::int64_t t, const Play &) { return Payload(gradient_at(t, 2)); });
    auto &w = dynamic_cast<SkipWrapper &>(*p);
    auto inv = check_skip_invariants(w.stats(), s);
    CHECK_MESSAGE(inv.all(), inv.detail);
    CHECK(w.stats().skipped.size() == 20);
    CHECK(w.stats().dropped == 20);
    const auto q = static_cast<std::int64_t>(w.stats().skipped.size());
    CHECK(q * q <= 4 * w.stats().dprime_total());
    CHECK(w.stats().dprime_total() < s.total());
    timeline::validate(w.core().event_log());
    CHECK(audit_duals(w.core()).ok());
}

TEST_CASE("skipping invariants on random schedules") {
    for (std::uint64_t rep = 0; rep < 200; ++rep) {
        CounterRng rng = substream(rep, StreamTag::Test, 17);
        std::int64_t T = 2 + static_cast<std::int64_t>(rng.below(150));
        DelaySchedule s = oracle::random_schedule(T, rng);
        for (const char *comp : {"skip(oco(pftrl))", "skip(bco(omd))", "skip(two_point(pftrl))"}) {
            auto ctx = context(2, rep);
            auto p = make_player(spec_of(comp, 2, T), ctx);
            std::int64_t delivered = 0;
            drive(*p, s, [&](std::int64_t t, const Play &) {
                ++delivered;
                return payload_for(p->model(), t, 2);
            });
            auto &w = dynamic_cast<SkipWrapper &>(*p);
            auto inv = check_skip_invariants(w.stats(), s);
            CHECK_MESSAGE(inv.all(), inv.detail);
            CHECK(delivered == T);
            CHECK(static_cast<std::int64_t>(w.stats().skipped.size()) == w.stats().dropped);
            CHECK(w.core().update_count() == T);
            timeline::validate(w.core().event_log());
            CHECK(audit_duals(w.core()).ok());
        }
    }
}

TEST_CASE("skip wrapper errors") {
    auto ctx = context(2);
    auto p = make_player(spec_of("skip(oco(pftrl))", 2), ctx);
    p->predict(0);
    CHECK_THROWS_AS(p->predict(0), ValidationError);
    CHECK_THROWS_AS(p->predict(2), ValidationError);
    CHECK_THROWS_AS(p->receive({1, Payload(Vector(Vector::Zero(2))), 0}), ValidationError);
    p->receive({0, Payload(Vector(Vector::Zero(2))), 0});
    CHECK_THROWS_AS(p->receive({0, Payload(Vector(Vector::Zero(2))), 0}), ValidationError);
    p->predict(1);
    CHECK_THROWS_AS(p->finish(), CheckFailure);
}

TEST_CASE("zero payloads per feedback model") {
    CHECK(std::get<Vector>(zero_payload(FeedbackModel::Gradient, 3)).norm() == 0.0);
    CHECK(std::get<double>(zero_payload(FeedbackModel::Value, 3)) == 0.0);
    auto pr = std::get<std::pair<double, double>>(zero_payload(FeedbackModel::TwoValues, 3));
    CHECK(pr.first == 0.0);
    CHECK(pr.second == 0.0);
}

TEST_CASE("composition strings") {
    auto c = parse_composition("skip(oco(pftrl))");
    CHECK(c.skip);
    CHECK(c.model == FeedbackModel::Gradient);
    CHECK(c.learner == olo::LearnerKind::Pftrl);
    c = parse_composition(" bco ( omd ) ");
    CHECK_FALSE(c.skip);
    CHECK(c.model == FeedbackModel::Value);
    CHECK(c.learner == olo::LearnerKind::Omd);
    CHECK(to_string(parse_composition("skip(two_point(omd))")) == "skip(two_point(omd))");
    CHECK_THROWS_WITH_AS(parse_composition("sgd(pftrl)"), doctest::Contains("sgd(pftrl)"),
                         ValidationError);
    CHECK_THROWS_WITH_AS(parse_composition("oco(adam)"), doctest::Contains("adam"),
                         ValidationError);
    CHECK_THROWS_AS(parse_composition("oco(pftrl"), ValidationError);
}
