#include "delayoco/base_olo.hpp"

#include <cmath>

namespace delayoco::olo {

void DriftRegretLedger::start(const Vector &z1) {
    z_.assign(1, z1);
    c_sum_ = Vector::Zero(z1.size());
}

void DriftRegretLedger::record(const UpdatePacket &p, double eta,
                               const Vector &z_next) {
    const auto n = static_cast<std::int64_t>(lag_.size()) + 1;
    require(p.lag >= 0 && p.lag <= n - 1,
            "ledger: lag " + std::to_string(p.lag) + " at update " +
                std::to_string(n) + " exceeds n - 1");
    const Vector &zn = z_.back();
    const auto back = static_cast<std::size_t>(n - 1 - p.lag);
    double dterm = (z_[back] - zn).norm();
    double hterm = p.lag == 0 ? 0.0 : 1.0 - eta / eta_[back];
    cz_ += p.c.dot(zn);
    c_sum_ += p.c;
    drift_ += dterm;
    h_eta_ += hterm;
    eta_.push_back(eta);
    lag_.push_back(p.lag);
    nu_.push_back(p.outstanding);
    if (diagnostics_) {
        c_.push_back(p.c);
        drift_terms_.push_back(dterm);
        h_terms_.push_back(hterm);
    }
    z_.push_back(z_next);
}

double DriftRegretLedger::linear_regret(const Vector &u) const {
    return cz_ - c_sum_.dot(u);
}

double evaluate_drift_regret(const DriftRegretLedger &ledger, const Vector &u,
                             double W) {
    return ledger.linear_regret(u) + W * ledger.drift();
}

Learner::Learner(geometry::Domain domain, Vector z1, bool diagnostics)
    : domain_(std::move(domain)), z_(std::move(z1)), ledger_(diagnostics) {
    require(z_.size() == domain_.dim(), "learner: z1 dimension mismatch");
    require(domain_.contains(z_, 1e-12), "learner: z1 outside the domain");
    ledger_.start(z_);
}

const Vector &Learner::step(const UpdatePacket &p, double eta) {
    require(p.c.size() == domain_.dim(), "learner: loss vector dimension mismatch");
    require(p.c.allFinite(), "learner: non-finite loss vector");
    require(std::isfinite(eta) && eta > 0, "learner: eta must be positive");
    require(eta <= last_eta_, "learner: learning rate increased at update " +
                                  std::to_string(updates() + 1));
    Vector next = advance(p, eta);
    ledger_.record(p, eta, next);
    z_ = std::move(next);
    last_eta_ = eta;
    return z_;
}

PftrlLearner::PftrlLearner(geometry::Domain domain, Vector z1, bool diagnostics)
    : Learner(std::move(domain), std::move(z1), diagnostics) {
    S_ = Vector::Zero(z_.size());
    C_ = Vector::Zero(z_.size());
}

Vector PftrlLearner::advance(const UpdatePacket &p, double eta) {
    const double a_next = 1.0 / eta;
    S_ += (a_next - A_) * z_;
    A_ = a_next;
    C_ += p.c;
    return geometry::project(domain_, (S_ - C_) / A_);
}

OmdLearner::OmdLearner(geometry::Domain domain, Vector z1, bool diagnostics)
    : Learner(std::move(domain), std::move(z1), diagnostics) {}

Vector OmdLearner::advance(const UpdatePacket &p, double eta) {
    if (p.c.isZero(0.0))
        return z_;
    return geometry::project(domain_, z_ - eta * p.c);
}

std::unique_ptr<Learner> make_learner(LearnerKind kind, const geometry::Domain &K,
                                      const Vector &z1, bool diagnostics) {
    if (kind == LearnerKind::Pftrl)
        return std::make_unique<PftrlLearner>(K, z1, diagnostics);
    return std::make_unique<OmdLearner>(K, z1, diagnostics);
}

LearnerKind parse_learner(const std::string &name) {
    if (name == "pftrl")
        return LearnerKind::Pftrl;
    if (name == "omd")
        return LearnerKind::Omd;
    throw ValidationError("unknown learner `" + name + "` (pftrl | omd)");
}

std::string to_string(LearnerKind k) {
    return k == LearnerKind::Pftrl ? "pftrl" : "omd";
}

double lr_general(std::int64_t n, std::int64_t prefix_sigma_star, double D, double G) {
    return (D / G) / std::sqrt(static_cast<double>(n + prefix_sigma_star));
}

double lr_strongly(std::int64_t n, double lambda) {
    return 1.0 / (static_cast<double>(n) * lambda);
}

double lr_bco_term(double nu, int k, double r, double delta_prime) {
    double q = nu * k * r / delta_prime;
    return q * q;
}

double lr_bco(std::int64_t n, std::int64_t prefix_sigma_star,
              double prefix_delta_terms, double D, double G) {
    return (D / G) / std::sqrt(static_cast<double>(n + prefix_sigma_star) +
                               prefix_delta_terms);
}

double lr_2p(std::int64_t n, std::int64_t prefix_sigma_star, double D, double G,
             int k) {
    return (D / G) / std::sqrt(static_cast<double>(n * k + prefix_sigma_star));
}

ScheduleSpec parse_schedule(const std::string &text) {
    if (text == "general")
        return {ScheduleKind::General, 0.0};
    if (text == "strongly_convex")
        return {ScheduleKind::StronglyConvex, 0.0};
    if (text == "bco")
        return {ScheduleKind::Bco, 0.0};
    if (text == "two_point")
        return {ScheduleKind::TwoPoint, 0.0};
    if (text.rfind("fixed:", 0) == 0) {
        double v = 0.0;
        try {
            v = std::stod(text.substr(6));
        } catch (const std::exception &) {
            throw ValidationError("schedule `" + text + "`: bad fixed value");
        }
        require(std::isfinite(v) && v > 0, "schedule: fixed value must be positive");
        return {ScheduleKind::Fixed, v};
    }
    throw ValidationError("unknown schedule `" + text +
                          "` (general | strongly_convex | bco | two_point | "
                          "fixed:<value>)");
}

std::string to_string(const ScheduleSpec &s) {
    switch (s.kind) {
    case ScheduleKind::General:
        return "general";
    case ScheduleKind::StronglyConvex:
        return "strongly_convex";
    case ScheduleKind::Bco:
        return "bco";
    case ScheduleKind::TwoPoint:
        return "two_point";
    case ScheduleKind::Fixed:
        break;
    }
    return "fixed:" + std::to_string(s.fixed);
}

LearningRate::LearningRate(ScheduleSpec spec, ScheduleParams params)
    : spec_(spec), p_(params) {
    require(p_.D > 0 && p_.G > 0, "schedule: D and G must be positive");
    if (spec_.kind == ScheduleKind::StronglyConvex)
        require(p_.lambda > 0, "schedule: strongly_convex requires lambda > 0");
    if (spec_.kind == ScheduleKind::Bco)
        require(p_.nu > 0 && p_.r > 0 && p_.k >= 1,
                "schedule: bco requires nu, r > 0 and k >= 1");
}

double LearningRate::next(std::int64_t sigma_star, double delta_prime) {
    require(sigma_star >= 0, "schedule: negative dual backlog");
    ++n_;
    prefix_sigma_ += sigma_star;
    switch (spec_.kind) {
    case ScheduleKind::General:
        return lr_general(n_, prefix_sigma_, p_.D, p_.G);
    case ScheduleKind::StronglyConvex:
        return lr_strongly(n_, p_.lambda);
    case ScheduleKind::Bco:
        require(delta_prime > 0, "schedule: bco needs the arrival-round delta");
        prefix_delta_ += lr_bco_term(p_.nu, p_.k, p_.r, delta_prime);
        return lr_bco(n_, prefix_sigma_, prefix_delta_, p_.D, p_.G);
    case ScheduleKind::TwoPoint:
        return lr_2p(n_, prefix_sigma_, p_.D, p_.G, p_.k);
    case ScheduleKind::Fixed:
        break;
    }
    return spec_.fixed;
}

} // namespace delayoco::olo
