#pragma once

#include "delayoco/common.hpp"
#include "delayoco/geometry.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace delayoco::olo {

// (c_n, lambda_n, nu_n) revealed at update n.
struct UpdatePacket {
    Vector c;
    std::int64_t lag = 0;
    std::int64_t outstanding = 0;
};

// Bookkeeping of the drift-penalized game. Updates are 1-based in the
// formulas; index n - 1 in the arrays.
class DriftRegretLedger {
  public:
    explicit DriftRegretLedger(bool diagnostics = false)
        : diagnostics_(diagnostics) {}

    void start(const Vector &z1);
    // z_n is the iterate in force when update n arrives
    void record(const UpdatePacket &p, double eta, const Vector &z_next);

    std::int64_t updates() const { return static_cast<std::int64_t>(lag_.size()); }
    bool diagnostics() const { return diagnostics_; }

    // z_1 .. z_{N+1}
    const std::vector<Vector> &z_history() const { return z_; }
    const std::vector<double> &eta_history() const { return eta_; }
    const std::vector<std::int64_t> &lags() const { return lag_; }
    const std::vector<std::int64_t> &outstanding() const { return nu_; }
    // per-term arrays, empty unless diagnostics are on
    const std::vector<Vector> &c_history() const { return c_; }
    const std::vector<double> &drift_terms() const { return drift_terms_; }
    const std::vector<double> &h_eta_terms() const { return h_terms_; }

    // R_N(u) = sum <c_n, z_n - u>
    double linear_regret(const Vector &u) const;
    double drift() const { return drift_; }
    double h_eta() const { return h_eta_; }
    const Vector &c_sum() const { return c_sum_; }

  private:
    bool diagnostics_;
    std::vector<Vector> z_;
    std::vector<double> eta_;
    std::vector<std::int64_t> lag_, nu_;
    std::vector<Vector> c_;
    std::vector<double> drift_terms_, h_terms_;
    double cz_ = 0.0;
    Vector c_sum_;
    double drift_ = 0.0;
    double h_eta_ = 0.0;
};

// R_N(u) + W * D_N
double evaluate_drift_regret(const DriftRegretLedger &ledger, const Vector &u,
                             double W);

enum class LearnerKind { Pftrl, Omd };

class Learner {
  public:
    Learner(geometry::Domain domain, Vector z1, bool diagnostics);
    virtual ~Learner() = default;

    const Vector &current() const { return z_; }
    const geometry::Domain &domain() const { return domain_; }
    const DriftRegretLedger &ledger() const { return ledger_; }
    std::int64_t updates() const { return ledger_.updates(); }
    virtual LearnerKind kind() const = 0;

    // Applies update n with its learning rate eta_n and returns z_{n+1}.
    const Vector &step(const UpdatePacket &p, double eta);

  protected:
    virtual Vector advance(const UpdatePacket &p, double eta) = 0;

    geometry::Domain domain_;
    Vector z_;
    DriftRegretLedger ledger_;
    double last_eta_ = INFINITY;
};

// argmin_z sum_m alpha_m/2 |z - z_m|^2 + <C, z> in closed form:
// z_{n+1} = Proj((S - C) / A) with A = 1/eta_n, S = sum alpha_m z_m.
class PftrlLearner final : public Learner {
  public:
    PftrlLearner(geometry::Domain domain, Vector z1, bool diagnostics = false);
    LearnerKind kind() const override { return LearnerKind::Pftrl; }
    double A() const { return A_; }
    const Vector &S() const { return S_; }
    const Vector &C() const { return C_; }

  private:
    Vector advance(const UpdatePacket &p, double eta) override;
    double A_ = 0.0; // 1/eta_0 = 0
    Vector S_, C_;
};

// z_{n+1} = Proj(z_n - eta_n c_n)
class OmdLearner final : public Learner {
  public:
    OmdLearner(geometry::Domain domain, Vector z1, bool diagnostics = false);
    LearnerKind kind() const override { return LearnerKind::Omd; }

  private:
    Vector advance(const UpdatePacket &p, double eta) override;
};

std::unique_ptr<Learner> make_learner(LearnerKind kind, const geometry::Domain &K,
                                      const Vector &z1, bool diagnostics = false);
LearnerKind parse_learner(const std::string &name);
std::string to_string(LearnerKind k);

double lr_general(std::int64_t n, std::int64_t prefix_sigma_star, double D, double G);
double lr_strongly(std::int64_t n, double lambda);
// prefix_delta_terms = sum_m (nu k r / delta'_m)^2
double lr_bco(std::int64_t n, std::int64_t prefix_sigma_star,
              double prefix_delta_terms, double D, double G);
double lr_bco_term(double nu, int k, double r, double delta_prime);
double lr_2p(std::int64_t n, std::int64_t prefix_sigma_star, double D, double G, int k);

enum class ScheduleKind { General, StronglyConvex, Bco, TwoPoint, Fixed };

struct ScheduleParams {
    double D = 1.0, G = 1.0, lambda = 0.0, nu = 1.0, r = 1.0;
    int k = 1;
};

struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::General;
    double fixed = 0.0;
};

ScheduleSpec parse_schedule(const std::string &text); // "general", "fixed:0.1", ...
std::string to_string(const ScheduleSpec &s);

// Stateful: consumes sigma~*_n (and delta'_n for the bandit schedule) at
// each update and returns eta_n.
class LearningRate {
  public:
    LearningRate(ScheduleSpec spec, ScheduleParams params);
    double next(std::int64_t sigma_star, double delta_prime = 0.0);
    std::int64_t n() const { return n_; }
    std::int64_t prefix_sigma_star() const { return prefix_sigma_; }
    const ScheduleSpec &spec() const { return spec_; }

  private:
    ScheduleSpec spec_;
    ScheduleParams p_;
    std::int64_t n_ = 0;
    std::int64_t prefix_sigma_ = 0;
    double prefix_delta_ = 0.0;
};

} // namespace delayoco::olo
