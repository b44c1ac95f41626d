#pragma once

#include "delayoco/common.hpp"
#include "delayoco/geometry.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace delayoco::losses {

// f_t(x) = <a_t, x>, a_t = mean + noise * u_t with u_t uniform on the sphere,
// or a_t = fixed[t mod size] when `fixed` is non-empty.
struct LinearSpec {
    Vector mean;
    double noise = 0.0;
    std::vector<Vector> fixed;
};

// f_t(x) = lambda/2 |x - theta_t|^2 + <b_t, x>,
// theta_t = center + spread * (uniform point of the unit ball),
// b_t = b_mean + b_noise * u_t.
struct QuadraticSpec {
    double lambda = 1.0;
    Vector center;
    double spread = 0.0;
    Vector b_mean; // empty means zero
    double b_noise = 0.0;
    std::vector<Vector> fixed_theta;
};

// f_t(x) = scale * huber_w(<u, x> - theta_t), theta_t = offset + spread * U[-1,1].
// huber_w(s) = s^2/(2w) for |s| <= w, |s| - w/2 otherwise.
struct PiecewiseSpec {
    double scale = 1.0;
    Vector direction;
    double offset = 0.0;
    double spread = 0.0;
    double width = 0.0; // <= 0 selects 1e-3 * D
    std::vector<double> fixed_theta;
};

using Component = std::variant<LinearSpec, QuadraticSpec, PiecewiseSpec>;

struct Constants {
    double G = 0.0;
    double M = 0.0;
    double lambda = 0.0;
};

// One materialized round.
struct RoundLoss {
    struct Linear {
        Vector a;
    };
    struct Quadratic {
        double lambda;
        Vector theta, b;
    };
    struct Huber {
        double scale;
        Vector u;
        double theta, width;
    };
    std::vector<std::variant<Linear, Quadratic, Huber>> terms;

    double value(const Vector &x) const;
    Vector grad(const Vector &x) const;
};

class LossFamily {
  public:
    LossFamily(geometry::Domain domain, std::vector<Component> components,
               Constants constants, std::uint64_t seed);

    const geometry::Domain &domain() const { return domain_; }
    const std::vector<Component> &components() const { return components_; }
    const Constants &constants() const { return constants_; }
    double G() const { return constants_.G; }
    double M() const { return constants_.M; }
    double lambda() const { return constants_.lambda; }
    std::uint64_t seed() const { return seed_; }
    int dim() const { return domain_.dim(); }
    std::string kind() const;
    // smoothness ratio nu = M / (G r)
    double nu() const { return constants_.M / (constants_.G * domain_.r()); }

    // Depends on (seed, t) only.
    RoundLoss round(std::int64_t t) const;
    double value(std::int64_t t, const Vector &x) const;
    Vector grad(std::int64_t t, const Vector &x) const;

    LossFamily with_seed(std::uint64_t seed) const;

  private:
    void check_point(const Vector &x) const;

    geometry::Domain domain_;
    std::vector<Component> components_;
    Constants constants_;
    std::uint64_t seed_;
};

// Upper bounds on sup |grad| and sup |f| over the domain from the specs.
Constants analytic_constants(const geometry::Domain &K,
                             const std::vector<Component> &components);

// Samples (t, x) pairs and checks G, M and strong convexity; throws
// ValidationError naming the violated constant.
void validate_constants(const LossFamily &f, std::int64_t T, int samples = 10000,
                        std::uint64_t seed = 0);

// Sum over t < T of f_t, kept as sufficient statistics.
class Aggregate {
  public:
    Aggregate(const LossFamily &f, std::int64_t T);
    double value(const Vector &x) const;
    Vector grad(const Vector &x) const;
    std::int64_t T() const { return T_; }

  private:
    struct Huber {
        double scale, width;
        Vector u;
        std::vector<double> theta;  // sorted
        std::vector<double> pre1, pre2; // prefix sums of theta, theta^2
        double value(double s) const;
        double deriv(double s) const;
    };
    std::int64_t T_;
    Vector lin_;           // sum a_t + sum b_t
    double quad_lambda_ = 0.0; // sum of lambda over rounds and terms
    Vector quad_center_;   // sum lambda theta
    double quad_const_ = 0.0; // sum lambda/2 |theta|^2
    std::vector<Huber> hubers_;
};

struct Comparator {
    Vector x;
    double total = 0.0;
    bool converged = false;
    long iterations = 0;
    double grad_map_norm = 0.0;
};

struct ComparatorOptions {
    long max_iterations = 100000;
    double eps_scale = 1e-8; // eps_opt = eps_scale * T * G * D
};

Comparator best_in_hindsight(const LossFamily &f, std::int64_t T,
                             const ComparatorOptions &opt = {});

double huber(double s, double w);
double huber_deriv(double s, double w);

} // namespace delayoco::losses
