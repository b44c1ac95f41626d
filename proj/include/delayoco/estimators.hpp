#pragma once

#include "delayoco/common.hpp"
#include "delayoco/losses.hpp"
#include "delayoco/rng.hpp"

#include <cstdint>
#include <string>

namespace delayoco::estimators {

// Gaussian draw normalized; the zero vector is redrawn.
Vector sample_sphere(CounterRng &rng, int k);
// Sphere sample scaled by U^{1/k}.
Vector sample_ball(CounterRng &rng, int k);

// (k / delta) f u
Vector one_point_estimate(double f_value, double delta, const Vector &u, int k);
// (k / (2 delta)) (f_plus - f_minus) u
Vector two_point_estimate(double f_plus, double f_minus, double delta,
                          const Vector &u, int k);

struct MonteCarlo {
    double mean = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
};

// Estimate of f^delta(x) = E f(x + delta v), v uniform in the unit ball.
MonteCarlo smoothed_value(const losses::LossFamily &f, std::int64_t t,
                          const Vector &x, double delta, std::int64_t samples,
                          CounterRng &rng);

enum class SmoothingKind {
    BcoConvex,        // r min{1, sqrt(nu k) / t^{1/4}}
    BcoStrongly,      // r min{1, (nu^2 k^2 ln t / t)^{1/3}}
    TwoPointConvex,   // r / sqrt(t)
    TwoPointStrongly, // r / t
    Fixed,            // constant over the horizon
};

struct SmoothingSchedule {
    SmoothingKind kind = SmoothingKind::BcoConvex;
    double r = 1.0;
    double nu = 1.0;
    int k = 1;
    // Fixed: `value` if positive, otherwise the bco_convex formula at t = T.
    std::int64_t horizon = 0;
    double value = 0.0;

    // t is the 1-based round; real-valued t is accepted for formula checks.
    double delta_at(double t) const;
};

SmoothingKind parse_smoothing(const std::string &name);
std::string to_string(SmoothingKind k);
void validate(const SmoothingSchedule &s);

} // namespace delayoco::estimators
