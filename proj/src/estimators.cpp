#include "delayoco/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace delayoco::estimators {

Vector sample_sphere(CounterRng &rng, int k) {
    require(k >= 1, "sample_sphere: k must be at least 1");
    return random_unit_vector(rng, k);
}

Vector sample_ball(CounterRng &rng, int k) {
    Vector u = sample_sphere(rng, k);
    return std::pow(rng.uniform(), 1.0 / k) * u;
}

Vector one_point_estimate(double f_value, double delta, const Vector &u, int k) {
    require(delta > 0, "one_point_estimate: delta must be positive");
    return (static_cast<double>(k) / delta * f_value) * u;
}

Vector two_point_estimate(double f_plus, double f_minus, double delta,
                          const Vector &u, int k) {
    require(delta > 0, "two_point_estimate: delta must be positive");
    return (static_cast<double>(k) / (2.0 * delta) * (f_plus - f_minus)) * u;
}

MonteCarlo smoothed_value(const losses::LossFamily &f, std::int64_t t,
                          const Vector &x, double delta, std::int64_t samples,
                          CounterRng &rng) {
    require(samples >= 100, "smoothed_value: need at least 100 samples");
    require(delta > 0, "smoothed_value: delta must be positive");
    const auto &K = f.domain();
    const double factor = 1.0 - delta / K.r();
    require(factor >= 0, "smoothed_value: delta exceeds r");
    if (factor > 0)
        require(K.distance(x / factor) <= 1e-9,
                "smoothed_value: x outside the shrunk domain");
    else
        require(x.norm() <= 1e-12, "smoothed_value: x must be the origin");
    losses::RoundLoss L = f.round(t);
    const int k = f.dim();
    // Welford keeps the variance accurate for large sample counts
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t i = 0; i < samples; ++i) {
        double v = L.value(x + delta * sample_ball(rng, k));
        double d1 = v - mean;
        mean += d1 / static_cast<double>(i + 1);
        m2 += d1 * (v - mean);
    }
    double var = m2 / static_cast<double>(samples - 1);
    return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

double SmoothingSchedule::delta_at(double t) const {
    require(t >= 1, "delta_at: rounds start at 1");
    switch (kind) {
    case SmoothingKind::BcoConvex:
        return r * std::min(1.0, std::sqrt(nu * k) / std::pow(t, 0.25));
    case SmoothingKind::BcoStrongly: {
        // ln t / t rises on [1, e]; holding t at e keeps delta positive
        // and non-increasing
        double te = std::max(t, std::numbers::e);
        double q = nu * nu * k * k * std::log(te) / te;
        return r * std::min(1.0, std::cbrt(q));
    }
    case SmoothingKind::TwoPointConvex:
        return r / std::sqrt(t);
    case SmoothingKind::TwoPointStrongly:
        return r / t;
    case SmoothingKind::Fixed:
        break;
    }
    if (value > 0)
        return value;
    const double T = static_cast<double>(horizon);
    return r * std::min(1.0, std::sqrt(nu * k) / std::pow(T, 0.25));
}

SmoothingKind parse_smoothing(const std::string &name) {
    if (name == "bco_convex")
        return SmoothingKind::BcoConvex;
    if (name == "bco_strongly")
        return SmoothingKind::BcoStrongly;
    if (name == "twopoint_convex")
        return SmoothingKind::TwoPointConvex;
    if (name == "twopoint_strongly")
        return SmoothingKind::TwoPointStrongly;
    if (name == "fixed")
        return SmoothingKind::Fixed;
    throw ValidationError("unknown smoothing kind `" + name +
                          "` (bco_convex | bco_strongly | twopoint_convex | "
                          "twopoint_strongly | fixed)");
}

std::string to_string(SmoothingKind k) {
    switch (k) {
    case SmoothingKind::BcoConvex:
        return "bco_convex";
    case SmoothingKind::BcoStrongly:
        return "bco_strongly";
    case SmoothingKind::TwoPointConvex:
        return "twopoint_convex";
    case SmoothingKind::TwoPointStrongly:
        return "twopoint_strongly";
    case SmoothingKind::Fixed:
        break;
    }
    return "fixed";
}

void validate(const SmoothingSchedule &s) {
    require(s.r > 0 && std::isfinite(s.r), "smoothing: r must be positive");
    require(s.nu > 0 && std::isfinite(s.nu), "smoothing: nu must be positive");
    require(s.k >= 1, "smoothing: k must be at least 1");
    if (s.kind == SmoothingKind::Fixed) {
        if (s.value > 0)
            require(s.value <= s.r, "smoothing: fixed value must lie in (0, r]");
        else
            require(s.horizon >= 1, "smoothing: fixed needs the horizon T");
    }
}

} // namespace delayoco::estimators
