#include "delayoco/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace delayoco::geometry {

namespace {

void check_finite(const Vector &v, const char *what) {
    require(v.allFinite(), std::string("domain: non-finite ") + what);
}

} // namespace

Domain Domain::ball(Vector center, double radius, Radii declared) {
    require(center.size() >= 1, "domain: dimension must be at least 1");
    check_finite(center, "center");
    require(std::isfinite(radius) && radius > 0,
            "domain: ball radius must be positive");
    Domain K;
    K.dim_ = static_cast<int>(center.size());
    K.shape_ = Ball{std::move(center), radius};
    K.finish(declared);
    return K;
}

Domain Domain::ball(int dim, double radius, Radii declared) {
    require(dim >= 1, "domain: dimension must be at least 1");
    return ball(Vector::Zero(dim), radius, declared);
}

Domain Domain::box(Vector lo, Vector hi, Radii declared) {
    require(lo.size() >= 1 && lo.size() == hi.size(),
            "domain: box bounds must have equal positive dimension");
    check_finite(lo, "lo");
    check_finite(hi, "hi");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
        require(lo[i] < hi[i], "domain: box needs lo < hi in coordinate " +
                                   std::to_string(i));
    Domain K;
    K.dim_ = static_cast<int>(lo.size());
    K.shape_ = Box{std::move(lo), std::move(hi)};
    K.finish(declared);
    return K;
}

double Domain::true_diameter() const {
    if (auto b = as_ball())
        return 2.0 * b->radius;
    auto x = as_box();
    return (x->hi - x->lo).norm();
}

double Domain::true_inradius() const {
    if (auto b = as_ball())
        return b->radius - b->center.norm();
    auto x = as_box();
    double r = std::min((-x->lo).minCoeff(), x->hi.minCoeff());
    return r;
}

double Domain::true_outradius() const {
    if (auto b = as_ball())
        return b->radius + b->center.norm();
    auto x = as_box();
    return x->lo.cwiseAbs().cwiseMax(x->hi.cwiseAbs()).norm();
}

void Domain::finish(const Radii &declared) {
    const double D = true_diameter(), r = true_inradius(), R = true_outradius();
    require(r > 0, "domain: must contain a ball around the origin (r > 0)");
    D_ = declared.D.value_or(D);
    r_ = declared.r.value_or(r);
    R_ = declared.R.value_or(R);
    const double eps = 1e-12 * std::max(1.0, R);
    require(D_ >= D - eps, "domain: declared D below the true diameter");
    require(r_ > 0 && r_ <= r + eps,
            "domain: declared r must be in (0, true inradius]");
    require(R_ >= R - eps, "domain: declared R below the true outer radius");
    require(r_ <= R_, "domain: need r <= R");
}

bool Domain::contains(const Vector &x, double tol) const {
    return x.size() == dim_ && distance(x) <= tol;
}

double Domain::distance(const Vector &x) const {
    require(x.size() == dim_, "domain: dimension mismatch");
    if (auto b = as_ball())
        return std::max(0.0, (x - b->center).norm() - b->radius);
    auto bx = as_box();
    Vector clamped = x.cwiseMax(bx->lo).cwiseMin(bx->hi);
    return (x - clamped).norm();
}

Vector Domain::center() const {
    if (auto b = as_ball())
        return b->center;
    auto bx = as_box();
    return 0.5 * (bx->lo + bx->hi);
}

Vector Domain::sample(CounterRng &rng) const {
    if (auto b = as_ball()) {
        Vector u = random_unit_vector(rng, dim_);
        double scale = b->radius * std::pow(rng.uniform(), 1.0 / dim_);
        return b->center + scale * u;
    }
    auto bx = as_box();
    Vector x(dim_);
    for (int i = 0; i < dim_; ++i)
        x[i] = bx->lo[i] + (bx->hi[i] - bx->lo[i]) * rng.uniform();
    return x;
}

Vector project(const Domain &K, const Vector &x) {
    require(x.size() == K.dim(), "project: dimension mismatch (" +
                                     std::to_string(x.size()) + " vs " +
                                     std::to_string(K.dim()) + ")");
    if (auto b = K.as_ball()) {
        Vector v = x - b->center;
        double n = v.norm();
        if (n <= b->radius)
            return x;
        return b->center + (b->radius / n) * v;
    }
    auto bx = K.as_box();
    return x.cwiseMax(bx->lo).cwiseMin(bx->hi);
}

ShrinkMap shrink(const Domain &K, double factor) {
    require(factor >= 0.0 && factor <= 1.0, "shrink: factor must lie in [0, 1]");
    return ShrinkMap{factor, (1.0 - factor) * K.r()};
}

ShrinkMap shrink_for_delta(const Domain &K, double delta) {
    require(delta > 0.0 && delta <= K.r(), "shrink: delta must lie in (0, r]");
    return ShrinkMap{1.0 - delta / K.r(), delta};
}

} // namespace delayoco::geometry
