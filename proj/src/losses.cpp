#include "delayoco/losses.hpp"

#include "delayoco/rng.hpp"

#include <algorithm>
#include <cmath>

namespace delayoco::losses {

double huber(double s, double w) {
    double a = std::abs(s);
    return a <= w ? s * s / (2.0 * w) : a - 0.5 * w;
}

double huber_deriv(double s, double w) {
    return std::clamp(s / w, -1.0, 1.0);
}

double RoundLoss::value(const Vector &x) const {
    double v = 0.0;
    for (const auto &term : terms) {
        if (auto p = std::get_if<Linear>(&term))
            v += p->a.dot(x);
        else if (auto q = std::get_if<Quadratic>(&term))
            v += 0.5 * q->lambda * (x - q->theta).squaredNorm() + q->b.dot(x);
        else {
            auto &h = std::get<Huber>(term);
            v += h.scale * huber(h.u.dot(x) - h.theta, h.width);
        }
    }
    return v;
}

Vector RoundLoss::grad(const Vector &x) const {
    Vector g = Vector::Zero(x.size());
    for (const auto &term : terms) {
        if (auto p = std::get_if<Linear>(&term))
            g += p->a;
        else if (auto q = std::get_if<Quadratic>(&term))
            g += q->lambda * (x - q->theta) + q->b;
        else {
            auto &h = std::get<Huber>(term);
            g += (h.scale * huber_deriv(h.u.dot(x) - h.theta, h.width)) * h.u;
        }
    }
    return g;
}

namespace {

Vector sphere(CounterRng &rng, int k) { return random_unit_vector(rng, k); }

Vector or_zero(const Vector &v, int k) {
    return v.size() == 0 ? Vector::Zero(k) : v;
}

} // namespace

LossFamily::LossFamily(geometry::Domain domain, std::vector<Component> components,
                       Constants constants, std::uint64_t seed)
    : domain_(std::move(domain)), components_(std::move(components)),
      constants_(constants), seed_(seed) {
    const int k = domain_.dim();
    require(!components_.empty(), "losses: family needs at least one component");
    require(std::isfinite(constants_.G) && constants_.G > 0,
            "losses: G must be positive");
    require(std::isfinite(constants_.M) && constants_.M >= 0,
            "losses: M must be non-negative");
    require(std::isfinite(constants_.lambda) && constants_.lambda >= 0,
            "losses: lambda must be non-negative");
    for (auto &c : components_) {
        if (auto p = std::get_if<LinearSpec>(&c)) {
            p->mean = or_zero(p->mean, k);
            require(p->mean.size() == k, "losses: linear mean dimension mismatch");
            require(p->noise >= 0, "losses: linear noise must be non-negative");
            for (const auto &a : p->fixed)
                require(a.size() == k, "losses: linear fixed vector dimension");
        } else if (auto q = std::get_if<QuadraticSpec>(&c)) {
            q->center = or_zero(q->center, k);
            q->b_mean = or_zero(q->b_mean, k);
            require(q->lambda >= 0, "losses: quadratic lambda must be >= 0");
            require(q->center.size() == k && q->b_mean.size() == k,
                    "losses: quadratic dimension mismatch");
            require(q->spread >= 0 && q->b_noise >= 0,
                    "losses: quadratic spread/noise must be >= 0");
            for (const auto &th : q->fixed_theta)
                require(th.size() == k, "losses: quadratic fixed theta dimension");
        } else {
            auto &h = std::get<PiecewiseSpec>(c);
            if (h.direction.size() == 0) {
                h.direction = Vector::Zero(k);
                h.direction[0] = 1.0;
            }
            require(h.direction.size() == k,
                    "losses: piecewise direction dimension mismatch");
            double n = h.direction.norm();
            require(n > 0, "losses: piecewise direction must be non-zero");
            h.direction /= n;
            if (h.width <= 0)
                h.width = 1e-3 * domain_.D();
            require(h.scale >= 0 && h.spread >= 0,
                    "losses: piecewise scale/spread must be >= 0");
        }
    }
}

std::string LossFamily::kind() const {
    if (components_.size() > 1)
        return "mixed";
    const auto &c = components_.front();
    if (std::holds_alternative<LinearSpec>(c))
        return "linear";
    if (std::holds_alternative<QuadraticSpec>(c))
        return "quadratic";
    return "piecewise";
}

RoundLoss LossFamily::round(std::int64_t t) const {
    require(t >= 0, "losses: negative round");
    const int k = domain_.dim();
    CounterRng rng = substream(seed_, StreamTag::Losses, static_cast<std::uint64_t>(t));
    RoundLoss out;
    out.terms.reserve(components_.size());
    for (const auto &c : components_) {
        if (auto p = std::get_if<LinearSpec>(&c)) {
            Vector a;
            if (!p->fixed.empty())
                a = p->fixed[static_cast<std::size_t>(t) % p->fixed.size()];
            else if (p->noise > 0)
                a = p->mean + p->noise * sphere(rng, k);
            else
                a = p->mean;
            out.terms.emplace_back(RoundLoss::Linear{std::move(a)});
        } else if (auto q = std::get_if<QuadraticSpec>(&c)) {
            Vector th;
            if (!q->fixed_theta.empty())
                th = q->fixed_theta[static_cast<std::size_t>(t) % q->fixed_theta.size()];
            else if (q->spread > 0) {
                double rad = q->spread * std::pow(rng.uniform(), 1.0 / k);
                th = q->center + rad * sphere(rng, k);
            } else
                th = q->center;
            Vector b = q->b_noise > 0 ? Vector(q->b_mean + q->b_noise * sphere(rng, k))
                                      : q->b_mean;
            out.terms.emplace_back(
                RoundLoss::Quadratic{q->lambda, std::move(th), std::move(b)});
        } else {
            const auto &h = std::get<PiecewiseSpec>(c);
            double th;
            if (!h.fixed_theta.empty())
                th = h.fixed_theta[static_cast<std::size_t>(t) % h.fixed_theta.size()];
            else
                th = h.offset + h.spread * (2.0 * rng.uniform() - 1.0);
            out.terms.emplace_back(RoundLoss::Huber{h.scale, h.direction, th, h.width});
        }
    }
    return out;
}

void LossFamily::check_point(const Vector &x) const {
    require(x.size() == domain_.dim(), "losses: dimension mismatch");
    require(domain_.distance(x) <= 1e-9, "losses: point outside the domain");
}

double LossFamily::value(std::int64_t t, const Vector &x) const {
    check_point(x);
    return round(t).value(x);
}

Vector LossFamily::grad(std::int64_t t, const Vector &x) const {
    check_point(x);
    return round(t).grad(x);
}

LossFamily LossFamily::with_seed(std::uint64_t seed) const {
    LossFamily f = *this;
    f.seed_ = seed;
    return f;
}

Constants analytic_constants(const geometry::Domain &K,
                             const std::vector<Component> &components) {
    const double R = K.true_outradius();
    Constants c;
    for (const auto &comp : components) {
        if (auto p = std::get_if<LinearSpec>(&comp)) {
            double a = (p->mean.size() ? p->mean.norm() : 0.0) + p->noise;
            for (const auto &v : p->fixed)
                a = std::max(a, v.norm());
            c.G += a;
            c.M += a * R;
        } else if (auto q = std::get_if<QuadraticSpec>(&comp)) {
            double th = (q->center.size() ? q->center.norm() : 0.0) + q->spread;
            for (const auto &v : q->fixed_theta)
                th = std::max(th, v.norm());
            double b = (q->b_mean.size() ? q->b_mean.norm() : 0.0) + q->b_noise;
            c.G += q->lambda * (R + th) + b;
            c.M += 0.5 * q->lambda * (R + th) * (R + th) + b * R;
            c.lambda += q->lambda;
        } else {
            const auto &h = std::get<PiecewiseSpec>(comp);
            double th = std::abs(h.offset) + h.spread;
            for (double v : h.fixed_theta)
                th = std::max(th, std::abs(v));
            c.G += h.scale;
            c.M += h.scale * (R + th);
        }
    }
    return c;
}

void validate_constants(const LossFamily &f, std::int64_t T, int samples,
                        std::uint64_t seed) {
    require(T > 0, "losses: T must be positive");
    const auto &K = f.domain();
    const double G = f.G(), M = f.M(), lam = f.lambda();
    CounterRng rng = substream(seed ^ f.seed(), StreamTag::Validation, 0);
    for (int i = 0; i < samples; ++i) {
        auto t = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(T)));
        RoundLoss L = f.round(t);
        Vector x = K.sample(rng);
        if (i % 4 == 0) // push every fourth point to the boundary
            x = geometry::project(K, K.center() + 1e6 * (x - K.center()));
        Vector y = K.sample(rng);
        Vector g = L.grad(x);
        double v = L.value(x);
        if (g.norm() > G * (1 + 1e-12) + 1e-12)
            throw ValidationError("losses: declared G = " + std::to_string(G) +
                                  " but |grad f_" + std::to_string(t + 1) +
                                  "| = " + std::to_string(g.norm()));
        if (std::abs(v) > M * (1 + 1e-12) + 1e-12)
            throw ValidationError("losses: declared M = " + std::to_string(M) +
                                  " but |f_" + std::to_string(t + 1) +
                                  "| = " + std::to_string(std::abs(v)));
        if (lam > 0) {
            double lhs = L.value(y);
            double rhs = v + g.dot(y - x) + 0.5 * lam * (y - x).squaredNorm();
            if (lhs < rhs - 1e-9 * (1 + std::abs(rhs)))
                throw ValidationError("losses: declared lambda = " +
                                      std::to_string(lam) +
                                      " violates strong convexity of f_" +
                                      std::to_string(t + 1));
        }
    }
}

double Aggregate::Huber::value(double s) const {
    const auto n = static_cast<std::ptrdiff_t>(theta.size());
    auto ia = std::upper_bound(theta.begin(), theta.end(), s - width) - theta.begin();
    auto ic = std::lower_bound(theta.begin(), theta.end(), s + width) - theta.begin();
    double na = static_cast<double>(ia), nc = static_cast<double>(n - ic);
    double nb = static_cast<double>(ic - ia);
    double sa = pre1[ia], sc = pre1[n] - pre1[ic];
    double sb = pre1[ic] - pre1[ia], sb2 = pre2[ic] - pre2[ia];
    double v = na * (s - 0.5 * width) - sa + sc - nc * (s + 0.5 * width) +
               (nb * s * s - 2.0 * s * sb + sb2) / (2.0 * width);
    return scale * v;
}

double Aggregate::Huber::deriv(double s) const {
    const auto n = static_cast<std::ptrdiff_t>(theta.size());
    auto ia = std::upper_bound(theta.begin(), theta.end(), s - width) - theta.begin();
    auto ic = std::lower_bound(theta.begin(), theta.end(), s + width) - theta.begin();
    double nb = static_cast<double>(ic - ia);
    double sb = pre1[ic] - pre1[ia];
    return scale * (static_cast<double>(ia) - static_cast<double>(n - ic) +
                    (nb * s - sb) / width);
}

Aggregate::Aggregate(const LossFamily &f, std::int64_t T) : T_(T) {
    require(T > 0, "aggregate: T must be positive");
    const int k = f.dim();
    lin_ = Vector::Zero(k);
    quad_center_ = Vector::Zero(k);
    std::vector<std::size_t> huber_slot(f.components().size(), 0);
    for (std::size_t i = 0; i < f.components().size(); ++i) {
        if (auto h = std::get_if<PiecewiseSpec>(&f.components()[i])) {
            huber_slot[i] = hubers_.size();
            hubers_.push_back({h->scale, h->width, h->direction, {}, {}, {}});
            hubers_.back().theta.reserve(static_cast<std::size_t>(T));
        }
    }
    for (std::int64_t t = 0; t < T; ++t) {
        RoundLoss L = f.round(t);
        for (std::size_t i = 0; i < L.terms.size(); ++i) {
            const auto &term = L.terms[i];
            if (auto p = std::get_if<RoundLoss::Linear>(&term))
                lin_ += p->a;
            else if (auto q = std::get_if<RoundLoss::Quadratic>(&term)) {
                quad_lambda_ += q->lambda;
                quad_center_ += q->lambda * q->theta;
                quad_const_ += 0.5 * q->lambda * q->theta.squaredNorm();
                lin_ += q->b;
            } else {
                hubers_[huber_slot[i]].theta.push_back(
                    std::get<RoundLoss::Huber>(term).theta);
            }
        }
    }
    for (auto &h : hubers_) {
        std::sort(h.theta.begin(), h.theta.end());
        h.pre1.assign(h.theta.size() + 1, 0.0);
        h.pre2.assign(h.theta.size() + 1, 0.0);
        for (std::size_t i = 0; i < h.theta.size(); ++i) {
            h.pre1[i + 1] = h.pre1[i] + h.theta[i];
            h.pre2[i + 1] = h.pre2[i] + h.theta[i] * h.theta[i];
        }
    }
}

double Aggregate::value(const Vector &x) const {
    double v = lin_.dot(x) + 0.5 * quad_lambda_ * x.squaredNorm() -
               quad_center_.dot(x) + quad_const_;
    for (const auto &h : hubers_)
        v += h.value(h.u.dot(x));
    return v;
}

Vector Aggregate::grad(const Vector &x) const {
    Vector g = lin_ + quad_lambda_ * x - quad_center_;
    for (const auto &h : hubers_)
        g += h.deriv(h.u.dot(x)) * h.u;
    return g;
}

Comparator best_in_hindsight(const LossFamily &f, std::int64_t T,
                             const ComparatorOptions &opt) {
    const auto &K = f.domain();
    Aggregate agg(f, T);
    const double invT = 1.0 / static_cast<double>(T);
    // target on the average loss: eps_opt / T. With the acceptance test
    // below, convexity and the projection inequality give
    // F(x+) - F* <= 2 D |G_s|.
    const double tol = 0.5 * opt.eps_scale * f.G();

    Comparator out;
    Vector x = geometry::project(K, K.center());
    Vector g = agg.grad(x) * invT;
    double step = K.D() / std::max(f.G(), 1e-300);
    long it = 0;
    double gm = INFINITY;
    // Backtracking on the local Lipschitz estimate |g(x+) - g(x)| <= |dx| / step.
    // Gradient differences stay accurate where function differences fall
    // below rounding, so the gradient mapping can be driven to ~1e-14.
    for (; it < opt.max_iterations; ++it) {
        Vector xn, gn;
        for (;;) {
            xn = geometry::project(K, x - step * g);
            gn = agg.grad(xn) * invT;
            double dx = (xn - x).norm();
            if ((gn - g).norm() * step <= dx * (1.0 + 1e-12) || step < 1e-300)
                break;
            step *= 0.5;
        }
        gm = (xn - x).norm() / step;
        x = std::move(xn);
        g = std::move(gn);
        if (gm <= tol) {
            ++it;
            out.converged = true;
            break;
        }
        step = std::min(step * 2.0, 1e12 * K.D());
    }
    out.x = x;
    out.total = agg.value(x);
    out.iterations = it;
    out.grad_map_norm = gm;
    return out;
}

} // namespace delayoco::losses
