#pragma once

#include "delayoco/common.hpp"
#include "delayoco/rng.hpp"

#include <optional>
#include <variant>

namespace delayoco::geometry {

struct Ball {
    Vector center;
    double radius = 1.0;
};

struct Box {
    Vector lo, hi;
};

// Optional loose constants; when absent the tight values are used.
struct Radii {
    std::optional<double> D, r, R;
};

class Domain {
  public:
    static Domain ball(Vector center, double radius, Radii declared = {});
    static Domain ball(int dim, double radius, Radii declared = {});
    static Domain box(Vector lo, Vector hi, Radii declared = {});

    int dim() const { return dim_; }
    double D() const { return D_; }
    double r() const { return r_; }
    double R() const { return R_; }
    bool is_ball() const { return std::holds_alternative<Ball>(shape_); }
    const Ball *as_ball() const { return std::get_if<Ball>(&shape_); }
    const Box *as_box() const { return std::get_if<Box>(&shape_); }

    // Tight values computed from the shape.
    double true_diameter() const;
    double true_inradius() const;   // about the origin
    double true_outradius() const;  // about the origin

    bool contains(const Vector &x, double tol = 1e-12) const;
    // Distance from x to the domain, 0 inside.
    double distance(const Vector &x) const;
    Vector center() const;
    // Point drawn uniformly from the domain.
    Vector sample(CounterRng &rng) const;

  private:
    Domain() = default;
    void finish(const Radii &declared);

    std::variant<Ball, Box> shape_;
    int dim_ = 0;
    double D_ = 0, r_ = 0, R_ = 0;
};

Vector project(const Domain &K, const Vector &x);

// x -> factor * x with factor = 1 - delta / r.
struct ShrinkMap {
    double factor = 1.0;
    double delta = 0.0;
    Vector operator()(const Vector &x) const { return factor * x; }
};

ShrinkMap shrink(const Domain &K, double factor);
ShrinkMap shrink_for_delta(const Domain &K, double delta);

} // namespace delayoco::geometry
