#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphradon/vec2.hpp"

namespace sphradon {

struct BoundingBox {
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    bool finite() const;
    double diameter() const;
};

/// Planar point sets used for object supports and center sets. Membership is
/// open (strict inequalities) so that the sets match their analytic definitions.
class Region {
public:
    enum class Kind { Rect, Annulus, Ball, HalfPlane, Intersection };

    static Region rect(double x_min, double x_max, double y_min, double y_max);
    static Region annulus(Vec2 center, double inner, double outer);
    static Region ball(Vec2 center, double radius);
    /// {p : side * (p[axis] - threshold) > 0}, axis 0 for x and 1 for y, side = +1 or -1.
    static Region half_plane(int axis, double threshold, int side);
    static Region intersection(std::vector<Region> parts);

    Kind kind() const { return kind_; }
    bool contains(Vec2 p) const;
    /// Membership in the region shrunk by margin along every boundary.
    bool contains_eroded(Vec2 p, double margin) const;
    BoundingBox bounds() const;
    bool bounded() const { return bounds().finite(); }

    /// Deterministic low-discrepancy sample: n Halton points in the region (rejection
    /// inside the bounding box where needed) followed by boundary and center probes.
    /// Throws std::invalid_argument for unbounded regions.
    std::vector<Vec2> sample(std::size_t n) const;

    nlohmann::json to_json() const;

    Vec2 center() const { return center_; }
    double inner() const { return inner_; }
    double outer() const { return outer_; }

private:
    Region() = default;

    // Signed margin of p: positive inside, equal to the distance to the nearest
    // boundary for convex kinds; used for erosion.
    double depth(Vec2 p) const;
    std::vector<Vec2> probes() const;

    Kind kind_ = Kind::Rect;
    BoundingBox box_{};
    Vec2 center_{};
    double inner_ = 0.0;
    double outer_ = 0.0;
    int axis_ = 0;
    double threshold_ = 0.0;
    int side_ = 1;
    std::vector<Region> parts_;
};

/// Radical inverse of index in the given base (van der Corput sequence).
double radical_inverse(std::size_t index, unsigned base);

} // namespace sphradon
