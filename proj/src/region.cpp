#include "sphradon/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace sphradon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* kind_name(Region::Kind k) {
    switch (k) {
    case Region::Kind::Rect: return "Rect";
    case Region::Kind::Annulus: return "Annulus";
    case Region::Kind::Ball: return "Ball";
    case Region::Kind::HalfPlane: return "HalfPlane";
    case Region::Kind::Intersection: return "Intersection";
    }
    return "Rect";
}

// Each kind starts the Halton sequence at a different index so that audits over
// different region kinds do not share sample points.
std::size_t halton_skip(Region::Kind k) { return 1 + 17 * static_cast<std::size_t>(k); }

} // namespace

bool BoundingBox::finite() const {
    return std::isfinite(x_min) && std::isfinite(x_max) && std::isfinite(y_min) && std::isfinite(y_max);
}

double BoundingBox::diameter() const { return std::hypot(x_max - x_min, y_max - y_min); }

double radical_inverse(std::size_t index, unsigned base) {
    double result = 0.0;
    double f = 1.0 / base;
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= base;
    }
    return result;
}

Region Region::rect(double x_min, double x_max, double y_min, double y_max) {
    if (!(x_min < x_max && y_min < y_max)) throw std::invalid_argument("rect requires min < max on both axes");
    Region r;
    r.kind_ = Kind::Rect;
    r.box_ = {x_min, x_max, y_min, y_max};
    r.center_ = {0.5 * (x_min + x_max), 0.5 * (y_min + y_max)};
    return r;
}

Region Region::annulus(Vec2 center, double inner, double outer) {
    if (!(inner >= 0.0 && inner < outer)) throw std::invalid_argument("annulus requires 0 <= inner < outer");
    Region r;
    r.kind_ = Kind::Annulus;
    r.center_ = center;
    r.inner_ = inner;
    r.outer_ = outer;
    r.box_ = {center.x - outer, center.x + outer, center.y - outer, center.y + outer};
    return r;
}

Region Region::ball(Vec2 center, double radius) {
    if (!(radius > 0.0)) throw std::invalid_argument("ball radius must be positive");
    Region r;
    r.kind_ = Kind::Ball;
    r.center_ = center;
    r.outer_ = radius;
    r.box_ = {center.x - radius, center.x + radius, center.y - radius, center.y + radius};
    return r;
}

Region Region::half_plane(int axis, double threshold, int side) {
    if (axis != 0 && axis != 1) throw std::invalid_argument("half-plane axis must be 0 or 1");
    if (side != 1 && side != -1) throw std::invalid_argument("half-plane side must be +1 or -1");
    Region r;
    r.kind_ = Kind::HalfPlane;
    r.axis_ = axis;
    r.threshold_ = threshold;
    r.side_ = side;
    r.box_ = {-kInf, kInf, -kInf, kInf};
    double& lo = axis == 0 ? r.box_.x_min : r.box_.y_min;
    double& hi = axis == 0 ? r.box_.x_max : r.box_.y_max;
    (side > 0 ? lo : hi) = threshold;
    return r;
}

Region Region::intersection(std::vector<Region> parts) {
    if (parts.empty()) throw std::invalid_argument("intersection needs at least one part");
    Region r;
    r.kind_ = Kind::Intersection;
    r.box_ = {-kInf, kInf, -kInf, kInf};
    for (const Region& p : parts) {
        const BoundingBox b = p.bounds();
        r.box_.x_min = std::max(r.box_.x_min, b.x_min);
        r.box_.x_max = std::min(r.box_.x_max, b.x_max);
        r.box_.y_min = std::max(r.box_.y_min, b.y_min);
        r.box_.y_max = std::min(r.box_.y_max, b.y_max);
    }
    if (!(r.box_.x_min < r.box_.x_max && r.box_.y_min < r.box_.y_max))
        throw std::invalid_argument("intersection is empty");
    r.parts_ = std::move(parts);
    return r;
}

double Region::depth(Vec2 p) const {
    switch (kind_) {
    case Kind::Rect:
        return std::min({p.x - box_.x_min, box_.x_max - p.x, p.y - box_.y_min, box_.y_max - p.y});
    case Kind::Annulus: {
        const double rho = distance(p, center_);
        return std::min(rho - inner_, outer_ - rho);
    }
    case Kind::Ball: return outer_ - distance(p, center_);
    case Kind::HalfPlane: return side_ * ((axis_ == 0 ? p.x : p.y) - threshold_);
    case Kind::Intersection: {
        double d = kInf;
        for (const Region& part : parts_) d = std::min(d, part.depth(p));
        return d;
    }
    }
    return -kInf;
}

bool Region::contains(Vec2 p) const { return depth(p) > 0.0; }

bool Region::contains_eroded(Vec2 p, double margin) const { return depth(p) > margin; }

BoundingBox Region::bounds() const { return box_; }

std::vector<Vec2> Region::probes() const {
    std::vector<Vec2> out;
    switch (kind_) {
    case Kind::Rect: {
        const double xs[3] = {box_.x_min, center_.x, box_.x_max};
        const double ys[3] = {box_.y_min, center_.y, box_.y_max};
        for (double x : xs)
            for (double y : ys) out.push_back({x, y});
        break;
    }
    case Kind::Annulus:
    case Kind::Ball:
        if (kind_ == Kind::Ball) out.push_back(center_);
        for (int k = 0; k < 8; ++k) {
            const Vec2 u = unit_from_angle(kTwoPi * k / 8.0);
            out.push_back(center_ + outer_ * u);
            if (kind_ == Kind::Annulus) out.push_back(center_ + inner_ * u);
        }
        break;
    case Kind::HalfPlane: break;
    case Kind::Intersection: {
        const double tol = 1e-12 * std::max(1.0, box_.diameter());
        for (const Region& part : parts_)
            for (Vec2 p : part.probes())
                if (depth(p) >= -tol) out.push_back(p);
        break;
    }
    }
    return out;
}

std::vector<Vec2> Region::sample(std::size_t n) const {
    if (!bounded()) throw std::invalid_argument(std::string("cannot sample unbounded region of kind ") + kind_name(kind_));
    std::vector<Vec2> out;
    out.reserve(n + 32);
    const std::size_t skip = halton_skip(kind_);

    auto halton = [&](std::size_t k) { return std::pair{radical_inverse(k + skip, 2), radical_inverse(k + skip, 3)}; };

    switch (kind_) {
    case Kind::Rect:
        for (std::size_t k = 0; k < n; ++k) {
            const auto [u, v] = halton(k);
            out.push_back({box_.x_min + u * (box_.x_max - box_.x_min), box_.y_min + v * (box_.y_max - box_.y_min)});
        }
        break;
    case Kind::Annulus:
    case Kind::Ball:
        // area-uniform polar map of the unit square
        for (std::size_t k = 0; k < n; ++k) {
            const auto [u, v] = halton(k);
            const double a2 = inner_ * inner_;
            const double rho = std::sqrt(a2 + u * (outer_ * outer_ - a2));
            out.push_back(center_ + rho * unit_from_angle(kTwoPi * v));
        }
        break;
    case Kind::HalfPlane: break;
    case Kind::Intersection: {
        const std::size_t limit = 200 * n + 1000;
        for (std::size_t k = 0; k < limit && out.size() < n; ++k) {
            const auto [u, v] = halton(k);
            const Vec2 p{box_.x_min + u * (box_.x_max - box_.x_min), box_.y_min + v * (box_.y_max - box_.y_min)};
            if (contains(p)) out.push_back(p);
        }
        break;
    }
    }
    for (Vec2 p : probes()) out.push_back(p);
    return out;
}

nlohmann::json Region::to_json() const {
    nlohmann::json j;
    j["kind"] = kind_name(kind_);
    switch (kind_) {
    case Kind::Rect: j["bounds"] = {box_.x_min, box_.x_max, box_.y_min, box_.y_max}; break;
    case Kind::Annulus:
        j["center"] = {center_.x, center_.y};
        j["inner"] = inner_;
        j["outer"] = outer_;
        break;
    case Kind::Ball:
        j["center"] = {center_.x, center_.y};
        j["radius"] = outer_;
        break;
    case Kind::HalfPlane:
        j["axis"] = axis_;
        j["threshold"] = threshold_;
        j["side"] = side_;
        break;
    case Kind::Intersection:
        j["parts"] = nlohmann::json::array();
        for (const Region& p : parts_) j["parts"].push_back(p.to_json());
        break;
    }
    return j;
}

} // namespace sphradon
