#include "sphradon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sphradon {

namespace {

bool strictly_increasing(const std::vector<double>& a) {
    for (std::size_t k = 1; k < a.size(); ++k) {
        if (!(a[k] > a[k - 1])) return false;
    }
    return true;
}

// Locate the bracketing interval of v in a sorted axis. Returns false when v lies
// outside [front, back]. On success a[k] <= v <= a[k+1] and frac is the offset.
bool bracket(const std::vector<double>& a, double v, std::size_t& k, double& frac) {
    if (a.empty() || v < a.front() || v > a.back() || std::isnan(v)) return false;
    if (a.size() == 1) {
        k = 0;
        frac = 0.0;
        return true;
    }
    auto it = std::upper_bound(a.begin(), a.end(), v);
    std::size_t hi = static_cast<std::size_t>(it - a.begin());
    if (hi >= a.size()) hi = a.size() - 1;
    k = hi - 1;
    frac = (v - a[k]) / (a[k + 1] - a[k]);
    return true;
}

} // namespace

Vec2 ImageGeometry::pixel_center(std::size_t i, std::size_t j) const {
    return {x_min + (static_cast<double>(i) + 0.5) * dx(), y_min + (static_cast<double>(j) + 0.5) * dy()};
}

void ImageGeometry::validate() const {
    if (nx == 0 || ny == 0) throw std::invalid_argument("image shape must be positive");
    if (!(x_min < x_max) || !(y_min < y_max)) throw std::invalid_argument("image extents must satisfy min < max");
}

Image::Image(ImageGeometry geometry) : Image(geometry, std::vector<double>(geometry.size(), 0.0)) {}

Image::Image(ImageGeometry geometry, std::vector<double> values)
    : geometry_(geometry), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.size()) throw std::invalid_argument("image values length must equal nx*ny");
}

std::string_view to_string(GeometryId id) {
    switch (id) {
    case GeometryId::LinearCST: return "LinearCST";
    case GeometryId::RotationalCST: return "RotationalCST";
    case GeometryId::ConstantR: return "ConstantR";
    case GeometryId::CustomRadius: return "CustomRadius";
    }
    return "CustomRadius";
}

GeometryId geometry_id_from_string(std::string_view name) {
    if (name == "LinearCST") return GeometryId::LinearCST;
    if (name == "RotationalCST") return GeometryId::RotationalCST;
    if (name == "ConstantR") return GeometryId::ConstantR;
    if (name == "CustomRadius") return GeometryId::CustomRadius;
    throw std::invalid_argument("unknown geometry id: " + std::string(name));
}

bool SinogramGeometry::periodic_axis2() const {
    if (!polar() || axis2.size() < 2) return false;
    const double step = axis2[1] - axis2[0];
    const double span = axis2.back() - axis2.front() + step;
    return std::abs(span - 2.0 * std::numbers::pi) < 1e-9 * 2.0 * std::numbers::pi;
}

Vec2 SinogramGeometry::center(std::size_t i1, std::size_t i2) const {
    if (polar()) return axis1[i1] * unit_from_angle(axis2[i2]);
    return {axis1[i1], axis2[i2]};
}

Vec2 SinogramGeometry::coordinates_of(Vec2 c) const {
    if (!polar()) return c;
    double angle = std::atan2(c.y, c.x);
    if (!axis2.empty()) {
        // shift into [axis2.front(), axis2.front() + 2pi)
        const double two_pi = 2.0 * std::numbers::pi;
        angle = axis2.front() + std::fmod(std::fmod(angle - axis2.front(), two_pi) + two_pi, two_pi);
    }
    return {c.norm(), angle};
}

void SinogramGeometry::validate() const {
    if (axis1.empty() || axis2.empty()) throw std::invalid_argument("sinogram axes must be non-empty");
    if (!strictly_increasing(axis1) || !strictly_increasing(axis2))
        throw std::invalid_argument("sinogram axes must be strictly increasing");
}

Sinogram::Sinogram(SinogramGeometry geometry) : geometry_(std::move(geometry)) {
    geometry_.validate();
    values_.assign(geometry_.size(), 0.0);
}

Sinogram::Sinogram(SinogramGeometry geometry, std::vector<double> values)
    : geometry_(std::move(geometry)), values_(std::move(values)) {
    geometry_.validate();
    if (values_.size() != geometry_.size())
        throw std::invalid_argument("sinogram values length must equal |axis1|*|axis2|");
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    if (n == 1) {
        out[0] = lo;
        return out;
    }
    for (std::size_t k = 0; k < n; ++k)
        out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    out.back() = hi;
    return out;
}

std::vector<double> linspace_open(double lo, double hi, std::size_t n) {
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n);
    return out;
}

std::optional<PixelIndex> world_to_pixel(const ImageGeometry& g, Vec2 p) {
    if (!(p.x >= g.x_min && p.x < g.x_max && p.y >= g.y_min && p.y < g.y_max)) return std::nullopt;
    auto i = static_cast<std::size_t>(std::floor((p.x - g.x_min) / g.dx()));
    auto j = static_cast<std::size_t>(std::floor((p.y - g.y_min) / g.dy()));
    // rounding can push a point just below the max edge onto index n
    i = std::min(i, g.nx - 1);
    j = std::min(j, g.ny - 1);
    return PixelIndex{i, j};
}

BilinearStencil bilinear_stencil(const ImageGeometry& g, Vec2 p) {
    BilinearStencil s;
    const double fx = (p.x - g.x_min) / g.dx() - 0.5;
    const double fy = (p.y - g.y_min) / g.dy() - 0.5;
    const double max_x = static_cast<double>(g.nx - 1);
    const double max_y = static_cast<double>(g.ny - 1);
    if (!(fx >= 0.0 && fx <= max_x && fy >= 0.0 && fy <= max_y)) return s;

    auto i0 = static_cast<std::size_t>(std::floor(fx));
    auto j0 = static_cast<std::size_t>(std::floor(fy));
    // on the max edge use the last cell with full weight on its far side
    if (g.nx > 1 && i0 >= g.nx - 1) i0 = g.nx - 2;
    if (g.ny > 1 && j0 >= g.ny - 1) j0 = g.ny - 2;
    const double tx = g.nx > 1 ? fx - static_cast<double>(i0) : 0.0;
    const double ty = g.ny > 1 ? fy - static_cast<double>(j0) : 0.0;
    const std::size_t i1 = g.nx > 1 ? i0 + 1 : i0;
    const std::size_t j1 = g.ny > 1 ? j0 + 1 : j0;

    s.count = 4;
    s.index[0] = g.index(i0, j0);
    s.index[1] = g.index(i1, j0);
    s.index[2] = g.index(i0, j1);
    s.index[3] = g.index(i1, j1);
    s.weight[0] = (1.0 - tx) * (1.0 - ty);
    s.weight[1] = tx * (1.0 - ty);
    s.weight[2] = (1.0 - tx) * ty;
    s.weight[3] = tx * ty;
    return s;
}

double bilinear_sample(const Image& image, Vec2 p) {
    const BilinearStencil s = bilinear_stencil(image.geometry(), p);
    const auto v = image.values();
    double sum = 0.0;
    for (std::size_t k = 0; k < s.count; ++k) sum += s.weight[k] * v[s.index[k]];
    return sum;
}

double sinogram_sample(const Sinogram& sinogram, double a1, double a2) {
    const SinogramGeometry& g = sinogram.geometry();
    std::size_t k1 = 0;
    double t1 = 0.0;
    if (!bracket(g.axis1, a1, k1, t1)) return 0.0;
    const std::size_t k1b = g.axis1.size() > 1 ? k1 + 1 : k1;

    std::size_t k2 = 0;
    std::size_t k2b = 0;
    double t2 = 0.0;
    if (g.periodic_axis2()) {
        const double two_pi = 2.0 * std::numbers::pi;
        const double step = g.axis2[1] - g.axis2[0];
        double u = std::fmod(a2 - g.axis2.front(), two_pi);
        if (u < 0.0) u += two_pi;
        const double f = u / step;
        k2 = std::min(static_cast<std::size_t>(std::floor(f)), g.axis2.size() - 1);
        t2 = f - static_cast<double>(k2);
        k2b = (k2 + 1) % g.axis2.size();
    } else {
        if (!bracket(g.axis2, a2, k2, t2)) return 0.0;
        k2b = g.axis2.size() > 1 ? k2 + 1 : k2;
    }
    return (1.0 - t1) * (1.0 - t2) * sinogram.at(k1, k2) + t1 * (1.0 - t2) * sinogram.at(k1b, k2) +
           (1.0 - t1) * t2 * sinogram.at(k1, k2b) + t1 * t2 * sinogram.at(k1b, k2b);
}

} // namespace sphradon
