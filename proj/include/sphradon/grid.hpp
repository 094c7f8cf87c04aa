#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sphradon/vec2.hpp"

namespace sphradon {

/// Pixel raster layout over a physical rectangle. Pixel (i, j) has its center at
/// (x_min + (i + 1/2) dx, y_min + (j + 1/2) dy); values are stored row-major with
/// j (the y index) as the row.
struct ImageGeometry {
    std::size_t nx = 0;
    std::size_t ny = 0;
    double x_min = 0.0;
    double x_max = 0.0;
    double y_min = 0.0;
    double y_max = 0.0;

    double dx() const { return (x_max - x_min) / static_cast<double>(nx); }
    double dy() const { return (y_max - y_min) / static_cast<double>(ny); }
    std::size_t size() const { return nx * ny; }
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    Vec2 pixel_center(std::size_t i, std::size_t j) const;

    /// Throws std::invalid_argument on empty shape or inverted extents.
    void validate() const;

    bool operator==(const ImageGeometry&) const = default;
};

class Image {
public:
    explicit Image(ImageGeometry geometry);
    Image(ImageGeometry geometry, std::vector<double> values);

    const ImageGeometry& geometry() const { return geometry_; }
    std::span<const double> values() const { return values_; }
    double at(std::size_t i, std::size_t j) const { return values_[geometry_.index(i, j)]; }

private:
    ImageGeometry geometry_;
    std::vector<double> values_;
};

enum class GeometryId { LinearCST, RotationalCST, ConstantR, CustomRadius };

std::string_view to_string(GeometryId id);
GeometryId geometry_id_from_string(std::string_view name);

/// Sample axes of a sinogram. LinearCST and CustomRadius use Cartesian centers
/// (axis1, axis2) = (y1, y2); RotationalCST and ConstantR use polar centers
/// (axis1, axis2) = (|y|, polar angle).
struct SinogramGeometry {
    GeometryId id = GeometryId::CustomRadius;
    std::vector<double> axis1;
    std::vector<double> axis2;

    std::size_t size() const { return axis1.size() * axis2.size(); }
    std::size_t index(std::size_t i1, std::size_t i2) const { return i1 * axis2.size() + i2; }
    bool polar() const { return id == GeometryId::RotationalCST || id == GeometryId::ConstantR; }
    /// True when axis2 is a uniform angle grid covering a full turn.
    bool periodic_axis2() const;
    Vec2 center(std::size_t i1, std::size_t i2) const;
    /// Sinogram coordinates (axis1, axis2) of a sphere center.
    Vec2 coordinates_of(Vec2 center) const;

    void validate() const;

    bool operator==(const SinogramGeometry&) const = default;
};

class Sinogram {
public:
    explicit Sinogram(SinogramGeometry geometry);
    Sinogram(SinogramGeometry geometry, std::vector<double> values);

    const SinogramGeometry& geometry() const { return geometry_; }
    std::span<const double> values() const { return values_; }
    double at(std::size_t i1, std::size_t i2) const { return values_[geometry_.index(i1, i2)]; }

private:
    SinogramGeometry geometry_;
    std::vector<double> values_;
};

/// Uniform grid of n samples from lo to hi inclusive.
std::vector<double> linspace(double lo, double hi, std::size_t n);
/// Uniform grid of n samples on [lo, hi), i.e. endpoint excluded (full-turn angles).
std::vector<double> linspace_open(double lo, double hi, std::size_t n);

struct PixelIndex {
    std::size_t i = 0;
    std::size_t j = 0;
    bool operator==(const PixelIndex&) const = default;
};

/// Pixel whose cell contains p; cells are closed on the min edge and open on the
/// max edge, so points on x_max or y_max map to nothing.
std::optional<PixelIndex> world_to_pixel(const ImageGeometry& geometry, Vec2 p);

/// Pixel indices and weights of the bilinear interpolant at p. count is 0 outside
/// the convex hull of the pixel centers; weights are nonnegative and sum to 1.
struct BilinearStencil {
    std::size_t count = 0;
    std::size_t index[4] = {0, 0, 0, 0};
    double weight[4] = {0.0, 0.0, 0.0, 0.0};
};

BilinearStencil bilinear_stencil(const ImageGeometry& geometry, Vec2 p);

/// Bilinear interpolation between pixel centers. Zero outside the convex hull of
/// the pixel centers.
double bilinear_sample(const Image& image, Vec2 p);

/// Bilinear interpolation on the sinogram sample grid at coordinates (a1, a2).
/// Zero outside the axis extents, except along a periodic angle axis.
double sinogram_sample(const Sinogram& sinogram, double a1, double a2);

} // namespace sphradon
