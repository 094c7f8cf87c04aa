#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphradon/geometry.hpp"
#include "sphradon/grid.hpp"

namespace sphradon {

class ProjectorError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Discrete forward map in CSR form with a prebuilt transpose, so A and A^T share
/// one weight array and the adjoint identity holds to rounding.
class SparseOperator {
public:
    SparseOperator(ImageGeometry image, SinogramGeometry sinogram, std::vector<std::size_t> row_ptr,
                   std::vector<std::uint32_t> cols, std::vector<double> weights);

    std::size_t n_rows() const { return row_ptr_.size() - 1; }
    std::size_t n_cols() const { return image_.size(); }
    std::size_t nnz() const { return weights_.size(); }
    const ImageGeometry& image_geometry() const { return image_; }
    const SinogramGeometry& sinogram_geometry() const { return sinogram_; }
    std::span<const std::size_t> row_ptr() const { return row_ptr_; }
    std::span<const std::uint32_t> cols() const { return cols_; }
    std::span<const double> weights() const { return weights_; }

    /// y = A x; x has n_cols entries.
    std::vector<double> multiply(std::span<const double> x) const;
    /// x = A^T y; y has n_rows entries.
    std::vector<double> multiply_transpose(std::span<const double> y) const;
    /// diag(h) A, used for the cutoff operator h A.
    SparseOperator scale_rows(std::span<const double> h) const;

private:
    ImageGeometry image_;
    SinogramGeometry sinogram_;
    std::vector<std::size_t> row_ptr_;
    std::vector<std::uint32_t> cols_;
    std::vector<double> weights_;
    std::vector<std::size_t> t_row_ptr_;
    std::vector<std::uint32_t> t_cols_;
    std::vector<double> t_weights_;
};

/// Row i integrates the bilinear interpolant of the image over S(y_i) with the
/// uniform-angle rule sum_k r(y_i) (2 pi / quad) f(y_i + r(y_i)(cos th_k, sin th_k)).
SparseOperator assemble_forward(const RadiusModel& model, const ImageGeometry& image, const SinogramGeometry& sinogram,
                                std::size_t quad_per_circle);

Sinogram apply(const SparseOperator& op, const Image& image);
Image apply_transpose(const SparseOperator& op, const Sinogram& sinogram);

/// Matrix-free circle integral with the same quadrature as assemble_forward.
double circle_integral(const Image& image, Vec2 center, double radius, std::size_t quad);

void save_operator(const SparseOperator& op, const std::filesystem::path& path);
SparseOperator load_operator(const std::filesystem::path& path);

/// Smooth cutoff h with h = 1 on (-inf, b + eps/4] and h = 0 on [b + eps/2, inf),
/// joined by a quintic smoothstep (C2). With reflected set the profile is
/// evaluated at -v, which turns it into a rising edge.
struct CutoffProfile {
    double b = 0.0;
    double eps = 1.0;
    bool reflected = false;

    double operator()(double v) const;

    /// h = 1 for v <= one_until and h = 0 for v >= zero_from.
    static CutoffProfile falling(double one_until, double zero_from);
    /// h = 0 for v <= zero_until and h = 1 for v >= one_from.
    static CutoffProfile rising(double zero_until, double one_from);
};

enum class CutoffCoordinate { Y2, Radial };

/// h evaluated at every sinogram sample (y2 or |y| of its center).
std::vector<double> cutoff_weights(const SinogramGeometry& sinogram, const CutoffProfile& cut, CutoffCoordinate coordinate);
Sinogram apply_cutoff(const Sinogram& sinogram, const CutoffProfile& cut, CutoffCoordinate coordinate);

/// t(phi, x2) = (a^2 + x2^2) / (x2 sin phi + sqrt(a^2 cos^2 phi + x2^2)).
double linear_cst_t(double alpha, double phi, double x2);
/// lambda(phi, x) = x - t(phi, x2) (cos phi, sin phi): the center of the circle
/// through x with outward normal (cos phi, sin phi).
Vec2 linear_cst_lambda(double alpha, double phi, Vec2 x);

/// Integral of g(lambda(phi, x)) over phi in (-pi/2, 3pi/2), midpoint rule with
/// n_phi nodes; nodes whose center falls outside the sinogram contribute 0.
Image backproject_linear_cst(const Sinogram& sinogram, double alpha, const ImageGeometry& image, std::size_t n_phi = 720);

/// Integral over omega in S^1 of g at the center x + t(omega) omega of the circle
/// through x, found with the preimage solver (each line through x is visited from
/// both directions, so both centers contribute once).
Image backproject_generic(const Sinogram& sinogram, const RadiusModel& model, const ImageGeometry& image,
                          std::size_t n_omega = 720);

} // namespace sphradon
