#pragma once

#include <cstddef>
#include <vector>

#include "sphradon/grid.hpp"
#include "sphradon/vec2.hpp"

namespace sphradon {

/// Equidistant-sphere parameterization of the rotational CST circles. A center
/// y = t Theta maps to lambda = sqrt(1 + alpha^2) / (2t); the circle
/// {y : Psi2(y, Theta) = lambda} has center Theta / (2 lambda) and radius
/// sqrt(1 - 4 lambda p + 4 lambda^2) / (2 lambda), p = 1 / sqrt(1 + alpha^2).
struct EquidistantMap {
    double alpha = 1.0;

    double p() const;
    double lambda_of(double t) const;
    double t_of(double lambda) const;
    /// (p - y.Theta) / (1 - |y|^2).
    double psi2(Vec2 y, Vec2 theta) const;
    Vec2 center(double lambda, Vec2 theta) const;
    double radius(double lambda) const;
};

/// Samples of the equidistant transform on a (lambda, Theta angle) grid with
/// lambda ascending. scale is the factor p^{n-1} applied to the source values.
struct EquidistantSinogram {
    double alpha = 1.0;
    int n = 2;
    double scale = 1.0;
    std::vector<double> lambda;
    std::vector<double> theta;
    std::vector<double> values;  // row-major (lambda index, theta index)

    double at(std::size_t i, std::size_t k) const { return values[i * theta.size() + k]; }
};

/// Reparameterizes a RotationalCST sinogram (|y|, angle) to (lambda, Theta) and
/// scales by p^{n-1}. Throws std::invalid_argument if any |y| <= alpha^2/4.
EquidistantSinogram palamodov_map(const Sinogram& sinogram, double alpha, int n = 2);

/// Inverse of palamodov_map.
Sinogram palamodov_unmap(const EquidistantSinogram& eq);

/// f~(y) = f(y / p): the same pixel values over extents scaled by p.
Image scale_image(const Image& f, double p);

/// Arc-length integral of the image over the equidistant circle (lambda, Theta)
/// with quad uniform-angle nodes.
double equidistant_integral(const Image& image, const EquidistantMap& map, double lambda, double theta_angle,
                            std::size_t quad);

} // namespace sphradon
