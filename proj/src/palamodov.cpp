#include "sphradon/palamodov.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sphradon/projector.hpp"

namespace sphradon {

double EquidistantMap::p() const { return 1.0 / std::sqrt(1.0 + alpha * alpha); }

double EquidistantMap::lambda_of(double t) const {
    if (!(t > 0.0)) throw std::invalid_argument("equidistant map needs t > 0");
    return std::sqrt(1.0 + alpha * alpha) / (2.0 * t);
}

double EquidistantMap::t_of(double lambda) const {
    if (!(lambda > 0.0)) throw std::invalid_argument("equidistant map needs lambda > 0");
    return std::sqrt(1.0 + alpha * alpha) / (2.0 * lambda);
}

double EquidistantMap::psi2(Vec2 y, Vec2 theta) const { return (p() - dot(y, theta)) / (1.0 - y.norm2()); }

Vec2 EquidistantMap::center(double lambda, Vec2 theta) const { return theta / (2.0 * lambda); }

double EquidistantMap::radius(double lambda) const {
    const double q = 1.0 - 4.0 * lambda * p() + 4.0 * lambda * lambda;
    return std::sqrt(std::max(q, 0.0)) / (2.0 * lambda);
}

EquidistantSinogram palamodov_map(const Sinogram& sinogram, double alpha, int n) {
    const SinogramGeometry& g = sinogram.geometry();
    if (g.id != GeometryId::RotationalCST) throw std::invalid_argument("palamodov_map needs a RotationalCST sinogram");
    if (n < 2) throw std::invalid_argument("dimension must be at least 2");
    const EquidistantMap map{alpha};
    for (double t : g.axis1)
        if (!(t > alpha * alpha / 4.0)) throw std::invalid_argument("center radius must exceed alpha^2/4");
    EquidistantSinogram out;
    out.alpha = alpha;
    out.n = n;
    out.scale = std::pow(map.p(), n - 1);
    out.theta = g.axis2;
    const std::size_t n1 = g.axis1.size();
    const std::size_t n2 = g.axis2.size();
    out.lambda.resize(n1);
    out.values.resize(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t src = n1 - 1 - i;
        out.lambda[i] = map.lambda_of(g.axis1[src]);
        for (std::size_t k = 0; k < n2; ++k) out.values[i * n2 + k] = out.scale * sinogram.at(src, k);
    }
    return out;
}

Sinogram palamodov_unmap(const EquidistantSinogram& eq) {
    const EquidistantMap map{eq.alpha};
    const std::size_t n1 = eq.lambda.size();
    const std::size_t n2 = eq.theta.size();
    SinogramGeometry g{GeometryId::RotationalCST, std::vector<double>(n1), eq.theta};
    std::vector<double> values(n1 * n2);
    for (std::size_t i = 0; i < n1; ++i) {
        const std::size_t src = n1 - 1 - i;
        g.axis1[i] = map.t_of(eq.lambda[src]);
        for (std::size_t k = 0; k < n2; ++k) values[i * n2 + k] = eq.at(src, k) / eq.scale;
    }
    return Sinogram(std::move(g), std::move(values));
}

Image scale_image(const Image& f, double p) {
    if (!(p > 0.0)) throw std::invalid_argument("scale must be positive");
    ImageGeometry g = f.geometry();
    g.x_min *= p;
    g.x_max *= p;
    g.y_min *= p;
    g.y_max *= p;
    return Image(g, std::vector<double>(f.values().begin(), f.values().end()));
}

double equidistant_integral(const Image& image, const EquidistantMap& map, double lambda, double theta_angle,
                            std::size_t quad) {
    const Vec2 theta = unit_from_angle(theta_angle);
    return circle_integral(image, map.center(lambda, theta), map.radius(lambda), quad);
}

} // namespace sphradon
