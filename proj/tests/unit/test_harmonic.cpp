#include <doctest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include "sphradon/harmonic.hpp"

using namespace sphradon;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kR = 1.25;
constexpr double kD = 0.25;

double bump(double rho) {
    if (rho <= kD || rho >= kR) return 0.0;
    const double v = std::sin(kPi * (rho - kD) / (kR - kD));
    return v * v;
}

RadialProfile profile(std::size_t m, double (*g)(double)) {
    RadialProfile f{kD, kR, std::vector<double>(m)};
    for (std::size_t k = 0; k < m; ++k) f.values[k] = g(f.node(k));
    return f;
}

// Integral of g(|x|) cos(l angle(x)) along the circle of radius r centered at (r + s, 0),
// midpoint rule in the circle angle.
double circle_mode_integral(double s, int l, std::size_t nodes) {
    double sum = 0.0;
    const Vec2 c{kR + s, 0.0};
    for (std::size_t k = 0; k < nodes; ++k) {
        const double th = 2.0 * kPi * (static_cast<double>(k) + 0.5) / static_cast<double>(nodes);
        const Vec2 x{c.x + kR * std::cos(th), c.y + kR * std::sin(th)};
        sum += bump(x.norm()) * std::cos(l * std::atan2(x.y, x.x));
    }
    return sum * kR * 2.0 * kPi / static_cast<double>(nodes);
}

SinogramGeometry constant_r_axes(std::size_t n1, std::size_t n2) {
    return {GeometryId::ConstantR, linspace(kR, 2.0 * kR, n1), linspace_open(0.0, 2.0 * kPi, n2)};
}

} // namespace

TEST_CASE("orthogonal polynomial recurrences") {
    for (int l = 0; l <= 10; ++l)
        for (double x : {-1.0, -0.73, 0.0, 0.31, 0.999, 1.0})
            CHECK(chebyshev_t(l, x) == doctest::Approx(std::cos(l * std::acos(x))).epsilon(1e-12));
    for (double x : {-0.9, -0.2, 0.4, 1.0}) {
        CHECK(legendre_p(0, x) == 1.0);
        CHECK(legendre_p(1, x) == doctest::Approx(x));
        CHECK(legendre_p(2, x) == doctest::Approx(0.5 * (3 * x * x - 1)));
        CHECK(legendre_p(3, x) == doctest::Approx(0.5 * (5 * x * x * x - 3 * x)));
        CHECK(legendre_p(4, x) == doctest::Approx((35 * std::pow(x, 4) - 30 * x * x + 3) / 8.0));
    }
    CHECK(chebyshev_t(-3, 0.4) == chebyshev_t(3, 0.4));
}

TEST_CASE("singular weighted integral is exact on linear data") {
    const auto grid = linspace(kD, kR, 50);
    std::vector<double> one(grid.size(), 1.0), lin(grid);
    for (std::size_t i : {std::size_t{0}, std::size_t{17}, std::size_t{48}}) {
        const double s = grid[i];
        CHECK(abel_weighted_integral(2, grid, one, i) == doctest::Approx(2.0 * std::sqrt(kR - s)).epsilon(1e-12));
        const double exact = 2.0 / 3.0 * std::pow(kR - s, 1.5) + 2.0 * s * std::sqrt(kR - s);
        CHECK(abel_weighted_integral(2, grid, lin, i) == doctest::Approx(exact).epsilon(1e-12));
        CHECK(abel_weighted_integral(3, grid, lin, i) == doctest::Approx(0.5 * (kR * kR - s * s)).epsilon(1e-12));
    }
    CHECK(abel_weighted_integral(2, grid, one, grid.size() - 1) == 0.0);
}

TEST_CASE("three dimensional forward transform of the constant profile") {
    const RadialProfile f = profile(120, [](double) { return 1.0; });
    const auto rf = forward_abel({3, 0, kR, kD}, f);
    for (std::size_t k = 0; k < f.size(); ++k) {
        const double s = f.node(k);
        CHECK(rf[k] == doctest::Approx(kPi * kR * (kR - s)).epsilon(1e-12));
    }
}

TEST_CASE("two dimensional forward transform matches direct circle integrals") {
    const RadialProfile f = profile(400, bump);
    for (int l : {0, 1, 2, 4}) {
        const auto rf = forward_abel({2, l, kR, kD}, f);
        double scale = 0.0;
        for (double v : rf) scale = std::max(scale, std::abs(v));
        for (std::size_t k = 0; k + 1 < f.size(); k += 37)
            CHECK(std::abs(rf[k] - circle_mode_integral(f.node(k), l, 200000)) <= 2e-3 * scale);
    }
}

TEST_CASE("kernel square-root form equals the simplified factor") {
    std::mt19937_64 gen(2);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int n : {2, 3}) {
        const AbelKernelSpec spec{n, 0, kR, kD};
        for (int k = 0; k < 2000; ++k) {
            const double s = kD + (kR - kD) * u(gen);
            const double rho = s + (kR - s) * u(gen);
            CHECK(spec.k1_sqrt_form(rho, s) == doctest::Approx(spec.k1(rho, s)).epsilon(1e-10));
        }
    }
}

TEST_CASE("kernel pieces") {
    const AbelKernelSpec spec{2, 3, kR, kD};
    for (double s : {0.3, 0.7, 1.1})
        for (double rho : {s, 0.5 * (s + kR), kR}) {
            const double t = spec.t(rho, s);
            // the two preimages of t multiply to s^2 + 2rs; rho(t, s) returns the inner one
            const double inner = std::min(rho, (s * s + 2.0 * kR * s) / rho);
            CHECK(spec.rho(t, s) == doctest::Approx(inner).epsilon(1e-9));
            if (rho > s) CHECK(spec.k2(rho, s) == doctest::Approx((1.0 - t * t) / (rho - s)).epsilon(1e-10));
        }
    CHECK(spec.t(0.6, 0.6) == doctest::Approx(1.0));
    CHECK_THROWS_AS(AbelKernelSpec({4, 0, kR, kD}).validate(), std::invalid_argument);
}

TEST_CASE("triangular system diagonals are positive") {
    for (int n : {2, 3})
        for (int l = 0; l <= 8; ++l)
            for (double v : abel_diagonal({n, l, kR, kD}, 200)) CHECK(v > 0.0);
}

TEST_CASE("Abel round trip") {
    const RadialProfile f = profile(200, bump);
    double norm = 0.0;
    for (double v : f.values) norm += v * v;
    for (int n : {2, 3})
        for (int l : {0, 3, 8}) {
            const AbelKernelSpec spec{n, l, kR, kD};
            const RadialProfile back = solve_abel(spec, forward_abel(spec, f));
            double err = 0.0;
            for (std::size_t k = 0; k < f.size(); ++k) err += std::pow(back.values[k] - f.values[k], 2);
            CHECK(std::sqrt(err / norm) < (n == 3 ? 1e-3 : 1e-2));
        }
}

TEST_CASE("ridge solve stays close to the exact solve on clean data") {
    const RadialProfile f = profile(100, bump);
    const AbelKernelSpec spec{2, 1, kR, kD};
    const auto rf = forward_abel(spec, f);
    const RadialProfile a = solve_abel(spec, rf, 0.0);
    const RadialProfile b = solve_abel(spec, rf, 1e-10);
    for (std::size_t k = 0; k < f.size(); ++k) CHECK(b.values[k] == doctest::Approx(a.values[k]).epsilon(1e-3));
}

TEST_CASE("angular decomposition isolates modes and obeys Parseval") {
    const SinogramGeometry g = constant_r_axes(5, 64);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < 5; ++i)
        for (std::size_t k = 0; k < 64; ++k) {
            const double w = g.axis2[k];
            v[g.index(i, k)] = 1.0 + i + 0.5 * std::cos(3 * w) + 0.25 * i * std::sin(5 * w);
        }
    const Sinogram sino(g, v);
    const AngularCoefficients c = angular_decompose(sino, kR, 6);
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(c.s[i] == doctest::Approx(g.axis1[i] - kR));
        CHECK(std::abs(c.at(0, i) - std::complex<double>(1.0 + i, 0.0)) < 1e-12);
        CHECK(std::abs(c.at(3, i) - 0.25) < 1e-12);
        CHECK(std::abs(c.at(-3, i) - 0.25) < 1e-12);
        CHECK(std::abs(c.at(5, i) - std::complex<double>(0.0, -0.125 * i)) < 1e-12);
        CHECK(std::abs(c.at(-5, i) - std::complex<double>(0.0, 0.125 * i)) < 1e-12);
        CHECK(std::abs(c.at(2, i)) < 1e-12);
        double energy = 0.0;
        for (int l = -6; l <= 6; ++l) energy += std::norm(c.at(l, i));
        CHECK(energy == doctest::Approx(c.mean_square[i]).epsilon(1e-12));
    }
    const auto synth = angular_synthesize(c, g.axis2);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(synth[k] == doctest::Approx(v[k]).epsilon(1e-12));
}

TEST_CASE("angular decomposition needs a full-turn constant radius sinogram") {
    const SinogramGeometry half{GeometryId::ConstantR, linspace(kR, 2 * kR, 4), linspace(0.0, kPi, 16)};
    CHECK_THROWS_AS(angular_decompose(Sinogram(half), kR, 4), HarmonicError);
    const SinogramGeometry lin{GeometryId::LinearCST, linspace(0, 1, 4), linspace(0, 1, 4)};
    CHECK_THROWS_AS(angular_decompose(Sinogram(lin), kR, 4), HarmonicError);
}

TEST_CASE("inversion refuses sinograms that miss part of the radial band") {
    const SinogramGeometry g{GeometryId::ConstantR, linspace(kR, kR + 0.5, 20), linspace_open(0.0, 2 * kPi, 32)};
    CHECK_THROWS_AS(invert_constant_r(Sinogram(g), kR, kD, 4, 0.0, {10, 10, kD, kR, -0.5, 0.5}), HarmonicError);
}

TEST_CASE("inversion of exact radial data") {
    const SinogramGeometry g = constant_r_axes(241, 32);
    const RadialProfile f = profile(400, bump);
    const auto rf = forward_abel({2, 0, kR, kD}, f);
    std::vector<double> v(g.size());
    for (std::size_t i = 0; i < g.axis1.size(); ++i) {
        const double s = g.axis1[i] - kR;
        // piecewise-linear interpolation of rf on the profile grid
        double val = 0.0;
        if (s >= kD && s <= kR) {
            const double pos = (s - kD) / f.step();
            const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(pos), f.size() - 2);
            const double w = pos - static_cast<double>(k);
            val = (1.0 - w) * rf[k] + w * rf[k + 1];
        }
        for (std::size_t k = 0; k < g.axis2.size(); ++k) v[g.index(i, k)] = val;
    }
    const ImageGeometry img{40, 40, kD, kR, -0.5, 0.5};
    const ConstantRInversion inv = invert_constant_r(Sinogram(g, v), kR, kD, 4, 0.0, img, 200);
    CHECK(inv.discarded_energy_fraction < 1e-12);
    double err = 0.0, norm = 0.0;
    for (std::size_t j = 0; j < img.ny; ++j)
        for (std::size_t i = 0; i < img.nx; ++i) {
            const double truth = bump(img.pixel_center(i, j).norm());
            err += std::pow(inv.image.at(i, j) - truth, 2);
            norm += truth * truth;
        }
    CHECK(std::sqrt(err / norm) < 0.02);
}
