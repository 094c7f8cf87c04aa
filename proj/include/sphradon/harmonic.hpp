#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphradon/grid.hpp"

namespace sphradon {

class HarmonicError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Radial profile on the uniform grid rho_k = d + k (r - d)/(m - 1), k = 0..m-1.
struct RadialProfile {
    double d = 0.0;
    double r = 0.0;
    std::vector<double> values;

    std::size_t size() const { return values.size(); }
    double step() const { return (r - d) / static_cast<double>(values.size() - 1); }
    double node(std::size_t k) const { return d + static_cast<double>(k) * step(); }
    std::vector<double> grid() const { return linspace(d, r, values.size()); }
    /// Piecewise-linear value; 0 outside [d, r].
    double operator()(double rho) const;
    void validate() const;
};

/// Kernel of the radial Volterra equation for constant radius r in dimension n:
///   Rf_l(s) = int_s^r (rho - s)^{(n-3)/2} K(rho, s) f_l(rho) drho
/// with n = 2: K = 2 K1 K2^{-1/2} T_|l|(t) and n = 3: K = 2 pi K1 P_l(t).
struct AbelKernelSpec {
    int n = 2;
    int l = 0;
    double r = 1.25;
    double d = 0.25;

    void validate() const;

    /// cos of the angle between xi and omega at radius rho on the circle with offset s.
    double t(double rho, double s) const;
    /// Inner-branch inverse of t: rho(t, s) = (r+s) t - sqrt((r+s)^2 t^2 - (s^2 + 2rs)).
    double rho(double t, double s) const;
    /// r rho^{n-2} / (r + s).
    double k1(double rho, double s) const;
    /// K1 evaluated from its unsimplified square-root expression.
    double k1_sqrt_form(double rho, double s) const;
    /// (1 - t^2) / (rho - s) = (rho + s)((2r + s)^2 - rho^2) / (4 rho^2 (s + r)^2).
    double k2(double rho, double s) const;
    double kernel(double rho, double s) const;
};

/// Chebyshev T_l and Legendre P_l by three-term recurrence.
double chebyshev_t(int l, double x);
double legendre_p(int l, double x);

/// Integral over [grid[i], grid.back()] of (rho - s)^{(n-3)/2} F(rho) with s = grid[i]
/// and F given at the grid nodes. n = 2 integrates the piecewise-linear interpolant
/// of F against the singular weight exactly; n = 3 uses the composite trapezoid rule.
double abel_weighted_integral(int n, std::span<const double> grid, std::span<const double> F, std::size_t i);

/// Rf_l on the profile grid (s_k = rho_k).
std::vector<double> forward_abel(const AbelKernelSpec& spec, const RadialProfile& f);

/// Diagonal entries of the triangular system used by solve_abel, rows 0..m-2.
std::vector<double> abel_diagonal(const AbelKernelSpec& spec, std::size_t m);

/// Inverts forward_abel. The unknowns are f at rho_0..rho_{m-2}; f(r) = 0 because
/// the profile is supported inside the open annulus d < rho < r. ridge = 0 uses
/// back substitution; ridge > 0 solves (A^T A + ridge I) f = A^T b.
/// The inverse amplifies data that is inconsistent with this discretization
/// sharply as l grows (about 1e4 at l = 8, m = 200), so noisy or independently
/// computed data needs the ridge or a small mode cutoff.
RadialProfile solve_abel(const AbelKernelSpec& spec, std::span<const double> rf, double ridge = 0.0);

/// Fourier coefficients c_l(s) = (1/N) sum_k g(s, w_k) exp(-i l w_k) of a ConstantR
/// sinogram, l = -L..L, with s = |y| - r.
struct AngularCoefficients {
    int L = 0;
    std::vector<double> s;
    std::vector<std::complex<double>> c;  // row-major (l + L, s index)
    /// (1/N) sum_k |g(s_i, w_k)|^2 per s row, for Parseval and tail checks.
    std::vector<double> mean_square;

    std::complex<double> at(int l, std::size_t i) const { return c[static_cast<std::size_t>(l + L) * s.size() + i]; }
    std::complex<double>& at(int l, std::size_t i) { return c[static_cast<std::size_t>(l + L) * s.size() + i]; }
};

AngularCoefficients angular_decompose(const Sinogram& sinogram, double r, int L);

/// Sum_l c_l(s) exp(i l w) on the given angles, real part; rows follow coeffs.s.
std::vector<double> angular_synthesize(const AngularCoefficients& coeffs, std::span<const double> angles);

struct ConstantRInversion {
    Image image;
    /// Real and imaginary parts of f_l for l = -L..L.
    std::vector<RadialProfile> re;
    std::vector<RadialProfile> im;
    /// Fraction of the angular data energy on [d, r] carried by modes |l| > L.
    double discarded_energy_fraction = 0.0;
};

/// Angular decomposition, per-mode Abel solve on an m-node grid over [d, r], and
/// resynthesis onto the image raster (pixels with |x| outside [d, r] are 0).
ConstantRInversion invert_constant_r(const Sinogram& sinogram, double r, double d, int L, double ridge,
                                     const ImageGeometry& image, std::size_t m = 200);

void write_profiles_csv(const std::filesystem::path& path, const ConstantRInversion& inv);

} // namespace sphradon
