#include "sphradon/harmonic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

namespace sphradon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Quadrature weights w_j, j = i..m-1, with sum_j w_j F_j approximating
// int_{grid[i]}^{grid[m-1]} (rho - s)^{(n-3)/2} F(rho) drho.
void abel_weights(int n, std::span<const double> grid, std::size_t i, std::vector<double>& w) {
    const std::size_t m = grid.size();
    w.assign(m, 0.0);
    if (i + 1 >= m) return;
    const double s = grid[i];
    if (n == 3) {
        for (std::size_t j = i; j + 1 < m; ++j) {
            const double h = grid[j + 1] - grid[j];
            w[j] += 0.5 * h;
            w[j + 1] += 0.5 * h;
        }
        return;
    }
    for (std::size_t j = i; j + 1 < m; ++j) {
        const double a = grid[j];
        const double b = grid[j + 1];
        const double h = b - a;
        const double ra = std::sqrt(std::max(a - s, 0.0));
        const double rb = std::sqrt(b - s);
        const double m0 = 2.0 * (rb - ra);
        const double m1 = (2.0 / 3.0) * (rb * rb * rb - ra * ra * ra) + (s - a) * m0;
        w[j] += m0 - m1 / h;
        w[j + 1] += m1 / h;
    }
}

// Dense m x m matrix with A(i, j) = w_j(i) K(rho_j, s_i); row m-1 is zero.
Eigen::MatrixXd build_matrix(const AbelKernelSpec& spec, const std::vector<double>& grid) {
    const std::size_t m = grid.size();
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(m));
    std::vector<double> w;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        abel_weights(spec.n, grid, i, w);
        for (std::size_t j = i; j < m; ++j)
            A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = w[j] * spec.kernel(grid[j], grid[i]);
    }
    return A;
}

std::vector<double> solve_system(const Eigen::MatrixXd& A, std::span<const double> rf, double ridge) {
    const auto m = A.rows();
    const auto k = m - 1;
    std::vector<double> f(static_cast<std::size_t>(m), 0.0);
    if (ridge > 0.0) {
        const Eigen::MatrixXd T = A.topLeftCorner(k, k);
        Eigen::VectorXd b(k);
        for (Eigen::Index i = 0; i < k; ++i) b(i) = rf[static_cast<std::size_t>(i)];
        Eigen::MatrixXd N = T.transpose() * T;
        N.diagonal().array() += ridge;
        const Eigen::VectorXd x = N.llt().solve(T.transpose() * b);
        for (Eigen::Index i = 0; i < k; ++i) f[static_cast<std::size_t>(i)] = x(i);
        return f;
    }
    for (Eigen::Index i = k - 1; i >= 0; --i) {
        double acc = rf[static_cast<std::size_t>(i)];
        for (Eigen::Index j = i + 1; j < k; ++j) acc -= A(i, j) * f[static_cast<std::size_t>(j)];
        const double diag = A(i, i);
        if (!(diag > 0.0)) throw HarmonicError("Abel system has a nonpositive diagonal entry");
        f[static_cast<std::size_t>(i)] = acc / diag;
    }
    return f;
}

} // namespace

double RadialProfile::operator()(double rho) const {
    if (values.size() < 2 || rho < d || rho > r) return 0.0;
    const double u = (rho - d) / step();
    const std::size_t k = std::min(static_cast<std::size_t>(u), values.size() - 2);
    const double frac = u - static_cast<double>(k);
    return (1.0 - frac) * values[k] + frac * values[k + 1];
}

void RadialProfile::validate() const {
    if (!(d > 0.0)) throw std::invalid_argument("radial profile needs d > 0");
    if (!(r > d)) throw std::invalid_argument("radial profile needs r > d");
    if (values.size() < 16) throw std::invalid_argument("radial profile needs at least 16 nodes");
}

void AbelKernelSpec::validate() const {
    if (n != 2 && n != 3) throw std::invalid_argument("Abel kernel dimension must be 2 or 3");
    if (l < 0) throw std::invalid_argument("Abel kernel degree must be nonnegative");
    if (!(d > 0.0) || !(r > d)) throw std::invalid_argument("Abel kernel needs 0 < d < r");
}

double AbelKernelSpec::t(double rho, double s) const { return (rho * rho + s * s + 2.0 * s * r) / (2.0 * rho * (s + r)); }

double AbelKernelSpec::rho(double tv, double s) const {
    const double a = (r + s) * tv;
    return a - std::sqrt(std::max(a * a - (s * s + 2.0 * r * s), 0.0));
}

double AbelKernelSpec::k1(double rhov, double s) const { return r * std::pow(rhov, n - 2) / (r + s); }

double AbelKernelSpec::k1_sqrt_form(double rhov, double s) const {
    const double q = rhov * rhov + s * s + 2.0 * s * r;
    const double u = (2.0 * r + s) * (2.0 * r + s) - rhov * rhov;
    const double inner = q * q - 4.0 * rhov * rhov * (s * s + 2.0 * s * r) + (rhov * rhov - s * s) * u;
    return std::pow(rhov, n - 2) / (2.0 * rhov * (r + s)) * std::sqrt(std::max(inner, 0.0));
}

double AbelKernelSpec::k2(double rhov, double s) const {
    const double sr = s + r;
    return (rhov + s) * ((2.0 * r + s) * (2.0 * r + s) - rhov * rhov) / (4.0 * rhov * rhov * sr * sr);
}

double AbelKernelSpec::kernel(double rhov, double s) const {
    const double tv = t(rhov, s);
    if (n == 3) return kTwoPi * k1(rhov, s) * legendre_p(l, tv);
    return 2.0 * k1(rhov, s) * chebyshev_t(l, tv) / std::sqrt(k2(rhov, s));
}

double chebyshev_t(int l, double x) {
    l = std::abs(l);
    if (l == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < l; ++k) {
        const double next = 2.0 * x * cur - prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

double legendre_p(int l, double x) {
    l = std::abs(l);
    if (l == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < l; ++k) {
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

double abel_weighted_integral(int n, std::span<const double> grid, std::span<const double> F, std::size_t i) {
    if (grid.size() != F.size()) throw std::invalid_argument("grid and integrand sizes differ");
    if (i >= grid.size()) throw std::invalid_argument("lower limit beyond the grid");
    std::vector<double> w;
    abel_weights(n, grid, i, w);
    double acc = 0.0;
    for (std::size_t j = i; j < grid.size(); ++j) acc += w[j] * F[j];
    return acc;
}

std::vector<double> forward_abel(const AbelKernelSpec& spec, const RadialProfile& f) {
    spec.validate();
    f.validate();
    const std::vector<double> grid = f.grid();
    const std::size_t m = grid.size();
    std::vector<double> out(m, 0.0);
    std::vector<double> F(m, 0.0);
    for (std::size_t i = 0; i + 1 < m; ++i) {
        for (std::size_t j = i; j < m; ++j) F[j] = spec.kernel(grid[j], grid[i]) * f.values[j];
        out[i] = abel_weighted_integral(spec.n, grid, F, i);
    }
    return out;
}

std::vector<double> abel_diagonal(const AbelKernelSpec& spec, std::size_t m) {
    spec.validate();
    const Eigen::MatrixXd A = build_matrix(spec, linspace(spec.d, spec.r, m));
    std::vector<double> diag(m - 1);
    for (std::size_t i = 0; i + 1 < m; ++i) diag[i] = A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
    return diag;
}

RadialProfile solve_abel(const AbelKernelSpec& spec, std::span<const double> rf, double ridge) {
    spec.validate();
    if (rf.size() < 16) throw std::invalid_argument("Abel data needs at least 16 nodes");
    if (ridge < 0.0) throw std::invalid_argument("ridge must be nonnegative");
    const Eigen::MatrixXd A = build_matrix(spec, linspace(spec.d, spec.r, rf.size()));
    return {spec.d, spec.r, solve_system(A, rf, ridge)};
}

AngularCoefficients angular_decompose(const Sinogram& sinogram, double r, int L) {
    const SinogramGeometry& g = sinogram.geometry();
    if (g.id != GeometryId::ConstantR) throw HarmonicError("angular decomposition needs a ConstantR sinogram");
    if (!g.periodic_axis2()) throw HarmonicError("angle axis must be uniform over a full turn");
    if (L < 0) throw std::invalid_argument("L must be nonnegative");
    const std::size_t n1 = g.axis1.size();
    const std::size_t n2 = g.axis2.size();
    AngularCoefficients out;
    out.L = L;
    out.s.resize(n1);
    for (std::size_t i = 0; i < n1; ++i) out.s[i] = g.axis1[i] - r;
    out.c.assign(static_cast<std::size_t>(2 * L + 1) * n1, {0.0, 0.0});
    out.mean_square.assign(n1, 0.0);
    const double inv_n = 1.0 / static_cast<double>(n2);
    for (std::size_t i = 0; i < n1; ++i) {
        double ms = 0.0;
        for (std::size_t k = 0; k < n2; ++k) ms += sinogram.at(i, k) * sinogram.at(i, k);
        out.mean_square[i] = ms * inv_n;
        for (int l = -L; l <= L; ++l) {
            std::complex<double> acc{0.0, 0.0};
            for (std::size_t k = 0; k < n2; ++k)
                acc += sinogram.at(i, k) * std::polar(1.0, -static_cast<double>(l) * g.axis2[k]);
            out.at(l, i) = acc * inv_n;
        }
    }
    return out;
}

std::vector<double> angular_synthesize(const AngularCoefficients& coeffs, std::span<const double> angles) {
    const std::size_t n1 = coeffs.s.size();
    std::vector<double> out(n1 * angles.size(), 0.0);
    for (std::size_t i = 0; i < n1; ++i)
        for (std::size_t k = 0; k < angles.size(); ++k) {
            double acc = 0.0;
            for (int l = -coeffs.L; l <= coeffs.L; ++l)
                acc += (coeffs.at(l, i) * std::polar(1.0, static_cast<double>(l) * angles[k])).real();
            out[i * angles.size() + k] = acc;
        }
    return out;
}

ConstantRInversion invert_constant_r(const Sinogram& sinogram, double r, double d, int L, double ridge,
                                     const ImageGeometry& image, std::size_t m) {
    if (!(d > 0.0) || !(r > d)) throw std::invalid_argument("inversion needs 0 < d < r");
    if (m < 16) throw std::invalid_argument("inversion needs at least 16 radial nodes");
    image.validate();
    const SinogramGeometry& g = sinogram.geometry();
    if (g.axis1.empty()) throw HarmonicError("empty sinogram");
    const double tol = 1e-9 * r;
    const double lo = g.axis1.front() - r;
    const double hi = g.axis1.back() - r;
    if (lo > d + tol || hi < r - tol) {
        std::ostringstream msg;
        msg << "sinogram covers s in [" << lo << ", " << hi << "] but [" << d << ", " << r << "] is needed; uncovered:";
        if (lo > d + tol) msg << " [" << d << ", " << std::min(lo, r) << ")";
        if (hi < r - tol) msg << " (" << std::max(hi, d) << ", " << r << "]";
        throw HarmonicError(msg.str());
    }

    const AngularCoefficients coeffs = angular_decompose(sinogram, r, L);
    const std::vector<double> grid = linspace(d, r, m);

    // Linear interpolation of each c_l from the sinogram s samples onto the Abel grid.
    std::vector<std::size_t> lower(m);
    std::vector<double> frac(m);
    for (std::size_t k = 0; k < m; ++k) {
        const auto it = std::upper_bound(coeffs.s.begin(), coeffs.s.end(), grid[k]);
        std::size_t hi_i = static_cast<std::size_t>(it - coeffs.s.begin());
        hi_i = std::clamp<std::size_t>(hi_i, 1, coeffs.s.size() - 1);
        if (coeffs.s.size() == 1) {
            lower[k] = 0;
            frac[k] = 0.0;
            continue;
        }
        lower[k] = hi_i - 1;
        const double a = coeffs.s[hi_i - 1];
        const double b = coeffs.s[hi_i];
        frac[k] = std::clamp((grid[k] - a) / (b - a), 0.0, 1.0);
    }

    ConstantRInversion out{Image(image), {}, {}, 0.0};
    std::vector<double> re_data(m);
    std::vector<double> im_data(m);
    for (int l = -L; l <= L; ++l) {
        for (std::size_t k = 0; k < m; ++k) {
            std::complex<double> c = coeffs.at(l, lower[k]);
            if (coeffs.s.size() > 1) c = (1.0 - frac[k]) * c + frac[k] * coeffs.at(l, lower[k] + 1);
            re_data[k] = c.real();
            im_data[k] = c.imag();
        }
        const AbelKernelSpec spec{2, std::abs(l), r, d};
        const Eigen::MatrixXd A = build_matrix(spec, grid);
        out.re.push_back({d, r, solve_system(A, re_data, ridge)});
        out.im.push_back({d, r, solve_system(A, im_data, ridge)});
    }

    double kept = 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < coeffs.s.size(); ++i) {
        if (coeffs.s[i] < d - tol || coeffs.s[i] > r + tol) continue;
        total += coeffs.mean_square[i];
        for (int l = -L; l <= L; ++l) kept += std::norm(coeffs.at(l, i));
    }
    out.discarded_energy_fraction = total > 0.0 ? std::max(0.0, (total - kept) / total) : 0.0;

    std::vector<double> values(image.size(), 0.0);
    for (std::size_t j = 0; j < image.ny; ++j)
        for (std::size_t i = 0; i < image.nx; ++i) {
            const Vec2 p = image.pixel_center(i, j);
            const double rho = p.norm();
            if (rho < d || rho > r) continue;
            const double xi = std::atan2(p.y, p.x);
            double acc = 0.0;
            for (int l = -L; l <= L; ++l) {
                const std::size_t idx = static_cast<std::size_t>(l + L);
                const std::complex<double> fl{out.re[idx](rho), out.im[idx](rho)};
                acc += (fl * std::polar(1.0, static_cast<double>(l) * xi)).real();
            }
            values[image.index(i, j)] = acc;
        }
    out.image = Image(image, std::move(values));
    return out;
}

void write_profiles_csv(const std::filesystem::path& path, const ConstantRInversion& inv) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot open " + path.string());
    if (inv.re.empty()) return;
    const int L = static_cast<int>(inv.re.size() / 2);
    os << "rho";
    for (int l = -L; l <= L; ++l) os << ",re_" << l << ",im_" << l;
    os << '\n';
    os.precision(17);
    const std::vector<double> grid = inv.re.front().grid();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        os << grid[k];
        for (std::size_t q = 0; q < inv.re.size(); ++q) os << ',' << inv.re[q].values[k] << ',' << inv.im[q].values[k];
        os << '\n';
    }
}

} // namespace sphradon
