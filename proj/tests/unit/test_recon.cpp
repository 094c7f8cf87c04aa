#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "sphradon/harness.hpp"
#include "sphradon/projector.hpp"
#include "sphradon/recon.hpp"

using namespace sphradon;

namespace {

constexpr double kPi = std::numbers::pi;

struct Problem {
    ImageGeometry image;
    SinogramGeometry sino;
    SparseOperator op;
    Image truth;
    Sinogram data;
};

Problem small_problem() {
    const ImageGeometry img{24, 24, 0.25, 1.25, -0.5, 0.5};
    const SinogramGeometry sg{GeometryId::ConstantR, linspace(1.25, 2.5, 30), linspace_open(0, 2 * kPi, 48)};
    SparseOperator op = assemble_forward(RadiusModel::constant_r(1.25), img, sg, 256);
    PhantomSpec ph;
    ph.kind = PhantomKind::Disk;
    ph.center = {0.75, 0.0};
    ph.outer = 0.25;
    Image truth = make_phantom(ph, img);
    Sinogram data = apply(op, truth);
    return {img, sg, std::move(op), std::move(truth), std::move(data)};
}

Sinogram scaled(const Sinogram& s, double c) {
    std::vector<double> v(s.values().begin(), s.values().end());
    for (double& x : v) x *= c;
    return Sinogram(s.geometry(), std::move(v));
}

} // namespace

TEST_CASE("power iteration matches the largest singular value of a diagonal-like operator") {
    const ImageGeometry img{2, 1, 0.0, 2.0, 0.0, 1.0};
    const SinogramGeometry sg{GeometryId::CustomRadius, {0.0, 1.0}, {0.0}};
    const SparseOperator op(img, sg, {0, 1, 2}, {0, 1}, {3.0, 0.5});
    CHECK(estimate_sigma_max(op, 100) == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("Landweber residual is nonincreasing and the default step is 1/sigma^2") {
    const Problem p = small_problem();
    ReconConfig cfg;
    cfg.iterations = 60;
    const ReconResult r = landweber(p.op, p.data, cfg);
    REQUIRE(r.log.size() == 61);
    for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k] <= r.log[k - 1] * (1.0 + 1e-12));
    CHECK(r.step == doctest::Approx(1.0 / (r.sigma_max * r.sigma_max)));
    CHECK(r.log.back() < 0.5 * r.log.front());
}

TEST_CASE("Landweber with nonnegativity returns a nonnegative image") {
    const Problem p = small_problem();
    ReconConfig cfg;
    cfg.iterations = 30;
    cfg.nonneg = true;
    const ReconResult r = landweber(p.op, p.data, cfg);
    for (double v : r.image.values()) CHECK(v >= 0.0);
}

TEST_CASE("TV objective is nonincreasing and nonnegativity holds") {
    const Problem p = small_problem();
    ReconConfig cfg;
    cfg.method = ReconMethod::TV;
    cfg.iterations = 40;
    cfg.lambda_tv = 1e-2;
    cfg.nonneg = true;
    const ReconResult r = tv_reconstruct(p.op, p.data, cfg);
    for (std::size_t k = 1; k < r.log.size(); ++k) CHECK(r.log[k] <= r.log[k - 1] * (1.0 + 1e-12));
    for (double v : r.image.values()) CHECK(v >= 0.0);
}

TEST_CASE("smoothed TV of a constant image is beta per pixel with zero gradient") {
    const ImageGeometry g{5, 4, 0, 1, 0, 1};
    std::vector<double> x(g.size(), 2.0), grad;
    CHECK(smoothed_tv(g, x, 0.1, &grad) == doctest::Approx(0.1 * 20));
    for (double v : grad) CHECK(v == doctest::Approx(0.0));
}

TEST_CASE("smoothed TV gradient matches finite differences") {
    const ImageGeometry g{6, 5, 0, 1, 0, 1};
    std::mt19937_64 gen(3);
    std::normal_distribution<double> nd;
    std::vector<double> x(g.size()), grad;
    for (double& v : x) v = nd(gen);
    smoothed_tv(g, x, 0.05, &grad);
    for (std::size_t k = 0; k < x.size(); k += 3) {
        auto xp = x, xm = x;
        xp[k] += 1e-6;
        xm[k] -= 1e-6;
        const double fd = (smoothed_tv(g, xp, 0.05) - smoothed_tv(g, xm, 0.05)) / 2e-6;
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5));
    }
}

TEST_CASE("recon config validation") {
    ReconConfig cfg;
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.iterations = 5;
    cfg.step = -1.0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("y2 derivative is exact on linear rows and zero on constant interior rows") {
    const SinogramGeometry g{GeometryId::LinearCST, linspace(-1, 1, 3), linspace(-1.0, 2.0, 7)};
    std::vector<double> lin(g.size()), cst(g.size(), 4.0);
    for (std::size_t i1 = 0; i1 < 3; ++i1)
        for (std::size_t i2 = 0; i2 < 7; ++i2) lin[g.index(i1, i2)] = 0.5 + 3.0 * g.axis2[i2];
    const Sinogram d = derivative_y2(Sinogram(g, lin));
    const Sinogram dc = derivative_y2(Sinogram(g, cst));
    for (std::size_t i1 = 0; i1 < 3; ++i1)
        for (std::size_t i2 = 1; i2 + 1 < 7; ++i2) {
            CHECK(d.at(i1, i2) == doctest::Approx(3.0));
            CHECK(dc.at(i1, i2) == doctest::Approx(0.0));
        }
}

TEST_CASE("index Laplacian vanishes on affine interiors") {
    const SinogramGeometry g{GeometryId::ConstantR, linspace(1.0, 2.0, 6), linspace(0.0, 1.0, 5)};
    std::vector<double> v(g.size());
    for (std::size_t i1 = 0; i1 < 6; ++i1)
        for (std::size_t i2 = 0; i2 < 5; ++i2) v[g.index(i1, i2)] = 1.0 + 2.0 * i1 - 0.5 * i2;
    const Sinogram lap = index_laplacian(Sinogram(g, v));
    for (std::size_t i1 = 1; i1 + 1 < 6; ++i1)
        for (std::size_t i2 = 1; i2 + 1 < 5; ++i2) CHECK(lap.at(i1, i2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("FBP variants are linear and map zero to zero") {
    const ImageGeometry img{12, 12, -1.0, 1.0, 0.1, 2.0};
    const SinogramGeometry lg{GeometryId::LinearCST, linspace(-3, 3, 40), linspace(-1, 3, 40)};
    std::vector<double> v(lg.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.37 * k) + 0.1 * std::cos(1.3 * k);
    const Sinogram b(lg, v);
    const auto cut = CutoffProfile::falling(2.0, 3.0);
    const Image x1 = fbp_linear_cst(b, 1.0, img, cut, nullptr, 180);
    const Image x3 = fbp_linear_cst(scaled(b, 3.0), 1.0, img, cut, nullptr, 180);
    for (std::size_t k = 0; k < img.size(); ++k)
        CHECK(x3.values()[k] == doctest::Approx(3.0 * x1.values()[k]).epsilon(1e-12));
    const Image z1 = fbp_linear_cst(Sinogram(lg), 1.0, img, cut, nullptr, 90);
    for (double z : z1.values()) CHECK(z == 0.0);

    const ImageGeometry cimg{10, 10, 0.25, 1.25, -0.5, 0.5};
    const SinogramGeometry cg{GeometryId::ConstantR, linspace(1.25, 2.5, 30), linspace_open(0, 2 * kPi, 40)};
    std::vector<double> w(cg.size());
    for (std::size_t k = 0; k < w.size(); ++k) w[k] = std::cos(0.21 * k);
    const Sinogram c(cg, w);
    const Image y1 = fbp_constant_r(c, 1.25, cimg, std::nullopt, 180);
    const Image y2 = fbp_constant_r(scaled(c, -2.0), 1.25, cimg, std::nullopt, 180);
    for (std::size_t k = 0; k < cimg.size(); ++k)
        CHECK(y2.values()[k] == doctest::Approx(-2.0 * y1.values()[k]).epsilon(1e-12));
    const Image z2 = fbp_constant_r(Sinogram(cg), 1.25, cimg, std::nullopt, 90);
    for (double z : z2.values()) CHECK(z == 0.0);
}

TEST_CASE("noiseless Landweber on a small problem converges") {
    ExperimentConfig cfg = preset("constant-r");
    cfg.data_grid = {42, 42, 0.25, 1.25, -0.5, 0.5};
    cfg.recon_grid = {40, 40, 0.25, 1.25, -0.5, 0.5};
    cfg.axis1.n = 60;
    cfg.axis2.n = 96;
    cfg.quad_data = cfg.quad_recon = 512;
    cfg.phantom = {PhantomKind::Disk, {0.75, 0.0}, 0.0, 0.3, 0.0, 2 * kPi, 1.0, {}, {}};
    cfg.gamma = 0.0;
    cfg.recon.iterations = 2000;
    cfg.write_outputs = false;
    CHECK(run_experiment(cfg).delta < 0.1);
}

TEST_CASE("TV with lambda 0 and no constraint follows the Landweber trajectory") {
    const Problem p = small_problem();
    ReconConfig lw;
    lw.iterations = 25;
    ReconConfig tv = lw;
    tv.method = ReconMethod::TV;
    tv.lambda_tv = 0.0;
    const ReconResult a = landweber(p.op, p.data, lw);
    const ReconResult b = tv_reconstruct(p.op, p.data, tv);
    REQUIRE(b.log.size() == a.log.size());
    for (std::size_t k = 0; k < a.image.values().size(); ++k)
        CHECK(b.image.values()[k] == doctest::Approx(a.image.values()[k]).epsilon(1e-10));
    // TV logs 1/2 ||A x - b||^2, Landweber logs ||A x - b||
    for (std::size_t k = 0; k < a.log.size(); ++k) CHECK(b.log[k] == doctest::Approx(0.5 * a.log[k] * a.log[k]));
}
