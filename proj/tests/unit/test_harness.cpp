#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <numeric>

#include "sphradon/harness.hpp"
#include "sphradon/raster_io.hpp"

using namespace sphradon;

namespace {

constexpr double kPi = std::numbers::pi;

double sum(const Image& img) { return std::accumulate(img.values().begin(), img.values().end(), 0.0); }

double norm(std::span<const double> v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

ExperimentConfig tiny_config() {
    ExperimentConfig cfg = preset("constant-r");
    cfg.data_grid = {32, 32, 0.25, 1.25, -0.5, 0.5};
    cfg.recon_grid = {30, 30, 0.25, 1.25, -0.5, 0.5};
    cfg.axis1.n = 30;
    cfg.axis2.n = 48;
    cfg.quad_data = cfg.quad_recon = 256;
    cfg.recon.iterations = 20;
    cfg.out_dir = std::filesystem::temp_directory_path() / "sphradon_unit_run";
    return cfg;
}

} // namespace

TEST_CASE("disk phantom mass matches its area") {
    PhantomSpec disk;
    disk.kind = PhantomKind::Disk;
    disk.center = {0.1, -0.05};
    disk.outer = 0.4;
    disk.amplitude = 2.0;
    const ImageGeometry g{105, 105, -1.0, 1.0, -1.0, 1.0};
    const double mass = sum(make_phantom(disk, g)) * g.dx() * g.dy();
    CHECK(mass == doctest::Approx(2.0 * kPi * 0.16).epsilon(1e-3));
}

TEST_CASE("half annulus is zero below its center line") {
    PhantomSpec h{PhantomKind::HalfAnnulus, {0.0, 0.1}, 0.2, 0.5, 0.0, kPi, 1.0, {}, {}};
    const ImageGeometry g{80, 80, -1.0, 1.0, -1.0, 1.0};
    const Image img = make_phantom(h, g);
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i)
            if (g.pixel_center(i, j).y + 0.5 * g.dy() < 0.1) CHECK(img.at(i, j) == 0.0);
    const double mass = sum(img) * g.dx() * g.dy();
    CHECK(mass == doctest::Approx(0.5 * kPi * (0.25 - 0.04)).epsilon(5e-3));
    PhantomSpec sector = h;
    sector.inner = 0.0;
    CHECK(sum(make_phantom(sector, g)) * g.dx() * g.dy() == doctest::Approx(0.5 * kPi * 0.25).epsilon(5e-3));
}

TEST_CASE("phantom validation") {
    PhantomSpec bad{PhantomKind::Annulus, {0, 0}, 0.5, 0.4, 0.0, kPi, 1.0, {}, {}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad.kind = PhantomKind::HalfAnnulus;
    bad.inner = 0.1;
    bad.angle_hi = 7.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("noise is reproducible and scaled by gamma") {
    const SinogramGeometry g{GeometryId::CustomRadius, linspace(0, 1, 100), linspace(0, 1, 120)};
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = 1.0 + std::sin(0.01 * k);
    const Sinogram b(g, v);
    const Sinogram same = add_noise(b, 0.0, 5);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(same.values()[k] == v[k]);
    const Sinogram n1 = add_noise(b, 0.05, 5);
    const Sinogram n2 = add_noise(b, 0.05, 5);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(n1.values()[k] == n2.values()[k]);
    const double bn = norm(b.values());
    double mean = 0.0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const Sinogram n = add_noise(b, 0.05, seed);
        std::vector<double> diff(v.size());
        for (std::size_t k = 0; k < v.size(); ++k) diff[k] = n.values()[k] - v[k];
        const double rel = norm(diff) / bn;
        CHECK(rel > 0.05 * 0.9);
        CHECK(rel < 0.05 * 1.1);
        mean += rel / 100.0;
    }
    CHECK(mean == doctest::Approx(0.05).epsilon(0.01));
}

TEST_CASE("least squares error arithmetic") {
    const ImageGeometry g{4, 4, 0, 1, 0, 1};
    std::vector<double> t(16);
    for (std::size_t k = 0; k < 16; ++k) t[k] = 1.0 + k;
    const Image truth(g, t);
    CHECK(lsq_error(truth, truth) == 0.0);
    CHECK(lsq_error(Image(g), truth) == doctest::Approx(1.0));
    std::vector<double> t2 = t, t3 = t;
    for (double& x : t2) x *= 2.0;
    CHECK(lsq_error(Image(g, t2), truth) == doctest::Approx(1.0));
    std::vector<double> r(16, 3.0);
    for (double& x : t3) x *= 7.0;
    std::vector<double> r7 = r;
    for (double& x : r7) x *= 7.0;
    CHECK(lsq_error(Image(g, r7), Image(g, t3)) == doctest::Approx(lsq_error(Image(g, r), truth)));
    CHECK_THROWS_AS(lsq_error(truth, Image(g)), std::invalid_argument);
}

TEST_CASE("area resampling conserves the mean of a covered image") {
    const ImageGeometry fine{105, 105, -1, 1, -1, 1};
    std::vector<double> v(fine.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::cos(0.001 * k);
    const Image src(fine, v);
    const Image dst = area_resample(src, {100, 100, -1, 1, -1, 1});
    CHECK(sum(dst) / 1e4 == doctest::Approx(sum(src) / (105.0 * 105.0)).epsilon(1e-12));
    const Image flat = area_resample(Image(fine, std::vector<double>(fine.size(), 3.0)), {7, 9, -0.5, 0.5, -1, 1});
    for (double x : flat.values()) CHECK(x == doctest::Approx(3.0));
}

TEST_CASE("config JSON round trip and validation") {
    for (const std::string& name : preset_names())
        for (ReconMethod m : {ReconMethod::Landweber, ReconMethod::TV}) {
            const ExperimentConfig cfg = preset(name, m);
            const ExperimentConfig back = ExperimentConfig::from_json(cfg.to_json());
            CHECK(back.to_json() == cfg.to_json());
            CHECK(config_hash(back) == config_hash(cfg));
        }
    nlohmann::json j = preset("linear-cst").to_json();
    j["colour"] = "blue";
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    j = preset("linear-cst").to_json();
    j["recon_grid"] = j["data_grid"];
    CHECK_THROWS_AS(ExperimentConfig::from_json(j), ConfigError);
    j["allow_inverse_crime"] = true;
    CHECK_NOTHROW(ExperimentConfig::from_json(j));
    CHECK_THROWS_AS(preset("rotational-cst", ReconMethod::FBP), ConfigError);
    CHECK_THROWS_AS(preset("sphere"), ConfigError);
    const ExperimentConfig partial = ExperimentConfig::from_json({{"preset", "constant-r"}, {"gamma", 0.1}});
    CHECK(partial.gamma == 0.1);
    CHECK(partial.r == 1.25);
}

TEST_CASE("config hash changes with any field") {
    ExperimentConfig a = preset("linear-cst");
    ExperimentConfig b = a;
    b.seed = 2;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("injectivity advisory for a short y2 axis") {
    ExperimentConfig cfg = preset("linear-cst");
    CHECK_FALSE(injectivity_advisory(cfg).has_value());
    cfg.axis2.hi = 0.0;
    const auto adv = injectivity_advisory(cfg);
    REQUIRE(adv.has_value());
    CHECK(adv->find("injectivity band") != std::string::npos);
    CHECK_FALSE(injectivity_advisory(preset("constant-r")).has_value());
}

TEST_CASE("run_experiment writes outputs and reports are deterministic") {
    ExperimentConfig cfg = tiny_config();
    cfg.audit = true;
    const ExperimentReport a = run_experiment(cfg);
    CHECK(a.delta > 0.0);
    CHECK(a.delta < 1.0);
    CHECK(a.json.contains("geometry_report"));
    CHECK(a.json.at("config_hash") == hex64(config_hash(cfg)));
    for (const char* suffix : {"_truth.srk", "_sinogram.srk", "_recon.srk", "_recon.png", "_log.csv", "_report.json"})
        CHECK(std::filesystem::exists(cfg.out_dir / (cfg.name + suffix)));
    const ExperimentReport b = run_experiment(cfg);
    REQUIRE(a.reconstruction.values().size() == b.reconstruction.values().size());
    for (std::size_t k = 0; k < a.reconstruction.values().size(); ++k)
        CHECK(a.reconstruction.values()[k] == b.reconstruction.values()[k]);
    CHECK(a.json.dump() == b.json.dump());
    const Image written = read_image(cfg.out_dir / (cfg.name + "_recon.srk"));
    CHECK(written.values()[17] == b.reconstruction.values()[17]);
}

TEST_CASE("run_experiment tags failures with the stage") {
    ExperimentConfig cfg = tiny_config();
    cfg.write_outputs = false;
    cfg.recon_grid = cfg.data_grid;
    try {
        run_experiment(cfg);
        FAIL("expected a stage error");
    } catch (const StageError& e) {
        CHECK(e.stage() == "config");
        CHECK_FALSE(e.numerical());
    }
}

TEST_CASE("linear preset advisory and audit regions") {
    const ExperimentConfig cfg = preset("linear-cst");
    const AuditRegions regions = audit_regions(cfg);
    CHECK(regions.omega.contains({0.0, 1.0}));
    CHECK_FALSE(regions.omega.contains({0.0, -0.1}));
}

TEST_CASE("gaussian high-pass removes constants") {
    const ImageGeometry g{9, 7, 0, 1, 0, 1};
    const Image hp = gaussian_highpass(Image(g, std::vector<double>(g.size(), 5.0)), 1.0);
    for (double v : hp.values()) CHECK(v == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("streak metric needs a cropped geometry") {
    const ExperimentConfig cfg = preset("rotational-cst");
    CHECK_THROWS_AS(streak_config(cfg), ConfigError);
    const ExperimentConfig lin = streak_config(preset("linear-cst"));
    CHECK(lin.axis1.n == 400);
    CHECK(lin.axis2.n == 400);
}
