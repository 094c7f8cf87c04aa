#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "sphradon/grid.hpp"
#include "sphradon/png_export.hpp"
#include "sphradon/raster_io.hpp"

using namespace sphradon;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / "sphradon_unit";
    std::filesystem::create_directories(dir);
    return dir / name;
}

Image affine_image(const ImageGeometry& g, double a, double b, double c) {
    std::vector<double> v(g.size());
    for (std::size_t j = 0; j < g.ny; ++j)
        for (std::size_t i = 0; i < g.nx; ++i) {
            const Vec2 p = g.pixel_center(i, j);
            v[g.index(i, j)] = a + b * p.x + c * p.y;
        }
    return Image(g, v);
}

} // namespace

TEST_CASE("linspace endpoints and open variant") {
    const auto a = linspace(-1.0, 1.0, 5);
    CHECK(a.front() == -1.0);
    CHECK(a.back() == 1.0);
    CHECK(a[2] == doctest::Approx(0.0));
    const auto b = linspace_open(0.0, 2.0 * std::numbers::pi, 4);
    CHECK(b.size() == 4);
    CHECK(b[1] == doctest::Approx(std::numbers::pi / 2));
    CHECK(b.back() < 2.0 * std::numbers::pi);
}

TEST_CASE("pixel centers and world_to_pixel") {
    const ImageGeometry g{4, 2, 0.0, 4.0, -1.0, 1.0};
    CHECK(g.pixel_center(0, 0).x == doctest::Approx(0.5));
    CHECK(g.pixel_center(3, 1).y == doctest::Approx(0.5));
    CHECK(world_to_pixel(g, {0.0, -1.0}) == PixelIndex{0, 0});
    CHECK(world_to_pixel(g, {3.99, 0.99}) == PixelIndex{3, 1});
    CHECK_FALSE(world_to_pixel(g, {4.0, 0.0}).has_value());
    CHECK_FALSE(world_to_pixel(g, {-0.01, 0.0}).has_value());
}

TEST_CASE("bilinear sampling reproduces affine functions inside the center hull") {
    const ImageGeometry g{20, 15, -1.0, 1.0, 0.0, 3.0};
    const Image img = affine_image(g, 0.3, -1.2, 2.5);
    for (double x : {-0.9, -0.31, 0.0, 0.77, 0.94})
        for (double y : {0.11, 1.0, 2.2, 2.89}) CHECK(bilinear_sample(img, {x, y}) == doctest::Approx(0.3 - 1.2 * x + 2.5 * y));
    CHECK(bilinear_sample(img, {-0.999, 1.0}) == 0.0);
    const BilinearStencil st = bilinear_stencil(g, {0.123, 1.456});
    CHECK(st.count == 4);
    double sum = 0.0;
    for (std::size_t k = 0; k < st.count; ++k) {
        CHECK(st.weight[k] >= 0.0);
        sum += st.weight[k];
    }
    CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("polar sinogram axes") {
    SinogramGeometry g{GeometryId::ConstantR, linspace(1.25, 2.5, 6), linspace_open(0.0, 2.0 * std::numbers::pi, 8)};
    CHECK(g.periodic_axis2());
    const Vec2 c = g.center(2, 2);
    CHECK(c.x == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(c.y == doctest::Approx(1.75));
    const Vec2 back = g.coordinates_of(c);
    CHECK(back.x == doctest::Approx(1.75));
    CHECK(back.y == doctest::Approx(std::numbers::pi / 2));
    g.axis2 = linspace(0.0, std::numbers::pi, 8);
    CHECK_FALSE(g.periodic_axis2());
}

TEST_CASE("geometry id names round trip") {
    for (GeometryId id : {GeometryId::LinearCST, GeometryId::RotationalCST, GeometryId::ConstantR, GeometryId::CustomRadius})
        CHECK(geometry_id_from_string(to_string(id)) == id);
    CHECK_THROWS_AS(geometry_id_from_string("Sphere"), std::invalid_argument);
}

TEST_CASE("image raster round trip is bit exact") {
    const ImageGeometry g{7, 5, -1.0, 1.0, 0.0, 2.0};
    const Image img = affine_image(g, 1.0 / 3.0, std::numbers::pi, -std::exp(1.0));
    const auto path = temp_path("img.srk");
    write_raster(img, path);
    const Image back = read_image(path);
    CHECK(back.geometry() == g);
    for (std::size_t k = 0; k < g.size(); ++k) CHECK(back.values()[k] == img.values()[k]);
    CHECK_THROWS_AS(read_sinogram(path), RasterError);
}

TEST_CASE("sinogram raster round trip keeps axes and geometry id") {
    SinogramGeometry g{GeometryId::LinearCST, linspace(-4.0, 4.0, 9), linspace(-0.5, 3.0, 4)};
    std::vector<double> v(g.size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::sin(0.1 * static_cast<double>(k));
    const Sinogram s(g, v);
    const auto path = temp_path("sino.srk");
    write_raster(s, path);
    const Raster r = read_raster(path);
    REQUIRE(std::holds_alternative<Sinogram>(r));
    const Sinogram& back = std::get<Sinogram>(r);
    CHECK(back.geometry() == g);
    for (std::size_t k = 0; k < v.size(); ++k) CHECK(back.values()[k] == v[k]);
}

TEST_CASE("raster reader reports distinct error codes") {
    const auto code_of = [](const std::filesystem::path& p) {
        try {
            (void)read_raster(p);
        } catch (const RasterError& e) {
            return e.code();
        }
        FAIL("no error");
        return RasterError::Code::Io;
    };
    CHECK(code_of(temp_path("missing.srk")) == RasterError::Code::Io);

    const auto write_text = [](const std::filesystem::path& p, const std::string& text) {
        std::ofstream(p, std::ios::binary) << text;
    };
    const auto bad_json = temp_path("bad_json.srk");
    write_text(bad_json, "{not json\n");
    CHECK(code_of(bad_json) == RasterError::Code::MalformedHeader);

    const auto bad_version = temp_path("bad_version.srk");
    write_text(bad_version, R"({"format":"srk","version":99,"dtype":"f64le","kind":"image","shape":[1,1],"extents":[0,1,0,1]})"
                            "\n12345678");
    CHECK(code_of(bad_version) == RasterError::Code::UnsupportedVersion);

    const auto bad_dtype = temp_path("bad_dtype.srk");
    write_text(bad_dtype, R"({"format":"srk","version":1,"dtype":"f32le","kind":"image","shape":[1,1],"extents":[0,1,0,1]})"
                          "\n1234");
    CHECK(code_of(bad_dtype) == RasterError::Code::UnsupportedDtype);

    const auto short_payload = temp_path("short.srk");
    write_text(short_payload, R"({"format":"srk","version":1,"dtype":"f64le","kind":"image","shape":[2,2],"extents":[0,1,0,1]})"
                              "\n12345678");
    CHECK(code_of(short_payload) == RasterError::Code::ShapeMismatch);
}

TEST_CASE("gray levels follow the window and put y_max on top") {
    const ImageGeometry g{2, 2, 0.0, 1.0, 0.0, 1.0};
    const Image img(g, {0.0, 1.0, 2.0, 4.0});
    const auto gray = to_gray8(img);
    // row j = 1 (y_max) comes first
    CHECK(gray[0] == 128);
    CHECK(gray[1] == 255);
    CHECK(gray[2] == 0);
    CHECK(gray[3] == 64);
    const auto clipped = to_gray8(img, Window{1.0, 2.0});
    CHECK(clipped[0] == 255);
    CHECK(clipped[1] == 255);
    CHECK(clipped[2] == 0);
    CHECK(clipped[3] == 0);
    CHECK_THROWS_AS(export_png(img, temp_path("bad.png"), Window{1.0, 1.0}), std::invalid_argument);
    const Image flat(g, {3.0, 3.0, 3.0, 3.0});
    for (auto v : to_gray8(flat)) CHECK(v == 0);
}

TEST_CASE("png export writes a PNG signature") {
    const ImageGeometry g{3, 2, 0.0, 1.0, 0.0, 1.0};
    const auto path = temp_path("out.png");
    export_png(Image(g, {0, 1, 2, 3, 4, 5}), path);
    std::ifstream is(path, std::ios::binary);
    unsigned char sig[8] = {};
    is.read(reinterpret_cast<char*>(sig), 8);
    CHECK(sig[0] == 0x89);
    CHECK(sig[1] == 'P');
    CHECK(sig[2] == 'N');
    CHECK(sig[3] == 'G');
}
