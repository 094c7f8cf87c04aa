#include "sphradon/png_export.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>
#include <stdexcept>

#include <png.h>

namespace sphradon {

std::vector<std::uint8_t> to_gray8(const Image& image, std::optional<Window> window) {
    const auto values = image.values();
    double lo = 0.0;
    double hi = 0.0;
    if (window) {
        if (!(window->first < window->second)) throw std::invalid_argument("PNG window requires lo < hi");
        lo = window->first;
        hi = window->second;
    } else {
        const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
        lo = *mn;
        hi = *mx;
    }

    const ImageGeometry& g = image.geometry();
    std::vector<std::uint8_t> gray(g.size(), 0);
    if (!(lo < hi)) return gray;

    for (std::size_t j = 0; j < g.ny; ++j) {
        const std::size_t row = g.ny - 1 - j;
        for (std::size_t i = 0; i < g.nx; ++i) {
            const double v = std::clamp((image.at(i, j) - lo) / (hi - lo), 0.0, 1.0);
            gray[row * g.nx + i] = static_cast<std::uint8_t>(std::floor(v * 255.0 + 0.5));
        }
    }
    return gray;
}

void export_png(const Image& image, const std::filesystem::path& path, std::optional<Window> window) {
    const std::vector<std::uint8_t> gray = to_gray8(image, window);
    const ImageGeometry& g = image.geometry();

    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.string().c_str(), "wb"), &std::fclose);
    if (!fp) throw std::runtime_error("cannot open PNG for writing: " + path.string());

    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!png) throw std::runtime_error("png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error("png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error("libpng error while writing " + path.string());
    }

    png_init_io(png, fp.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(g.nx), static_cast<png_uint_32>(g.ny), 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::size_t row = 0; row < g.ny; ++row)
        png_write_row(png, const_cast<png_bytep>(gray.data() + row * g.nx));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

} // namespace sphradon
