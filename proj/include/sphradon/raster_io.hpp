#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphradon/grid.hpp"

namespace sphradon {

/// Errors raised by the .srk reader and writer. Each failure class carries a
/// distinct code so callers can branch without parsing messages.
class RasterError : public std::runtime_error {
public:
    enum class Code { Io, MalformedHeader, ShapeMismatch, UnsupportedVersion, UnsupportedDtype };

    RasterError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

inline constexpr int kRasterFormatVersion = 1;

/// Generic container: a one-line JSON header, a newline, then a little-endian f64
/// payload whose length is the product of header["shape"].
struct RasterContainer {
    nlohmann::json header;
    std::vector<double> payload;
};

void write_container(const std::filesystem::path& path, nlohmann::json header, const std::vector<double>& payload);
RasterContainer read_container(const std::filesystem::path& path);

using Raster = std::variant<Image, Sinogram>;

void write_raster(const Image& image, const std::filesystem::path& path);
void write_raster(const Sinogram& sinogram, const std::filesystem::path& path);
Raster read_raster(const std::filesystem::path& path);

/// Typed readers; throw RasterError(MalformedHeader) when the file holds the other kind.
Image read_image(const std::filesystem::path& path);
Sinogram read_sinogram(const std::filesystem::path& path);

} // namespace sphradon
