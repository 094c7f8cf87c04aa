#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "sphradon/grid.hpp"

namespace sphradon {

using Window = std::pair<double, double>;

/// Gray levels for an image, top row first (y_max at the top). Values are mapped
/// affinely from the window (data min/max by default), clamped, and rounded half
/// up. A degenerate window maps every pixel to 0.
std::vector<std::uint8_t> to_gray8(const Image& image, std::optional<Window> window = std::nullopt);

/// Writes an 8-bit grayscale PNG. Throws std::invalid_argument for lo >= hi and
/// std::runtime_error on IO failure.
void export_png(const Image& image, const std::filesystem::path& path, std::optional<Window> window = std::nullopt);

} // namespace sphradon
