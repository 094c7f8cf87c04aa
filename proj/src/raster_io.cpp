#include "sphradon/raster_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace sphradon {

namespace {

using json = nlohmann::json;

std::uint64_t to_little_endian(std::uint64_t v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        std::uint64_t out = 0;
        for (int k = 0; k < 8; ++k) out |= ((v >> (8 * k)) & 0xffu) << (8 * (7 - k));
        return out;
    }
}

std::string encode_payload(const std::vector<double>& values) {
    std::string bytes(values.size() * 8, '\0');
    for (std::size_t k = 0; k < values.size(); ++k) {
        std::uint64_t word = to_little_endian(std::bit_cast<std::uint64_t>(values[k]));
        std::memcpy(bytes.data() + 8 * k, &word, 8);
    }
    return bytes;
}

std::vector<double> decode_payload(const char* data, std::size_t count) {
    std::vector<double> values(count);
    for (std::size_t k = 0; k < count; ++k) {
        std::uint64_t word = 0;
        std::memcpy(&word, data + 8 * k, 8);
        values[k] = std::bit_cast<double>(to_little_endian(word));
    }
    return values;
}

std::size_t shape_product(const json& shape) {
    if (!shape.is_array() || shape.empty()) throw RasterError(RasterError::Code::MalformedHeader, "header shape must be a non-empty array");
    std::size_t n = 1;
    for (const auto& d : shape) {
        if (!d.is_number_unsigned()) throw RasterError(RasterError::Code::MalformedHeader, "header shape entries must be unsigned integers");
        n *= d.get<std::size_t>();
    }
    return n;
}

template <typename T>
T header_field(const json& header, const char* key) {
    try {
        return header.at(key).get<T>();
    } catch (const json::exception& e) {
        throw RasterError(RasterError::Code::MalformedHeader, std::string("header field '") + key + "': " + e.what());
    }
}

} // namespace

void write_container(const std::filesystem::path& path, json header, const std::vector<double>& payload) {
    header["format"] = "srk";
    header["version"] = kRasterFormatVersion;
    header["dtype"] = "f64le";
    if (shape_product(header.at("shape")) != payload.size())
        throw RasterError(RasterError::Code::ShapeMismatch, "shape product does not match payload length");

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw RasterError(RasterError::Code::Io, "cannot open for writing: " + path.string());
    const std::string line = header.dump();
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.put('\n');
    const std::string bytes = encode_payload(payload);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw RasterError(RasterError::Code::Io, "write failed: " + path.string());
}

RasterContainer read_container(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RasterError(RasterError::Code::Io, "cannot open for reading: " + path.string());
    std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    const auto newline = contents.find('\n');
    if (newline == std::string::npos) throw RasterError(RasterError::Code::MalformedHeader, "missing header terminator");

    RasterContainer c;
    try {
        c.header = json::parse(contents.begin(), contents.begin() + static_cast<std::ptrdiff_t>(newline));
    } catch (const json::parse_error& e) {
        throw RasterError(RasterError::Code::MalformedHeader, std::string("header is not valid JSON: ") + e.what());
    }
    if (!c.header.is_object()) throw RasterError(RasterError::Code::MalformedHeader, "header must be a JSON object");
    if (header_field<std::string>(c.header, "format") != "srk")
        throw RasterError(RasterError::Code::MalformedHeader, "unknown format tag");
    if (header_field<int>(c.header, "version") != kRasterFormatVersion)
        throw RasterError(RasterError::Code::UnsupportedVersion, "unsupported format version");
    const auto dtype = header_field<std::string>(c.header, "dtype");
    if (dtype != "f64le") throw RasterError(RasterError::Code::UnsupportedDtype, "unsupported dtype: " + dtype);

    const std::size_t count = shape_product(c.header.at("shape"));
    const std::size_t payload_bytes = contents.size() - newline - 1;
    if (payload_bytes != count * 8)
        throw RasterError(RasterError::Code::ShapeMismatch, "payload has " + std::to_string(payload_bytes) +
                                                                " bytes, shape requires " + std::to_string(count * 8));
    c.payload = decode_payload(contents.data() + newline + 1, count);
    return c;
}

void write_raster(const Image& image, const std::filesystem::path& path) {
    const ImageGeometry& g = image.geometry();
    json header;
    header["kind"] = "image";
    header["shape"] = {g.ny, g.nx};
    header["extents"] = {g.x_min, g.x_max, g.y_min, g.y_max};
    header["geometry_id"] = nullptr;
    write_container(path, std::move(header), std::vector<double>(image.values().begin(), image.values().end()));
}

void write_raster(const Sinogram& sinogram, const std::filesystem::path& path) {
    const SinogramGeometry& g = sinogram.geometry();
    json header;
    header["kind"] = "sinogram";
    header["shape"] = {g.axis1.size(), g.axis2.size()};
    header["axis1"] = g.axis1;
    header["axis2"] = g.axis2;
    header["geometry_id"] = std::string(to_string(g.id));
    write_container(path, std::move(header), std::vector<double>(sinogram.values().begin(), sinogram.values().end()));
}

Raster read_raster(const std::filesystem::path& path) {
    RasterContainer c = read_container(path);
    const auto kind = header_field<std::string>(c.header, "kind");
    const auto shape = header_field<std::vector<std::size_t>>(c.header, "shape");
    if (shape.size() != 2) throw RasterError(RasterError::Code::MalformedHeader, "raster shape must be two-dimensional");

    try {
        if (kind == "image") {
            const auto ext = header_field<std::vector<double>>(c.header, "extents");
            if (ext.size() != 4) throw RasterError(RasterError::Code::MalformedHeader, "image extents must have four entries");
            ImageGeometry g{shape[1], shape[0], ext[0], ext[1], ext[2], ext[3]};
            return Image(g, std::move(c.payload));
        }
        if (kind == "sinogram") {
            SinogramGeometry g;
            g.id = geometry_id_from_string(header_field<std::string>(c.header, "geometry_id"));
            g.axis1 = header_field<std::vector<double>>(c.header, "axis1");
            g.axis2 = header_field<std::vector<double>>(c.header, "axis2");
            if (g.axis1.size() != shape[0] || g.axis2.size() != shape[1])
                throw RasterError(RasterError::Code::ShapeMismatch, "sinogram axes disagree with shape");
            return Sinogram(std::move(g), std::move(c.payload));
        }
    } catch (const std::invalid_argument& e) {
        throw RasterError(RasterError::Code::MalformedHeader, e.what());
    }
    throw RasterError(RasterError::Code::MalformedHeader, "unsupported raster kind: " + kind);
}

Image read_image(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    if (auto* img = std::get_if<Image>(&r)) return std::move(*img);
    throw RasterError(RasterError::Code::MalformedHeader, "expected an image raster: " + path.string());
}

Sinogram read_sinogram(const std::filesystem::path& path) {
    Raster r = read_raster(path);
    if (auto* s = std::get_if<Sinogram>(&r)) return std::move(*s);
    throw RasterError(RasterError::Code::MalformedHeader, "expected a sinogram raster: " + path.string());
}

} // namespace sphradon
