#include "sphradon/projector.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "sphradon/raster_io.hpp"

namespace sphradon {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double smoothstep5(double s) { return s * s * s * (s * (6.0 * s - 15.0) + 10.0); }

} // namespace

SparseOperator::SparseOperator(ImageGeometry image, SinogramGeometry sinogram, std::vector<std::size_t> row_ptr,
                               std::vector<std::uint32_t> cols, std::vector<double> weights)
    : image_(image), sinogram_(std::move(sinogram)), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)),
      weights_(std::move(weights)) {
    image_.validate();
    if (row_ptr_.size() != sinogram_.size() + 1 || row_ptr_.front() != 0 || row_ptr_.back() != weights_.size() ||
        cols_.size() != weights_.size())
        throw ProjectorError("inconsistent CSR arrays");
    for (std::size_t i = 0; i + 1 < row_ptr_.size(); ++i)
        if (row_ptr_[i] > row_ptr_[i + 1]) throw ProjectorError("row pointers must be nondecreasing");
    const std::size_t n_cols = image_.size();
    for (std::uint32_t c : cols_)
        if (c >= n_cols) throw ProjectorError("column index out of range");

    // transpose by counting sort; rows of A^T come out in increasing order
    t_row_ptr_.assign(n_cols + 1, 0);
    for (std::uint32_t c : cols_) ++t_row_ptr_[c + 1];
    for (std::size_t c = 0; c < n_cols; ++c) t_row_ptr_[c + 1] += t_row_ptr_[c];
    t_cols_.resize(cols_.size());
    t_weights_.resize(weights_.size());
    std::vector<std::size_t> fill(t_row_ptr_.begin(), t_row_ptr_.end() - 1);
    for (std::size_t i = 0; i + 1 < row_ptr_.size(); ++i) {
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) {
            const std::size_t dst = fill[cols_[k]]++;
            t_cols_[dst] = static_cast<std::uint32_t>(i);
            t_weights_[dst] = weights_[k];
        }
    }
}

std::vector<double> SparseOperator::multiply(std::span<const double> x) const {
    if (x.size() != n_cols()) throw ProjectorError("operator input length mismatch");
    std::vector<double> y(n_rows(), 0.0);
    for (std::size_t i = 0; i < y.size(); ++i) {
        double sum = 0.0;
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) sum += weights_[k] * x[cols_[k]];
        y[i] = sum;
    }
    return y;
}

std::vector<double> SparseOperator::multiply_transpose(std::span<const double> y) const {
    if (y.size() != n_rows()) throw ProjectorError("operator transpose input length mismatch");
    std::vector<double> x(n_cols(), 0.0);
    for (std::size_t c = 0; c < x.size(); ++c) {
        double sum = 0.0;
        for (std::size_t k = t_row_ptr_[c]; k < t_row_ptr_[c + 1]; ++k) sum += t_weights_[k] * y[t_cols_[k]];
        x[c] = sum;
    }
    return x;
}

SparseOperator SparseOperator::scale_rows(std::span<const double> h) const {
    if (h.size() != n_rows()) throw ProjectorError("row scaling length mismatch");
    std::vector<double> w(weights_);
    for (std::size_t i = 0; i < n_rows(); ++i)
        for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) w[k] *= h[i];
    return SparseOperator(image_, sinogram_, row_ptr_, cols_, std::move(w));
}

SparseOperator assemble_forward(const RadiusModel& model, const ImageGeometry& image, const SinogramGeometry& sinogram,
                                std::size_t quad_per_circle) {
    if (quad_per_circle < 16) throw ProjectorError("quad_per_circle must be at least 16");
    image.validate();
    sinogram.validate();
    if (image.size() > std::size_t{0xffffffffu}) throw ProjectorError("image too large for 32-bit column indices");

    std::vector<Vec2> unit(quad_per_circle);
    for (std::size_t k = 0; k < quad_per_circle; ++k)
        unit[k] = unit_from_angle(kTwoPi * static_cast<double>(k) / static_cast<double>(quad_per_circle));
    const double dtheta = kTwoPi / static_cast<double>(quad_per_circle);

    std::vector<std::size_t> row_ptr{0};
    row_ptr.reserve(sinogram.size() + 1);
    std::vector<std::uint32_t> cols;
    std::vector<double> weights;
    std::vector<double> acc(image.size(), 0.0);
    std::vector<char> seen(image.size(), 0);
    std::vector<std::uint32_t> touched;

    for (std::size_t i1 = 0; i1 < sinogram.axis1.size(); ++i1) {
        for (std::size_t i2 = 0; i2 < sinogram.axis2.size(); ++i2) {
            const Vec2 y = sinogram.center(i1, i2);
            if (!model.valid_center(y))
                throw ProjectorError("sinogram center (" + std::to_string(y.x) + ", " + std::to_string(y.y) +
                                     ") is outside the valid center set of " + model.name());
            const double r = model.eval(y);
            if (!(r > 0.0) || !std::isfinite(r)) throw ProjectorError("radius must be positive and finite");
            const double w = r * dtheta;
            touched.clear();
            for (const Vec2& u : unit) {
                const BilinearStencil s = bilinear_stencil(image, y + r * u);
                for (std::size_t q = 0; q < s.count; ++q) {
                    const std::size_t c = s.index[q];
                    if (s.weight[q] == 0.0) continue;
                    if (!seen[c]) {
                        seen[c] = 1;
                        touched.push_back(static_cast<std::uint32_t>(c));
                    }
                    acc[c] += w * s.weight[q];
                }
            }
            std::sort(touched.begin(), touched.end());
            for (std::uint32_t c : touched) {
                cols.push_back(c);
                weights.push_back(acc[c]);
                acc[c] = 0.0;
                seen[c] = 0;
            }
            row_ptr.push_back(weights.size());
        }
    }
    return SparseOperator(image, sinogram, std::move(row_ptr), std::move(cols), std::move(weights));
}

Sinogram apply(const SparseOperator& op, const Image& image) {
    if (!(image.geometry() == op.image_geometry())) throw ProjectorError("image geometry does not match operator");
    return Sinogram(op.sinogram_geometry(), op.multiply(image.values()));
}

Image apply_transpose(const SparseOperator& op, const Sinogram& sinogram) {
    if (sinogram.values().size() != op.n_rows()) throw ProjectorError("sinogram shape does not match operator");
    return Image(op.image_geometry(), op.multiply_transpose(sinogram.values()));
}

double circle_integral(const Image& image, Vec2 center, double radius, std::size_t quad) {
    if (quad < 16) throw ProjectorError("quad must be at least 16");
    double sum = 0.0;
    for (std::size_t k = 0; k < quad; ++k) {
        const double th = kTwoPi * static_cast<double>(k) / static_cast<double>(quad);
        sum += bilinear_sample(image, center + radius * unit_from_angle(th));
    }
    return sum * radius * kTwoPi / static_cast<double>(quad);
}

void save_operator(const SparseOperator& op, const std::filesystem::path& path) {
    const std::size_t rows = op.n_rows();
    const std::size_t nnz = op.nnz();
    std::vector<double> payload;
    payload.reserve(rows + 1 + 2 * nnz);
    for (std::size_t v : op.row_ptr()) payload.push_back(static_cast<double>(v));
    for (std::uint32_t c : op.cols()) payload.push_back(static_cast<double>(c));
    payload.insert(payload.end(), op.weights().begin(), op.weights().end());

    const ImageGeometry& g = op.image_geometry();
    const SinogramGeometry& s = op.sinogram_geometry();
    nlohmann::json header;
    header["kind"] = "sparse_operator";
    header["shape"] = {payload.size()};
    header["n_rows"] = rows;
    header["n_cols"] = op.n_cols();
    header["nnz"] = nnz;
    header["image_shape"] = {g.ny, g.nx};
    header["extents"] = {g.x_min, g.x_max, g.y_min, g.y_max};
    header["geometry_id"] = std::string(to_string(s.id));
    header["axis1"] = s.axis1;
    header["axis2"] = s.axis2;
    write_container(path, std::move(header), payload);
}

SparseOperator load_operator(const std::filesystem::path& path) {
    RasterContainer c = read_container(path);
    try {
        if (c.header.at("kind").get<std::string>() != "sparse_operator")
            throw RasterError(RasterError::Code::MalformedHeader, "not a sparse operator file");
        const auto rows = c.header.at("n_rows").get<std::size_t>();
        const auto nnz = c.header.at("nnz").get<std::size_t>();
        if (c.payload.size() != rows + 1 + 2 * nnz)
            throw RasterError(RasterError::Code::ShapeMismatch, "operator payload length disagrees with n_rows/nnz");
        const auto shape = c.header.at("image_shape").get<std::vector<std::size_t>>();
        const auto ext = c.header.at("extents").get<std::vector<double>>();
        if (shape.size() != 2 || ext.size() != 4) throw RasterError(RasterError::Code::MalformedHeader, "bad image spec");
        ImageGeometry g{shape[1], shape[0], ext[0], ext[1], ext[2], ext[3]};
        SinogramGeometry s;
        s.id = geometry_id_from_string(c.header.at("geometry_id").get<std::string>());
        s.axis1 = c.header.at("axis1").get<std::vector<double>>();
        s.axis2 = c.header.at("axis2").get<std::vector<double>>();

        std::vector<std::size_t> row_ptr(rows + 1);
        std::vector<std::uint32_t> cols(nnz);
        for (std::size_t k = 0; k <= rows; ++k) row_ptr[k] = static_cast<std::size_t>(c.payload[k]);
        for (std::size_t k = 0; k < nnz; ++k) cols[k] = static_cast<std::uint32_t>(c.payload[rows + 1 + k]);
        std::vector<double> w(c.payload.begin() + static_cast<std::ptrdiff_t>(rows + 1 + nnz), c.payload.end());
        return SparseOperator(g, std::move(s), std::move(row_ptr), std::move(cols), std::move(w));
    } catch (const nlohmann::json::exception& e) {
        throw RasterError(RasterError::Code::MalformedHeader, e.what());
    } catch (const std::invalid_argument& e) {
        throw RasterError(RasterError::Code::MalformedHeader, e.what());
    } catch (const ProjectorError& e) {
        throw RasterError(RasterError::Code::MalformedHeader, e.what());
    }
}

double CutoffProfile::operator()(double v) const {
    if (reflected) v = -v;
    const double one_until = b + 0.25 * eps;
    const double zero_from = b + 0.5 * eps;
    if (v <= one_until) return 1.0;
    if (v >= zero_from) return 0.0;
    return 1.0 - smoothstep5((v - one_until) / (zero_from - one_until));
}

CutoffProfile CutoffProfile::falling(double one_until, double zero_from) {
    if (!(one_until < zero_from)) throw std::invalid_argument("cutoff ramp needs one_until < zero_from");
    const double w = zero_from - one_until;
    return {one_until - w, 4.0 * w, false};
}

CutoffProfile CutoffProfile::rising(double zero_until, double one_from) {
    if (!(zero_until < one_from)) throw std::invalid_argument("cutoff ramp needs zero_until < one_from");
    const double w = one_from - zero_until;
    return {-one_from - w, 4.0 * w, true};
}

std::vector<double> cutoff_weights(const SinogramGeometry& g, const CutoffProfile& cut, CutoffCoordinate coordinate) {
    if (coordinate == CutoffCoordinate::Y2 && g.polar())
        throw std::invalid_argument("y2 cutoff needs a Cartesian (LinearCST or CustomRadius) sinogram");
    std::vector<double> h(g.size());
    for (std::size_t i1 = 0; i1 < g.axis1.size(); ++i1) {
        for (std::size_t i2 = 0; i2 < g.axis2.size(); ++i2) {
            double v = 0.0;
            if (coordinate == CutoffCoordinate::Y2) v = g.axis2[i2];
            else v = g.polar() ? g.axis1[i1] : g.center(i1, i2).norm();
            h[g.index(i1, i2)] = cut(v);
        }
    }
    return h;
}

Sinogram apply_cutoff(const Sinogram& sinogram, const CutoffProfile& cut, CutoffCoordinate coordinate) {
    const std::vector<double> h = cutoff_weights(sinogram.geometry(), cut, coordinate);
    std::vector<double> v(sinogram.values().begin(), sinogram.values().end());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] *= h[k];
    return Sinogram(sinogram.geometry(), std::move(v));
}

double linear_cst_t(double alpha, double phi, double x2) {
    const double c = std::cos(phi);
    return (alpha * alpha + x2 * x2) / (x2 * std::sin(phi) + std::sqrt(alpha * alpha * c * c + x2 * x2));
}

Vec2 linear_cst_lambda(double alpha, double phi, Vec2 x) {
    return x - linear_cst_t(alpha, phi, x.y) * unit_from_angle(phi);
}

Image backproject_linear_cst(const Sinogram& sinogram, double alpha, const ImageGeometry& image, std::size_t n_phi) {
    if (sinogram.geometry().id != GeometryId::LinearCST) throw ProjectorError("backproject_linear_cst needs a LinearCST sinogram");
    if (!(image.pixel_center(0, 0).y > 0.0)) throw ProjectorError("LinearCST backprojection needs pixel centers inside {x2 > 0}");
    if (n_phi == 0) throw ProjectorError("n_phi must be positive");
    const double dphi = kTwoPi / static_cast<double>(n_phi);
    std::vector<double> out(image.size(), 0.0);
    for (std::size_t j = 0; j < image.ny; ++j) {
        for (std::size_t i = 0; i < image.nx; ++i) {
            const Vec2 x = image.pixel_center(i, j);
            double sum = 0.0;
            for (std::size_t k = 0; k < n_phi; ++k) {
                const double phi = -0.5 * std::numbers::pi + (static_cast<double>(k) + 0.5) * dphi;
                const Vec2 y = linear_cst_lambda(alpha, phi, x);
                sum += sinogram_sample(sinogram, y.x, y.y);
            }
            out[image.index(i, j)] = sum * dphi;
        }
    }
    return Image(image, std::move(out));
}

Image backproject_generic(const Sinogram& sinogram, const RadiusModel& model, const ImageGeometry& image, std::size_t n_omega) {
    if (n_omega == 0) throw ProjectorError("n_omega must be positive");
    const SinogramGeometry& g = sinogram.geometry();
    const double dw = kTwoPi / static_cast<double>(n_omega);
    std::vector<Vec2> dirs(n_omega);
    for (std::size_t k = 0; k < n_omega; ++k) dirs[k] = unit_from_angle(dw * static_cast<double>(k));

    std::vector<double> out(image.size(), 0.0);
    for (std::size_t j = 0; j < image.ny; ++j) {
        for (std::size_t i = 0; i < image.nx; ++i) {
            const Vec2 x = image.pixel_center(i, j);
            double sum = 0.0;
            for (const Vec2& w : dirs) {
                const std::optional<double> t = preimage_distance(model, x, w);
                if (!t) continue;
                const Vec2 c = g.coordinates_of(x + *t * w);
                sum += sinogram_sample(sinogram, c.x, c.y);
            }
            out[image.index(i, j)] = sum * dw;
        }
    }
    return Image(image, std::move(out));
}

} // namespace sphradon
