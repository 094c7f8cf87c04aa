#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <nlohmann/json.hpp>

#include "sphradon/harmonic.hpp"
#include "sphradon/harness.hpp"

namespace py = pybind11;
using namespace sphradon;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_array(std::span<const double> values, std::size_t rows, std::size_t cols) {
    Array out({rows, cols});
    std::copy(values.begin(), values.end(), out.mutable_data());
    return out;
}

Array image_array(const Image& img) { return to_array(img.values(), img.geometry().ny, img.geometry().nx); }

Array sinogram_array(const Sinogram& s) {
    return to_array(s.values(), s.geometry().axis1.size(), s.geometry().axis2.size());
}

std::vector<double> flatten(const Array& a, std::size_t& rows, std::size_t& cols) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-d array");
    rows = static_cast<std::size_t>(a.shape(0));
    cols = static_cast<std::size_t>(a.shape(1));
    return std::vector<double>(a.data(), a.data() + a.size());
}

ExperimentConfig parse_config(const std::string& text) { return ExperimentConfig::from_json(nlohmann::json::parse(text)); }

ReconMethod method_of(const std::string& name) {
    if (name == "landweber") return ReconMethod::Landweber;
    if (name == "tv") return ReconMethod::TV;
    if (name == "fbp") return ReconMethod::FBP;
    throw ConfigError("unknown method '" + name + "'");
}

} // namespace

PYBIND11_MODULE(_sphradon, m) {
    m.doc() = "Generalized spherical Radon transform reconstruction";

    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

    m.def("preset_names", &preset_names);
    m.def(
        "preset", [](const std::string& name, const std::string& method) { return preset(name, method_of(method)).to_json().dump(); },
        py::arg("name"), py::arg("method") = "landweber");
    m.def("config_hash", [](const std::string& cfg) { return hex64(config_hash(parse_config(cfg))); });

    m.def(
        "phantom",
        [](const std::string& cfg_text, const std::string& grid) {
            const ExperimentConfig cfg = parse_config(cfg_text);
            return image_array(make_phantom(cfg.phantom, grid == "recon" ? cfg.recon_grid : cfg.data_grid));
        },
        py::arg("config"), py::arg("grid") = "data");

    m.def("synthesize", [](const std::string& cfg_text) {
        const ExperimentConfig cfg = parse_config(cfg_text);
        const SyntheticData syn = [&] {
            py::gil_scoped_release release;
            return synthesize(cfg);
        }();
        return py::make_tuple(image_array(syn.truth), sinogram_array(syn.data), syn.data.geometry().axis1,
                              syn.data.geometry().axis2);
    });

    m.def(
        "add_noise",
        [](const Array& b, double gamma, std::uint64_t seed) {
            std::size_t rows = 0, cols = 0;
            std::vector<double> values = flatten(b, rows, cols);
            SinogramGeometry g{GeometryId::CustomRadius, linspace(0.0, 1.0, std::max<std::size_t>(rows, 2)),
                               linspace(0.0, 1.0, std::max<std::size_t>(cols, 2))};
            g.axis1.resize(rows);
            g.axis2.resize(cols);
            return sinogram_array(add_noise(Sinogram(g, std::move(values)), gamma, seed));
        },
        py::arg("b"), py::arg("gamma"), py::arg("seed"));

    m.def("lsq_error", [](const Array& rec, const Array& truth) {
        std::size_t r1 = 0, c1 = 0, r2 = 0, c2 = 0;
        std::vector<double> a = flatten(rec, r1, c1);
        std::vector<double> b = flatten(truth, r2, c2);
        const Image x_rec(ImageGeometry{c1, r1, 0.0, 1.0, 0.0, 1.0}, std::move(a));
        const Image x_true(ImageGeometry{c2, r2, 0.0, 1.0, 0.0, 1.0}, std::move(b));
        return lsq_error(x_rec, x_true);
    });

    m.def("run_experiment", [](const std::string& cfg_text) {
        const ExperimentConfig cfg = parse_config(cfg_text);
        const ExperimentReport report = [&] {
            py::gil_scoped_release release;
            return run_experiment(cfg);
        }();
        py::dict out;
        out["delta"] = report.delta;
        out["truth"] = image_array(report.truth);
        out["reconstruction"] = image_array(report.reconstruction);
        out["data"] = sinogram_array(report.data);
        out["log"] = report.log;
        out["warnings"] = report.warnings;
        out["hash"] = hex64(report.hash);
        out["report"] = report.json.dump();
        return out;
    });

    m.def(
        "invert_constant_r",
        [](const std::string& cfg_text, int L, double ridge, std::size_t m_nodes) {
            const ExperimentConfig cfg = parse_config(cfg_text);
            const ConstantRInversion inv = [&] {
                py::gil_scoped_release release;
                const SyntheticData syn = synthesize(cfg);
                return invert_constant_r(syn.data, cfg.r, cfg.d, L, ridge, cfg.recon_grid, m_nodes);
            }();
            return py::make_tuple(image_array(inv.image), inv.discarded_energy_fraction);
        },
        py::arg("config"), py::arg("L") = 16, py::arg("ridge") = 0.0, py::arg("m") = 200);

    m.def(
        "palamodov_check",
        [](const std::string& cfg_text, std::pair<double, double> center, double radius, std::size_t samples,
           std::uint64_t seed) {
            const ExperimentConfig cfg = parse_config(cfg_text);
            return palamodov_check(cfg, {center.first, center.second}, radius, samples, seed).to_json().dump();
        },
        py::arg("config"), py::arg("center") = std::pair<double, double>{0.2, -0.1}, py::arg("radius") = 0.4,
        py::arg("samples") = 200, py::arg("seed") = 1);
}
