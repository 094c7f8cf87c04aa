#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sphradon/geometry.hpp"
#include "sphradon/harmonic.hpp"
#include "sphradon/harness.hpp"
#include "sphradon/png_export.hpp"
#include "sphradon/projector.hpp"
#include "sphradon/raster_io.hpp"
#include "sphradon/recon.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sphradon;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

/// Options that select and override the experiment configuration.
struct ConfigOptions {
    std::string config_path;
    std::string preset_name;
    std::string method;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<std::string> name;
    std::optional<std::string> geometry;
    std::optional<double> alpha;
    std::optional<double> r;
    std::optional<double> d;
    std::optional<double> gamma;
    std::optional<int> iterations;
    std::optional<double> step;
    std::optional<double> lambda_tv;
    std::optional<double> beta_tv;
    std::optional<bool> nonneg;
    std::optional<std::size_t> quad_data;
    std::optional<std::size_t> quad_recon;
    std::optional<bool> allow_inverse_crime;
    std::optional<bool> audit;
    std::vector<std::string> set;
};

void add_config_options(CLI::App& app, ConfigOptions& o) {
    app.add_option("--config", o.config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--preset", o.preset_name, "linear-cst, rotational-cst or constant-r");
    app.add_option("--method", o.method, "recon.method: fbp, landweber or tv");
    app.add_option("--seed", o.seed, "seed");
    app.add_option("--out-dir", o.out_dir, "out_dir");
    app.add_option("--name", o.name, "name (output file stem)");
    app.add_option("--geometry", o.geometry, "geometry");
    app.add_option("--alpha", o.alpha, "alpha");
    app.add_option("--r", o.r, "r");
    app.add_option("--d", o.d, "d");
    app.add_option("--gamma", o.gamma, "gamma");
    app.add_option("--iterations", o.iterations, "recon.iterations");
    app.add_option("--step", o.step, "recon.step");
    app.add_option("--lambda-tv", o.lambda_tv, "recon.lambda_tv");
    app.add_option("--beta-tv", o.beta_tv, "recon.beta_tv");
    app.add_option("--nonneg", o.nonneg, "recon.nonneg");
    app.add_option("--quad-data", o.quad_data, "quad_data");
    app.add_option("--quad-recon", o.quad_recon, "quad_recon");
    app.add_option("--allow-inverse-crime", o.allow_inverse_crime, "allow_inverse_crime");
    app.add_option("--audit", o.audit, "audit");
    app.add_option("--set", o.set, "KEY.PATH=VALUE override of any config key (VALUE parsed as JSON)");
}

json parse_value(const std::string& text) {
    json v = json::parse(text, nullptr, false);
    return v.is_discarded() ? json(text) : v;
}

ExperimentConfig resolve_config(const ConfigOptions& o, const std::string& fallback_preset = "") {
    json base = json::object();
    if (!o.config_path.empty()) {
        std::ifstream is(o.config_path);
        base = json::parse(is, nullptr, false);
        if (base.is_discarded() || !base.is_object()) throw ConfigError("cannot parse " + o.config_path);
    }
    if (!o.preset_name.empty()) base["preset"] = o.preset_name;
    if (!o.method.empty()) base["recon"]["method"] = o.method;
    if (!base.contains("preset") && o.config_path.empty()) {
        if (fallback_preset.empty()) throw ConfigError("give --config or --preset");
        base["preset"] = fallback_preset;
    }
    // Materialize the full config, then apply flag overrides on top of it.
    json full = ExperimentConfig::from_json(base).to_json();
    const auto put = [&](const char* pointer, const auto& value) {
        if (value) full[json::json_pointer(pointer)] = *value;
    };
    put("/seed", o.seed);
    put("/out_dir", o.out_dir);
    put("/name", o.name);
    put("/geometry", o.geometry);
    put("/alpha", o.alpha);
    put("/r", o.r);
    put("/d", o.d);
    put("/gamma", o.gamma);
    put("/recon/iterations", o.iterations);
    put("/recon/step", o.step);
    put("/recon/lambda_tv", o.lambda_tv);
    put("/recon/beta_tv", o.beta_tv);
    put("/recon/nonneg", o.nonneg);
    put("/quad_data", o.quad_data);
    put("/quad_recon", o.quad_recon);
    put("/allow_inverse_crime", o.allow_inverse_crime);
    put("/audit", o.audit);
    for (const std::string& item : o.set) {
        const auto eq = item.find('=');
        if (eq == std::string::npos || eq == 0) throw ConfigError("--set expects KEY.PATH=VALUE, got '" + item + "'");
        std::string pointer = "/" + item.substr(0, eq);
        for (char& c : pointer)
            if (c == '.') c = '/';
        full[json::json_pointer(pointer)] = parse_value(item.substr(eq + 1));
    }
    return ExperimentConfig::from_json(full);
}

fs::path output_path(const ExperimentConfig& cfg, const std::string& given, const std::string& suffix) {
    if (!given.empty()) return given;
    fs::create_directories(cfg.out_dir);
    return cfg.out_dir / (cfg.name + suffix);
}

void ensure_parent(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

Image as_image(const Raster& raster) {
    if (const auto* img = std::get_if<Image>(&raster)) return *img;
    const Sinogram& s = std::get<Sinogram>(raster);
    const SinogramGeometry& g = s.geometry();
    const ImageGeometry ig{g.axis2.size(), g.axis1.size(), g.axis2.front(), g.axis2.back(), g.axis1.front(),
                           g.axis1.back()};
    return Image(ig, std::vector<double>(s.values().begin(), s.values().end()));
}

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Generalized spherical Radon transform experiments"};
    app.require_subcommand(1);
    ConfigOptions opts;
    add_config_options(app, opts);

    auto* phantom_cmd = app.add_subcommand("phantom", "rasterize the configured phantom");
    std::string phantom_grid = "data";
    std::string phantom_out;
    bool phantom_png = false;
    phantom_cmd->add_option("--grid", phantom_grid, "data or recon")->check(CLI::IsMember({"data", "recon"}));
    phantom_cmd->add_option("-o,--output", phantom_out, "output .srk");
    phantom_cmd->add_flag("--png", phantom_png, "also write a PNG next to the raster");

    auto* project_cmd = app.add_subcommand("project", "forward transform of an image or the configured phantom");
    std::string project_image, project_out, project_operator;
    project_cmd->add_option("--image", project_image, "input image .srk (default: phantom on the data grid)")
        ->check(CLI::ExistingFile);
    project_cmd->add_option("-o,--output", project_out, "output sinogram .srk");
    project_cmd->add_option("--save-operator", project_operator, "also write the assembled operator");

    auto* noise_cmd = app.add_subcommand("noise", "add gamma-scaled Gaussian noise to a sinogram");
    std::string noise_in, noise_out;
    noise_cmd->add_option("-i,--input", noise_in, "input sinogram .srk")->required()->check(CLI::ExistingFile);
    noise_cmd->add_option("-o,--output", noise_out, "output sinogram .srk");

    auto* recon_cmd = app.add_subcommand("recon", "reconstruct a sinogram on the reconstruction grid");
    std::string recon_in, recon_truth, recon_out;
    recon_cmd->add_option("-i,--input", recon_in, "input sinogram .srk")->required()->check(CLI::ExistingFile);
    recon_cmd->add_option("--truth", recon_truth, "truth image .srk for the error")->check(CLI::ExistingFile);
    recon_cmd->add_option("-o,--output", recon_out, "output image .srk");

    auto* fbp_cmd = app.add_subcommand("fbp", "filtered backprojection (linear-cst, constant-r)");
    std::string fbp_in, fbp_out;
    bool fbp_sharp = false;
    fbp_cmd->add_option("-i,--input", fbp_in, "input sinogram .srk")->required()->check(CLI::ExistingFile);
    fbp_cmd->add_option("-o,--output", fbp_out, "output image .srk");
    fbp_cmd->add_flag("--sharp", fbp_sharp, "skip the smooth cutoff");

    auto* invert_cmd = app.add_subcommand("invert-constant-r", "harmonic and Abel inversion of constant-r data");
    std::string invert_in, invert_out;
    int invert_l = 16;
    double invert_ridge = 0.0;
    std::size_t invert_m = 200;
    invert_cmd->add_option("-i,--input", invert_in, "input sinogram .srk")->required()->check(CLI::ExistingFile);
    invert_cmd->add_option("-o,--output", invert_out, "output image .srk");
    invert_cmd->add_option("--L", invert_l, "highest angular mode")->check(CLI::NonNegativeNumber);
    invert_cmd->add_option("--ridge", invert_ridge, "Tikhonov weight of the Abel solves")->check(CLI::NonNegativeNumber);
    invert_cmd->add_option("--m", invert_m, "radial nodes on [d, r]");

    auto* pal_cmd = app.add_subcommand("palamodov-check", "equidistant-sphere equivalence check on a disk");
    std::size_t pal_samples = 200;
    std::vector<double> pal_center{0.2, -0.1};
    double pal_radius = 0.4;
    double pal_min_arc = 0.25;
    pal_cmd->add_option("--samples", pal_samples, "compared (|y|, angle) pairs");
    pal_cmd->add_option("--disk-center", pal_center, "disk center x,y")->expected(2)->delimiter(',');
    pal_cmd->add_option("--disk-radius", pal_radius, "disk radius")->check(CLI::PositiveNumber);
    pal_cmd->add_option("--min-arc", pal_min_arc, "skip circles whose arc in the disk is shorter");

    auto* audit_cmd = app.add_subcommand("audit-geometry", "weak stability audit of the configured geometry");
    std::size_t audit_nx = 256, audit_nw = 64;
    audit_cmd->add_option("--n-x", audit_nx, "sampled points of Omega");
    audit_cmd->add_option("--n-omega", audit_nw, "sampled directions per point");

    auto* run_cmd = app.add_subcommand("run", "full pipeline from a config");

    auto* png_cmd = app.add_subcommand("export-png", "8-bit grayscale PNG of a raster");
    std::string png_in, png_out;
    std::vector<double> png_window;
    png_cmd->add_option("-i,--input", png_in, "input .srk")->required()->check(CLI::ExistingFile);
    png_cmd->add_option("-o,--output", png_out, "output .png")->required();
    png_cmd->add_option("--window", png_window, "lo,hi")->expected(2)->delimiter(',');

    for (CLI::App* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (*phantom_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const Image img = make_phantom(cfg.phantom, phantom_grid == "data" ? cfg.data_grid : cfg.recon_grid);
            const fs::path out = output_path(cfg, phantom_out, "_phantom.srk");
            ensure_parent(out);
            write_raster(img, out);
            if (phantom_png) export_png(img, fs::path(out).replace_extension(".png"));
            print({{"output", out.string()}});
        } else if (*project_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            Sinogram data = [&] {
                if (project_image.empty() && project_operator.empty()) return synthesize(cfg).data;
                const Image img = project_image.empty() ? make_phantom(cfg.phantom, cfg.data_grid) : read_image(project_image);
                const SparseOperator op = assemble_forward(cfg.model(), img.geometry(), cfg.sinogram_geometry(), cfg.quad_data);
                if (!project_operator.empty()) {
                    ensure_parent(project_operator);
                    save_operator(op, project_operator);
                }
                return apply(op, img);
            }();
            const fs::path out = output_path(cfg, project_out, "_sinogram.srk");
            ensure_parent(out);
            write_raster(data, out);
            print({{"output", out.string()}});
        } else if (*noise_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const Sinogram noisy = add_noise(read_sinogram(noise_in), cfg.gamma, cfg.seed);
            const fs::path out = output_path(cfg, noise_out, "_noisy.srk");
            ensure_parent(out);
            write_raster(noisy, out);
            print({{"output", out.string()}, {"gamma", cfg.gamma}, {"seed", cfg.seed}});
        } else if (*recon_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const Sinogram data = read_sinogram(recon_in);
            const SparseOperator op = assemble_forward(cfg.model(), cfg.recon_grid, data.geometry(), cfg.quad_recon);
            const ReconResult res = reconstruct(cfg, op, data);
            const fs::path out = output_path(cfg, recon_out, "_recon.srk");
            ensure_parent(out);
            write_raster(res.image, out);
            export_png(res.image, fs::path(out).replace_extension(".png"));
            if (!res.log.empty()) write_log_csv(fs::path(out).replace_extension(".csv"), res.log);
            json j{{"output", out.string()}, {"step", res.step}, {"sigma_max", res.sigma_max}, {"warnings", res.warnings}};
            if (!recon_truth.empty()) j["delta"] = lsq_error(res.image, read_image(recon_truth));
            print(j);
        } else if (*fbp_cmd) {
            ExperimentConfig cfg = resolve_config(opts);
            const Sinogram data = read_sinogram(fbp_in);
            std::optional<CutoffProfile> cut;
            if (!fbp_sharp) cut = default_cutoff(cfg);
            Image img = [&] {
                if (cfg.geometry == GeometryId::LinearCST) return fbp_linear_cst(data, cfg.alpha, cfg.recon_grid, cut);
                if (cfg.geometry == GeometryId::ConstantR) return fbp_constant_r(data, cfg.r, cfg.recon_grid, cut);
                throw ConfigError("fbp is available for linear-cst and constant-r only");
            }();
            const fs::path out = output_path(cfg, fbp_out, fbp_sharp ? "_fbp_sharp.srk" : "_fbp.srk");
            ensure_parent(out);
            write_raster(img, out);
            export_png(img, fs::path(out).replace_extension(".png"));
            print({{"output", out.string()}, {"cutoff", !fbp_sharp}});
        } else if (*invert_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const ConstantRInversion inv =
                invert_constant_r(read_sinogram(invert_in), cfg.r, cfg.d, invert_l, invert_ridge, cfg.recon_grid, invert_m);
            const fs::path out = output_path(cfg, invert_out, "_invert.srk");
            ensure_parent(out);
            write_raster(inv.image, out);
            export_png(inv.image, fs::path(out).replace_extension(".png"));
            const fs::path profiles = fs::path(out).replace_extension(".csv");
            write_profiles_csv(profiles, inv);
            print({{"output", out.string()},
                   {"profiles", profiles.string()},
                   {"discarded_energy_fraction", inv.discarded_energy_fraction}});
        } else if (*pal_cmd) {
            const ExperimentConfig cfg = resolve_config(opts, "rotational-cst");
            const PalamodovCheck res =
                palamodov_check(cfg, {pal_center[0], pal_center[1]}, pal_radius, pal_samples, cfg.seed, pal_min_arc);
            print(res.to_json());
        } else if (*audit_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const AuditRegions regions = audit_regions(cfg);
            const GeometryReport report = weak_stability_audit(cfg.model(), regions.omega, regions.y, audit_nx, audit_nw);
            const fs::path out = output_path(cfg, "", "_geometry.json");
            std::ofstream(out) << report.to_json().dump(2) << '\n';
            print(report.to_json());
        } else if (*run_cmd) {
            const ExperimentConfig cfg = resolve_config(opts);
            const ExperimentReport report = run_experiment(cfg);
            json j = report.json;
            j.erase("config");
            print(j);
        } else if (*png_cmd) {
            std::optional<Window> window;
            if (png_window.size() == 2) window = Window{png_window[0], png_window[1]};
            ensure_parent(png_out);
            export_png(as_image(read_raster(png_in)), png_out, window);
            print({{"output", png_out}});
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const StageError& e) {
        std::cerr << "stage " << e.what() << '\n';
        return e.numerical() ? kExitNumerical : kExitConfig;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const HarmonicError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::invalid_argument& e) {
        std::cerr << "invalid argument: " << e.what() << '\n';
        return kExitConfig;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
