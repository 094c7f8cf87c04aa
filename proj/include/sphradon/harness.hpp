#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphradon/geometry.hpp"
#include "sphradon/grid.hpp"
#include "sphradon/projector.hpp"
#include "sphradon/recon.hpp"
#include "sphradon/vec2.hpp"

namespace sphradon {

/// Invalid or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside run_experiment, tagged with the pipeline stage.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, bool numerical)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)), numerical_(numerical) {}
    const std::string& stage() const { return stage_; }
    bool numerical() const { return numerical_; }

private:
    std::string stage_;
    bool numerical_;
};

enum class PhantomKind { HalfAnnulus, Annulus, Disk, Custom };

/// Annular sector {x : inner <= |x - center| <= outer, angle(x - center) in [angle_lo, angle_hi]}.
/// Annulus ignores the angles; Disk uses outer only. Custom samples the raster bilinearly.
struct PhantomSpec {
    PhantomKind kind = PhantomKind::Disk;
    Vec2 center;
    double inner = 0.0;
    double outer = 0.5;
    double angle_lo = 0.0;
    double angle_hi = 2.0 * 3.14159265358979323846;
    double amplitude = 1.0;
    /// Custom only: .srk image file, loaded into raster by from_json.
    std::filesystem::path raster_path;
    std::optional<Image> raster;

    void validate() const;
    /// Indicator times amplitude at a point (closed set).
    double value(Vec2 p) const;
    nlohmann::json to_json() const;
    static PhantomSpec from_json(const nlohmann::json& j);
};

/// Pixel value = amplitude times the fraction of 4x4 subpixel samples inside the region.
Image make_phantom(const PhantomSpec& spec, const ImageGeometry& geometry);

/// b + gamma (||b|| / sqrt(k)) eta with eta_i = CounterRng(seed).normal(i).
Sinogram add_noise(const Sinogram& b, double gamma, std::uint64_t seed);

/// Area average of a piecewise-constant image onto another raster; cells outside
/// the source extents count as zero.
Image area_resample(const Image& source, const ImageGeometry& target);

/// ||x_rec - x_true|| / ||x_true||, with x_true area-resampled to the grid of x_rec
/// first. Throws std::invalid_argument if the truth has zero norm.
double lsq_error(const Image& x_rec, const Image& x_true);

struct AxisSpec {
    double lo = 0.0;
    double hi = 1.0;
    std::size_t n = 2;
    /// Samples on [lo, hi) instead of [lo, hi].
    bool open = false;

    std::vector<double> samples() const;
};

struct CutoffSpec {
    /// "falling" or "rising".
    std::string shape = "falling";
    double edge_a = 0.0;
    double edge_b = 1.0;

    CutoffProfile profile() const;
};

struct ExperimentConfig {
    std::string name = "experiment";
    GeometryId geometry = GeometryId::LinearCST;
    double alpha = 1.0;
    double r = 1.25;
    double d = 0.25;
    PhantomSpec phantom;
    ImageGeometry data_grid;
    ImageGeometry recon_grid;
    AxisSpec axis1;
    AxisSpec axis2;
    std::size_t quad_data = 1024;
    std::size_t quad_recon = 512;
    double gamma = 0.05;
    std::uint64_t seed = 1;
    ReconConfig recon;
    std::optional<CutoffSpec> cutoff;
    /// Allows the data and reconstruction grids to coincide.
    bool allow_inverse_crime = false;
    /// Runs the weak stability audit for this geometry and embeds the report.
    bool audit = false;
    std::filesystem::path out_dir = "out";
    bool write_outputs = true;

    RadiusModel model() const;
    SinogramGeometry sinogram_geometry() const;
    /// Throws ConfigError.
    void validate() const;
    nlohmann::json to_json() const;
    /// Missing keys keep their defaults. Throws ConfigError on bad values.
    static ExperimentConfig from_json(const nlohmann::json& j);
};

/// Preset names: "linear-cst", "rotational-cst", "constant-r".
std::vector<std::string> preset_names();
ExperimentConfig preset(const std::string& name, ReconMethod method = ReconMethod::Landweber);

/// FNV-1a 64 of the canonical JSON text.
std::uint64_t config_hash(const ExperimentConfig& cfg);
std::string hex64(std::uint64_t v);

/// Warning text when a LinearCST sinogram misses part of the band
/// (a^2 - alpha^2)/(2a) <= y2 <= (b^2 - alpha^2)/(2b), a < x2 < b being the phantom rows.
std::optional<std::string> injectivity_advisory(const ExperimentConfig& cfg);

/// Default Omega and Y regions for the audit of each geometry.
struct AuditRegions {
    Region omega;
    Region y;
};
AuditRegions audit_regions(const ExperimentConfig& cfg);

struct ExperimentReport {
    double delta = 0.0;
    Image truth;
    Image reconstruction;
    Sinogram data;
    std::vector<double> log;
    std::vector<std::string> warnings;
    std::uint64_t hash = 0;
    nlohmann::json json;
};

/// phantom -> fine-grid forward -> noise -> reconstruction (cutoff folded in) -> delta.
/// Writes <name>_truth.srk, _sinogram.srk, _recon.srk, _recon.png, _log.csv and
/// _report.json into out_dir when write_outputs is set.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

/// Reconstruction stage alone, on an operator assembled for cfg.recon_grid.
ReconResult reconstruct(const ExperimentConfig& cfg, const SparseOperator& op, const Sinogram& data);

/// Noiseless data on the fine grid and the phantom raster on it.
struct SyntheticData {
    Image truth;
    Sinogram data;
};
SyntheticData synthesize(const ExperimentConfig& cfg);

/// Cutoff used when cfg.cutoff is unset: LinearCST falls to 0 over the top eighth
/// of the y2 axis; ConstantR rises from |y| = r to sqrt(d^2 + r^2).
CutoffProfile default_cutoff(const ExperimentConfig& cfg);

/// Copy of cfg with the dense sinogram axes used for the crop artifact comparison
/// (400 x 400 for LinearCST, 250 x 720 for ConstantR).
ExperimentConfig streak_config(const ExperimentConfig& cfg);

/// Sharp-crop and smooth-cutoff FBP images from noiseless data.
struct FbpPair {
    Image sharp;
    Image smooth;
};
FbpPair fbp_pair(const ExperimentConfig& cfg, const Sinogram& data);

/// image minus its Gaussian blur (sigma in pixels, truncated at 4 sigma, edge clamped).
Image gaussian_highpass(const Image& image, double sigma);

/// Streak energy of an FBP image near the sharp crop edge. The image is high-passed
/// with a 1 pixel Gaussian. The band is the set of pixels within `width` of a circle
/// S(y), y on the crop edge (y2 = max for LinearCST, |y| = min for ConstantR) with
/// noticeable data there, and farther than `width` from the phantom; for LinearCST
/// only pixels above the phantom count. Returns the band energy divided by the energy
/// within `width` of the phantom, so images of different scale compare.
double crop_streak_energy(const ExperimentConfig& cfg, const Sinogram& data, const Image& fbp, double width);

/// Equidistant-sphere integrals of the scaled disk f~(y) = f(y / p), rasterized on
/// the reconstruction grid scaled by p, against palamodov_map of R f, R f coming from
/// an operator assembled on the data grid. Centers (|y|, angle) are drawn uniformly
/// from cfg.axis1 x [0, 2 pi) with CounterRng(seed); draws with R f < min_arc are
/// redrawn until n_samples pairs are compared (at most 1000 n_samples draws).
struct PalamodovCheck {
    std::size_t samples = 0;
    std::size_t compared = 0;
    double max_relative_error = 0.0;
    double mean_relative_error = 0.0;

    nlohmann::json to_json() const;
};
PalamodovCheck palamodov_check(const ExperimentConfig& cfg, Vec2 disk_center, double disk_radius, std::size_t n_samples,
                               std::uint64_t seed, double min_arc = 0.25);

} // namespace sphradon
