#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sphradon/grid.hpp"
#include "sphradon/region.hpp"
#include "sphradon/vec2.hpp"

namespace sphradon {

class GeometryError : public std::runtime_error {
public:
    enum class Code { NotOnSphere, DegenerateLine, GradientNotContracting, InvalidArgument };

    GeometryError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
    Code code() const { return code_; }

private:
    Code code_;
};

enum class RadiusFamily { LinearCST, RotationalCST, ConstantR, CounterExample, Custom };

/// Radius function r(y) of a circle family together with its gradient.
///   LinearCST(a):     r = sqrt(y2^2 + a^2)
///   RotationalCST(a): r = sqrt(a^2 + (1 - |y|)^2)
///   ConstantR(r0):    r = r0
///   CounterExample:   r = sqrt(|y|^2 + 1)
class RadiusModel {
public:
    using EvalFn = std::function<double(Vec2)>;
    using GradFn = std::function<Vec2(Vec2)>;

    static RadiusModel linear_cst(double alpha);
    static RadiusModel rotational_cst(double alpha);
    static RadiusModel constant_r(double r);
    static RadiusModel counter_example();
    static RadiusModel custom(EvalFn eval, GradFn grad, std::string name = "custom");

    RadiusFamily family() const { return family_; }
    /// alpha for the CST families, r for ConstantR, 0 otherwise.
    double parameter() const { return parameter_; }
    std::string name() const;
    /// Sinogram geometry tag used when this model generates data.
    GeometryId geometry_id() const;

    double eval(Vec2 y) const;
    Vec2 grad(Vec2 y) const;

    /// True when y is an admissible sphere center (RotationalCST needs |y| > alpha^2/4).
    bool valid_center(Vec2 y) const;

private:
    RadiusModel() = default;

    RadiusFamily family_ = RadiusFamily::Custom;
    double parameter_ = 0.0;
    std::string custom_name_;
    EvalFn custom_eval_;
    GradFn custom_grad_;
};

/// Largest relative mismatch between grad and central differences of eval over
/// the given probes (step h scaled by 1 + |y|).
double gradient_consistency_error(const RadiusModel& model, const std::vector<Vec2>& probes, double h = 1e-6);

struct NormCheck {
    double max_grad_norm = 0.0;
    bool ok = false;
};

/// max |grad r| over a deterministic sample of the region; ok when below 1.
NormCheck check_norm_inequality(const RadiusModel& model, const Region& region, std::size_t samples);

/// Second intersection of the circle S(y) with the line through x and
/// z = y - r(y) grad r(y). Throws GeometryError when x is not on S(y), when
/// |grad r(y)| >= 1, or when x = z.
Vec2 artifact_point(const RadiusModel& model, Vec2 y, Vec2 x);

struct ArtifactSample {
    Vec2 x;
    Vec2 y;
    Vec2 xhat;
};

enum class PreimageMethod { Auto, FixedPoint, Quadratic };

struct PreimageSide {
    bool converged = false;
    double t = 0.0;
    int iterations = 0;
};

struct PreimageResult {
    /// Centers x + t_plus*omega and x - t_minus*omega that converged and lie in Y.
    std::vector<Vec2> centers;
    PreimageSide plus;
    PreimageSide minus;
};

/// Sphere centers on the line x + t*omega whose circle passes through x. Auto uses
/// the closed-form quadratic for RotationalCST and fixed-point iteration otherwise.
PreimageResult preimage_centers(const RadiusModel& model, Vec2 x, Vec2 omega, const Region* Y = nullptr,
                                PreimageMethod method = PreimageMethod::Auto);

/// Distance t > 0 of the center x + t*omega on the forward side only, or nothing
/// when that side does not converge. Cheaper than preimage_centers for
/// backprojection loops that sweep omega over the full circle.
std::optional<double> preimage_distance(const RadiusModel& model, Vec2 x, Vec2 omega);

/// Samples x in omega_region and directions; collects artifact points for every
/// preimage center that lies in Y.
std::vector<ArtifactSample> artifact_set_sample(const RadiusModel& model, const Region& omega_region, const Region& Y,
                                                std::size_t n_samples);

struct CoverageWitness {
    Vec2 x;
    Vec2 omega;
};

struct GeometryReport {
    double max_grad_norm = 0.0;
    bool norm_ok = false;
    std::optional<double> strong_norm_constant;
    std::vector<ArtifactSample> artifact_samples;
    bool bolker_ok = true;
    bool coverage_ok = true;
    std::vector<CoverageWitness> coverage_failures;
    std::vector<ArtifactSample> bolker_failures;
    std::size_t probes = 0;
    std::string notes;

    nlohmann::json to_json() const;
};

GeometryReport weak_stability_audit(const RadiusModel& model, const Region& omega_region, const Region& Y,
                                    std::size_t n_x, std::size_t n_omega);

/// n points of the closed half circle {y in S(x) : (y - x).x >= 0} with radius r,
/// evenly spaced in angle from one endpoint to the other (n = 1 gives the pole).
std::vector<Vec2> hemisphere_centers(Vec2 x, double r, std::size_t n);

} // namespace sphradon
