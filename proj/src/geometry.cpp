#include "sphradon/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace sphradon {

namespace {

constexpr int kMaxIterations = 200;
constexpr std::size_t kMaxStoredSamples = 64;

PreimageSide fixed_point(const RadiusModel& model, Vec2 x, Vec2 dir) {
    auto g = [&](double t) { return model.eval(x + t * dir); };
    PreimageSide side;
    double t = g(0.0);
    for (int k = 1; k <= kMaxIterations; ++k) {
        const double t1 = g(t);
        const double t2 = g(t1);
        // Steffensen step; plain iteration stalls when |grad r| is close to 1
        const double denom = t2 - 2.0 * t1 + t;
        double next = t2;
        if (denom != 0.0) {
            const double acc = t - (t1 - t) * (t1 - t) / denom;
            if (std::isfinite(acc) && acc >= 0.0) next = acc;
        }
        side.iterations = k;
        if (!std::isfinite(next) || next > 1e150) break;
        const bool small_step = std::abs(next - t) < 1e-12 * (1.0 + t);
        t = next;
        if (small_step) {
            side.converged = std::abs(g(t) - t) <= 1e-10 * (1.0 + t);
            break;
        }
    }
    side.t = t;
    return side;
}

// Roots of 4(1-(x.w)^2)t^2 + 4(x.w)(1-(a^2+|x|^2))t + 4|x|^2 - (1+a^2+|x|^2)^2 for the
// rotational family, validated against |t| = r(x + t w).
void quadratic_sides(const RadiusModel& model, Vec2 x, Vec2 w, PreimageSide& plus, PreimageSide& minus) {
    const double a2 = model.parameter() * model.parameter();
    const double xw = dot(x, w);
    const double xx = x.norm2();
    const double qa = 4.0 * (1.0 - xw * xw);
    const double qb = 4.0 * xw * (1.0 - (a2 + xx));
    const double c0 = 1.0 + a2 + xx;
    const double qc = 4.0 * xx - c0 * c0;

    std::vector<double> roots;
    if (std::abs(qa) < 1e-300) {
        if (qb != 0.0) roots.push_back(-qc / qb);
    } else {
        const double disc = qb * qb - 4.0 * qa * qc;
        if (disc >= 0.0) {
            const double q = -0.5 * (qb + std::copysign(std::sqrt(disc), qb));
            roots.push_back(q / qa);
            if (q != 0.0) roots.push_back(qc / q);
        }
    }
    for (double t : roots) {
        if (!std::isfinite(t) || t == 0.0) continue;
        const double r = model.eval(x + t * w);
        if (std::abs(r - std::abs(t)) > 1e-9 * (1.0 + std::abs(t))) continue;
        PreimageSide& side = t > 0.0 ? plus : minus;
        side.converged = true;
        side.t = std::abs(t);
        side.iterations = 0;
    }
}

double omega_angle(std::size_t k) { return std::numbers::pi * radical_inverse(k + 1, 5); }

} // namespace

RadiusModel RadiusModel::linear_cst(double alpha) {
    if (!(alpha > 0.0)) throw GeometryError(GeometryError::Code::InvalidArgument, "alpha must be positive");
    RadiusModel m;
    m.family_ = RadiusFamily::LinearCST;
    m.parameter_ = alpha;
    return m;
}

RadiusModel RadiusModel::rotational_cst(double alpha) {
    if (!(alpha > 0.0)) throw GeometryError(GeometryError::Code::InvalidArgument, "alpha must be positive");
    RadiusModel m;
    m.family_ = RadiusFamily::RotationalCST;
    m.parameter_ = alpha;
    return m;
}

RadiusModel RadiusModel::constant_r(double r) {
    if (!(r > 0.0)) throw GeometryError(GeometryError::Code::InvalidArgument, "radius must be positive");
    RadiusModel m;
    m.family_ = RadiusFamily::ConstantR;
    m.parameter_ = r;
    return m;
}

RadiusModel RadiusModel::counter_example() {
    RadiusModel m;
    m.family_ = RadiusFamily::CounterExample;
    return m;
}

RadiusModel RadiusModel::custom(EvalFn eval, GradFn grad, std::string name) {
    if (!eval || !grad) throw GeometryError(GeometryError::Code::InvalidArgument, "custom model needs eval and grad");
    RadiusModel m;
    m.family_ = RadiusFamily::Custom;
    m.custom_eval_ = std::move(eval);
    m.custom_grad_ = std::move(grad);
    m.custom_name_ = std::move(name);
    return m;
}

std::string RadiusModel::name() const {
    switch (family_) {
    case RadiusFamily::LinearCST: return "LinearCST";
    case RadiusFamily::RotationalCST: return "RotationalCST";
    case RadiusFamily::ConstantR: return "ConstantR";
    case RadiusFamily::CounterExample: return "CounterExample";
    case RadiusFamily::Custom: return custom_name_;
    }
    return custom_name_;
}

GeometryId RadiusModel::geometry_id() const {
    switch (family_) {
    case RadiusFamily::LinearCST: return GeometryId::LinearCST;
    case RadiusFamily::RotationalCST: return GeometryId::RotationalCST;
    case RadiusFamily::ConstantR: return GeometryId::ConstantR;
    default: return GeometryId::CustomRadius;
    }
}

double RadiusModel::eval(Vec2 y) const {
    const double a = parameter_;
    switch (family_) {
    case RadiusFamily::LinearCST: return std::sqrt(y.y * y.y + a * a);
    case RadiusFamily::RotationalCST: {
        const double u = 1.0 - y.norm();
        return std::sqrt(a * a + u * u);
    }
    case RadiusFamily::ConstantR: return a;
    case RadiusFamily::CounterExample: return std::sqrt(y.norm2() + 1.0);
    case RadiusFamily::Custom: return custom_eval_(y);
    }
    return 0.0;
}

Vec2 RadiusModel::grad(Vec2 y) const {
    switch (family_) {
    case RadiusFamily::LinearCST: return {0.0, y.y / eval(y)};
    case RadiusFamily::RotationalCST: {
        const double n = y.norm();
        if (n == 0.0) return {};
        return y * (-(1.0 - n) / (n * eval(y)));
    }
    case RadiusFamily::ConstantR: return {};
    case RadiusFamily::CounterExample: return y / eval(y);
    case RadiusFamily::Custom: return custom_grad_(y);
    }
    return {};
}

bool RadiusModel::valid_center(Vec2 y) const {
    if (family_ == RadiusFamily::RotationalCST) return y.norm() > parameter_ * parameter_ / 4.0;
    return eval(y) > 0.0;
}

double gradient_consistency_error(const RadiusModel& model, const std::vector<Vec2>& probes, double h) {
    double worst = 0.0;
    for (Vec2 y : probes) {
        const double step = h * (1.0 + y.norm());
        const Vec2 fd{(model.eval(y + Vec2{step, 0.0}) - model.eval(y - Vec2{step, 0.0})) / (2.0 * step),
                      (model.eval(y + Vec2{0.0, step}) - model.eval(y - Vec2{0.0, step})) / (2.0 * step)};
        const Vec2 g = model.grad(y);
        const double err = (fd - g).norm() / std::max(1.0, g.norm());
        worst = std::max(worst, err);
    }
    return worst;
}

NormCheck check_norm_inequality(const RadiusModel& model, const Region& region, std::size_t samples) {
    if (samples == 0) throw GeometryError(GeometryError::Code::InvalidArgument, "samples must be at least 1");
    if (!region.bounded()) throw GeometryError(GeometryError::Code::InvalidArgument, "norm check needs a bounded region");
    NormCheck out;
    for (Vec2 y : region.sample(samples)) out.max_grad_norm = std::max(out.max_grad_norm, model.grad(y).norm());
    out.ok = out.max_grad_norm < 1.0;
    return out;
}

Vec2 artifact_point(const RadiusModel& model, Vec2 y, Vec2 x) {
    const double r = model.eval(y);
    if (std::abs(distance(x, y) - r) > 1e-9 * r)
        throw GeometryError(GeometryError::Code::NotOnSphere, "x is not on S(y)");
    if (model.family() == RadiusFamily::ConstantR) return 2.0 * y - x;

    const Vec2 g = model.grad(y);
    if (!(g.norm() < 1.0)) throw GeometryError(GeometryError::Code::GradientNotContracting, "|grad r(y)| >= 1");
    const Vec2 z = y - r * g;
    const Vec2 w = x - z;
    const double len = w.norm();
    if (len <= 1e-12 * r) throw GeometryError(GeometryError::Code::DegenerateLine, "x coincides with z; artifact line undefined");
    const Vec2 u = w / len;
    return x - 2.0 * dot(u, x - y) * u;
}

PreimageResult preimage_centers(const RadiusModel& model, Vec2 x, Vec2 omega, const Region* Y, PreimageMethod method) {
    if (std::abs(omega.norm() - 1.0) > 1e-12) throw GeometryError(GeometryError::Code::InvalidArgument, "omega must be a unit vector");
    if (method == PreimageMethod::Quadratic && model.family() != RadiusFamily::RotationalCST)
        throw GeometryError(GeometryError::Code::InvalidArgument, "quadratic preimage path exists only for RotationalCST");

    PreimageResult out;
    const bool quadratic = method == PreimageMethod::Quadratic ||
                           (method == PreimageMethod::Auto && model.family() == RadiusFamily::RotationalCST);
    if (quadratic) {
        quadratic_sides(model, x, omega, out.plus, out.minus);
    } else {
        out.plus = fixed_point(model, x, omega);
        out.minus = fixed_point(model, x, -omega);
    }
    if (out.plus.converged) {
        const Vec2 c = x + out.plus.t * omega;
        if (!Y || Y->contains(c)) out.centers.push_back(c);
    }
    if (out.minus.converged) {
        const Vec2 c = x - out.minus.t * omega;
        if (!Y || Y->contains(c)) out.centers.push_back(c);
    }
    return out;
}

std::optional<double> preimage_distance(const RadiusModel& model, Vec2 x, Vec2 omega) {
    switch (model.family()) {
    case RadiusFamily::ConstantR: return model.parameter();
    case RadiusFamily::RotationalCST: {
        PreimageSide plus;
        PreimageSide minus;
        quadratic_sides(model, x, omega, plus, minus);
        if (plus.converged) return plus.t;
        return std::nullopt;
    }
    default: {
        const PreimageSide side = fixed_point(model, x, omega);
        if (side.converged) return side.t;
        return std::nullopt;
    }
    }
}

std::vector<ArtifactSample> artifact_set_sample(const RadiusModel& model, const Region& omega_region, const Region& Y,
                                                std::size_t n_samples) {
    std::vector<ArtifactSample> out;
    const auto xs = omega_region.sample(n_samples);
    for (std::size_t k = 0; k < xs.size(); ++k) {
        const Vec2 x = xs[k];
        if (!omega_region.contains(x)) continue;
        const Vec2 w = unit_from_angle(omega_angle(k));
        for (Vec2 y : preimage_centers(model, x, w, &Y).centers) {
            try {
                out.push_back({x, y, artifact_point(model, y, x)});
            } catch (const GeometryError& e) {
                if (e.code() != GeometryError::Code::DegenerateLine) throw;
            }
        }
    }
    return out;
}

GeometryReport weak_stability_audit(const RadiusModel& model, const Region& omega_region, const Region& Y,
                                    std::size_t n_x, std::size_t n_omega) {
    if (n_x < 4 || n_omega < 4) throw GeometryError(GeometryError::Code::InvalidArgument, "n_x and n_omega must be at least 4");
    GeometryReport report;
    const double margin = 1e-6 * omega_region.bounds().diameter();

    if (Y.bounded()) report.max_grad_norm = check_norm_inequality(model, Y, std::max<std::size_t>(n_x, 256)).max_grad_norm;

    std::size_t degenerate = 0;
    for (Vec2 x : omega_region.sample(n_x)) {
        if (!omega_region.contains(x)) continue;
        for (std::size_t k = 0; k < n_omega; ++k) {
            const Vec2 w = unit_from_angle(2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_omega));
            ++report.probes;
            const PreimageResult pre = preimage_centers(model, x, w, &Y);
            if (pre.centers.empty()) {
                report.coverage_ok = false;
                if (report.coverage_failures.size() < kMaxStoredSamples) report.coverage_failures.push_back({x, w});
                continue;
            }
            for (Vec2 y : pre.centers) {
                report.max_grad_norm = std::max(report.max_grad_norm, model.grad(y).norm());
                Vec2 xhat;
                try {
                    xhat = artifact_point(model, y, x);
                } catch (const GeometryError& e) {
                    if (e.code() == GeometryError::Code::DegenerateLine) {
                        ++degenerate;
                        continue;
                    }
                    if (e.code() == GeometryError::Code::GradientNotContracting) {
                        report.bolker_ok = false;
                        continue;
                    }
                    throw;
                }
                const ArtifactSample s{x, y, xhat};
                if (report.artifact_samples.size() < kMaxStoredSamples) report.artifact_samples.push_back(s);
                if (omega_region.contains_eroded(xhat, margin)) {
                    report.bolker_ok = false;
                    if (report.bolker_failures.size() < kMaxStoredSamples) report.bolker_failures.push_back(s);
                }
            }
        }
    }
    report.norm_ok = report.max_grad_norm < 1.0;
    if (report.norm_ok) report.strong_norm_constant = report.max_grad_norm;
    report.notes = model.name() + ": " + std::to_string(report.probes) + " (x, omega) probes";
    if (degenerate > 0) report.notes += ", " + std::to_string(degenerate) + " degenerate artifact lines skipped";
    if (!report.coverage_ok) report.notes += ", coverage gaps found";
    if (!report.bolker_ok) report.notes += ", artifact points return to the region";
    return report;
}

nlohmann::json GeometryReport::to_json() const {
    using nlohmann::json;
    auto pt = [](Vec2 p) { return json::array({p.x, p.y}); };
    json j;
    j["max_grad_norm"] = max_grad_norm;
    j["norm_ok"] = norm_ok;
    j["strong_norm_constant"] = strong_norm_constant ? json(*strong_norm_constant) : json(nullptr);
    j["bolker_ok"] = bolker_ok;
    j["coverage_ok"] = coverage_ok;
    j["probes"] = probes;
    j["notes"] = notes;
    j["artifact_samples"] = json::array();
    for (const auto& s : artifact_samples) j["artifact_samples"].push_back({{"x", pt(s.x)}, {"y", pt(s.y)}, {"xhat", pt(s.xhat)}});
    j["coverage_failures"] = json::array();
    for (const auto& w : coverage_failures) j["coverage_failures"].push_back({{"x", pt(w.x)}, {"omega", pt(w.omega)}});
    j["bolker_failures"] = json::array();
    for (const auto& s : bolker_failures) j["bolker_failures"].push_back({{"x", pt(s.x)}, {"y", pt(s.y)}, {"xhat", pt(s.xhat)}});
    return j;
}

std::vector<Vec2> hemisphere_centers(Vec2 x, double r, std::size_t n) {
    if (x.norm() == 0.0) throw GeometryError(GeometryError::Code::InvalidArgument, "hemisphere needs x != 0");
    if (n == 0) return {};
    const double phi0 = std::atan2(x.y, x.x);
    if (n == 1) return {x + r * unit_from_angle(phi0)};
    std::vector<Vec2> out;
    out.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double phi = phi0 - std::numbers::pi / 2.0 + std::numbers::pi * static_cast<double>(k) / static_cast<double>(n - 1);
        out.push_back(x + r * unit_from_angle(phi));
    }
    return out;
}

} // namespace sphradon
