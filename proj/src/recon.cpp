#include "sphradon/recon.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "sphradon/rng.hpp"

namespace sphradon {

namespace {

double norm2(const std::vector<double>& v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

struct Problem {
    SparseOperator op;
    std::vector<double> b;
};

// Folds an optional cutoff into the operator rows and the data.
Problem prepare(const SparseOperator& op, const Sinogram& b, const ReconConfig& cfg) {
    if (b.values().size() != op.n_rows()) throw ProjectorError("sinogram shape does not match operator");
    std::vector<double> data(b.values().begin(), b.values().end());
    if (!cfg.cutoff) return {op, std::move(data)};
    const std::vector<double> h = cutoff_weights(op.sinogram_geometry(), *cfg.cutoff, cfg.cutoff_coordinate);
    for (std::size_t k = 0; k < data.size(); ++k) data[k] *= h[k];
    return {op.scale_rows(h), std::move(data)};
}

double resolve_step(const ReconConfig& cfg, double sigma, std::vector<std::string>& warnings) {
    const double s2 = sigma * sigma;
    if (!(s2 > 0.0)) {
        if (cfg.step) return *cfg.step;
        warnings.push_back("operator has zero norm; using step 1");
        return 1.0;
    }
    const double step = cfg.step ? *cfg.step : 1.0 / s2;
    if (step >= 2.0 / s2) {
        std::ostringstream msg;
        msg << "step " << step << " is not below the stability bound 2/sigma_max^2 = " << 2.0 / s2;
        warnings.push_back(msg.str());
    }
    return step;
}

void check_finite(double v, const char* what, int iteration) {
    if (!std::isfinite(v))
        throw NumericalError(std::string(what) + " became non-finite at iteration " + std::to_string(iteration));
}

} // namespace

void ReconConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be at least 1");
    if (step && !(*step > 0.0)) throw std::invalid_argument("step must be positive");
    if (method == ReconMethod::TV && !(beta_tv > 0.0)) throw std::invalid_argument("beta_tv must be positive for TV");
    if (lambda_tv < 0.0) throw std::invalid_argument("lambda_tv must be nonnegative");
}

double estimate_sigma_max(const SparseOperator& op, int iterations) {
    CounterRng rng(0x5eed5eedULL);
    std::vector<double> v(op.n_cols());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = 0.5 + rng.uniform(k);
    double nv = norm2(v);
    double sigma2 = 0.0;
    for (int it = 0; it < iterations && nv > 0.0; ++it) {
        for (double& e : v) e /= nv;
        v = op.multiply_transpose(op.multiply(v));
        nv = norm2(v);
        sigma2 = nv;
    }
    return std::sqrt(sigma2);
}

ReconResult landweber(const SparseOperator& op_in, const Sinogram& b_in, const ReconConfig& cfg) {
    cfg.validate();
    Problem p = prepare(op_in, b_in, cfg);
    ReconResult out{Image(p.op.image_geometry()), {}, {}, 0.0, 0.0};
    out.sigma_max = estimate_sigma_max(p.op);
    out.step = resolve_step(cfg, out.sigma_max, out.warnings);

    std::vector<double> x(p.op.n_cols(), 0.0);
    std::vector<double> r = p.b;  // b - A x for x = 0
    out.log.push_back(norm2(r));
    for (int k = 1; k <= cfg.iterations; ++k) {
        const std::vector<double> g = p.op.multiply_transpose(r);
        for (std::size_t i = 0; i < x.size(); ++i) {
            x[i] += out.step * g[i];
            if (cfg.nonneg && x[i] < 0.0) x[i] = 0.0;
        }
        const std::vector<double> ax = p.op.multiply(x);
        for (std::size_t i = 0; i < r.size(); ++i) r[i] = p.b[i] - ax[i];
        out.log.push_back(norm2(r));
        check_finite(out.log.back(), "Landweber residual", k);
    }
    out.image = Image(p.op.image_geometry(), std::move(x));
    return out;
}

double smoothed_tv(const ImageGeometry& g, const std::vector<double>& x, double beta, std::vector<double>* grad) {
    const std::size_t nx = g.nx;
    const std::size_t ny = g.ny;
    if (grad) grad->assign(x.size(), 0.0);
    double total = 0.0;
    const double b2 = beta * beta;
    for (std::size_t j = 0; j < ny; ++j) {
        for (std::size_t i = 0; i < nx; ++i) {
            const std::size_t p = j * nx + i;
            const double dx = i + 1 < nx ? x[p + 1] - x[p] : 0.0;
            const double dy = j + 1 < ny ? x[p + nx] - x[p] : 0.0;
            const double phi = std::sqrt(dx * dx + dy * dy + b2);
            total += phi;
            if (grad) {
                const double ux = dx / phi;
                const double uy = dy / phi;
                if (i + 1 < nx) {
                    (*grad)[p + 1] += ux;
                    (*grad)[p] -= ux;
                }
                if (j + 1 < ny) {
                    (*grad)[p + nx] += uy;
                    (*grad)[p] -= uy;
                }
            }
        }
    }
    return total;
}

ReconResult tv_reconstruct(const SparseOperator& op_in, const Sinogram& b_in, const ReconConfig& cfg) {
    cfg.validate();
    if (cfg.method != ReconMethod::TV) throw std::invalid_argument("tv_reconstruct needs method = TV");
    Problem p = prepare(op_in, b_in, cfg);
    const ImageGeometry& geom = p.op.image_geometry();
    ReconResult out{Image(geom), {}, {}, 0.0, 0.0};
    out.sigma_max = estimate_sigma_max(p.op);
    out.step = resolve_step(cfg, out.sigma_max, out.warnings);

    const double lambda = cfg.lambda_tv;
    auto objective = [&](const std::vector<double>& x, const std::vector<double>& ax, std::vector<double>* tv_grad) {
        double fit = 0.0;
        for (std::size_t i = 0; i < ax.size(); ++i) {
            const double d = ax[i] - p.b[i];
            fit += d * d;
        }
        double reg = 0.0;
        if (lambda > 0.0 || tv_grad) reg = smoothed_tv(geom, x, cfg.beta_tv, tv_grad);
        return 0.5 * fit + lambda * reg;
    };

    std::vector<double> x(p.op.n_cols(), 0.0);
    std::vector<double> ax(p.op.n_rows(), 0.0);
    std::vector<double> tv_grad;
    double f = objective(x, ax, &tv_grad);
    check_finite(f, "TV objective", 0);
    out.log.push_back(f);

    std::vector<double> trial(x.size());
    for (int k = 1; k <= cfg.iterations; ++k) {
        std::vector<double> resid(ax.size());
        for (std::size_t i = 0; i < ax.size(); ++i) resid[i] = ax[i] - p.b[i];
        std::vector<double> g = p.op.multiply_transpose(resid);
        if (lambda > 0.0)
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += lambda * tv_grad[i];

        double s = out.step;
        std::vector<double> trial_ax;
        double trial_f = 0.0;
        std::vector<double> trial_tv_grad;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            double decrease = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                double v = x[i] - s * g[i];
                if (cfg.nonneg && v < 0.0) v = 0.0;
                trial[i] = v;
                decrease += g[i] * (v - x[i]);
            }
            trial_ax = p.op.multiply(trial);
            trial_f = objective(trial, trial_ax, &trial_tv_grad);
            check_finite(trial_f, "TV objective", k);
            if (trial_f <= f + 1e-4 * decrease) {
                accepted = true;
                break;
            }
            s *= 0.5;
        }
        if (!accepted) {
            out.warnings.push_back("line search stalled at iteration " + std::to_string(k));
            out.log.push_back(f);
            break;
        }
        x.swap(trial);
        ax.swap(trial_ax);
        tv_grad.swap(trial_tv_grad);
        f = trial_f;
        out.log.push_back(f);
    }
    out.image = Image(geom, std::move(x));
    return out;
}

Sinogram derivative_y2(const Sinogram& b) {
    const SinogramGeometry& g = b.geometry();
    if (g.polar()) throw std::invalid_argument("derivative_y2 needs a Cartesian sinogram");
    const std::size_t n1 = g.axis1.size();
    const std::size_t n2 = g.axis2.size();
    std::vector<double> out(g.size(), 0.0);
    if (n2 < 2) return Sinogram(g, std::move(out));
    const auto& a = g.axis2;
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
        for (std::size_t i2 = 0; i2 < n2; ++i2) {
            // virtual zero samples one step beyond each end
            const double lo_v = i2 > 0 ? b.at(i1, i2 - 1) : 0.0;
            const double hi_v = i2 + 1 < n2 ? b.at(i1, i2 + 1) : 0.0;
            const double lo_a = i2 > 0 ? a[i2 - 1] : a[0] - (a[1] - a[0]);
            const double hi_a = i2 + 1 < n2 ? a[i2 + 1] : a[n2 - 1] + (a[n2 - 1] - a[n2 - 2]);
            out[g.index(i1, i2)] = (hi_v - lo_v) / (hi_a - lo_a);
        }
    }
    return Sinogram(g, std::move(out));
}

Sinogram index_laplacian(const Sinogram& b) {
    const SinogramGeometry& g = b.geometry();
    const std::size_t n1 = g.axis1.size();
    const std::size_t n2 = g.axis2.size();
    const bool periodic = g.periodic_axis2();
    std::vector<double> out(g.size(), 0.0);
    for (std::size_t i1 = 0; i1 < n1; ++i1) {
        for (std::size_t i2 = 0; i2 < n2; ++i2) {
            const double c = b.at(i1, i2);
            const double up = i1 + 1 < n1 ? b.at(i1 + 1, i2) : 0.0;
            const double down = i1 > 0 ? b.at(i1 - 1, i2) : 0.0;
            double left = 0.0;
            double right = 0.0;
            if (periodic) {
                left = b.at(i1, (i2 + n2 - 1) % n2);
                right = b.at(i1, (i2 + 1) % n2);
            } else {
                left = i2 > 0 ? b.at(i1, i2 - 1) : 0.0;
                right = i2 + 1 < n2 ? b.at(i1, i2 + 1) : 0.0;
            }
            out[g.index(i1, i2)] = up + down + left + right - 4.0 * c;
        }
    }
    return Sinogram(g, std::move(out));
}

Image fbp_linear_cst(const Sinogram& b, double alpha, const ImageGeometry& image, const std::optional<CutoffProfile>& cut,
                     const SparseOperator* op, std::size_t n_phi) {
    if (b.geometry().id != GeometryId::LinearCST) throw std::invalid_argument("fbp_linear_cst needs a LinearCST sinogram");
    const Sinogram hb = cut ? apply_cutoff(b, *cut, CutoffCoordinate::Y2) : b;
    Sinogram d = derivative_y2(hb);
    if (cut) d = apply_cutoff(d, *cut, CutoffCoordinate::Y2);
    if (op) {
        if (!(op->image_geometry() == image)) throw std::invalid_argument("operator image geometry differs from the requested image");
        return apply_transpose(*op, d);
    }
    return backproject_linear_cst(d, alpha, image, n_phi);
}

Image fbp_constant_r(const Sinogram& b, double r, const ImageGeometry& image, const std::optional<CutoffProfile>& cut,
                     std::size_t n_omega) {
    if (b.geometry().id != GeometryId::ConstantR) throw std::invalid_argument("fbp_constant_r needs a ConstantR sinogram");
    const Sinogram hb = cut ? apply_cutoff(b, *cut, CutoffCoordinate::Radial) : b;
    return backproject_generic(index_laplacian(hb), RadiusModel::constant_r(r), image, n_omega);
}

void write_log_csv(const std::filesystem::path& path, const std::vector<double>& log) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.precision(17);
    out << "iteration,value\n";
    for (std::size_t k = 0; k < log.size(); ++k) out << k << ',' << log[k] << '\n';
}

} // namespace sphradon
