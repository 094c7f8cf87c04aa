#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sphradon/grid.hpp"
#include "sphradon/projector.hpp"

namespace sphradon {

/// Raised when an iteration produces a non-finite value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class ReconMethod { FBP, Landweber, TV };

struct ReconConfig {
    ReconMethod method = ReconMethod::Landweber;
    int iterations = 200;
    /// Gradient step; defaults to 1/sigma_max^2 when unset.
    std::optional<double> step;
    double lambda_tv = 0.0;
    double beta_tv = 1e-3;
    bool nonneg = false;
    /// Applied to the data and the operator rows (h b and h A) when set.
    std::optional<CutoffProfile> cutoff;
    CutoffCoordinate cutoff_coordinate = CutoffCoordinate::Y2;

    /// Throws std::invalid_argument on iterations < 1, step <= 0, or beta_tv <= 0 for TV.
    void validate() const;
};

struct ReconResult {
    Image image;
    /// Landweber: ||A x_k - b|| for k = 0..iterations. TV: objective value per iterate.
    std::vector<double> log;
    std::vector<std::string> warnings;
    double step = 0.0;
    double sigma_max = 0.0;
};

/// Largest singular value of A by power iteration on A^T A from a fixed start vector.
double estimate_sigma_max(const SparseOperator& op, int iterations = 50);

/// x_{k+1} = x_k + step A^T (b - A x_k), x_0 = 0.
ReconResult landweber(const SparseOperator& op, const Sinogram& b, const ReconConfig& cfg);

/// Projected gradient descent with Armijo backtracking on
/// 1/2 ||A x - b||^2 + lambda sum_pixels sqrt(|grad x|^2 + beta^2).
ReconResult tv_reconstruct(const SparseOperator& op, const Sinogram& b, const ReconConfig& cfg);

/// Smoothed TV value and gradient with forward differences and zero-Neumann
/// boundaries (unit pixel spacing).
double smoothed_tv(const ImageGeometry& g, const std::vector<double>& x, double beta, std::vector<double>* grad = nullptr);

/// Central difference along axis2 of a LinearCST sinogram; samples beyond the
/// sinogram are taken as zero, which is what a sharp crop means.
Sinogram derivative_y2(const Sinogram& b);

/// 5-point Laplacian in sinogram index coordinates: zero beyond the radial axis,
/// periodic along a full-turn angle axis.
Sinogram index_laplacian(const Sinogram& b);

/// x = A~^T d/dy2 (h b) with A~ = h A. Without an operator the continuous
/// backprojection over lambda(phi, x) is used.
Image fbp_linear_cst(const Sinogram& b, double alpha, const ImageGeometry& image, const std::optional<CutoffProfile>& cut,
                     const SparseOperator* op = nullptr, std::size_t n_phi = 720);

/// x = R^* Laplacian(h b) with the radial cutoff h.
Image fbp_constant_r(const Sinogram& b, double r, const ImageGeometry& image, const std::optional<CutoffProfile>& cut,
                     std::size_t n_omega = 720);

void write_log_csv(const std::filesystem::path& path, const std::vector<double>& log);

} // namespace sphradon
