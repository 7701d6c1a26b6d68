#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "noisekit/kernels.hpp"
#include "noisekit/matrix.hpp"

namespace noisekit::gmm {

enum class CovarianceType { Full, Tied, Diag, Spherical };

std::string covariance_name(CovarianceType t);
CovarianceType covariance_from_name(const std::string& name);

struct GmmConfig {
    int n_components = 9;
    CovarianceType covariance = CovarianceType::Full;
    double tol = 1e-4;
    int max_iter = 200;
    double reg_covar = 1e-6;
    std::uint64_t seed = 0;
    int n_init = 3;
};

struct GmmModel {
    int n_components = 0;
    std::size_t dim = 0;
    CovarianceType covariance = CovarianceType::Full;
    std::vector<double> weights; // K, sums to 1
    Matrix means;                // K x dim

    // Covariance storage by type: Full keeps K matrices, Tied a single shared
    // one, Diag per-component variance rows, Spherical one variance each.
    std::vector<Matrix> full_covs;
    Matrix diag_vars;
    std::vector<double> spherical_vars;

    std::vector<double> log_likelihood_trace; // mean per-sample, one per iteration
    bool converged = false;

    const Matrix& covariance_of(int k) const;
};

// Best-of-n_init EM fit with k-means++-style seeded initialization.
GmmModel fit(const Matrix& x, const GmmConfig& config);

// EM from an explicit starting point (same loop `fit` runs per init).
GmmModel em_run(const Matrix& x, GmmModel start, const GmmConfig& config);

// Initialization used by `fit`: k-means++ seeding, hard assignment, one
// M-step. Exposed for tests that need a shared starting point.
GmmModel init_params(const Matrix& x, const GmmConfig& config, std::uint64_t seed);

// Per-example mixture log density.
std::vector<double> log_density(const GmmModel& model, const Matrix& x);

// Posterior responsibilities (n x K).
Matrix responsibilities(const GmmModel& model, const Matrix& x);

// Noise score per example: negative log density min-max normalized over the
// batch to [0, 1]; a constant batch maps to all 0.5. Higher = more noise-like.
std::vector<double> score_noise(const GmmModel& model, const Matrix& x);

kernels::PreparedMixture prepare(const GmmModel& model);

// Plain-text dump: "K dim covariance_type", then weights, means, covariances
// at 17 significant digits.
void save_gmm(const GmmModel& model, const std::string& path);
GmmModel load_gmm(const std::string& path);

} // namespace noisekit::gmm
