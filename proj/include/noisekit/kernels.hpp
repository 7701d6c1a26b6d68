#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "noisekit/matrix.hpp"

namespace noisekit::kernels {

// Runtime switch between the OpenMP kernels and their serial references.
// Both produce bit-identical output: parallel loops write disjoint slots and
// every floating-point reduction uses a fixed summation tree, so the flag
// (and the thread count) never changes results.
bool parallel_enabled();
void set_parallel_enabled(bool enabled);

// ---- softmax scoring ------------------------------------------------------
// p[i] = softmax(W x_i + b), log-sum-exp stabilized. X is n x d, W is k x d,
// bias has k entries, P must be n x k.
void softmax_probs(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& p);
void softmax_probs_serial(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& p);
void softmax_probs_omp(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& p);

// ---- mixture E-step -------------------------------------------------------
// Per-component density evaluation strategy. Full and tied covariances carry
// a lower Cholesky factor; diagonal carries per-dimension variances;
// spherical a single variance.
enum class DensityKind { Cholesky, Diagonal, Spherical };

struct PreparedComponent {
    DensityKind kind = DensityKind::Spherical;
    double log_weight = 0.0;
    std::vector<double> mean;
    Matrix chol;                  // d x d lower triangular (Cholesky)
    std::vector<double> variances; // d entries (Diagonal)
    double variance = 1.0;         // Spherical
    double log_det = 0.0;          // log |Sigma|
};

struct PreparedMixture {
    std::size_t dim = 0;
    std::vector<PreparedComponent> components;
};

// Fills resp (n x K) with posterior responsibilities and log_density (n) with
// the per-example mixture log density.
void mixture_estep(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                   std::vector<double>& log_density);
void mixture_estep_serial(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                          std::vector<double>& log_density);
void mixture_estep_omp(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                       std::vector<double>& log_density);

// ---- Gaussian KDE ---------------------------------------------------------
// out[j] = (1 / (n h)) * sum_i phi((xs[j] - samples[i]) / h).
void kde_eval(std::span<const double> samples, double bandwidth,
              std::span<const double> xs, std::span<double> out);
void kde_eval_serial(std::span<const double> samples, double bandwidth,
                     std::span<const double> xs, std::span<double> out);
void kde_eval_omp(std::span<const double> samples, double bandwidth,
                  std::span<const double> xs, std::span<double> out);

// Shared per-element helpers so the serial and OpenMP variants cannot drift.
namespace detail {
void softmax_row(const Matrix& w, std::span<const double> bias, const double* x_row,
                 double* p_row);
double estep_row(const PreparedMixture& mix, const double* x_row, double* resp_row,
                 std::vector<double>& scratch);
double kde_point(std::span<const double> samples, double bandwidth, double x);
} // namespace detail

} // namespace noisekit::kernels
