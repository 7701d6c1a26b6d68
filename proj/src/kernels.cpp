#include "noisekit/kernels.hpp"

#include <atomic>
#include <cmath>

namespace noisekit::kernels {

namespace {
#ifdef _OPENMP
std::atomic<bool> g_parallel{true};
#else
std::atomic<bool> g_parallel{false};
#endif
} // namespace

bool parallel_enabled() { return g_parallel.load(std::memory_order_relaxed); }
void set_parallel_enabled(bool enabled) { g_parallel.store(enabled, std::memory_order_relaxed); }

void softmax_probs(const Matrix& x, const Matrix& w, std::span<const double> bias, Matrix& p) {
    if (parallel_enabled())
        softmax_probs_omp(x, w, bias, p);
    else
        softmax_probs_serial(x, w, bias, p);
}

void mixture_estep(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                   std::vector<double>& log_density) {
    if (parallel_enabled())
        mixture_estep_omp(x, mix, resp, log_density);
    else
        mixture_estep_serial(x, mix, resp, log_density);
}

void kde_eval(std::span<const double> samples, double bandwidth, std::span<const double> xs,
              std::span<double> out) {
    if (parallel_enabled())
        kde_eval_omp(samples, bandwidth, xs, out);
    else
        kde_eval_serial(samples, bandwidth, xs, out);
}

namespace detail {

void softmax_row(const Matrix& w, std::span<const double> bias, const double* x_row,
                 double* p_row) {
    const std::size_t k = w.rows();
    const std::size_t d = w.cols();
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < k; ++c) {
        const double* wc = w.row(c);
        double z = bias[c];
        for (std::size_t j = 0; j < d; ++j) z += wc[j] * x_row[j];
        p_row[c] = z;
        if (z > zmax) zmax = z;
    }
    double denom = 0.0;
    for (std::size_t c = 0; c < k; ++c) {
        p_row[c] = std::exp(p_row[c] - zmax);
        denom += p_row[c];
    }
    const double inv = 1.0 / denom;
    for (std::size_t c = 0; c < k; ++c) p_row[c] *= inv;
}

double estep_row(const PreparedMixture& mix, const double* x_row, double* resp_row,
                 std::vector<double>& scratch) {
    static constexpr double kLog2Pi = 1.8378770664093454835606594728112;
    const std::size_t d = mix.dim;
    const std::size_t n_comp = mix.components.size();
    scratch.resize(d);

    double max_lp = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n_comp; ++k) {
        const PreparedComponent& comp = mix.components[k];
        double mahal = 0.0;
        switch (comp.kind) {
            case DensityKind::Cholesky: {
                // Forward-substitute L z = (x - mu); mahal = |z|^2.
                for (std::size_t i = 0; i < d; ++i) {
                    double v = x_row[i] - comp.mean[i];
                    const double* li = comp.chol.row(i);
                    for (std::size_t j = 0; j < i; ++j) v -= li[j] * scratch[j];
                    scratch[i] = v / li[i];
                    mahal += scratch[i] * scratch[i];
                }
                break;
            }
            case DensityKind::Diagonal: {
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = x_row[i] - comp.mean[i];
                    mahal += diff * diff / comp.variances[i];
                }
                break;
            }
            case DensityKind::Spherical: {
                double sq = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    const double diff = x_row[i] - comp.mean[i];
                    sq += diff * diff;
                }
                mahal = sq / comp.variance;
                break;
            }
        }
        const double lp = comp.log_weight -
                          0.5 * (static_cast<double>(d) * kLog2Pi + comp.log_det + mahal);
        resp_row[k] = lp;
        if (lp > max_lp) max_lp = lp;
    }

    double denom = 0.0;
    for (std::size_t k = 0; k < n_comp; ++k) denom += std::exp(resp_row[k] - max_lp);
    const double log_norm = max_lp + std::log(denom);
    for (std::size_t k = 0; k < n_comp; ++k) resp_row[k] = std::exp(resp_row[k] - log_norm);
    return log_norm;
}

double kde_point(std::span<const double> samples, double bandwidth, double x) {
    static constexpr double kInvSqrt2Pi = 0.39894228040143267793994605993438;
    double s = 0.0;
    for (const double sample : samples) {
        const double u = (x - sample) / bandwidth;
        s += std::exp(-0.5 * u * u);
    }
    return s * kInvSqrt2Pi / (static_cast<double>(samples.size()) * bandwidth);
}

} // namespace detail

} // namespace noisekit::kernels
