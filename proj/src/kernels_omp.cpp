#include "noisekit/kernels.hpp"

// OpenMP kernels. Every iteration writes only its own output slots and calls
// the same per-element helpers as the serial references, so results are
// bit-identical for any thread count.

namespace noisekit::kernels {

void softmax_probs_omp(const Matrix& x, const Matrix& w, std::span<const double> bias,
                       Matrix& p) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i)
        detail::softmax_row(w, bias, x.row(static_cast<std::size_t>(i)),
                            p.row(static_cast<std::size_t>(i)));
}

void mixture_estep_omp(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                       std::vector<double>& log_density) {
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel
    {
        std::vector<double> scratch;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::size_t row = static_cast<std::size_t>(i);
            log_density[row] = detail::estep_row(mix, x.row(row), resp.row(row), scratch);
        }
    }
}

void kde_eval_omp(std::span<const double> samples, double bandwidth, std::span<const double> xs,
                  std::span<double> out) {
    const std::ptrdiff_t m = static_cast<std::ptrdiff_t>(xs.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t j = 0; j < m; ++j)
        out[j] = detail::kde_point(samples, bandwidth, xs[j]);
}

} // namespace noisekit::kernels
