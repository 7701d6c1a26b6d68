#include "noisekit/kernels.hpp"

// Serial reference implementations. Kept as the ground truth the OpenMP
// kernels are tested against.

namespace noisekit::kernels {

void softmax_probs_serial(const Matrix& x, const Matrix& w, std::span<const double> bias,
                          Matrix& p) {
    const std::size_t n = x.rows();
    for (std::size_t i = 0; i < n; ++i) detail::softmax_row(w, bias, x.row(i), p.row(i));
}

void mixture_estep_serial(const Matrix& x, const PreparedMixture& mix, Matrix& resp,
                          std::vector<double>& log_density) {
    const std::size_t n = x.rows();
    std::vector<double> scratch;
    for (std::size_t i = 0; i < n; ++i)
        log_density[i] = detail::estep_row(mix, x.row(i), resp.row(i), scratch);
}

void kde_eval_serial(std::span<const double> samples, double bandwidth,
                     std::span<const double> xs, std::span<double> out) {
    for (std::size_t j = 0; j < xs.size(); ++j)
        out[j] = detail::kde_point(samples, bandwidth, xs[j]);
}

} // namespace noisekit::kernels
