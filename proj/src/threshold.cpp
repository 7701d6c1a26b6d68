#include "noisekit/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "noisekit/error.hpp"
#include "noisekit/kernels.hpp"
#include "noisekit/stats.hpp"

namespace noisekit::threshold {

namespace {

void validate(std::span<const double> scores, const KdeConfig& config) {
    if (scores.size() < 2) throw ValidationError("kde: need at least 2 scores");
    if (config.grid_points < 16) throw ValidationError("kde: grid_points must be >= 16");
    if (config.bandwidth == KdeConfig::Bandwidth::Fixed && !(config.fixed_h > 0.0))
        throw ValidationError("kde: fixed bandwidth must be > 0");
    if (!(config.fallback_quantile > 0.0 && config.fallback_quantile < 1.0))
        throw ValidationError("kde: fallback_quantile must lie in (0, 1)");
    for (const double s : scores)
        if (!std::isfinite(s)) throw ValidationError("kde: non-finite score");
}

double silverman_bandwidth(std::span<const double> scores) {
    const double sd = std::sqrt(variance(scores, 1));
    const double iqr = quantile(scores, 0.75) - quantile(scores, 0.25);
    const double scale = std::min(sd, iqr / 1.34);
    if (!(scale > 0.0))
        throw ValidationError("kde: degenerate scores (zero spread), use the fallback path");
    return 0.9 * scale * std::pow(static_cast<double>(scores.size()), -0.2);
}

// Indices of strict local maxima of the density grid.
std::vector<std::size_t> local_maxima(const std::vector<double>& dens) {
    std::vector<std::size_t> maxima;
    const std::size_t m = dens.size();
    for (std::size_t i = 0; i < m; ++i) {
        const bool left_ok = i == 0 || dens[i] > dens[i - 1];
        const bool right_ok = i + 1 == m || dens[i] > dens[i + 1];
        if (left_ok && right_ok) maxima.push_back(i);
    }
    return maxima;
}

} // namespace

KdeCurve kde(std::span<const double> scores, const KdeConfig& config) {
    validate(scores, config);
    const double h = config.bandwidth == KdeConfig::Bandwidth::Silverman
                         ? silverman_bandwidth(scores)
                         : config.fixed_h;

    const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
    if (!(*hi_it > *lo_it))
        throw ValidationError("kde: degenerate scores (zero variance), use the fallback path");
    const double lo = *lo_it - 3.0 * h;
    const double hi = *hi_it + 3.0 * h;

    KdeCurve curve;
    curve.bandwidth = h;
    const std::size_t m = static_cast<std::size_t>(config.grid_points);
    curve.xs.resize(m);
    curve.densities.resize(m);
    const double step = (hi - lo) / static_cast<double>(m - 1);
    for (std::size_t j = 0; j < m; ++j) curve.xs[j] = lo + step * static_cast<double>(j);
    kernels::kde_eval(scores, h, curve.xs, curve.densities);
    return curve;
}

DipResult dip_threshold(std::span<const double> scores, const KdeConfig& config) {
    if (scores.empty()) throw ValidationError("dip_threshold: empty scores");
    KdeCurve curve;
    try {
        curve = kde(scores, config);
    } catch (const ValidationError&) {
        if (scores.size() < 2) throw;
        return {quantile(scores, config.fallback_quantile), ThresholdMode::FallbackQuantile};
    }

    const std::vector<std::size_t> maxima = local_maxima(curve.densities);
    if (maxima.size() < 2)
        return {quantile(scores, config.fallback_quantile), ThresholdMode::FallbackQuantile};

    // Two highest modes by density (ties toward the leftmost).
    std::size_t first = maxima[0], second = maxima[1];
    if (curve.densities[second] > curve.densities[first]) std::swap(first, second);
    for (std::size_t idx = 2; idx < maxima.size(); ++idx) {
        const std::size_t m = maxima[idx];
        if (curve.densities[m] > curve.densities[first]) {
            second = first;
            first = m;
        } else if (curve.densities[m] > curve.densities[second]) {
            second = m;
        }
    }
    std::size_t left = std::min(first, second);
    std::size_t right = std::max(first, second);

    std::size_t dip = left + 1;
    for (std::size_t j = left + 1; j < right; ++j)
        if (curve.densities[j] < curve.densities[dip]) dip = j;
    return {curve.xs[dip], ThresholdMode::Dip};
}

std::vector<std::uint8_t> flag(std::span<const double> scores, double thresh) {
    if (!std::isfinite(thresh)) throw ValidationError("flag: threshold must be finite");
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!std::isfinite(scores[i])) throw ValidationError("flag: non-finite score");
        out[i] = scores[i] > thresh ? 1 : 0;
    }
    return out;
}

void save_curve(const KdeCurve& curve, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write curve file '" + path + "'");
    char buf[64];
    for (std::size_t j = 0; j < curve.xs.size(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", curve.xs[j]);
        out << buf << '\t';
        std::snprintf(buf, sizeof(buf), "%.17g", curve.densities[j]);
        out << buf << '\n';
    }
    if (!out) throw RuntimeError("write failed for curve file '" + path + "'");
}

} // namespace noisekit::threshold
