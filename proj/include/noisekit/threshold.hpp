#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace noisekit::threshold {

struct KdeConfig {
    enum class Bandwidth { Silverman, Fixed };
    Bandwidth bandwidth = Bandwidth::Silverman;
    double fixed_h = 0.0;            // used when bandwidth == Fixed
    int grid_points = 512;
    double fallback_quantile = 0.90; // used when no dip exists
};

struct KdeCurve {
    std::vector<double> xs;
    std::vector<double> densities;
    double bandwidth = 0.0;
};

// Gaussian KDE on an even grid spanning [min, max] padded by 3h. Silverman
// bandwidth: h = 0.9 * min(sd, IQR/1.34) * n^(-1/5). Throws ValidationError
// on degenerate scores (zero variance, or zero Silverman scale).
KdeCurve kde(std::span<const double> scores, const KdeConfig& config);

enum class ThresholdMode { Dip, FallbackQuantile };

struct DipResult {
    double threshold = 0.0;
    ThresholdMode mode = ThresholdMode::Dip;
};

// Threshold at the density minimum strictly between the two highest KDE
// modes; falls back to the configured score quantile when the curve has
// fewer than two modes or the scores are degenerate.
DipResult dip_threshold(std::span<const double> scores, const KdeConfig& config);

// flag[i] = scores[i] > threshold (strict).
std::vector<std::uint8_t> flag(std::span<const double> scores, double threshold);

// Two-column text dump (x, density) for plotting.
void save_curve(const KdeCurve& curve, const std::string& path);

} // namespace noisekit::threshold
