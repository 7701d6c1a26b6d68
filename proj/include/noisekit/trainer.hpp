#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "noisekit/dataset.hpp"
#include "noisekit/matrix.hpp"

namespace noisekit::trainer {

enum class LossMode { Plain, Smoothed, NtmCorrected };

struct LossSpec {
    LossMode mode = LossMode::Plain;
    double epsilon = 0.0; // smoothing factor (Smoothed)
    Matrix t_inv;         // k x k inverse transition matrix (NtmCorrected)

    static LossSpec plain() { return {}; }
    static LossSpec smoothed(double eps) { return {LossMode::Smoothed, eps, {}}; }
    static LossSpec ntm_corrected(Matrix t_inv) {
        return {LossMode::NtmCorrected, 0.0, std::move(t_inv)};
    }
};

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    double learning_rate = 0.1;
    std::uint64_t seed = 0;
    LossSpec loss;
    bool shuffle = true;
};

struct LinearModel {
    std::size_t dim = 0;
    int n_classes = 2;
    Matrix weights;           // k x dim
    std::vector<double> bias; // k
};

// End-of-epoch per-example losses over the full corpus, one row per epoch.
// Masked-out examples are scored but never trained on.
struct EpochTrace {
    Matrix losses;
};

struct TrainResult {
    LinearModel model;
    EpochTrace trace;
};

// Weights i.i.d. uniform in [-0.01, 0.01] from the seeded stream, bias zero.
LinearModel init_model(std::size_t dim, int n_classes, std::uint64_t seed);

TrainResult train(const Corpus& corpus, const TrainConfig& config,
                  const std::vector<std::uint8_t>* include_mask = nullptr);

Matrix predict_proba(const LinearModel& model, const Matrix& x);
Matrix predict_proba(const LinearModel& model, const Corpus& corpus);

std::vector<double> per_example_loss(const LinearModel& model, const Matrix& x,
                                     std::span<const int> labels, const LossSpec& loss);
std::vector<double> per_example_loss(const LinearModel& model, const Corpus& corpus,
                                     const LossSpec& loss);

// Losses for the indexed examples only, in index order.
std::vector<double> losses_at(const LinearModel& model, const Matrix& x,
                              std::span<const int> labels, std::span<const std::size_t> idx,
                              const LossSpec& loss);

// Mean gradient of the configured loss over the indexed examples.
struct BatchGradient {
    Matrix d_weights;
    std::vector<double> d_bias;
    double mean_loss = 0.0;
};

BatchGradient batch_gradient(const LinearModel& model, const Matrix& x,
                             std::span<const int> labels, std::span<const std::size_t> idx,
                             const LossSpec& loss);
void apply_update(LinearModel& model, const BatchGradient& grad, double learning_rate);

// One pass of mini-batch gradient descent over `order` (shuffled in place
// when the config says so; the shuffle stream depends only on seed and
// epoch index).
void sgd_epoch(LinearModel& model, const Matrix& x, std::span<const int> labels,
               std::vector<std::size_t>& order, const TrainConfig& config, int epoch_index);

// Checkpoint: "k dim" header, then row-major weights and bias, 17 significant
// digits per value.
void save_model(const LinearModel& model, const std::string& path);
LinearModel load_model(const std::string& path);

} // namespace noisekit::trainer
