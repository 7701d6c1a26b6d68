#pragma once

#include <span>
#include <string>
#include <vector>

#include "noisekit/dataset.hpp"
#include "noisekit/matrix.hpp"
#include "noisekit/trainer.hpp"

namespace noisekit::correction {

// Row-stochastic corruption model: t(i, j) = P(observed = j | true = i).
struct TransitionMatrix {
    enum class Origin { Estimated, Given };

    Matrix t;
    Matrix t_inv;
    Origin origin = Origin::Given;
};

// Validates row-stochasticity, inverts, and checks t * t_inv against the
// identity. Throws ValidationError when t is singular.
TransitionMatrix make_transition(Matrix t, TransitionMatrix::Origin origin);

// Builds T from detector flags: a flagged example is assumed mislabeled
// (true = 1 - observed), an unflagged one correctly labeled. Counts get
// add-one smoothing per cell before row normalization.
TransitionMatrix estimate_transition(const Corpus& corpus, std::span<const std::uint8_t> flags);

// Row-wise p * t_inv, clamped to [1e-12, 1] and renormalized to the simplex.
Matrix adjust_probabilities(const Matrix& p_hat, const Matrix& t_inv);
void adjust_probability_row(const double* p, const Matrix& t_inv, double* out);

struct SmoothingConfig {
    double epsilon = 0.1; // smoothing factor
    int n_classes = 2;
    double tau = 0.70; // rejection threshold on the observed label's probability
};

// y_smooth = (1 - epsilon) * onehot(label) + epsilon / k.
std::vector<double> smooth_labels(int label, const SmoothingConfig& config);

// Train with smoothed targets, then flag every example whose predicted
// probability of its observed label falls below tau.
std::vector<NoiseVerdict> ls_detect(const Corpus& corpus, const SmoothingConfig& config,
                                    trainer::TrainConfig train_config);

// Train with inverse-transition-adjusted probabilities, then flag every
// example whose adjusted prediction disagrees with its observed label
// (argmax ties resolve toward class 0).
std::vector<NoiseVerdict> ntm_detect(const Corpus& corpus, const TransitionMatrix& transition,
                                     trainer::TrainConfig train_config);

// Plain-text dump: origin tag, then the k x k matrix row-major at 17
// significant digits. The inverse is recomputed on load.
void save_transition(const TransitionMatrix& transition, const std::string& path);
TransitionMatrix load_transition(const std::string& path);

// Gauss-Jordan inverse with partial pivoting, for small dense matrices.
Matrix invert(const Matrix& m);

} // namespace noisekit::correction
