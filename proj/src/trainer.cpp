#include "noisekit/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "noisekit/error.hpp"
#include "noisekit/kernels.hpp"
#include "noisekit/rng.hpp"
#include "noisekit/stats.hpp"

namespace noisekit::trainer {

namespace {

void validate_config(const TrainConfig& config) {
    if (config.epochs < 1) throw ValidationError("trainer: epochs must be >= 1");
    if (config.batch_size < 1) throw ValidationError("trainer: batch_size must be >= 1");
    if (!(config.learning_rate >= 0.0) || !std::isfinite(config.learning_rate))
        throw ValidationError("trainer: learning_rate must be finite and >= 0");
    if (config.loss.mode == LossMode::Smoothed &&
        (config.loss.epsilon < 0.0 || config.loss.epsilon > 0.2))
        throw ValidationError("trainer: smoothing factor must lie in [0, 0.2]");
    if (config.loss.mode == LossMode::NtmCorrected && config.loss.t_inv.rows() == 0)
        throw ValidationError("trainer: NtmCorrected loss requires an inverse transition matrix");
}

// Affine scores z = W x + b for one example.
void logits_row(const LinearModel& model, const double* x, std::vector<double>& z) {
    const std::size_t k = model.weights.rows();
    const std::size_t d = model.dim;
    z.resize(k);
    for (std::size_t c = 0; c < k; ++c) {
        const double* wc = model.weights.row(c);
        double s = model.bias[c];
        for (std::size_t j = 0; j < d; ++j) s += wc[j] * x[j];
        z[c] = s;
    }
}

struct RowLoss {
    double loss = 0.0;
    std::vector<double> grad_z; // d loss / d logits
};

// Loss and logit gradient for one example under the given loss spec.
// Probabilities go through log-sum-exp. The NtmCorrected branch applies the
// same adjust-clamp-renormalize arithmetic as correction::adjust_probabilities
// (clamp bounds [1e-12, 1]); it is restated here because the gradient needs
// the pre-clamp values.
RowLoss row_loss_grad(std::span<const double> z, int label, const LossSpec& loss,
                      bool want_grad) {
    const std::size_t k = z.size();
    RowLoss out;

    const double lse = log_sum_exp(z);
    std::vector<double> p(k);
    for (std::size_t c = 0; c < k; ++c) p[c] = std::exp(z[c] - lse);

    switch (loss.mode) {
        case LossMode::Plain: {
            out.loss = -(z[label] - lse);
            if (want_grad) {
                out.grad_z = p;
                out.grad_z[label] -= 1.0;
            }
            break;
        }
        case LossMode::Smoothed: {
            const double eps = loss.epsilon;
            double l = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double target =
                    (1.0 - eps) * (static_cast<int>(c) == label ? 1.0 : 0.0) +
                    eps / static_cast<double>(k);
                l -= target * (z[c] - lse);
            }
            out.loss = l;
            if (want_grad) {
                out.grad_z = p;
                for (std::size_t c = 0; c < k; ++c)
                    out.grad_z[c] -= (1.0 - eps) * (static_cast<int>(c) == label ? 1.0 : 0.0) +
                                     eps / static_cast<double>(k);
            }
            break;
        }
        case LossMode::NtmCorrected: {
            static constexpr double kLo = 1e-12;
            static constexpr double kHi = 1.0;
            const Matrix& t_inv = loss.t_inv;
            std::vector<double> raw(k), clamped(k);
            for (std::size_t j = 0; j < k; ++j) {
                double a = 0.0;
                for (std::size_t m = 0; m < k; ++m) a += p[m] * t_inv(m, j);
                raw[j] = a;
                clamped[j] = std::min(std::max(a, kLo), kHi);
            }
            double total = 0.0;
            for (const double c : clamped) total += c;
            out.loss = -(std::log(clamped[label]) - std::log(total));
            if (want_grad) {
                // Chain rule through clamp, renormalization, and softmax.
                std::vector<double> d_clamped(k), d_p(k, 0.0);
                for (std::size_t j = 0; j < k; ++j) {
                    d_clamped[j] = 1.0 / total -
                                   (static_cast<int>(j) == label ? 1.0 / clamped[label] : 0.0);
                    if (!(raw[j] > kLo && raw[j] < kHi)) d_clamped[j] = 0.0;
                }
                for (std::size_t m = 0; m < k; ++m)
                    for (std::size_t j = 0; j < k; ++j) d_p[m] += d_clamped[j] * t_inv(m, j);
                double dot = 0.0;
                for (std::size_t m = 0; m < k; ++m) dot += d_p[m] * p[m];
                out.grad_z.resize(k);
                for (std::size_t c = 0; c < k; ++c) out.grad_z[c] = p[c] * (d_p[c] - dot);
            }
            break;
        }
    }
    return out;
}

} // namespace

LinearModel init_model(std::size_t dim, int n_classes, std::uint64_t seed) {
    LinearModel model;
    model.dim = dim;
    model.n_classes = n_classes;
    model.weights = Matrix(static_cast<std::size_t>(n_classes), dim);
    model.bias.assign(static_cast<std::size_t>(n_classes), 0.0);
    Rng rng(seed);
    for (double& w : model.weights.data()) w = (rng.next_double() * 2.0 - 1.0) * 0.01;
    return model;
}

Matrix predict_proba(const LinearModel& model, const Matrix& x) {
    if (x.cols() != model.dim)
        throw ValidationError("predict_proba: feature dimensionality " + std::to_string(x.cols()) +
                              " does not match model dim " + std::to_string(model.dim));
    Matrix p(x.rows(), model.weights.rows());
    kernels::softmax_probs(x, model.weights, model.bias, p);
    return p;
}

Matrix predict_proba(const LinearModel& model, const Corpus& corpus) {
    return predict_proba(model, corpus.feature_matrix());
}

std::vector<double> per_example_loss(const LinearModel& model, const Matrix& x,
                                     std::span<const int> labels, const LossSpec& loss) {
    if (x.cols() != model.dim)
        throw ValidationError("per_example_loss: feature dimensionality mismatch");
    const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(x.rows());
    std::vector<double> losses(x.rows());
#pragma omp parallel if (kernels::parallel_enabled())
    {
        std::vector<double> z;
#pragma omp for schedule(static)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            const std::size_t row = static_cast<std::size_t>(i);
            logits_row(model, x.row(row), z);
            losses[row] = row_loss_grad(z, labels[row], loss, false).loss;
        }
    }
    return losses;
}

std::vector<double> per_example_loss(const LinearModel& model, const Corpus& corpus,
                                     const LossSpec& loss) {
    return per_example_loss(model, corpus.feature_matrix(), corpus.labels(), loss);
}

std::vector<double> losses_at(const LinearModel& model, const Matrix& x,
                              std::span<const int> labels, std::span<const std::size_t> idx,
                              const LossSpec& loss) {
    std::vector<double> out(idx.size());
    std::vector<double> z;
    for (std::size_t j = 0; j < idx.size(); ++j) {
        logits_row(model, x.row(idx[j]), z);
        out[j] = row_loss_grad(z, labels[idx[j]], loss, false).loss;
    }
    return out;
}

BatchGradient batch_gradient(const LinearModel& model, const Matrix& x,
                             std::span<const int> labels, std::span<const std::size_t> idx,
                             const LossSpec& loss) {
    const std::size_t k = model.weights.rows();
    const std::size_t d = model.dim;
    BatchGradient grad;
    grad.d_weights = Matrix(k, d);
    grad.d_bias.assign(k, 0.0);

    std::vector<double> z;
    double loss_sum = 0.0;
    for (const std::size_t i : idx) {
        logits_row(model, x.row(i), z);
        const RowLoss rl = row_loss_grad(z, labels[i], loss, true);
        loss_sum += rl.loss;
        const double* xi = x.row(i);
        for (std::size_t c = 0; c < k; ++c) {
            const double g = rl.grad_z[c];
            grad.d_bias[c] += g;
            double* gw = grad.d_weights.row(c);
            for (std::size_t j = 0; j < d; ++j) gw[j] += g * xi[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(idx.size());
    for (double& g : grad.d_weights.data()) g *= inv;
    for (double& g : grad.d_bias) g *= inv;
    grad.mean_loss = loss_sum * inv;
    return grad;
}

void apply_update(LinearModel& model, const BatchGradient& grad, double learning_rate) {
    for (std::size_t i = 0; i < model.weights.data().size(); ++i)
        model.weights.data()[i] -= learning_rate * grad.d_weights.data()[i];
    for (std::size_t c = 0; c < model.bias.size(); ++c)
        model.bias[c] -= learning_rate * grad.d_bias[c];
}

void sgd_epoch(LinearModel& model, const Matrix& x, std::span<const int> labels,
               std::vector<std::size_t>& order, const TrainConfig& config, int epoch_index) {
    if (config.shuffle) {
        Rng rng = Rng(derive_seed(config.seed, "shuffle")).split(static_cast<std::uint64_t>(epoch_index));
        rng.shuffle(order);
    }
    const std::size_t batch = static_cast<std::size_t>(config.batch_size);
    for (std::size_t start = 0, batch_no = 0; start < order.size(); start += batch, ++batch_no) {
        const std::size_t len = std::min(batch, order.size() - start);
        const BatchGradient grad =
            batch_gradient(model, x, labels, std::span(order).subspan(start, len), config.loss);
        for (const double g : grad.d_weights.data())
            if (!std::isfinite(g))
                throw RuntimeError("non-finite gradient at epoch " + std::to_string(epoch_index) +
                                   " batch " + std::to_string(batch_no));
        apply_update(model, grad, config.learning_rate);
    }
}

TrainResult train(const Corpus& corpus, const TrainConfig& config,
                  const std::vector<std::uint8_t>* include_mask) {
    validate_config(config);
    if (include_mask && include_mask->size() != corpus.size())
        throw ValidationError("trainer: include_mask length does not match corpus size");

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (!include_mask || (*include_mask)[i]) order.push_back(i);
    if (order.empty()) throw ValidationError("trainer: no examples left after masking");

    const std::vector<int> labels = corpus.labels();
    bool has0 = false, has1 = false;
    for (const std::size_t i : order) (labels[i] == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw ValidationError("trainer: single-class training set");

    const Matrix x = corpus.feature_matrix();
    LinearModel model = init_model(corpus.dim, 2, derive_seed(config.seed, "init"));

    TrainResult result;
    result.trace.losses = Matrix(static_cast<std::size_t>(config.epochs), corpus.size());
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        sgd_epoch(model, x, labels, order, config, epoch);
        const std::vector<double> losses = per_example_loss(model, x, labels, config.loss);
        double* row = result.trace.losses.row(static_cast<std::size_t>(epoch));
        for (std::size_t i = 0; i < losses.size(); ++i) row[i] = losses[i];
    }
    result.model = std::move(model);
    return result;
}

void save_model(const LinearModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write model file '" + path + "'");
    out << model.n_classes << ' ' << model.dim << '\n';
    char buf[64];
    for (std::size_t c = 0; c < model.weights.rows(); ++c) {
        const double* row = model.weights.row(c);
        for (std::size_t j = 0; j < model.dim; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", row[j]);
            out << buf << (j + 1 == model.dim ? "" : " ");
        }
        out << '\n';
    }
    for (std::size_t c = 0; c < model.bias.size(); ++c) {
        std::snprintf(buf, sizeof(buf), "%.17g", model.bias[c]);
        out << buf << (c + 1 == model.bias.size() ? "" : " ");
    }
    out << '\n';
    if (!out) throw RuntimeError("write failed for model file '" + path + "'");
}

LinearModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open model file '" + path + "'");
    LinearModel model;
    std::size_t dim = 0;
    if (!(in >> model.n_classes >> dim) || model.n_classes < 2)
        throw ValidationError("model file '" + path + "': bad header");
    model.dim = dim;
    model.weights = Matrix(static_cast<std::size_t>(model.n_classes), dim);
    for (double& w : model.weights.data())
        if (!(in >> w)) throw ValidationError("model file '" + path + "': truncated weights");
    model.bias.assign(static_cast<std::size_t>(model.n_classes), 0.0);
    for (double& b : model.bias)
        if (!(in >> b)) throw ValidationError("model file '" + path + "': truncated bias");
    return model;
}

} // namespace noisekit::trainer
