#include "noisekit/correction.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "noisekit/error.hpp"

namespace noisekit::correction {

namespace {
constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0;
} // namespace

Matrix invert(const Matrix& m) {
    if (m.rows() != m.cols() || m.rows() == 0)
        throw ValidationError("invert: matrix must be square and nonempty");
    const std::size_t n = m.rows();
    Matrix a = m;
    Matrix inv(n, n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::fabs(a(r, col)) > std::fabs(a(pivot, col))) pivot = r;
        if (std::fabs(a(pivot, col)) < 1e-12)
            throw ValidationError("invert: matrix is singular");
        if (pivot != col) {
            for (std::size_t c = 0; c < n; ++c) {
                std::swap(a(pivot, c), a(col, c));
                std::swap(inv(pivot, c), inv(col, c));
            }
        }
        const double scale = 1.0 / a(col, col);
        for (std::size_t c = 0; c < n; ++c) {
            a(col, c) *= scale;
            inv(col, c) *= scale;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double factor = a(r, col);
            if (factor == 0.0) continue;
            for (std::size_t c = 0; c < n; ++c) {
                a(r, c) -= factor * a(col, c);
                inv(r, c) -= factor * inv(col, c);
            }
        }
    }
    return inv;
}

TransitionMatrix make_transition(Matrix t, TransitionMatrix::Origin origin) {
    const std::size_t k = t.rows();
    if (k == 0 || t.cols() != k)
        throw ValidationError("transition matrix must be square and nonempty");
    for (std::size_t i = 0; i < k; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (t(i, j) < 0.0 || !std::isfinite(t(i, j)))
                throw ValidationError("transition matrix entries must be finite and nonnegative");
            row_sum += t(i, j);
        }
        if (std::fabs(row_sum - 1.0) > 1e-9)
            throw ValidationError("transition matrix row " + std::to_string(i) +
                                  " sums to " + std::to_string(row_sum) + ", expected 1");
    }

    TransitionMatrix out;
    out.t = std::move(t);
    out.t_inv = invert(out.t);
    out.origin = origin;

    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double dot = 0.0;
            for (std::size_t m = 0; m < k; ++m) dot += out.t(i, m) * out.t_inv(m, j);
            const double expected = i == j ? 1.0 : 0.0;
            if (std::fabs(dot - expected) > 1e-6)
                throw ValidationError("transition matrix inverse check failed");
        }
    }
    return out;
}

TransitionMatrix estimate_transition(const Corpus& corpus, std::span<const std::uint8_t> flags) {
    if (flags.size() != corpus.size())
        throw ValidationError("estimate_transition: flags length does not match corpus size");
    std::size_t n_obs0 = 0, n_obs1 = 0;
    for (const Example& e : corpus.examples) (e.label == 1 ? n_obs1 : n_obs0)++;
    if (n_obs0 == 0 || n_obs1 == 0)
        throw ValidationError("estimate_transition: need at least one example per observed class");

    // counts(true, observed); flagged examples are assumed label-flipped.
    double counts[2][2] = {{1.0, 1.0}, {1.0, 1.0}}; // add-one smoothing
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const int observed = corpus.examples[i].label;
        const int assumed_true = flags[i] ? 1 - observed : observed;
        counts[assumed_true][observed] += 1.0;
    }

    Matrix t(2, 2);
    for (int i = 0; i < 2; ++i) {
        const double row_sum = counts[i][0] + counts[i][1];
        t(i, 0) = counts[i][0] / row_sum;
        t(i, 1) = counts[i][1] / row_sum;
    }

    try {
        return make_transition(std::move(t), TransitionMatrix::Origin::Estimated);
    } catch (const ValidationError&) {
        throw ValidationError(
            "estimate_transition: flag pattern yields a singular transition matrix");
    }
}

void adjust_probability_row(const double* p, const Matrix& t_inv, double* out) {
    const std::size_t k = t_inv.rows();
    double total = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        double a = 0.0;
        for (std::size_t m = 0; m < k; ++m) a += p[m] * t_inv(m, j);
        out[j] = std::min(std::max(a, kClampLo), kClampHi);
        total += out[j];
    }
    for (std::size_t j = 0; j < k; ++j) out[j] /= total;
}

Matrix adjust_probabilities(const Matrix& p_hat, const Matrix& t_inv) {
    if (t_inv.rows() != t_inv.cols() || p_hat.cols() != t_inv.rows())
        throw ValidationError("adjust_probabilities: shape mismatch");
    Matrix adjusted(p_hat.rows(), p_hat.cols());
    for (std::size_t i = 0; i < p_hat.rows(); ++i)
        adjust_probability_row(p_hat.row(i), t_inv, adjusted.row(i));
    return adjusted;
}

std::vector<double> smooth_labels(int label, const SmoothingConfig& config) {
    if (config.n_classes < 2) throw ValidationError("smooth_labels: need at least 2 classes");
    if (label < 0 || label >= config.n_classes)
        throw ValidationError("smooth_labels: label out of range");
    if (config.epsilon < 0.0 || config.epsilon > 0.2)
        throw ValidationError("smooth_labels: smoothing factor must lie in [0, 0.2]");
    std::vector<double> y(static_cast<std::size_t>(config.n_classes));
    for (int c = 0; c < config.n_classes; ++c)
        y[static_cast<std::size_t>(c)] =
            (1.0 - config.epsilon) * (c == label ? 1.0 : 0.0) +
            config.epsilon / static_cast<double>(config.n_classes);
    return y;
}

std::vector<NoiseVerdict> ls_detect(const Corpus& corpus, const SmoothingConfig& config,
                                    trainer::TrainConfig train_config) {
    if (config.tau < 0.0 || config.tau > 1.0)
        throw ValidationError("ls_detect: tau must lie in [0, 1]");
    train_config.loss = trainer::LossSpec::smoothed(config.epsilon);
    const trainer::TrainResult trained = trainer::train(corpus, train_config);
    const Matrix p = trainer::predict_proba(trained.model, corpus);

    std::vector<NoiseVerdict> verdicts;
    verdicts.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const double p_observed = p(i, static_cast<std::size_t>(corpus.examples[i].label));
        verdicts.push_back({corpus.examples[i].id, "ls", 1.0 - p_observed,
                            p_observed < config.tau});
    }
    return verdicts;
}

std::vector<NoiseVerdict> ntm_detect(const Corpus& corpus, const TransitionMatrix& transition,
                                     trainer::TrainConfig train_config) {
    train_config.loss = trainer::LossSpec::ntm_corrected(transition.t_inv);
    const trainer::TrainResult trained = trainer::train(corpus, train_config);
    const Matrix p = trainer::predict_proba(trained.model, corpus);
    const Matrix adjusted = adjust_probabilities(p, transition.t_inv);

    std::vector<NoiseVerdict> verdicts;
    verdicts.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const int label = corpus.examples[i].label;
        std::size_t argmax = 0;
        for (std::size_t c = 1; c < adjusted.cols(); ++c)
            if (adjusted(i, c) > adjusted(i, argmax)) argmax = c; // ties keep class 0
        double score = 0.0;
        for (std::size_t c = 0; c < adjusted.cols(); ++c)
            if (static_cast<int>(c) != label) score = std::max(score, adjusted(i, c));
        verdicts.push_back({corpus.examples[i].id, "ntm", score,
                            static_cast<int>(argmax) != label});
    }
    return verdicts;
}

void save_transition(const TransitionMatrix& transition, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write transition file '" + path + "'");
    out << (transition.origin == TransitionMatrix::Origin::Estimated ? "estimated" : "given")
        << '\n';
    char buf[64];
    const std::size_t k = transition.t.rows();
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", transition.t(i, j));
            out << buf << (j + 1 == k ? "" : " ");
        }
        out << '\n';
    }
    if (!out) throw RuntimeError("write failed for transition file '" + path + "'");
}

TransitionMatrix load_transition(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open transition file '" + path + "'");
    std::string tag;
    if (!(in >> tag) || (tag != "estimated" && tag != "given"))
        throw ValidationError("transition file '" + path + "': bad origin tag");
    Matrix t(2, 2);
    for (double& v : t.data())
        if (!(in >> v)) throw ValidationError("transition file '" + path + "': truncated matrix");
    return make_transition(std::move(t), tag == "estimated"
                                             ? TransitionMatrix::Origin::Estimated
                                             : TransitionMatrix::Origin::Given);
}

} // namespace noisekit::correction
