#include "noisekit/loss_filters.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "noisekit/error.hpp"
#include "noisekit/rng.hpp"

namespace noisekit::lossfilters {

double forget_rate(int t, const CtConfig& config) {
    if (!(config.r_min >= 0.0 && config.r_min <= config.r_max && config.r_max < 1.0))
        throw ValidationError("co_teaching: need 0 <= r_min <= r_max < 1");
    if (config.epochs < 1) throw ValidationError("co_teaching: epochs must be >= 1");
    if (t < 0 || t > config.epochs)
        throw ValidationError("forget_rate: epoch index " + std::to_string(t) +
                              " outside [0, " + std::to_string(config.epochs) + "]");
    return config.r_min + (config.r_max - config.r_min) * static_cast<double>(t) /
                              static_cast<double>(config.epochs);
}

namespace {

void check_trainable(const Corpus& corpus) {
    bool has0 = false, has1 = false;
    for (const Example& e : corpus.examples) (e.label == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw ValidationError("loss filter: single-class corpus");
}

// Indices sorted by loss descending, ties toward the smaller example index.
std::vector<std::size_t> by_loss_desc(const std::vector<double>& losses) {
    std::vector<std::size_t> idx(losses.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return losses[a] > losses[b]; });
    return idx;
}

} // namespace

StResult small_loss_trick(const Corpus& corpus, const StConfig& config) {
    if (!(config.retain_percentile > 0.0 && config.retain_percentile < 1.0))
        throw ValidationError("small_loss_trick: retain_percentile must lie in (0, 1)");
    if (config.epochs < 1) throw ValidationError("small_loss_trick: epochs must be >= 1");
    check_trainable(corpus);

    const std::size_t n = corpus.size();
    const std::size_t n_excluded = static_cast<std::size_t>(
        std::ceil((1.0 - config.retain_percentile) * static_cast<double>(n)));
    if (n - n_excluded < 2)
        throw ValidationError("small_loss_trick: fewer than 2 examples would remain per epoch");

    const Matrix x = corpus.feature_matrix();
    const std::vector<int> labels = corpus.labels();
    trainer::TrainConfig tc = config.train;
    trainer::LinearModel model =
        trainer::init_model(corpus.dim, 2, derive_seed(tc.seed, "init"));

    StResult result;
    std::vector<std::size_t> excluded_count(n, 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        // Select on the full dataset under the current model, then train on
        // the retained low-loss fraction.
        const std::vector<double> losses = trainer::per_example_loss(model, x, labels, tc.loss);
        const std::vector<std::size_t> ranked = by_loss_desc(losses);

        std::vector<std::size_t> excluded(ranked.begin(),
                                          ranked.begin() + static_cast<std::ptrdiff_t>(n_excluded));
        std::vector<std::uint8_t> retain(n, 1);
        for (const std::size_t i : excluded) {
            retain[i] = 0;
            ++excluded_count[i];
        }
        std::sort(excluded.begin(), excluded.end());
        result.excluded_per_epoch.push_back(std::move(excluded));

        std::vector<std::size_t> order;
        order.reserve(n - n_excluded);
        for (std::size_t i = 0; i < n; ++i)
            if (retain[i]) order.push_back(i);

        bool has0 = false, has1 = false;
        for (const std::size_t i : order) (labels[i] == 1 ? has1 : has0) = true;
        if (!has0 || !has1)
            throw ValidationError("small_loss_trick: retained set lost a class at epoch " +
                                  std::to_string(epoch));
        trainer::sgd_epoch(model, x, labels, order, tc, epoch);
    }

    result.verdicts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double score =
            static_cast<double>(excluded_count[i]) / static_cast<double>(config.epochs);
        result.verdicts.push_back({corpus.examples[i].id, "st", score,
                                   excluded_count[i] == static_cast<std::size_t>(config.epochs)});
    }
    return result;
}

CtResult co_teaching(const Corpus& corpus, const CtConfig& config) {
    forget_rate(0, config); // validates the schedule parameters
    check_trainable(corpus);
    if (config.train.batch_size < 1)
        throw ValidationError("co_teaching: batch_size must be >= 1");

    const std::size_t n = corpus.size();
    const Matrix x = corpus.feature_matrix();
    const std::vector<int> labels = corpus.labels();
    const int total_epochs = config.epochs;

    const std::uint64_t seed_a = derive_seed(config.train.seed, "ct-peer-a");
    const std::uint64_t seed_b =
        config.identical_peers ? seed_a : derive_seed(config.train.seed, "ct-peer-b");
    trainer::LinearModel model_a = trainer::init_model(corpus.dim, 2, seed_a);
    trainer::LinearModel model_b = trainer::init_model(corpus.dim, 2, seed_b);

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    const std::size_t batch_size = static_cast<std::size_t>(config.train.batch_size);

    CtResult result;
    result.discards_a.assign(static_cast<std::size_t>(total_epochs), 0);
    result.discards_b.assign(static_cast<std::size_t>(total_epochs), 0);
    std::vector<std::size_t> both_count(n, 0);
    std::vector<std::size_t> both_count_ramp(n, 0); // epochs with r_t > 0 only
    int ramp_epochs = 0;
    std::vector<std::uint8_t> both_last(n, 0);

    std::vector<double> loss_a, loss_b;
    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const double r_t = forget_rate(epoch, config);
        if (r_t > 0.0) ++ramp_epochs;
        if (config.train.shuffle) {
            Rng rng = Rng(derive_seed(config.train.seed, "ct-shuffle"))
                          .split(static_cast<std::uint64_t>(epoch));
            rng.shuffle(order);
        }
        for (std::size_t start = 0; start < n; start += batch_size) {
            const std::size_t len = std::min(batch_size, n - start);
            const std::span<const std::size_t> batch(order.data() + start, len);
            const std::size_t n_discard =
                static_cast<std::size_t>(std::floor(r_t * static_cast<double>(len)));

            std::vector<std::size_t> keep_a, keep_b;
            if (n_discard == 0) {
                keep_a.assign(batch.begin(), batch.end());
                keep_b = keep_a;
            } else {
                // Each peer ranks the batch by its own loss; the lowest-loss
                // fraction goes to the other peer's update.
                loss_a = trainer::losses_at(model_a, x, labels, batch, config.train.loss);
                loss_b = trainer::losses_at(model_b, x, labels, batch, config.train.loss);

                std::vector<std::size_t> rank_a(len), rank_b(len);
                std::iota(rank_a.begin(), rank_a.end(), 0);
                std::iota(rank_b.begin(), rank_b.end(), 0);
                auto ascending = [](const std::vector<double>& loss) {
                    return [&loss](std::size_t a, std::size_t b) { return loss[a] < loss[b]; };
                };
                std::stable_sort(rank_a.begin(), rank_a.end(), ascending(loss_a));
                std::stable_sort(rank_b.begin(), rank_b.end(), ascending(loss_b));

                const std::size_t n_keep = len - n_discard;
                std::vector<std::uint8_t> discarded_a(len, 0), discarded_b(len, 0);
                for (std::size_t j = 0; j < len; ++j) {
                    if (j < n_keep) {
                        keep_a.push_back(batch[rank_a[j]]);
                        keep_b.push_back(batch[rank_b[j]]);
                    } else {
                        discarded_a[rank_a[j]] = 1;
                        discarded_b[rank_b[j]] = 1;
                    }
                }
                for (std::size_t j = 0; j < len; ++j) {
                    if (!discarded_a[j] || !discarded_b[j]) continue;
                    const std::size_t i = batch[j];
                    ++both_count[i];
                    if (r_t > 0.0) ++both_count_ramp[i];
                    if (epoch == total_epochs - 1) both_last[i] = 1;
                }
            }
            result.discards_a[static_cast<std::size_t>(epoch)] += n_discard;
            result.discards_b[static_cast<std::size_t>(epoch)] += n_discard;

            // Cross update: A learns from B's selection and vice versa.
            const trainer::BatchGradient grad_a =
                trainer::batch_gradient(model_a, x, labels, keep_b, config.train.loss);
            const trainer::BatchGradient grad_b =
                trainer::batch_gradient(model_b, x, labels, keep_a, config.train.loss);
            trainer::apply_update(model_a, grad_a, config.train.learning_rate);
            trainer::apply_update(model_b, grad_b, config.train.learning_rate);
        }
    }

    result.verdicts.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double score =
            static_cast<double>(both_count[i]) / static_cast<double>(total_epochs);
        bool flagged = false;
        if (config.flag_rule == CtFlagRule::BothLastEpoch) {
            flagged = both_last[i] != 0;
        } else {
            flagged = ramp_epochs > 0 &&
                      2 * both_count_ramp[i] > static_cast<std::size_t>(ramp_epochs);
        }
        result.verdicts.push_back({corpus.examples[i].id, "ct", score, flagged});
    }
    return result;
}

} // namespace noisekit::lossfilters
