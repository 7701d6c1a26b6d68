#pragma once

#include <cstdint>
#include <vector>

#include "noisekit/dataset.hpp"
#include "noisekit/trainer.hpp"

namespace noisekit::lossfilters {

struct StConfig {
    double retain_percentile = 0.75; // fraction of lowest-loss examples kept per epoch
    int epochs = 5;
    trainer::TrainConfig train;
};

enum class CtFlagRule { BothLastEpoch, BothMajorityEpochs };

struct CtConfig {
    double r_min = 0.0;
    double r_max = 0.3;
    int epochs = 10;
    CtFlagRule flag_rule = CtFlagRule::BothMajorityEpochs;
    trainer::TrainConfig train;
    // Diagnostic mode: both peers share one initialization, so co-teaching
    // degenerates to single-model self-filtering.
    bool identical_peers = false;
};

// r_t = r_min + (r_max - r_min) * t / T for 0 <= t <= T.
double forget_rate(int t, const CtConfig& config);

struct StResult {
    std::vector<NoiseVerdict> verdicts;
    // Excluded (top-loss) example indices per epoch, for bookkeeping checks.
    std::vector<std::vector<std::size_t>> excluded_per_epoch;
};

// Selection-then-train: each epoch scores the full corpus, excludes the
// ceil((1-p)*n) highest-loss examples (loss ties broken toward the smaller
// index), and trains one epoch on the rest. Flag = excluded in every epoch;
// score = fraction of epochs excluded.
StResult small_loss_trick(const Corpus& corpus, const StConfig& config);

struct CtResult {
    std::vector<NoiseVerdict> verdicts;
    // Per-epoch discard totals for each peer (sum over batches of
    // floor(r_t * batch_size)).
    std::vector<std::size_t> discards_a, discards_b;
};

// Two peers train in parallel; per mini-batch each ranks the batch by its own
// loss and hands the lowest (1 - r_t) fraction to the other peer's update.
// Flags follow the configured rule over the discarded-by-both indicators;
// score = mean of that indicator over epochs.
CtResult co_teaching(const Corpus& corpus, const CtConfig& config);

} // namespace noisekit::lossfilters
