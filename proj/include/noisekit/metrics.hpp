#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "noisekit/dataset.hpp"

namespace noisekit::metrics {

// Mann-Whitney AUC with average ranks for ties:
// (R_pos - n_pos (n_pos + 1) / 2) / (n_pos * n_neg). Throws on single-class
// labels.
double roc_auc(std::span<const double> scores, std::span<const int> labels);

struct F1Result {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    bool degenerate = false; // some denominator was zero
};

// Positive class is 1. Zero denominators yield 0 with the degenerate flag.
F1Result f1_prec_rec(std::span<const std::uint8_t> pred, std::span<const int> labels);

struct MccResult {
    double value = 0.0;
    bool degenerate = false; // a contingency margin had zero variance
};

// Matthews correlation of two flag vectors over the same universe.
MccResult mcc(std::span<const std::uint8_t> a, std::span<const std::uint8_t> b);

// Among flagged examples, the fraction coming from each source. Empty flag
// set yields an empty map.
std::map<Source, double> composition(std::span<const std::uint8_t> flags, const Corpus& corpus);

struct EvalReport {
    double auc = 0.0;
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double mcc = 0.0;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    std::map<Source, double> composition; // by source, over positive decisions
};

// Scores rank the positive class; decisions are the thresholded calls the
// F1/MCC/composition fields are computed from.
EvalReport evaluate(std::span<const double> scores, std::span<const std::uint8_t> decisions,
                    std::span<const int> labels, const Corpus& corpus);

std::string eval_report_json(const EvalReport& report);
EvalReport eval_report_from_json(const std::string& text);

void save_eval_report(const EvalReport& report, const std::string& path);
EvalReport load_eval_report(const std::string& path);

} // namespace noisekit::metrics
