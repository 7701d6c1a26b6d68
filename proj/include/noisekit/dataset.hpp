#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "noisekit/matrix.hpp"

namespace noisekit {

enum class Source { Wiki, Viki, Synthetic };
enum class TrueNoise { Clean, LabelFlip, StructuralArtifact, ContentDensity };
enum class Split { Train, Test };

std::string source_name(Source s);
Source source_from_name(const std::string& name);
std::string true_noise_name(TrueNoise t);
TrueNoise true_noise_from_name(const std::string& name);

// One sentence record. Features are embedding coordinates; the observed
// label is fixed at ingestion from provenance (wiki = 1/complex,
// viki = 0/simple) and is never rewritten by any detector.
struct Example {
    std::string id;
    std::vector<double> features;
    int label = 0;
    Source source = Source::Synthetic;
    std::optional<std::string> lang;
    std::optional<TrueNoise> true_noise; // present only for synthetic data
    std::optional<std::string> text;
};

struct Corpus {
    std::vector<Example> examples;
    std::size_t dim = 0;
    Split split = Split::Train;

    std::size_t size() const { return examples.size(); }
    // Dense n x dim copy of the feature vectors, in corpus order.
    Matrix feature_matrix() const;
    std::vector<int> labels() const;
};

// Per-detector output for one example; the common currency of all methods.
struct NoiseVerdict {
    std::string id;
    std::string method;
    double score = 0.0;
    bool flag = false;
};

struct SourceStats {
    std::size_t n_examples = 0;
    std::optional<std::size_t> n_words;  // absent when no text
    std::optional<double> q25, q75;      // sentence length IQR bounds, in words
};

struct CorpusStats {
    std::map<Source, SourceStats> per_source;
    double class_ratio = 0.0; // (#label1)/(#label0); +inf when class 0 absent
};

// Line-delimited JSON, one object per record. Unknown keys are rejected.
Corpus load_corpus(const std::string& path, std::optional<std::size_t> expected_dim = std::nullopt);
void save_corpus(const Corpus& corpus, const std::string& path);

CorpusStats corpus_stats(const Corpus& corpus);

// Validates the corpus invariants (unique ids, equal finite feature vectors,
// provenance-consistent labels); throws ValidationError on violation.
void validate_corpus(const Corpus& corpus);

// Verdict file: one tab-separated record per example: id, method, score, flag.
void save_verdicts(const std::vector<NoiseVerdict>& verdicts, const std::string& path);
std::vector<NoiseVerdict> load_verdicts(const std::string& path);

} // namespace noisekit
