#include "noisekit/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "noisekit/error.hpp"
#include "noisekit/stats.hpp"

namespace noisekit {

using nlohmann::json;

std::string source_name(Source s) {
    switch (s) {
        case Source::Wiki: return "wiki";
        case Source::Viki: return "viki";
        case Source::Synthetic: return "synthetic";
    }
    return "synthetic";
}

Source source_from_name(const std::string& name) {
    if (name == "wiki") return Source::Wiki;
    if (name == "viki") return Source::Viki;
    if (name == "synthetic") return Source::Synthetic;
    throw ValidationError("unknown source '" + name + "'");
}

std::string true_noise_name(TrueNoise t) {
    switch (t) {
        case TrueNoise::Clean: return "clean";
        case TrueNoise::LabelFlip: return "label_flip";
        case TrueNoise::StructuralArtifact: return "structural";
        case TrueNoise::ContentDensity: return "content";
    }
    return "clean";
}

TrueNoise true_noise_from_name(const std::string& name) {
    if (name == "clean") return TrueNoise::Clean;
    if (name == "label_flip") return TrueNoise::LabelFlip;
    if (name == "structural") return TrueNoise::StructuralArtifact;
    if (name == "content") return TrueNoise::ContentDensity;
    throw ValidationError("unknown true_noise '" + name + "'");
}

Matrix Corpus::feature_matrix() const {
    Matrix x(examples.size(), dim);
    for (std::size_t i = 0; i < examples.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j)
            x(i, j) = examples[i].features[j];
    return x;
}

std::vector<int> Corpus::labels() const {
    std::vector<int> y(examples.size());
    for (std::size_t i = 0; i < examples.size(); ++i) y[i] = examples[i].label;
    return y;
}

void validate_corpus(const Corpus& corpus) {
    std::unordered_set<std::string> seen;
    seen.reserve(corpus.size());
    for (const Example& e : corpus.examples) {
        if (e.features.size() != corpus.dim)
            throw ValidationError("example '" + e.id + "': feature length " +
                                  std::to_string(e.features.size()) + " != corpus dim " +
                                  std::to_string(corpus.dim));
        for (const double v : e.features)
            if (!std::isfinite(v))
                throw ValidationError("example '" + e.id + "': non-finite feature value");
        if (e.label != 0 && e.label != 1)
            throw ValidationError("example '" + e.id + "': label must be 0 or 1");
        if (e.source == Source::Wiki && e.label != 1)
            throw ValidationError("example '" + e.id + "': wiki provenance requires label 1");
        if (e.source == Source::Viki && e.label != 0)
            throw ValidationError("example '" + e.id + "': viki provenance requires label 0");
        if (!seen.insert(e.id).second)
            throw ValidationError("duplicate id '" + e.id + "'");
    }
}

namespace {

Example example_from_json(const json& rec, std::size_t line_no) {
    static const std::unordered_set<std::string> known = {
        "id", "features", "label", "source", "lang", "text", "true_noise"};
    for (const auto& [key, value] : rec.items()) {
        (void)value;
        if (!known.count(key))
            throw ValidationError("line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    for (const char* required : {"id", "features", "label", "source"})
        if (!rec.contains(required))
            throw ValidationError("line " + std::to_string(line_no) + ": missing key '" +
                                  std::string(required) + "'");

    Example e;
    e.id = rec.at("id").get<std::string>();
    e.features = rec.at("features").get<std::vector<double>>();
    e.label = rec.at("label").get<int>();
    e.source = source_from_name(rec.at("source").get<std::string>());
    if (rec.contains("lang")) e.lang = rec.at("lang").get<std::string>();
    if (rec.contains("text")) e.text = rec.at("text").get<std::string>();
    if (rec.contains("true_noise"))
        e.true_noise = true_noise_from_name(rec.at("true_noise").get<std::string>());
    return e;
}

json example_to_json(const Example& e) {
    json rec;
    rec["id"] = e.id;
    rec["features"] = e.features;
    rec["label"] = e.label;
    rec["source"] = source_name(e.source);
    if (e.lang) rec["lang"] = *e.lang;
    if (e.text) rec["text"] = *e.text;
    if (e.true_noise) rec["true_noise"] = true_noise_name(*e.true_noise);
    return rec;
}

std::size_t word_count(const std::string& text) {
    std::istringstream in(text);
    std::string tok;
    std::size_t n = 0;
    while (in >> tok) ++n;
    return n;
}

} // namespace

Corpus load_corpus(const std::string& path, std::optional<std::size_t> expected_dim) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open corpus file '" + path + "'");

    Corpus corpus;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& ex) {
            throw ValidationError("line " + std::to_string(line_no) + ": malformed record: " + ex.what());
        }
        if (!rec.is_object())
            throw ValidationError("line " + std::to_string(line_no) + ": record is not an object");
        Example e;
        try {
            e = example_from_json(rec, line_no);
        } catch (const json::exception& ex) {
            throw ValidationError("line " + std::to_string(line_no) + ": bad field type: " + ex.what());
        }
        corpus.examples.push_back(std::move(e));
    }

    if (corpus.examples.empty()) {
        if (!expected_dim)
            throw ValidationError("empty corpus '" + path + "' and no expected dimensionality given");
        corpus.dim = *expected_dim;
        return corpus;
    }

    corpus.dim = expected_dim ? *expected_dim : corpus.examples.front().features.size();
    validate_corpus(corpus);
    return corpus;
}

void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write corpus file '" + path + "'");
    for (const Example& e : corpus.examples) out << example_to_json(e).dump() << '\n';
    if (!out) throw RuntimeError("write failed for corpus file '" + path + "'");
}

CorpusStats corpus_stats(const Corpus& corpus) {
    CorpusStats stats;
    std::map<Source, std::vector<double>> lengths;
    std::size_t n0 = 0, n1 = 0;

    for (const Example& e : corpus.examples) {
        SourceStats& s = stats.per_source[e.source];
        ++s.n_examples;
        if (e.text) {
            const std::size_t words = word_count(*e.text);
            s.n_words = s.n_words.value_or(0) + words;
            lengths[e.source].push_back(static_cast<double>(words));
        }
        (e.label == 1 ? n1 : n0)++;
    }

    for (auto& [src, len] : lengths) {
        SourceStats& s = stats.per_source[src];
        s.q25 = quantile(len, 0.25);
        s.q75 = quantile(len, 0.75);
    }

    stats.class_ratio = n0 == 0 ? std::numeric_limits<double>::infinity()
                                : static_cast<double>(n1) / static_cast<double>(n0);
    return stats;
}

void save_verdicts(const std::vector<NoiseVerdict>& verdicts, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw RuntimeError("cannot write verdict file '" + path + "'");
    char buf[64];
    for (const NoiseVerdict& v : verdicts) {
        std::snprintf(buf, sizeof(buf), "%.17g", v.score);
        out << v.id << '\t' << v.method << '\t' << buf << '\t' << (v.flag ? 1 : 0) << '\n';
    }
    if (!out) throw RuntimeError("write failed for verdict file '" + path + "'");
}

std::vector<NoiseVerdict> load_verdicts(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open verdict file '" + path + "'");
    std::vector<NoiseVerdict> verdicts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream fields(line);
        NoiseVerdict v;
        int flag = -1;
        if (!(fields >> v.id >> v.method >> v.score >> flag) || (flag != 0 && flag != 1))
            throw ValidationError(path + ": line " + std::to_string(line_no) + ": malformed verdict");
        v.flag = flag == 1;
        verdicts.push_back(std::move(v));
    }
    return verdicts;
}

} // namespace noisekit
