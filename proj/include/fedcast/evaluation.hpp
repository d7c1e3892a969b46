#pragma once

// Translation-quality metrics over integer token sequences: corpus BLEU with
// clipped modified precision, brevity penalty and exponential smoothing of
// zero precisions, plus position-wise token accuracy and the per-round
// deviation histogram export.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/tensor.hpp"

namespace fedcast {

using TokenCorpus = std::vector<std::vector<std::uint32_t>>;

struct BleuScore {
    double score = 0.0;                // in [0, 1]
    std::vector<double> precisions;    // smoothed p_1..p_N
    double brevity_penalty = 1.0;
    std::uint64_t hypothesis_length = 0;
    std::uint64_t reference_length = 0;
};

/// Corpus BLEU-N with half-halving smoothing: the z-th zero-count order gets
/// numerator 2^-z. N clamps to the longest hypothesis.
inline BleuScore corpus_bleu(const TokenCorpus& hypotheses, const TokenCorpus& references,
                             int max_order = 4) {
    if (hypotheses.empty()) throw DataError("corpus_bleu: empty corpus");
    if (hypotheses.size() != references.size())
        throw DataError("corpus_bleu: hypothesis/reference count mismatch");
    if (max_order < 1) throw ConfigError("corpus_bleu: max_order must be >= 1");
    std::size_t max_hyp_len = 0;
    for (const auto& h : hypotheses) max_hyp_len = std::max(max_hyp_len, h.size());
    if (max_hyp_len == 0) throw DataError("corpus_bleu: all hypotheses empty");
    const int orders = static_cast<int>(std::min<std::size_t>(max_order, max_hyp_len));

    BleuScore out;
    double log_sum = 0.0;
    int zeros_seen = 0;
    for (int n = 1; n <= orders; ++n) {
        std::uint64_t matched = 0, total = 0;
        std::map<std::vector<std::uint32_t>, std::uint64_t> hyp_counts, ref_counts;
        for (std::size_t s = 0; s < hypotheses.size(); ++s) {
            const auto& h = hypotheses[s];
            const auto& r = references[s];
            if (h.size() + 1 <= static_cast<std::size_t>(n)) continue;
            total += h.size() + 1 - n;
            hyp_counts.clear();
            ref_counts.clear();
            for (std::size_t i = 0; i + n <= h.size(); ++i)
                ++hyp_counts[std::vector<std::uint32_t>(h.begin() + i, h.begin() + i + n)];
            for (std::size_t i = 0; i + n <= r.size(); ++i)
                ++ref_counts[std::vector<std::uint32_t>(r.begin() + i, r.begin() + i + n)];
            for (const auto& [gram, count] : hyp_counts) {
                const auto it = ref_counts.find(gram);
                if (it != ref_counts.end()) matched += std::min(count, it->second);
            }
        }
        double p;
        if (matched > 0) {
            p = static_cast<double>(matched) / static_cast<double>(total);
        } else {
            ++zeros_seen;
            p = (1.0 / static_cast<double>(std::uint64_t{1} << zeros_seen)) /
                static_cast<double>(std::max<std::uint64_t>(total, 1));
        }
        out.precisions.push_back(p);
        log_sum += std::log(p);
    }

    for (const auto& h : hypotheses) out.hypothesis_length += h.size();
    for (const auto& r : references) out.reference_length += r.size();
    out.brevity_penalty =
        out.hypothesis_length >= out.reference_length
            ? 1.0
            : std::exp(1.0 - static_cast<double>(out.reference_length) /
                                 static_cast<double>(out.hypothesis_length));
    out.score = out.brevity_penalty * std::exp(log_sum / orders);
    return out;
}

/// Fraction of positions with an exact token match over aligned corpora.
inline double token_accuracy(const TokenCorpus& hypotheses, const TokenCorpus& references) {
    if (hypotheses.size() != references.size())
        throw DataError("token_accuracy: corpus size mismatch");
    if (hypotheses.empty()) throw DataError("token_accuracy: empty corpus");
    std::uint64_t hit = 0, total = 0;
    for (std::size_t s = 0; s < hypotheses.size(); ++s) {
        if (hypotheses[s].size() != references[s].size())
            throw DataError("token_accuracy: sentence length mismatch");
        for (std::size_t i = 0; i < hypotheses[s].size(); ++i) {
            hit += hypotheses[s][i] == references[s][i];
            ++total;
        }
    }
    if (total == 0) throw DataError("token_accuracy: no tokens");
    return static_cast<double>(hit) / static_cast<double>(total);
}

inline std::string histogram_file_name(std::uint32_t round, std::uint32_t client) {
    return "hist_r" + std::to_string(round) + "_c" + std::to_string(client) + ".tsv";
}

/// One TSV per (round, client): header "tensor_name\tdev", rows in
/// lexicographic name order, infinities spelled "inf".
inline void export_histograms(const std::vector<DeviationProfile>& profiles,
                              const std::filesystem::path& dir) {
    if (profiles.empty()) throw DataError("export_histograms: no profiles");
    std::filesystem::create_directories(dir);
    for (const auto& profile : profiles) {
        const auto path = dir / histogram_file_name(profile.round, profile.client_id);
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
        out << "tensor_name\tdev\n";
        char buf[40];
        for (const auto& [name, dev] : profile.devs) {
            if (std::isinf(dev)) {
                out << name << "\tinf\n";
            } else {
                std::snprintf(buf, sizeof(buf), "%.17g", dev);
                out << name << '\t' << buf << '\n';
            }
        }
        if (!out) throw IoError("short write to '" + path.string() + "'");
    }
}

/// Inverse of export_histograms for one file (round/client parsed from the name).
inline DeviationProfile read_histogram_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    DeviationProfile profile;
    const std::string stem = path.stem().string();  // hist_r{round}_c{client}
    if (std::sscanf(stem.c_str(), "hist_r%u_c%u", &profile.round, &profile.client_id) != 2)
        throw IoError("histogram file name '" + stem + "' not in hist_r*_c* form");
    std::string line;
    if (!std::getline(in, line) || line != "tensor_name\tdev")
        throw IoError("histogram '" + path.string() + "': bad header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) throw IoError("histogram: missing tab");
        const std::string name = line.substr(0, tab);
        const std::string value = line.substr(tab + 1);
        profile.devs[name] = value == "inf" ? std::numeric_limits<double>::infinity()
                                            : std::stod(value);
    }
    return profile;
}

}  // namespace fedcast
