#pragma once

// Independent reference implementations used only by tests. These stay
// deliberately naive (index loops, map-of-vector n-gram counting) so they
// exercise none of the library's code paths.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "fedcast/rng.hpp"
#include "fedcast/tensor.hpp"

namespace oracle {

// Eq-by-hand deviation: scalar loops, no shared kernels.
inline double scalar_loop_deviation(const std::vector<double>& curr,
                                    const std::vector<double>& prev) {
    double num = 0.0;
    for (std::size_t i = 0; i < curr.size(); ++i) {
        const double d = curr[i] - prev[i];
        num += d < 0 ? -d : d;
    }
    double den = 0.0;
    for (double p : prev) den += p < 0 ? -p : p;
    if (den > 0.0) return num / den;
    if (num == 0.0) return 0.0;
    return std::numeric_limits<double>::infinity();
}

inline fedcast::Tensor random_tensor(fedcast::Rng& rng, std::size_t max_rank = 3,
                                     std::uint32_t max_dim = 5) {
    fedcast::Tensor t;
    const std::size_t rank = 1 + rng.below(max_rank);
    for (std::size_t i = 0; i < rank; ++i)
        t.shape.push_back(1 + static_cast<std::uint32_t>(rng.below(max_dim)));
    t.values.resize(t.numel());
    for (double& v : t.values) v = rng.uniform(-2.0, 2.0);
    return t;
}

inline fedcast::ParameterSet random_parameter_set(fedcast::Rng& rng, std::size_t tensors = 4) {
    fedcast::ParameterSet ps;
    for (std::size_t i = 0; i < tensors; ++i) {
        std::string name = "t" + std::to_string(i);
        ps.entries.emplace(std::move(name), random_tensor(rng));
    }
    return ps;
}

/// Same names/shapes as `like`, fresh random values.
inline fedcast::ParameterSet random_like(fedcast::Rng& rng, const fedcast::ParameterSet& like) {
    fedcast::ParameterSet ps;
    for (const auto& [name, t] : like.entries) {
        fedcast::Tensor fresh;
        fresh.shape = t.shape;
        fresh.values.resize(t.values.size());
        for (double& v : fresh.values) v = rng.uniform(-2.0, 2.0);
        ps.entries.emplace(name, std::move(fresh));
    }
    return ps;
}

inline std::vector<double> random_simplex_weights(fedcast::Rng& rng, std::size_t k) {
    std::vector<double> w(k);
    double sum = 0.0;
    for (double& x : w) {
        x = rng.uniform(0.01, 1.0);
        sum += x;
    }
    for (double& x : w) x /= sum;
    // nudge the last weight so the total is exactly representable as 1.0-ish
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < k; ++i) total += w[i];
    w[k - 1] = 1.0 - total;
    return w;
}

// Clipped n-gram BLEU computed the slow way: per-position scans with
// explicit match bookkeeping instead of count maps.
inline double brute_force_bleu(const std::vector<std::vector<std::uint32_t>>& hyps,
                               const std::vector<std::vector<std::uint32_t>>& refs,
                               int max_order = 4) {
    std::size_t max_hyp_len = 0;
    for (const auto& h : hyps) max_hyp_len = std::max(max_hyp_len, h.size());
    const int orders = static_cast<int>(std::min<std::size_t>(max_order, max_hyp_len));

    double log_sum = 0.0;
    int zeros_seen = 0;
    for (int n = 1; n <= orders; ++n) {
        std::uint64_t matched = 0, total = 0;
        for (std::size_t s = 0; s < hyps.size(); ++s) {
            const auto& h = hyps[s];
            const auto& r = refs[s];
            if (h.size() + 1 > static_cast<std::size_t>(n)) total += h.size() + 1 - n;
            std::map<std::vector<std::uint32_t>, std::uint64_t> hyp_counts, ref_counts;
            for (std::size_t i = 0; i + n <= h.size(); ++i)
                ++hyp_counts[std::vector<std::uint32_t>(h.begin() + i, h.begin() + i + n)];
            for (std::size_t i = 0; i + n <= r.size(); ++i)
                ++ref_counts[std::vector<std::uint32_t>(r.begin() + i, r.begin() + i + n)];
            for (const auto& [gram, count] : hyp_counts) {
                auto it = ref_counts.find(gram);
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
        log_sum += std::log(p);
    }

    std::uint64_t hyp_len = 0, ref_len = 0;
    for (const auto& h : hyps) hyp_len += h.size();
    for (const auto& r : refs) ref_len += r.size();
    const double bp = hyp_len >= ref_len
                          ? 1.0
                          : std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len));
    return bp * std::exp(log_sum / orders);
}

}  // namespace oracle
