#pragma once

// Named-tensor value model: L1 norms, per-tensor deviation ratios and exact
// weighted averaging. Everything here is a pure function over immutable
// inputs, summed in flat index order so results are bit-reproducible.

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fedcast/error.hpp"

namespace fedcast {

using TensorName = std::string;

struct Tensor {
    std::vector<std::uint32_t> shape;
    std::vector<double> values;  // row-major

    std::size_t numel() const {
        std::size_t n = 1;
        for (std::uint32_t d : shape) n *= d;
        return n;
    }

    bool same_shape(const Tensor& other) const { return shape == other.shape; }

    static Tensor zeros(std::vector<std::uint32_t> shape) {
        Tensor t;
        t.shape = std::move(shape);
        t.values.assign(t.numel(), 0.0);
        return t;
    }
};

/// Ordered collection of named tensors; std::map fixes lexicographic
/// iteration, which in turn fixes serialization and reduction order.
struct ParameterSet {
    std::map<TensorName, Tensor> entries;

    std::size_t tensor_count() const { return entries.size(); }

    std::size_t total_values() const {
        std::size_t n = 0;
        for (const auto& [name, t] : entries) n += t.values.size();
        return n;
    }

    bool congruent_with(const ParameterSet& other) const {
        if (entries.size() != other.entries.size()) return false;
        auto it = other.entries.begin();
        for (auto jt = entries.begin(); jt != entries.end(); ++jt, ++it) {
            if (it->first != jt->first || !it->second.same_shape(jt->second)) return false;
        }
        return true;
    }

    const Tensor& at(const TensorName& name) const {
        auto it = entries.find(name);
        if (it == entries.end()) throw CongruenceError("missing tensor '" + name + "'");
        return it->second;
    }
};

inline void require_congruent(const ParameterSet& a, const ParameterSet& b, const char* where) {
    if (!a.congruent_with(b))
        throw CongruenceError(std::string(where) + ": parameter sets are not congruent");
}

/// Sum of absolute values, accumulated in flat index order.
inline double l1_norm(const Tensor& t) {
    if (t.values.size() != t.numel())
        throw InvalidTensorError("l1_norm: value count does not match shape");
    double sum = 0.0;
    for (double v : t.values) sum += std::fabs(v);
    if (!std::isfinite(sum)) throw InvalidTensorError("l1_norm: non-finite values");
    return sum;
}

/// Relative L1 change of one tensor against its previous-round version.
/// A vanished denominator maps to 0 when nothing changed and to +inf
/// otherwise; +inf sorts above every finite threshold downstream.
inline double tensor_deviation(const Tensor& curr, const Tensor& prev) {
    if (!curr.same_shape(prev))
        throw CongruenceError("tensor_deviation: shape mismatch");
    if (curr.values.size() != curr.numel() || prev.values.size() != prev.numel())
        throw InvalidTensorError("tensor_deviation: value count does not match shape");
    double diff = 0.0, base = 0.0;
    for (std::size_t i = 0; i < curr.values.size(); ++i) {
        diff += std::fabs(curr.values[i] - prev.values[i]);
        base += std::fabs(prev.values[i]);
    }
    if (!std::isfinite(diff) || !std::isfinite(base))
        throw InvalidTensorError("tensor_deviation: non-finite values");
    if (base > 0.0) return diff / base;
    return diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
}

struct DeviationProfile {
    std::uint32_t round = 0;
    std::uint32_t client_id = 0;
    std::map<TensorName, double> devs;
};

inline DeviationProfile deviation_profile(const ParameterSet& curr, const ParameterSet& prev,
                                          std::uint32_t round, std::uint32_t client_id) {
    require_congruent(curr, prev, "deviation_profile");
    DeviationProfile profile;
    profile.round = round;
    profile.client_id = client_id;
    for (const auto& [name, tensor] : curr.entries)
        profile.devs.emplace(name, tensor_deviation(tensor, prev.at(name)));
    return profile;
}

/// Shared accumulation kernel: every aggregation path in the project runs
/// through this loop so identical inputs round identically.
inline void accumulate_scaled(std::vector<double>& acc, double weight,
                              const std::vector<double>& values) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += weight * values[i];
}

inline void require_simplex_weights(std::span<const double> weights, const char* where) {
    double sum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw NormalizationError(std::string(where) + ": negative weight");
        sum += w;
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw NormalizationError(std::string(where) + ": weights sum to " + std::to_string(sum));
}

/// Elementwise sum_k weight_k * set_k, clients accumulated in input order.
inline ParameterSet weighted_average(std::span<const ParameterSet> sets,
                                     std::span<const double> weights) {
    if (sets.empty()) throw DataError("weighted_average: no parameter sets");
    if (sets.size() != weights.size())
        throw NormalizationError("weighted_average: weight count mismatch");
    require_simplex_weights(weights, "weighted_average");
    for (std::size_t k = 1; k < sets.size(); ++k)
        require_congruent(sets[0], sets[k], "weighted_average");

    ParameterSet out;
    for (const auto& [name, tensor] : sets[0].entries) {
        Tensor acc = Tensor::zeros(tensor.shape);
        for (std::size_t k = 0; k < sets.size(); ++k)
            accumulate_scaled(acc.values, weights[k], sets[k].at(name).values);
        out.entries.emplace(name, std::move(acc));
    }
    return out;
}

}  // namespace fedcast
