#pragma once

// Parameter-selection strategies: which tensors does a client actually
// transmit. Full transmission, random halves, deviation-ranked halves, and
// threshold rules (learned, fixed, or random thresholds all share the same
// greater/less split).

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/rng.hpp"
#include "fedcast/serialize.hpp"
#include "fedcast/tensor.hpp"

namespace fedcast {

enum class SendMode { Greater, Less };

enum class StrategyFamily {
    SendAll,
    RandSend,
    DeviationPortion,  // top/bottom half by deviation
    MetaSend,
    FixedThreshold,
    RandomThreshold,
};

struct StrategyKind {
    StrategyFamily family = StrategyFamily::SendAll;
    SendMode mode = SendMode::Greater;
    double fraction = 0.5;     // RandSend
    double fixed_theta = 0.5;  // FixedThreshold

    bool uses_mode() const {
        return family != StrategyFamily::SendAll && family != StrategyFamily::RandSend;
    }

    bool uses_threshold() const {
        return family == StrategyFamily::MetaSend || family == StrategyFamily::FixedThreshold ||
               family == StrategyFamily::RandomThreshold;
    }

    void validate() const {
        if (fraction < 0.0 || fraction > 1.0)
            throw ConfigError("strategy: rand_fraction must lie in [0, 1]");
        if (fixed_theta < 0.0) throw ConfigError("strategy: fixed_theta must be >= 0");
    }

    std::string family_token() const {
        switch (family) {
            case StrategyFamily::SendAll: return "send_all";
            case StrategyFamily::RandSend: return "rand_send";
            case StrategyFamily::DeviationPortion: return "dp";
            case StrategyFamily::MetaSend: return "metasend";
            case StrategyFamily::FixedThreshold: return "fixed_threshold";
            case StrategyFamily::RandomThreshold: return "random_threshold";
        }
        return "?";
    }

    std::string mode_token() const {
        if (!uses_mode()) return "";
        return mode == SendMode::Greater ? "g" : "l";
    }

    /// Compact token: "dp_g", "metasend_l", "send_all", ...
    std::string token() const {
        const std::string m = mode_token();
        return m.empty() ? family_token() : family_token() + "_" + m;
    }

    static StrategyKind parse_token(const std::string& token) {
        StrategyKind kind;
        std::string base = token;
        if (token.size() > 2 && (token.ends_with("_g") || token.ends_with("_l"))) {
            base = token.substr(0, token.size() - 2);
            kind.mode = token.back() == 'g' ? SendMode::Greater : SendMode::Less;
        }
        if (base == "send_all") kind.family = StrategyFamily::SendAll;
        else if (base == "rand_send") kind.family = StrategyFamily::RandSend;
        else if (base == "dp") kind.family = StrategyFamily::DeviationPortion;
        else if (base == "metasend") kind.family = StrategyFamily::MetaSend;
        else if (base == "fixed_threshold") kind.family = StrategyFamily::FixedThreshold;
        else if (base == "random_threshold") kind.family = StrategyFamily::RandomThreshold;
        else throw ConfigError("unknown strategy '" + token + "'");
        if (kind.uses_mode() && base == token)
            throw ConfigError("strategy '" + token + "' needs a _g or _l suffix");
        return kind;
    }
};

/// The tensors a client actually transmits, plus everything the server
/// needs to weight and audit the contribution.
struct PartialUpdate {
    std::uint32_t client_id = 0;
    std::uint32_t round = 0;
    std::map<TensorName, Tensor> sent;
    std::uint64_t sample_count = 0;
    double train_loss = 0.0;
};

struct SelectionStats {
    std::uint64_t total_tensors = 0;
    std::uint64_t sent_tensors = 0;
    double saving_ratio = 0.0;  // 1 - sent/total
    std::uint64_t bytes_sent = 0;
};

struct ClientRoundInfo {
    std::uint32_t client_id = 0;
    std::uint32_t round = 0;
    std::uint64_t sample_count = 0;
    double train_loss = 0.0;
};

namespace detail {

inline PartialUpdate empty_update(const ClientRoundInfo& info) {
    PartialUpdate u;
    u.client_id = info.client_id;
    u.round = info.round;
    u.sample_count = info.sample_count;
    u.train_loss = info.train_loss;
    return u;
}

inline double dev_for(const DeviationProfile& profile, const TensorName& name) {
    auto it = profile.devs.find(name);
    if (it == profile.devs.end())
        throw MissingDeviationError("selection: no deviation for tensor '" + name + "'");
    return it->second;
}

}  // namespace detail

inline PartialUpdate select_send_all(const ParameterSet& params, const ClientRoundInfo& info) {
    PartialUpdate u = detail::empty_update(info);
    u.sent = params.entries;
    return u;
}

/// Sends round(fraction * L) tensors drawn uniformly without replacement
/// (half-up rounding).
inline PartialUpdate select_random(const ParameterSet& params, double fraction,
                                   const ClientRoundInfo& info, std::uint64_t seed) {
    if (fraction < 0.0 || fraction > 1.0)
        throw ConfigError("select_random: fraction must lie in [0, 1]");
    const std::size_t total = params.tensor_count();
    const std::size_t count = static_cast<std::size_t>(
        std::floor(fraction * static_cast<double>(total) + 0.5));
    std::vector<const std::pair<const TensorName, Tensor>*> order;
    order.reserve(total);
    for (const auto& entry : params.entries) order.push_back(&entry);
    Rng rng(seed);
    // partial Fisher-Yates: the first `count` slots end up uniform
    for (std::size_t i = 0; i < count && i + 1 < order.size(); ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.below(order.size() - i));
        std::swap(order[i], order[j]);
    }
    PartialUpdate u = detail::empty_update(info);
    for (std::size_t i = 0; i < count; ++i) u.sent.insert(*order[i]);
    return u;
}

/// Deviation-ranked fixed portion: Greater sends the top ceil(L/2) names,
/// Less the bottom ceil(L/2); ties break lexicographically.
inline PartialUpdate select_dp(const ParameterSet& params, const DeviationProfile& profile,
                               SendMode mode, const ClientRoundInfo& info) {
    std::vector<std::pair<TensorName, double>> ranked;
    ranked.reserve(params.tensor_count());
    for (const auto& [name, tensor] : params.entries)
        ranked.emplace_back(name, detail::dev_for(profile, name));
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    const std::size_t half = (ranked.size() + 1) / 2;
    const std::size_t begin = mode == SendMode::Greater ? 0 : ranked.size() - half;
    PartialUpdate u = detail::empty_update(info);
    for (std::size_t i = begin; i < begin + half; ++i)
        u.sent.emplace(ranked[i].first, params.at(ranked[i].first));
    return u;
}

/// Threshold split: Greater sends {dev >= theta}, Less sends {dev < theta}.
/// Infinite deviations (all-zero previous tensor) always land in Greater.
inline PartialUpdate select_threshold(const ParameterSet& params, const DeviationProfile& profile,
                                      double theta, SendMode mode, const ClientRoundInfo& info) {
    if (theta < 0.0) throw ConfigError("select_threshold: theta must be >= 0");
    PartialUpdate u = detail::empty_update(info);
    for (const auto& [name, tensor] : params.entries) {
        const double dev = detail::dev_for(profile, name);
        const bool send = mode == SendMode::Greater ? dev >= theta : dev < theta;
        if (send) u.sent.emplace(name, tensor);
    }
    return u;
}

inline std::size_t partial_update_wire_size(const PartialUpdate& u) {
    std::size_t size = 4 + 4 + 8 + 8 + 4;  // client_id, round, n_k, train_loss, sent_count
    for (const auto& [name, tensor] : u.sent) size += tensor_frame_size(name, tensor);
    return size;
}

/// Wire format: header (client_id u32, round u32, n_k u64, train_loss f64,
/// sent_count u32) followed by tensor frames in name order.
inline std::vector<std::uint8_t> encode_partial_update(const PartialUpdate& u) {
    std::vector<std::uint8_t> out;
    out.reserve(partial_update_wire_size(u));
    detail::put_u32(out, u.client_id);
    detail::put_u32(out, u.round);
    detail::put_u64(out, u.sample_count);
    detail::put_f64(out, u.train_loss);
    detail::put_u32(out, static_cast<std::uint32_t>(u.sent.size()));
    for (const auto& [name, tensor] : u.sent) encode_tensor_frame(name, tensor, out);
    return out;
}

inline PartialUpdate decode_partial_update(const std::uint8_t* data, std::size_t size) {
    detail::Reader in(data, size);
    PartialUpdate u;
    u.client_id = in.u32();
    u.round = in.u32();
    u.sample_count = in.u64();
    u.train_loss = in.f64();
    const std::uint32_t count = in.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        auto [name, tensor] = decode_tensor_frame(in);
        u.sent.emplace(std::move(name), std::move(tensor));
    }
    if (!in.done()) throw IoError("partial update: trailing bytes");
    return u;
}

inline SelectionStats selection_stats(const PartialUpdate& u, std::uint64_t total_tensors) {
    SelectionStats stats;
    stats.total_tensors = total_tensors;
    stats.sent_tensors = u.sent.size();
    stats.saving_ratio =
        total_tensors == 0
            ? 0.0
            : 1.0 - static_cast<double>(stats.sent_tensors) / static_cast<double>(total_tensors);
    stats.bytes_sent = partial_update_wire_size(u);
    return stats;
}

}  // namespace fedcast
