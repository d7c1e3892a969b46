#pragma once

// Desk-scale translation engine: a per-position feedforward mapper with
// manually differentiated tanh/softmax layers. Weight matrices are split
// into named row blocks so tensor-level selection has something to select.
//
// Input is the one-hot encoding of the source sequence (applied sparsely:
// the first layer only ever touches the columns of the active tokens),
// output is one softmax over the vocabulary per target position.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/rng.hpp"
#include "fedcast/synth.hpp"
#include "fedcast/tensor.hpp"

namespace fedcast {

struct ModelConfig {
    std::uint32_t vocab = 16;
    std::uint32_t seq_len = 8;
    std::uint32_t depth = 3;
    std::uint32_t hidden = 128;  // matches io width; narrower bottlenecks generalize poorly here
    std::uint32_t row_blocks = 4;

    std::uint32_t io_width() const { return vocab * seq_len; }
    std::uint32_t layer_in(std::uint32_t i) const { return i == 0 ? io_width() : hidden; }
    std::uint32_t layer_out(std::uint32_t i) const { return i == depth - 1 ? io_width() : hidden; }

    void validate() const {
        if (vocab < 2) throw ConfigError("model: vocab must be >= 2");
        if (seq_len < 1) throw ConfigError("model: seq_len must be >= 1");
        if (depth < 1) throw ConfigError("model: depth must be >= 1");
        if (hidden < 1) throw ConfigError("model: hidden must be >= 1");
        if (row_blocks < 1) throw ConfigError("model: row_blocks must be >= 1");
        for (std::uint32_t i = 0; i < depth; ++i)
            if (layer_out(i) < row_blocks)
                throw ConfigError("model: row_blocks exceeds a layer width");
    }
};

using Batch = std::vector<TranslationPair>;

namespace detail {

inline std::uint32_t block_rows(std::uint32_t rows, std::uint32_t blocks, std::uint32_t j) {
    return rows / blocks + (j < rows % blocks ? 1 : 0);
}

template <typename Ptr>
struct LayerViewT {
    std::uint32_t in = 0, out = 0;
    std::vector<Ptr> block_data;            // row-major [block_rows x in]
    std::vector<std::uint32_t> block_rows;  // rows per block
    Ptr bias = nullptr;
};

template <typename Ptr, typename Set>
std::vector<LayerViewT<Ptr>> make_views(const ModelConfig& cfg, Set& params) {
    std::vector<LayerViewT<Ptr>> layers(cfg.depth);
    for (std::uint32_t i = 0; i < cfg.depth; ++i) {
        auto& layer = layers[i];
        layer.in = cfg.layer_in(i);
        layer.out = cfg.layer_out(i);
        for (std::uint32_t j = 0; j < cfg.row_blocks; ++j) {
            const std::string name =
                "layer" + std::to_string(i) + ".w.block" + std::to_string(j);
            auto it = params.entries.find(name);
            if (it == params.entries.end())
                throw CongruenceError("model: missing tensor '" + name + "'");
            const std::uint32_t rows = block_rows(layer.out, cfg.row_blocks, j);
            if (it->second.shape != std::vector<std::uint32_t>{rows, layer.in})
                throw CongruenceError("model: bad shape for '" + name + "'");
            layer.block_data.push_back(it->second.values.data());
            layer.block_rows.push_back(rows);
        }
        const std::string bias_name = "layer" + std::to_string(i) + ".b";
        auto it = params.entries.find(bias_name);
        if (it == params.entries.end())
            throw CongruenceError("model: missing tensor '" + bias_name + "'");
        if (it->second.shape != std::vector<std::uint32_t>{layer.out})
            throw CongruenceError("model: bad shape for '" + bias_name + "'");
        layer.bias = it->second.values.data();
    }
    if (params.entries.size() != static_cast<std::size_t>(cfg.depth) * (cfg.row_blocks + 1))
        throw CongruenceError("model: unexpected extra tensors");
    return layers;
}

inline std::vector<LayerViewT<const double*>> const_views(const ModelConfig& cfg,
                                                          const ParameterSet& params) {
    return make_views<const double*>(cfg, params);
}

inline std::vector<LayerViewT<double*>> mutable_views(const ModelConfig& cfg,
                                                      ParameterSet& params) {
    return make_views<double*>(cfg, params);
}

struct Workspace {
    std::vector<std::vector<double>> acts;  // post-activation per layer
    std::vector<double> probs;              // softmax per position
    std::vector<double> dcurr, dprev;

    explicit Workspace(const ModelConfig& cfg) {
        acts.resize(cfg.depth);
        for (std::uint32_t i = 0; i < cfg.depth; ++i) acts[i].resize(cfg.layer_out(i));
        probs.resize(cfg.io_width());
        dcurr.resize(std::max(cfg.io_width(), cfg.hidden));
        dprev.resize(std::max(cfg.io_width(), cfg.hidden));
    }
};

inline void check_pair(const ModelConfig& cfg, const TranslationPair& p) {
    if (p.src.size() != cfg.seq_len || p.tgt.size() != cfg.seq_len)
        throw DataError("model: pair length does not match seq_len");
    for (std::uint32_t t : p.src)
        if (t >= cfg.vocab) throw DataError("model: source token out of range");
    for (std::uint32_t t : p.tgt)
        if (t >= cfg.vocab) throw DataError("model: target token out of range");
}

/// Dense layers with a sparse one-hot first layer; fills ws.acts.
template <typename Views>
void forward_item(const ModelConfig& cfg, const Views& layers,
                  const std::vector<std::uint32_t>& src, Workspace& ws) {
    const std::uint32_t vocab = cfg.vocab;
    {
        const auto& l0 = layers[0];
        double* out = ws.acts[0].data();
        std::uint32_t row0 = 0;
        for (std::size_t b = 0; b < l0.block_data.size(); ++b) {
            const double* w = l0.block_data[b];
            for (std::uint32_t r = 0; r < l0.block_rows[b]; ++r, w += l0.in) {
                double acc = l0.bias[row0 + r];
                for (std::uint32_t s = 0; s < cfg.seq_len; ++s) acc += w[s * vocab + src[s]];
                out[row0 + r] = acc;
            }
            row0 += l0.block_rows[b];
        }
        if (cfg.depth > 1)
            for (std::uint32_t r = 0; r < l0.out; ++r) out[r] = std::tanh(out[r]);
    }
    for (std::uint32_t i = 1; i < cfg.depth; ++i) {
        const auto& li = layers[i];
        const double* in = ws.acts[i - 1].data();
        double* out = ws.acts[i].data();
        std::uint32_t row0 = 0;
        for (std::size_t b = 0; b < li.block_data.size(); ++b) {
            const double* w = li.block_data[b];
            for (std::uint32_t r = 0; r < li.block_rows[b]; ++r, w += li.in) {
                double acc = li.bias[row0 + r];
                for (std::uint32_t c = 0; c < li.in; ++c) acc += w[c] * in[c];
                out[row0 + r] = acc;
            }
            row0 += li.block_rows[b];
        }
        if (i + 1 < cfg.depth)
            for (std::uint32_t r = 0; r < li.out; ++r) out[r] = std::tanh(out[r]);
    }
}

/// Per-position softmax cross-entropy on the logits in ws.acts.back();
/// fills ws.probs, returns the summed (not yet averaged) loss.
inline double softmax_loss_item(const ModelConfig& cfg, const std::vector<std::uint32_t>& tgt,
                                Workspace& ws) {
    const double* logits = ws.acts.back().data();
    double loss = 0.0;
    for (std::uint32_t s = 0; s < cfg.seq_len; ++s) {
        const double* z = logits + static_cast<std::size_t>(s) * cfg.vocab;
        double* p = ws.probs.data() + static_cast<std::size_t>(s) * cfg.vocab;
        double m = z[0];
        for (std::uint32_t c = 1; c < cfg.vocab; ++c) m = std::max(m, z[c]);
        double denom = 0.0;
        for (std::uint32_t c = 0; c < cfg.vocab; ++c) {
            p[c] = std::exp(z[c] - m);
            denom += p[c];
        }
        for (std::uint32_t c = 0; c < cfg.vocab; ++c) p[c] /= denom;
        loss -= (z[tgt[s]] - m) - std::log(denom);
    }
    return loss;
}

}  // namespace detail

inline std::vector<std::pair<TensorName, std::vector<std::uint32_t>>> model_schema(
    const ModelConfig& cfg) {
    cfg.validate();
    std::vector<std::pair<TensorName, std::vector<std::uint32_t>>> schema;
    for (std::uint32_t i = 0; i < cfg.depth; ++i) {
        for (std::uint32_t j = 0; j < cfg.row_blocks; ++j)
            schema.emplace_back("layer" + std::to_string(i) + ".w.block" + std::to_string(j),
                                std::vector<std::uint32_t>{
                                    detail::block_rows(cfg.layer_out(i), cfg.row_blocks, j),
                                    cfg.layer_in(i)});
        schema.emplace_back("layer" + std::to_string(i) + ".b",
                            std::vector<std::uint32_t>{cfg.layer_out(i)});
    }
    return schema;
}

/// Glorot-uniform weights, zero biases; draw order is layer-major then
/// block-major so the same seed always yields the same tensors.
inline ParameterSet init_model(const ModelConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng rng(seed);
    ParameterSet params;
    for (std::uint32_t i = 0; i < cfg.depth; ++i) {
        const double a = std::sqrt(6.0 / (cfg.layer_in(i) + cfg.layer_out(i)));
        for (std::uint32_t j = 0; j < cfg.row_blocks; ++j) {
            Tensor t;
            t.shape = {detail::block_rows(cfg.layer_out(i), cfg.row_blocks, j), cfg.layer_in(i)};
            t.values.resize(t.numel());
            for (double& v : t.values) v = rng.uniform(-a, a);
            params.entries.emplace("layer" + std::to_string(i) + ".w.block" + std::to_string(j),
                                   std::move(t));
        }
        params.entries.emplace("layer" + std::to_string(i) + ".b",
                               Tensor::zeros({cfg.layer_out(i)}));
    }
    return params;
}

inline ParameterSet zeros_like(const ParameterSet& params) {
    ParameterSet out;
    for (const auto& [name, t] : params.entries) out.entries.emplace(name, Tensor::zeros(t.shape));
    return out;
}

/// Mean cross-entropy over positions and batch items.
inline double forward_loss(const ModelConfig& cfg, const ParameterSet& params,
                           std::span<const TranslationPair> batch) {
    if (batch.empty()) throw DataError("forward_loss: empty batch");
    const auto views = detail::const_views(cfg, params);
    detail::Workspace ws(cfg);
    double total = 0.0;
    for (const auto& pair : batch) {
        detail::check_pair(cfg, pair);
        detail::forward_item(cfg, views, pair.src, ws);
        total += detail::softmax_loss_item(cfg, pair.tgt, ws);
    }
    return total / (static_cast<double>(batch.size()) * cfg.seq_len);
}

namespace detail {

/// Accumulates d(mean loss)/d(params) into `grads`; returns the mean loss.
inline double forward_backward(const ModelConfig& cfg,
                               const std::vector<LayerViewT<const double*>>& params,
                               std::span<const TranslationPair> batch,
                               std::vector<LayerViewT<double*>>& grads, Workspace& ws) {
    const double scale = 1.0 / (static_cast<double>(batch.size()) * cfg.seq_len);
    double total = 0.0;
    for (const auto& pair : batch) {
        check_pair(cfg, pair);
        forward_item(cfg, params, pair.src, ws);
        total += softmax_loss_item(cfg, pair.tgt, ws);

        double* dcurr = ws.dcurr.data();
        for (std::uint32_t s = 0; s < cfg.seq_len; ++s)
            for (std::uint32_t c = 0; c < cfg.vocab; ++c) {
                const std::size_t idx = static_cast<std::size_t>(s) * cfg.vocab + c;
                dcurr[idx] = (ws.probs[idx] - (c == pair.tgt[s] ? 1.0 : 0.0)) * scale;
            }

        for (std::uint32_t i = cfg.depth; i-- > 0;) {
            const auto& pl = params[i];
            auto& gl = grads[i];
            const bool has_tanh = i + 1 < cfg.depth;
            if (has_tanh) {
                const double* h = ws.acts[i].data();
                for (std::uint32_t r = 0; r < pl.out; ++r) dcurr[r] *= 1.0 - h[r] * h[r];
            }
            if (i > 0) {
                const double* in = ws.acts[i - 1].data();
                double* dprev = ws.dprev.data();
                std::fill(dprev, dprev + pl.in, 0.0);
                std::uint32_t row0 = 0;
                for (std::size_t b = 0; b < pl.block_data.size(); ++b) {
                    const double* w = pl.block_data[b];
                    double* gw = gl.block_data[b];
                    for (std::uint32_t r = 0; r < pl.block_rows[b]; ++r, w += pl.in, gw += pl.in) {
                        const double d = dcurr[row0 + r];
                        gl.bias[row0 + r] += d;
                        if (d != 0.0)
                            for (std::uint32_t c = 0; c < pl.in; ++c) {
                                gw[c] += d * in[c];
                                dprev[c] += w[c] * d;
                            }
                    }
                    row0 += pl.block_rows[b];
                }
                std::swap(ws.dcurr, ws.dprev);
                dcurr = ws.dcurr.data();
            } else {
                // sparse one-hot input: only the active token columns move
                std::uint32_t row0 = 0;
                for (std::size_t b = 0; b < pl.block_data.size(); ++b) {
                    double* gw = gl.block_data[b];
                    for (std::uint32_t r = 0; r < pl.block_rows[b]; ++r, gw += pl.in) {
                        const double d = dcurr[row0 + r];
                        gl.bias[row0 + r] += d;
                        if (d != 0.0)
                            for (std::uint32_t s = 0; s < cfg.seq_len; ++s)
                                gw[s * cfg.vocab + pair.src[s]] += d;
                    }
                    row0 += pl.block_rows[b];
                }
            }
        }
    }
    return total * scale;
}

}  // namespace detail

/// Exact analytic gradients of forward_loss, congruent to `params`.
inline ParameterSet backward(const ModelConfig& cfg, const ParameterSet& params,
                             std::span<const TranslationPair> batch) {
    if (batch.empty()) throw DataError("backward: empty batch");
    ParameterSet grads = zeros_like(params);
    const auto pviews = detail::const_views(cfg, params);
    auto gviews = detail::mutable_views(cfg, grads);
    detail::Workspace ws(cfg);
    detail::forward_backward(cfg, pviews, batch, gviews, ws);
    return grads;
}

struct TrainResult {
    ParameterSet params;
    double last_epoch_loss = 0.0;
};

/// Minibatch SGD with a seeded per-epoch shuffle. The reported loss is the
/// sample-weighted mean of the batch losses seen during the final epoch.
inline TrainResult local_train(const ModelConfig& cfg, ParameterSet params,
                               const std::vector<TranslationPair>& dataset, std::uint32_t epochs,
                               double lr, std::uint32_t batch_size, std::uint64_t seed) {
    if (dataset.empty()) throw DataError("local_train: empty dataset");
    if (epochs < 1) throw ConfigError("local_train: epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("local_train: batch_size must be >= 1");
    if (lr < 0.0) throw ConfigError("local_train: negative learning rate");

    const auto pviews = detail::const_views(cfg, params);
    ParameterSet grads = zeros_like(params);
    auto gviews = detail::mutable_views(cfg, grads);
    detail::Workspace ws(cfg);

    Rng rng(seed);
    std::vector<std::size_t> order(dataset.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Batch batch;
    batch.reserve(batch_size);

    double epoch_loss = 0.0;
    for (std::uint32_t e = 0; e < epochs; ++e) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < end; ++i) batch.push_back(dataset[order[i]]);

            for (auto& [name, g] : grads.entries) std::fill(g.values.begin(), g.values.end(), 0.0);
            const double loss = detail::forward_backward(cfg, pviews, batch, gviews, ws);
            loss_sum += loss * static_cast<double>(batch.size());

            auto git = grads.entries.begin();
            for (auto pit = params.entries.begin(); pit != params.entries.end(); ++pit, ++git) {
                double* p = pit->second.values.data();
                const double* g = git->second.values.data();
                const std::size_t n = pit->second.values.size();
                for (std::size_t i = 0; i < n; ++i) p[i] -= lr * g[i];
            }
        }
        epoch_loss = loss_sum / static_cast<double>(dataset.size());
    }
    return {std::move(params), epoch_loss};
}

/// Mean of per-batch mean losses (batches are expected to share one size).
inline double mean_batch_loss(const ModelConfig& cfg, const ParameterSet& params,
                              std::span<const Batch> batches) {
    if (batches.empty()) throw DataError("mean_batch_loss: no batches");
    double sum = 0.0;
    for (const auto& batch : batches) sum += forward_loss(cfg, params, batch);
    return sum / static_cast<double>(batches.size());
}

/// Argmax per position; ties resolve to the lowest token id.
inline std::vector<std::uint32_t> greedy_decode(const ModelConfig& cfg, const ParameterSet& params,
                                                const std::vector<std::uint32_t>& src) {
    if (src.size() != cfg.seq_len) throw DataError("greedy_decode: bad source length");
    for (std::uint32_t t : src)
        if (t >= cfg.vocab) throw DataError("greedy_decode: token out of range");
    const auto views = detail::const_views(cfg, params);
    detail::Workspace ws(cfg);
    detail::forward_item(cfg, views, src, ws);
    const double* logits = ws.acts.back().data();
    std::vector<std::uint32_t> out(cfg.seq_len);
    for (std::uint32_t s = 0; s < cfg.seq_len; ++s) {
        const double* z = logits + static_cast<std::size_t>(s) * cfg.vocab;
        std::uint32_t best = 0;
        for (std::uint32_t c = 1; c < cfg.vocab; ++c)
            if (z[c] > z[best]) best = c;
        out[s] = best;
    }
    return out;
}

}  // namespace fedcast
