#pragma once

// Server-side threshold controller: a one-hidden-layer MLP maps the K client
// training losses to the round's sending threshold and is nudged each round
// toward lower global validation loss.
//
// The hard tensor selection makes the validation loss piecewise constant in
// the threshold, so d(loss)/d(threshold) is estimated with a symmetric
// two-point difference (same validation batches on both sides) and chained
// through the network analytically.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "fedcast/error.hpp"
#include "fedcast/rng.hpp"

namespace fedcast {

struct MetaConfig {
    std::uint32_t hidden = 100;
    double meta_lr = 1e-3;         // Adam step size for the controller
    std::uint32_t val_batches = 16;
    double fd_epsilon = 1e-2;      // threshold perturbation of the two-point estimate
    double theta_max = 1.0;        // threshold output ceiling

    void validate() const {
        if (hidden < 1) throw ConfigError("meta: hidden must be >= 1");
        if (meta_lr < 0.0) throw ConfigError("meta: meta_lr must be >= 0");
        if (val_batches < 1) throw ConfigError("meta: val_batches must be >= 1");
        if (fd_epsilon <= 0.0) throw ConfigError("meta: fd_epsilon must be > 0");
        if (theta_max <= 0.0) throw ConfigError("meta: theta_max must be > 0");
    }
};

class MetaThresholdModule {
public:
    MetaThresholdModule(std::uint32_t clients, const MetaConfig& cfg, std::uint64_t seed)
        : clients_(clients), cfg_(cfg) {
        cfg_.validate();
        if (clients_ < 1) throw ConfigError("meta: need at least one client");
        const std::uint32_t h = cfg_.hidden;
        w1_.resize(static_cast<std::size_t>(h) * clients_);
        b1_.assign(h, 0.0);
        w2_.resize(h);
        b2_ = 0.0;
        Rng rng(seed);
        const double a1 = std::sqrt(6.0 / (clients_ + h));
        for (double& v : w1_) v = rng.uniform(-a1, a1);
        const double a2 = std::sqrt(6.0 / (h + 1.0));
        for (double& v : w2_) v = rng.uniform(-a2, a2);
        adam_m_.assign(param_count(), 0.0);
        adam_v_.assign(param_count(), 0.0);
    }

    std::uint32_t clients() const { return clients_; }
    const MetaConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return step_; }

    /// threshold = theta_max * sigmoid(w2 . tanh(w1 log1p(losses) + b1) + b2)
    double threshold(std::span<const double> losses) const {
        Forward f;
        forward(losses, f);
        return f.theta;
    }

    /// d(threshold)/d(parameters), flat layout [w1, b1, w2, b2].
    std::vector<double> threshold_grad(std::span<const double> losses) const {
        Forward f;
        forward(losses, f);
        std::vector<double> grad(param_count());
        fill_grad(f, 1.0, grad);
        return grad;
    }

    /// One Adam step on d(val loss)/d(parameters) = dloss_dtheta * dtheta/dphi.
    void update(std::span<const double> losses, double dloss_dtheta) {
        if (!std::isfinite(dloss_dtheta)) throw DataError("meta update: non-finite gradient");
        Forward f;
        forward(losses, f);
        std::vector<double> grad(param_count());
        fill_grad(f, dloss_dtheta, grad);
        ++step_;
        const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
        const double mc = 1.0 - std::pow(b1, static_cast<double>(step_));
        const double vc = 1.0 - std::pow(b2, static_cast<double>(step_));
        for (std::size_t i = 0; i < grad.size(); ++i) {
            adam_m_[i] = b1 * adam_m_[i] + (1.0 - b1) * grad[i];
            adam_v_[i] = b2 * adam_v_[i] + (1.0 - b2) * grad[i] * grad[i];
            const double step = cfg_.meta_lr * (adam_m_[i] / mc) / (std::sqrt(adam_v_[i] / vc) + eps);
            set_param(i, param(i) - step);
        }
    }

    // Flat parameter access (gradient checks, serialization of trajectories).
    std::size_t param_count() const { return w1_.size() + b1_.size() + w2_.size() + 1; }

    double param(std::size_t i) const {
        if (i < w1_.size()) return w1_[i];
        i -= w1_.size();
        if (i < b1_.size()) return b1_[i];
        i -= b1_.size();
        if (i < w2_.size()) return w2_[i];
        return b2_;
    }

    void set_param(std::size_t i, double v) {
        if (i < w1_.size()) { w1_[i] = v; return; }
        i -= w1_.size();
        if (i < b1_.size()) { b1_[i] = v; return; }
        i -= b1_.size();
        if (i < w2_.size()) { w2_[i] = v; return; }
        b2_ = v;
    }

    void zero_parameters() {
        std::fill(w1_.begin(), w1_.end(), 0.0);
        std::fill(b1_.begin(), b1_.end(), 0.0);
        std::fill(w2_.begin(), w2_.end(), 0.0);
        b2_ = 0.0;
    }

private:
    struct Forward {
        std::vector<double> x, h;
        double z = 0.0, sig = 0.0, theta = 0.0;
    };

    void forward(std::span<const double> losses, Forward& f) const {
        if (losses.size() != clients_)
            throw DataError("meta forward: expected one loss per client");
        for (double l : losses)
            if (!std::isfinite(l)) throw DataError("meta forward: non-finite loss");
        const std::uint32_t h = cfg_.hidden;
        f.x.resize(clients_);
        for (std::uint32_t k = 0; k < clients_; ++k) f.x[k] = std::log1p(losses[k]);
        f.h.resize(h);
        for (std::uint32_t j = 0; j < h; ++j) {
            double acc = b1_[j];
            const double* row = w1_.data() + static_cast<std::size_t>(j) * clients_;
            for (std::uint32_t k = 0; k < clients_; ++k) acc += row[k] * f.x[k];
            f.h[j] = std::tanh(acc);
        }
        f.z = b2_;
        for (std::uint32_t j = 0; j < h; ++j) f.z += w2_[j] * f.h[j];
        f.sig = 1.0 / (1.0 + std::exp(-f.z));
        f.theta = cfg_.theta_max * f.sig;
    }

    /// grad += upstream * dtheta/dphi for the cached forward pass.
    void fill_grad(const Forward& f, double upstream, std::vector<double>& grad) const {
        const std::uint32_t h = cfg_.hidden;
        const double dz = upstream * cfg_.theta_max * f.sig * (1.0 - f.sig);
        const std::size_t w2_base = w1_.size() + b1_.size();
        grad[w2_base + h] = dz;  // b2 (stored right after w2)
        for (std::uint32_t j = 0; j < h; ++j) {
            grad[w2_base + j] = dz * f.h[j];
            const double da = dz * w2_[j] * (1.0 - f.h[j] * f.h[j]);
            grad[w1_.size() + j] = da;  // b1
            for (std::uint32_t k = 0; k < clients_; ++k)
                grad[static_cast<std::size_t>(j) * clients_ + k] = da * f.x[k];
        }
    }

    std::uint32_t clients_;
    MetaConfig cfg_;
    std::vector<double> w1_, b1_, w2_;
    double b2_ = 0.0;
    std::vector<double> adam_m_, adam_v_;
    std::uint64_t step_ = 0;
};

/// Symmetric two-point estimate of d(val loss)/d(threshold). Both probes are
/// clamped into (1e-6, theta_max - 1e-6) and the denominator follows the
/// clamped probe distance.
inline double estimate_dloss_dtheta(const std::function<double(double)>& val_loss_at, double theta,
                                    double eps, double theta_max) {
    if (eps <= 0.0) throw ConfigError("estimate_dloss_dtheta: eps must be > 0");
    const double lo = 1e-6, hi = theta_max - 1e-6;
    if (!(lo < hi)) throw ConfigError("estimate_dloss_dtheta: theta_max too small");
    const double tp = std::min(std::max(theta + eps, lo), hi);
    const double tm = std::min(std::max(theta - eps, lo), hi);
    if (tp == tm) throw ConfigError("estimate_dloss_dtheta: degenerate probe interval");
    return (val_loss_at(tp) - val_loss_at(tm)) / (tp - tm);
}

}  // namespace fedcast
