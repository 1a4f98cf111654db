#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "sensim/rng.hpp"

namespace sensim {

/// Numerically stable softmax cross-entropy. Returns the loss; dlogits
/// receives softmax - onehot.
inline double cross_entropy(const std::vector<double>& logits, int label,
                            std::vector<double>& dlogits) {
    const int n = static_cast<int>(logits.size());
    if (label < 0 || label >= n) throw std::invalid_argument("label out of range");
    double max_logit = logits[0];
    for (double v : logits) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite logit");
        max_logit = std::max(max_logit, v);
    }
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max_logit);
    const double log_z = max_logit + std::log(sum);
    dlogits.resize(n);
    for (int i = 0; i < n; ++i)
        dlogits[i] = std::exp(logits[i] - log_z) - (i == label ? 1.0 : 0.0);
    return log_z - logits[label];
}

/// Adam over a flat parameter vector.
class Adam {
public:
    Adam(std::size_t size, double lr = 0.01, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {
        if (lr <= 0.0) throw std::invalid_argument("learning rate must be positive");
    }

    void step(std::vector<double>& params, const std::vector<double>& grads) {
        if (params.size() != m_.size() || grads.size() != m_.size())
            throw std::invalid_argument("Adam size mismatch");
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grads[i];
            v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grads[i] * grads[i];
            params[i] -= lr_ * (m_[i] / bc1) / (std::sqrt(v_[i] / bc2) + eps_);
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<double> m_, v_;
};

/// Fully connected classifier: input -> 128 ReLU -> 64 ReLU -> 10 logits,
/// with hand-written exact backprop that also produces the gradient with
/// respect to the input vector.
class Mlp {
public:
    static constexpr int kHidden1 = 128;
    static constexpr int kHidden2 = 64;
    static constexpr int kClasses = 10;

    explicit Mlp(int input_dim) : input_dim_(input_dim) {
        dims_ = {input_dim_, kHidden1, kHidden2, kClasses};
        std::size_t total = 0;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            weight_offset_.push_back(total);
            total += static_cast<std::size_t>(dims_[l]) * dims_[l + 1];
            bias_offset_.push_back(total);
            total += dims_[l + 1];
        }
        weights_.assign(total, 0.0);
    }

    /// He-normal initialization, seeded.
    void init(std::uint64_t seed) {
        Rng rng = Rng::keyed(seed, 0x4d4c50ull);
        bool has_spare = false;
        double spare = 0.0;
        auto normal = [&] {
            if (has_spare) { has_spare = false; return spare; }
            double u1 = rng.next_double();
            while (u1 <= 0.0) u1 = rng.next_double();
            const double u2 = rng.next_double();
            const double mag = std::sqrt(-2.0 * std::log(u1));
            spare = mag * std::sin(2.0 * M_PI * u2);
            has_spare = true;
            return mag * std::cos(2.0 * M_PI * u2);
        };
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            const double scale = std::sqrt(2.0 / dims_[l]);
            double* w = weights_.data() + weight_offset_[l];
            for (int i = 0; i < dims_[l] * dims_[l + 1]; ++i) w[i] = scale * normal();
            double* b = weights_.data() + bias_offset_[l];
            for (int i = 0; i < dims_[l + 1]; ++i) b[i] = 0.0;
        }
    }

    struct Activations {
        std::vector<double> input;
        std::vector<std::vector<double>> post;  // post-activation per layer
    };

    std::vector<double> forward(const std::vector<double>& x, Activations& act) const {
        if (static_cast<int>(x.size()) != input_dim_)
            throw std::invalid_argument("Mlp input dimension mismatch");
        act.input = x;
        act.post.clear();
        std::vector<double> cur = x;
        for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
            std::vector<double> next(dims_[l + 1]);
            const double* w = weights_.data() + weight_offset_[l];
            const double* b = weights_.data() + bias_offset_[l];
            for (int o = 0; o < dims_[l + 1]; ++o) {
                double acc = b[o];
                const double* wrow = w + static_cast<std::size_t>(o) * dims_[l];
                for (int i = 0; i < dims_[l]; ++i) acc += wrow[i] * cur[i];
                next[o] = acc;
            }
            const bool last = (l + 2 == dims_.size());
            if (!last)
                for (double& v : next) v = std::max(v, 0.0);
            act.post.push_back(next);
            cur = std::move(next);
        }
        return act.post.back();
    }

    /// Backprop from dlogits; accumulates weight gradients into wgrad
    /// (same layout as weights()) and writes the input gradient.
    void backward(const Activations& act, const std::vector<double>& dlogits,
                  std::vector<double>& wgrad, std::vector<double>& dinput) const {
        if (wgrad.size() != weights_.size())
            throw std::invalid_argument("wgrad size mismatch");
        std::vector<double> delta = dlogits;
        for (int l = static_cast<int>(dims_.size()) - 2; l >= 0; --l) {
            const std::vector<double>& in =
                (l == 0) ? act.input : act.post[static_cast<std::size_t>(l) - 1];
            const double* w = weights_.data() + weight_offset_[l];
            double* gw = wgrad.data() + weight_offset_[l];
            double* gb = wgrad.data() + bias_offset_[l];
            for (int o = 0; o < dims_[l + 1]; ++o) {
                gb[o] += delta[o];
                double* grow = gw + static_cast<std::size_t>(o) * dims_[l];
                for (int i = 0; i < dims_[l]; ++i) grow[i] += delta[o] * in[i];
            }
            std::vector<double> prev(dims_[l], 0.0);
            for (int o = 0; o < dims_[l + 1]; ++o) {
                const double* wrow = w + static_cast<std::size_t>(o) * dims_[l];
                for (int i = 0; i < dims_[l]; ++i) prev[i] += wrow[i] * delta[o];
            }
            if (l > 0) {
                // ReLU mask of the layer below.
                const std::vector<double>& post = act.post[static_cast<std::size_t>(l) - 1];
                for (int i = 0; i < dims_[l]; ++i)
                    if (post[i] <= 0.0) prev[i] = 0.0;
            }
            delta = std::move(prev);
        }
        dinput = std::move(delta);
    }

    int input_dim() const { return input_dim_; }
    std::vector<double>& weights() { return weights_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    int input_dim_;
    std::vector<int> dims_;
    std::vector<std::size_t> weight_offset_;
    std::vector<std::size_t> bias_offset_;
    std::vector<double> weights_;
};

}  // namespace sensim
