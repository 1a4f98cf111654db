#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "sensim/grad.hpp"
#include "sensim/layout.hpp"
#include "sensim/mlp.hpp"
#include "sensim/mnist.hpp"
#include "sensim/parallel.hpp"
#include "sensim/radiance.hpp"
#include "sensim/sensor.hpp"

namespace sensim {

struct TrainConfig {
    int epochs = 14;
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 64;
    int layout_freeze_epochs = 0;  // freeze >= epochs reduces to the uniform baseline
    int channels = 3;              // classifier input channels (1 or 3)
    std::uint64_t shuffle_seed = 0;
    std::uint64_t init_seed = 0;
    std::uint64_t sensor_seed = 0;

    void validate() const {
        if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
        if (learning_rate <= 0.0) throw std::invalid_argument("learning rate must be positive");
        if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
        if (channels != 1 && channels != 3) throw std::invalid_argument("channels must be 1 or 3");
    }

    int input_dim(const SensorGrid& grid) const { return channels * grid.pixel_count(); }
};

namespace detail {

inline SourceImage dataset_image(const Dataset& ds, int i) {
    SourceImage img(ds.width, ds.height, 1);
    const float* src = ds.image(i);
    for (std::size_t p = 0; p < img.data.size(); ++p) img.data[p] = src[p];
    return img;
}

inline std::vector<double> flatten_pixels(const SensorImage& image, int channels) {
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(channels) * image.pixels.size());
    for (const Vec3& px : image.pixels) {
        x.push_back(px.r);
        if (channels == 3) {
            x.push_back(px.g);
            x.push_back(px.b);
        }
    }
    return x;
}

inline std::vector<Vec3> unflatten_cotangent(const std::vector<double>& dx, int channels,
                                             int pixel_count) {
    std::vector<Vec3> up(pixel_count);
    for (int k = 0; k < pixel_count; ++k) {
        if (channels == 3)
            up[k] = {dx[3 * k], dx[3 * k + 1], dx[3 * k + 2]};
        else
            up[k] = {dx[k], 0.0, 0.0};
    }
    return up;
}

}  // namespace detail

struct BatchGradients {
    double loss = 0.0;
    int correct = 0;
    std::vector<double> wgrad;
    Vec2 dtheta_raw{};
};

/// Mean cross-entropy over a batch plus its gradients with respect to both
/// the classifier weights and theta_raw. The theta path runs through the
/// per-item boundary-flux backward pass; the classifier's input gradient
/// supplies the dLoss/dI_k cotangents. Deterministic for fixed inputs,
/// independent of thread count.
inline BatchGradients batch_loss_and_grad(const Dataset& ds, const std::vector<int>& indices,
                                          const SensorGrid& grid, const LayoutParams& params,
                                          const Mlp& mlp, const TrainConfig& tcfg,
                                          const SamplingConfig& scfg, unsigned threads = 1,
                                          bool need_theta_grad = true) {
    const int batch = static_cast<int>(indices.size());
    if (batch == 0) throw std::invalid_argument("empty batch");
    BatchGradients out;
    out.wgrad.assign(mlp.weights().size(), 0.0);

    std::vector<SensorImage> images(batch);
    std::vector<ForwardCache> caches(batch);
    parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t b) {
        const ImageField field(detail::dataset_image(ds, indices[b]));
        images[b] = simulate(field, grid, params, scfg, &caches[b]);
    });

    // Classifier pass is cheap; run it serially for a deterministic
    // reduction of the shared weight-gradient accumulator.
    const double inv_batch = 1.0 / batch;
    std::vector<std::vector<Vec3>> upstreams(batch);
    for (int b = 0; b < batch; ++b) {
        Mlp::Activations act;
        const std::vector<double> x = detail::flatten_pixels(images[b], tcfg.channels);
        const std::vector<double> logits = mlp.forward(x, act);
        const int label = ds.labels[indices[b]];
        std::vector<double> dlogits;
        out.loss += inv_batch * cross_entropy(logits, label, dlogits);
        const int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                                          logits.begin());
        if (pred == label) ++out.correct;
        for (double& d : dlogits) d *= inv_batch;
        std::vector<double> dinput;
        mlp.backward(act, dlogits, out.wgrad, dinput);
        if (need_theta_grad)
            upstreams[b] = detail::unflatten_cotangent(dinput, tcfg.channels, grid.pixel_count());
    }

    if (need_theta_grad && !params.is_identity()) {
        std::vector<Vec2> item_grads(batch);
        parallel_for(static_cast<std::size_t>(batch), threads, [&](std::size_t b) {
            const ImageField field(detail::dataset_image(ds, indices[b]));
            const GradientRecord rec = backward(images[b], upstreams[b], field, params, scfg,
                                                caches[b]);
            item_grads[b] = rec.dloss_dtheta_raw;
        });
        for (const Vec2& g : item_grads) out.dtheta_raw += g;
    }
    return out;
}

/// Classification accuracy of (theta, weights) over a dataset split.
/// Evaluation uses one fixed sensor seed, so it is deterministic and
/// independent of item ordering.
inline double evaluate(const Dataset& ds, const SensorGrid& grid, const LayoutParams& params,
                       const Mlp& mlp, const TrainConfig& tcfg, const SamplingConfig& scfg,
                       unsigned threads = 1) {
    std::vector<int> correct(ds.count, 0);
    parallel_for(static_cast<std::size_t>(ds.count), threads, [&](std::size_t i) {
        const ImageField field(detail::dataset_image(ds, static_cast<int>(i)));
        const SensorImage image = simulate(field, grid, params, scfg);
        Mlp::Activations act;
        const std::vector<double> logits =
            mlp.forward(detail::flatten_pixels(image, tcfg.channels), act);
        const int pred = static_cast<int>(std::max_element(logits.begin(), logits.end()) -
                                          logits.begin());
        correct[i] = (pred == ds.labels[i]) ? 1 : 0;
    });
    return std::accumulate(correct.begin(), correct.end(), 0) / static_cast<double>(ds.count);
}

struct TrainResult {
    LayoutParams params;
    Mlp mlp;
    std::vector<double> epoch_loss;
    std::vector<double> test_accuracy;
};

/// Joint optimization of classifier weights and theta_raw with Adam.
/// Training draws a fresh sensor sampling seed per step; the layout is
/// frozen for the first layout_freeze_epochs epochs (or entirely when the
/// kind is Identity).
inline TrainResult train_joint(const Dataset& train_ds, const Dataset& test_ds,
                               const SensorGrid& grid, LayoutKind kind,
                               const TrainConfig& tcfg, const SamplingConfig& scfg,
                               unsigned threads = 1) {
    tcfg.validate();
    scfg.validate();
    LayoutParams params(kind, {0.0, 0.0});
    Mlp mlp(tcfg.input_dim(grid));
    mlp.init(tcfg.init_seed);
    Adam opt_net(mlp.weights().size(), tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);
    Adam opt_theta(2, tcfg.learning_rate, tcfg.beta1, tcfg.beta2, tcfg.adam_eps);

    SamplingConfig eval_cfg = scfg;  // fixed seed for evaluation
    TrainResult result{params, mlp, {}, {}};
    long step = 0;
    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const bool frozen = epoch < tcfg.layout_freeze_epochs || kind == LayoutKind::Identity;
        std::vector<int> order(train_ds.count);
        std::iota(order.begin(), order.end(), 0);
        Rng shuffle_rng = Rng::keyed(tcfg.shuffle_seed, 0x53687566ull, epoch);
        for (int i = train_ds.count - 1; i > 0; --i)
            std::swap(order[i], order[shuffle_rng.next_u64() % (i + 1)]);

        double epoch_loss = 0.0;
        int batches = 0;
        for (int start = 0; start + tcfg.batch_size <= train_ds.count; start += tcfg.batch_size) {
            const std::vector<int> indices(order.begin() + start,
                                           order.begin() + start + tcfg.batch_size);
            SamplingConfig step_cfg = scfg;
            step_cfg.rng_seed = Rng::mix(scfg.rng_seed, static_cast<std::uint64_t>(step));
            const BatchGradients grads =
                batch_loss_and_grad(train_ds, indices, grid, params, mlp, tcfg, step_cfg,
                                    threads, !frozen);
            opt_net.step(mlp.weights(), grads.wgrad);
            if (!frozen) {
                std::vector<double> raw = {params.theta_raw().x, params.theta_raw().y};
                opt_theta.step(raw, {grads.dtheta_raw.x, grads.dtheta_raw.y});
                params = params.with_theta_raw({raw[0], raw[1]});
            }
            epoch_loss += grads.loss;
            ++batches;
            ++step;
        }
        result.epoch_loss.push_back(epoch_loss / std::max(batches, 1));
        result.test_accuracy.push_back(
            evaluate(test_ds, grid, params, mlp, tcfg, eval_cfg, threads));
    }
    result.params = params;
    result.mlp = mlp;
    return result;
}

}  // namespace sensim
