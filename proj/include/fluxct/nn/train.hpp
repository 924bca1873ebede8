#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxct/nn/loss.hpp"
#include "fluxct/nn/network.hpp"

namespace fluxct {

// One supervised example; input and target share shape (1 x s x s).
struct TrainSample {
    Tensor<float> input, target;
};

struct TrainConfig {
    int epochs = 30;
    int batch_size = 8;
    double learning_rate = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    LossKind loss = LossKind::MSE;
    SsimParams ssim = SsimParams::defaults();
    std::uint64_t seed = 0;

    void validate() const;
};

struct AdamState {
    std::uint64_t step = 0;
    GradBuffers<float> m, v;

    static AdamState zeros_like(const Network<float>& net) {
        AdamState s;
        s.m = GradBuffers<float>::zeros_like(net);
        s.v = GradBuffers<float>::zeros_like(net);
        return s;
    }
};

struct EpochRow {
    int epoch = 0;
    double train_loss = 0.0;
    std::optional<double> val_psnr;
    std::optional<double> val_ssim;
};

struct TrainHistory {
    std::vector<EpochRow> rows;
    void write_csv(const std::string& path, std::uint64_t seed,
                   const std::string& config_hash) const;
};

// Adam over seeded-shuffle minibatches. Per-sample gradients land in their
// own buffers and are folded in sample order, so the trained weights are
// byte-identical for any worker count.
TrainHistory train_network(Network<float>& net, AdamState& adam,
                           const std::vector<TrainSample>& train_set,
                           const std::vector<TrainSample>& val_set, const TrainConfig& cfg);

// Forward pass with the output clamped to [0, 1].
Tensor<float> predict_tensor(const Network<float>& net, const Tensor<float>& input);
Image predict(const Network<float>& net, const Image& input);

} // namespace fluxct
