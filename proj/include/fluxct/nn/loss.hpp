#pragma once

#include <stdexcept>

#include "fluxct/metrics/ssim.hpp"
#include "fluxct/nn/tensor.hpp"

namespace fluxct {

enum class LossKind { MSE, SSIM };

template <typename T>
struct LossResult {
    double value = 0.0;
    Tensor<T> grad; // d(loss)/d(prediction)
};

// L = mean((pred - target)^2), dL/dpred = 2 (pred - target) / N.
template <typename T>
LossResult<T> mse_loss(const Tensor<T>& pred, const Tensor<T>& target) {
    if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss: shape mismatch");
    LossResult<T> out;
    out.grad = Tensor<T>(pred.channels, pred.height, pred.width);
    const double n = double(pred.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = double(pred.data[i]) - double(target.data[i]);
        acc += d * d;
        out.grad.data[i] = T(2.0 / n) * (pred.data[i] - target.data[i]);
    }
    out.value = acc / n;
    return out;
}

// L = 1 - mean SSIM map of (pred, target); the gradient flows through the
// windowed means, variances and covariance, boundaries included.
template <typename T>
LossResult<T> ssim_loss(const Tensor<T>& pred, const Tensor<T>& target,
                        const SsimParams& params) {
    if (!pred.same_shape(target)) throw std::invalid_argument("ssim_loss: shape mismatch");
    if (pred.channels != 1) throw std::invalid_argument("ssim_loss: need 1 channel");
    const int h = pred.height, w = pred.width;
    const auto fields = ssim_fields<T>(h, w, pred.data.data(), target.data.data(), params);
    double mean = 0.0;
    for (T v : fields.map) mean += double(v);
    mean /= double(fields.map.size());

    LossResult<T> out;
    out.value = 1.0 - mean;
    out.grad = Tensor<T>(1, h, w);
    out.grad.data = ssim_loss_grad<T>(h, w, pred.data.data(), target.data.data(), fields, params);
    return out;
}

template <typename T>
LossResult<T> compute_loss(LossKind kind, const Tensor<T>& pred, const Tensor<T>& target,
                           const SsimParams& params) {
    return kind == LossKind::MSE ? mse_loss(pred, target) : ssim_loss(pred, target, params);
}

} // namespace fluxct
