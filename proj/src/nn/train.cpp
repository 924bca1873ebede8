#include "fluxct/nn/train.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <stdexcept>

#include "fluxct/core/parallel.hpp"
#include "fluxct/core/rng.hpp"
#include "fluxct/metrics/metrics.hpp"

namespace fluxct {

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig: negative epochs");
    if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size < 1");
    if (!(learning_rate > 0.0)) throw std::invalid_argument("TrainConfig: learning_rate <= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw std::invalid_argument("TrainConfig: betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw std::invalid_argument("TrainConfig: epsilon <= 0");
    ssim.validate();
}

void TrainHistory::write_csv(const std::string& path, std::uint64_t seed,
                             const std::string& config_hash) const {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("TrainHistory: cannot open for write: " + path);
    os << "epoch,train_loss,val_psnr,val_ssim,seed,config_hash\n";
    os << std::setprecision(17);
    for (const auto& r : rows) {
        os << r.epoch << ',' << r.train_loss << ',';
        if (r.val_psnr) os << *r.val_psnr;
        os << ',';
        if (r.val_ssim) os << *r.val_ssim;
        os << ',' << seed << ',' << config_hash << '\n';
    }
    if (!os) throw std::runtime_error("TrainHistory: write failed: " + path);
}

namespace {

void adam_step(Network<float>& net, AdamState& adam, const GradBuffers<float>& grad,
               float grad_scale, const TrainConfig& cfg) {
    adam.step += 1;
    const double t = double(adam.step);
    const float b1 = float(cfg.beta1), b2 = float(cfg.beta2);
    const float corr1 = float(1.0 / (1.0 - std::pow(cfg.beta1, t)));
    const float corr2 = float(1.0 / (1.0 - std::pow(cfg.beta2, t)));
    const float lr = float(cfg.learning_rate), eps = float(cfg.epsilon);

    auto update = [&](std::vector<float>& theta, std::vector<float>& m, std::vector<float>& v,
                      const std::vector<float>& g) {
        for (std::size_t e = 0; e < theta.size(); ++e) {
            const float ge = g[e] * grad_scale;
            m[e] = b1 * m[e] + (1.0f - b1) * ge;
            v[e] = b2 * v[e] + (1.0f - b2) * ge * ge;
            const float mhat = m[e] * corr1;
            const float vhat = v[e] * corr2;
            theta[e] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    };
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        auto& L = net.nodes[i];
        if (!L.has_params()) continue;
        update(L.weights, adam.m.w[i], adam.v.w[i], grad.w[i]);
        update(L.bias, adam.m.b[i], adam.v.b[i], grad.b[i]);
    }
}

} // namespace

TrainHistory train_network(Network<float>& net, AdamState& adam,
                           const std::vector<TrainSample>& train_set,
                           const std::vector<TrainSample>& val_set, const TrainConfig& cfg) {
    net.validate();
    cfg.validate();
    if (train_set.empty()) throw std::invalid_argument("train_network: empty training set");
    for (const auto& s : train_set)
        if (!s.input.same_shape(s.target))
            throw std::invalid_argument("train_network: sample input/target shape mismatch");

    const std::size_t n = train_set.size();
    const std::size_t bs = std::size_t(cfg.batch_size);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<GradBuffers<float>> sample_grads(bs);
    for (auto& g : sample_grads) g = GradBuffers<float>::zeros_like(net);
    GradBuffers<float> batch_grad = GradBuffers<float>::zeros_like(net);
    std::vector<double> sample_loss(bs, 0.0);

    TrainHistory history;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        seeded_shuffle(order, cfg.seed, std::uint64_t(epoch));

        double loss_sum = 0.0;
        for (std::size_t start = 0; start < n; start += bs) {
            const std::size_t batch = std::min(bs, n - start);
            parallel_for(batch, [&](std::size_t b) {
                const TrainSample& s = train_set[order[start + b]];
                auto acts = forward_all(net, s.input);
                auto loss = compute_loss(cfg.loss, acts.back(), s.target, cfg.ssim);
                sample_loss[b] = loss.value;
                sample_grads[b].clear();
                backward_all(net, acts, loss.grad, sample_grads[b]);
            });
            batch_grad.clear();
            for (std::size_t b = 0; b < batch; ++b) {
                loss_sum += sample_loss[b];
                batch_grad.add(sample_grads[b]);
            }
            adam_step(net, adam, batch_grad, 1.0f / float(batch), cfg);
        }

        if (!std::isfinite(loss_sum))
            throw std::runtime_error(
                "train_network: non-finite loss at epoch " + std::to_string(epoch) +
                " — training diverged (learning rate too high?)");

        EpochRow row;
        row.epoch = epoch;
        row.train_loss = loss_sum / double(n);
        if (!val_set.empty()) {
            std::vector<double> psnrs(val_set.size()), ssims(val_set.size());
            parallel_for(val_set.size(), [&](std::size_t i) {
                const auto pred = predict_tensor(net, val_set[i].input);
                const Image p = image_from_tensor(pred);
                const Image t = image_from_tensor(val_set[i].target);
                psnrs[i] = psnr(p, t, 1.0);
                ssims[i] = mssim(p, t, cfg.ssim);
            });
            double psnr_sum = 0.0, ssim_sum = 0.0;
            for (std::size_t i = 0; i < val_set.size(); ++i) {
                psnr_sum += psnrs[i];
                ssim_sum += ssims[i];
            }
            row.val_psnr = psnr_sum / double(val_set.size());
            row.val_ssim = ssim_sum / double(val_set.size());
        }
        history.rows.push_back(row);
    }
    return history;
}

Tensor<float> predict_tensor(const Network<float>& net, const Tensor<float>& input) {
    Tensor<float> out = forward(net, input);
    for (float& v : out.data) v = v < 0.0f ? 0.0f : (v > 1.0f ? 1.0f : v);
    return out;
}

Image predict(const Network<float>& net, const Image& input) {
    Image out = image_from_tensor(predict_tensor(net, tensor_from_image<float>(input)));
    out.lo = input.lo;
    out.hi = input.hi;
    return out;
}

} // namespace fluxct
