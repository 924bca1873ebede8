#pragma once

// Finite-difference gradient certification machinery. Networks are built in
// double precision so the central-difference quotient at h = 1e-5 resolves
// the analytic gradient to well below the acceptance threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "fluxct/core/rng.hpp"
#include "fluxct/nn/loss.hpp"
#include "fluxct/nn/network.hpp"

namespace testgrad {

using fluxct::GradBuffers;
using fluxct::Layer;
using fluxct::LayerKind;
using fluxct::LossKind;
using fluxct::Network;
using fluxct::SsimParams;
using fluxct::Tensor;

inline std::vector<double> random_params(std::size_t n, std::uint64_t seed, double scale) {
    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) v[i] = scale * fluxct::rng::normal(seed, i, 0);
    return v;
}

inline Network<double> make_input_net(int channels) {
    Network<double> net;
    Layer<double> in;
    in.kind = LayerKind::Input;
    in.name = "input";
    in.out_channels = channels;
    net.nodes.push_back(std::move(in));
    return net;
}

inline int add_conv(Network<double>& net, int src, int in_c, int out_c, int k,
                    std::uint64_t seed) {
    Layer<double> L;
    L.kind = LayerKind::Conv;
    L.name = "conv" + std::to_string(net.nodes.size());
    L.in_channels = in_c;
    L.out_channels = out_c;
    L.ksize = k;
    L.inputs = {src};
    L.weights = random_params(std::size_t(out_c) * in_c * k * k, seed, 0.4);
    L.bias = random_params(std::size_t(out_c), seed + 1, 0.1);
    net.nodes.push_back(std::move(L));
    return int(net.nodes.size()) - 1;
}

inline int add_tconv(Network<double>& net, int src, int in_c, int out_c, std::uint64_t seed) {
    Layer<double> L;
    L.kind = LayerKind::TConv;
    L.name = "tconv" + std::to_string(net.nodes.size());
    L.in_channels = in_c;
    L.out_channels = out_c;
    L.ksize = 2;
    L.inputs = {src};
    L.weights = random_params(std::size_t(in_c) * out_c * 4, seed, 0.4);
    L.bias = random_params(std::size_t(out_c), seed + 1, 0.1);
    net.nodes.push_back(std::move(L));
    return int(net.nodes.size()) - 1;
}

inline int add_plain(Network<double>& net, LayerKind kind, std::vector<int> srcs) {
    Layer<double> L;
    L.kind = kind;
    L.name = "node" + std::to_string(net.nodes.size());
    L.inputs = std::move(srcs);
    net.nodes.push_back(std::move(L));
    return int(net.nodes.size()) - 1;
}

struct CheckResult {
    double max_rel = 0.0;
    std::size_t n_checked = 0;
};

inline double loss_value(const Network<double>& net, const Tensor<double>& x,
                         const Tensor<double>& target, LossKind kind, const SsimParams& sp) {
    const Tensor<double> y = fluxct::forward(net, x);
    return fluxct::compute_loss(kind, y, target, sp).value;
}

// Checks every parameter of every node plus every input element against a
// central difference of the end-to-end loss.
inline CheckResult check_network(Network<double>& net, const Tensor<double>& x,
                                 const Tensor<double>& target, LossKind kind,
                                 const SsimParams& sp, double h = 1e-5) {
    net.validate();
    const auto acts = fluxct::forward_all(net, x);
    const auto res = fluxct::compute_loss(kind, acts.back(), target, sp);
    auto grads = GradBuffers<double>::zeros_like(net);
    Tensor<double> dinput;
    fluxct::backward_all(net, acts, res.grad, grads, &dinput);

    CheckResult out;
    const auto accum = [&](double analytic, double fd) {
        const double rel = std::abs(analytic - fd) /
                           std::max({std::abs(analytic), std::abs(fd), 1e-5});
        out.max_rel = std::max(out.max_rel, rel);
        ++out.n_checked;
    };
    const auto probe = [&](std::vector<double>& vec, const std::vector<double>& g) {
        for (std::size_t i = 0; i < vec.size(); ++i) {
            const double keep = vec[i];
            vec[i] = keep + h;
            const double lp = loss_value(net, x, target, kind, sp);
            vec[i] = keep - h;
            const double lm = loss_value(net, x, target, kind, sp);
            vec[i] = keep;
            accum(g[i], (lp - lm) / (2.0 * h));
        }
    };
    for (std::size_t n = 0; n < net.nodes.size(); ++n) {
        probe(net.nodes[n].weights, grads.w[n]);
        probe(net.nodes[n].bias, grads.b[n]);
    }

    Tensor<double> xp = x;
    for (std::size_t i = 0; i < xp.data.size(); ++i) {
        const double keep = xp.data[i];
        xp.data[i] = keep + h;
        const double lp = loss_value(net, xp, target, kind, sp);
        xp.data[i] = keep - h;
        const double lm = loss_value(net, xp, target, kind, sp);
        xp.data[i] = keep;
        accum(dinput.data[i], (lp - lm) / (2.0 * h));
    }
    return out;
}

// Checks an analytic loss gradient directly against finite differences of
// the loss value (no network involved).
inline CheckResult check_loss(const Tensor<double>& pred, const Tensor<double>& target,
                              LossKind kind, const SsimParams& sp, double h = 1e-5) {
    const auto res = fluxct::compute_loss(kind, pred, target, sp);
    Tensor<double> p = pred;
    CheckResult out;
    for (std::size_t i = 0; i < p.data.size(); ++i) {
        const double keep = p.data[i];
        p.data[i] = keep + h;
        const double lp = fluxct::compute_loss(kind, p, target, sp).value;
        p.data[i] = keep - h;
        const double lm = fluxct::compute_loss(kind, p, target, sp).value;
        p.data[i] = keep;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(res.grad.data[i] - fd) /
                           std::max({std::abs(res.grad.data[i]), std::abs(fd), 1e-5});
        out.max_rel = std::max(out.max_rel, rel);
        ++out.n_checked;
    }
    return out;
}

} // namespace testgrad
