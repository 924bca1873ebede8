#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxct/nn/tensor.hpp"

namespace fluxct {

// Numeric tags are part of the NNWT weight-file format; do not reorder.
enum class LayerKind : std::uint8_t {
    Input = 0,
    Conv = 1,     // k x k, stride 1, zero same-padding
    TConv = 2,    // 2 x 2, stride 2 upsampling
    ReLU = 3,
    MaxPool = 4,  // 2 x 2, stride 2, first-scan-index tie break
    Concat = 5,   // channel concatenation in input order
    Add = 6,      // elementwise sum
};

// One node of the network graph. Parameters live inline; `inputs` are indices
// of earlier nodes. Weight layouts:
//   Conv:  weights[((oc*in + ic)*k + di)*k + dj], bias[oc]
//   TConv: weights[((ic*out + oc)*2 + di)*2 + dj], bias[oc]
template <typename T>
struct Layer {
    LayerKind kind = LayerKind::Input;
    std::string name;
    int in_channels = 0;
    int out_channels = 0;
    int ksize = 0;
    std::vector<int> inputs;
    std::vector<T> weights;
    std::vector<T> bias;

    bool has_params() const { return kind == LayerKind::Conv || kind == LayerKind::TConv; }
};

template <typename T>
struct Network {
    std::vector<Layer<T>> nodes; // topological order; nodes.back() is the output
    std::string topology;        // human-readable tag, e.g. "vdsr d=6 w=16"

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& L : nodes) n += L.weights.size() + L.bias.size();
        return n;
    }

    void validate() const;
};

// Per-node parameter gradients, laid out to mirror Layer::weights/bias.
template <typename T>
struct GradBuffers {
    std::vector<std::vector<T>> w, b;

    static GradBuffers zeros_like(const Network<T>& net) {
        GradBuffers g;
        g.w.reserve(net.nodes.size());
        g.b.reserve(net.nodes.size());
        for (const auto& L : net.nodes) {
            g.w.emplace_back(L.weights.size(), T(0));
            g.b.emplace_back(L.bias.size(), T(0));
        }
        return g;
    }

    void clear() {
        for (auto& v : w) std::fill(v.begin(), v.end(), T(0));
        for (auto& v : b) std::fill(v.begin(), v.end(), T(0));
    }

    void add(const GradBuffers& o) {
        for (std::size_t n = 0; n < w.size(); ++n) {
            for (std::size_t i = 0; i < w[n].size(); ++i) w[n][i] += o.w[n][i];
            for (std::size_t i = 0; i < b[n].size(); ++i) b[n][i] += o.b[n][i];
        }
    }
};

namespace nn_detail {

template <typename T>
void conv_forward(const Layer<T>& L, const Tensor<T>& x, Tensor<T>& y) {
    const int k = L.ksize, pad = k / 2, h = x.height, w = x.width;
    y = Tensor<T>(L.out_channels, h, w);
    for (int oc = 0; oc < L.out_channels; ++oc) {
        T* yp = y.channel(oc);
        std::fill(yp, yp + y.plane(), L.bias[std::size_t(oc)]);
        for (int ic = 0; ic < L.in_channels; ++ic) {
            const T* xp = x.channel(ic);
            const T* wp = L.weights.data() + (std::size_t(oc) * L.in_channels + ic) * k * k;
            for (int di = 0; di < k; ++di) {
                const int i_lo = std::max(0, pad - di), i_hi = std::min(h, h + pad - di);
                for (int dj = 0; dj < k; ++dj) {
                    const T wv = wp[di * k + dj];
                    const int j_lo = std::max(0, pad - dj), j_hi = std::min(w, w + pad - dj);
                    const int run = j_hi - j_lo;
                    for (int i = i_lo; i < i_hi; ++i) {
                        const T* xr = xp + std::size_t(i + di - pad) * w + (j_lo + dj - pad);
                        T* yr = yp + std::size_t(i) * w + j_lo;
                        for (int j = 0; j < run; ++j) yr[j] += wv * xr[j];
                    }
                }
            }
        }
    }
}

template <typename T>
void conv_backward(const Layer<T>& L, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx,
                   std::vector<T>& dw, std::vector<T>& db) {
    const int k = L.ksize, pad = k / 2, h = x.height, w = x.width;
    for (int oc = 0; oc < L.out_channels; ++oc) {
        const T* dyp = dy.channel(oc);
        T acc = T(0);
        for (std::size_t i = 0; i < dy.plane(); ++i) acc += dyp[i];
        db[std::size_t(oc)] += acc;
        for (int ic = 0; ic < L.in_channels; ++ic) {
            const T* xp = x.channel(ic);
            T* dxp = dx.channel(ic);
            const std::size_t wbase = (std::size_t(oc) * L.in_channels + ic) * k * k;
            for (int di = 0; di < k; ++di) {
                const int i_lo = std::max(0, pad - di), i_hi = std::min(h, h + pad - di);
                const int a_lo = std::max(0, di - pad), a_hi = std::min(h, h + di - pad);
                for (int dj = 0; dj < k; ++dj) {
                    const int j_lo = std::max(0, pad - dj), j_hi = std::min(w, w + pad - dj);
                    const int run = j_hi - j_lo;
                    // weight gradient: correlate dy with the shifted input
                    T wacc = T(0);
                    for (int i = i_lo; i < i_hi; ++i) {
                        const T* xr = xp + std::size_t(i + di - pad) * w + (j_lo + dj - pad);
                        const T* dyr = dyp + std::size_t(i) * w + j_lo;
                        for (int j = 0; j < run; ++j) wacc += dyr[j] * xr[j];
                    }
                    dw[wbase + std::size_t(di) * k + dj] += wacc;
                    // input gradient: scatter dy through the flipped kernel
                    const T wv = L.weights[wbase + std::size_t(di) * k + dj];
                    const int b_lo = std::max(0, dj - pad);
                    const int b_hi = std::min(w, w + dj - pad);
                    const int brun = b_hi - b_lo;
                    for (int a = a_lo; a < a_hi; ++a) {
                        T* dxr = dxp + std::size_t(a) * w + b_lo;
                        const T* dyr = dyp + std::size_t(a - di + pad) * w + (b_lo - dj + pad);
                        for (int j = 0; j < brun; ++j) dxr[j] += wv * dyr[j];
                    }
                }
            }
        }
    }
}

template <typename T>
void tconv_forward(const Layer<T>& L, const Tensor<T>& x, Tensor<T>& y) {
    const int h = x.height, w = x.width;
    y = Tensor<T>(L.out_channels, 2 * h, 2 * w);
    for (int oc = 0; oc < L.out_channels; ++oc) {
        T* yp = y.channel(oc);
        std::fill(yp, yp + y.plane(), L.bias[std::size_t(oc)]);
    }
    for (int ic = 0; ic < L.in_channels; ++ic) {
        const T* xp = x.channel(ic);
        for (int oc = 0; oc < L.out_channels; ++oc) {
            T* yp = y.channel(oc);
            const T* wp = L.weights.data() + (std::size_t(ic) * L.out_channels + oc) * 4;
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj) {
                    const T wv = wp[di * 2 + dj];
                    for (int i = 0; i < h; ++i) {
                        const T* xr = xp + std::size_t(i) * w;
                        T* yr = yp + std::size_t(2 * i + di) * (2 * w) + dj;
                        for (int j = 0; j < w; ++j) yr[2 * j] += wv * xr[j];
                    }
                }
        }
    }
}

template <typename T>
void tconv_backward(const Layer<T>& L, const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx,
                    std::vector<T>& dw, std::vector<T>& db) {
    const int h = x.height, w = x.width;
    for (int oc = 0; oc < L.out_channels; ++oc) {
        const T* dyp = dy.channel(oc);
        T acc = T(0);
        for (std::size_t i = 0; i < dy.plane(); ++i) acc += dyp[i];
        db[std::size_t(oc)] += acc;
    }
    for (int ic = 0; ic < L.in_channels; ++ic) {
        const T* xp = x.channel(ic);
        T* dxp = dx.channel(ic);
        for (int oc = 0; oc < L.out_channels; ++oc) {
            const T* dyp = dy.channel(oc);
            const std::size_t wbase = (std::size_t(ic) * L.out_channels + oc) * 4;
            for (int di = 0; di < 2; ++di)
                for (int dj = 0; dj < 2; ++dj) {
                    const T wv = L.weights[wbase + std::size_t(di) * 2 + dj];
                    T wacc = T(0);
                    for (int i = 0; i < h; ++i) {
                        const T* xr = xp + std::size_t(i) * w;
                        T* dxr = dxp + std::size_t(i) * w;
                        const T* dyr = dyp + std::size_t(2 * i + di) * (2 * w) + dj;
                        for (int j = 0; j < w; ++j) {
                            const T g = dyr[2 * j];
                            dxr[j] += wv * g;
                            wacc += xr[j] * g;
                        }
                    }
                    dw[wbase + std::size_t(di) * 2 + dj] += wacc;
                }
        }
    }
}

template <typename T>
void maxpool_forward(const Tensor<T>& x, Tensor<T>& y) {
    if (x.height % 2 != 0 || x.width % 2 != 0)
        throw std::invalid_argument("maxpool: spatial dims must be even, got " +
                                    std::to_string(x.height) + "x" + std::to_string(x.width));
    y = Tensor<T>(x.channels, x.height / 2, x.width / 2);
    for (int c = 0; c < x.channels; ++c) {
        const T* xp = x.channel(c);
        T* yp = y.channel(c);
        for (int i = 0; i < y.height; ++i)
            for (int j = 0; j < y.width; ++j) {
                const T* r0 = xp + std::size_t(2 * i) * x.width + 2 * j;
                const T* r1 = r0 + x.width;
                T v = r0[0];
                if (r0[1] > v) v = r0[1];
                if (r1[0] > v) v = r1[0];
                if (r1[1] > v) v = r1[1];
                yp[std::size_t(i) * y.width + j] = v;
            }
    }
}

template <typename T>
void maxpool_backward(const Tensor<T>& x, const Tensor<T>& dy, Tensor<T>& dx) {
    for (int c = 0; c < x.channels; ++c) {
        const T* xp = x.channel(c);
        T* dxp = dx.channel(c);
        const T* dyp = dy.channel(c);
        for (int i = 0; i < dy.height; ++i)
            for (int j = 0; j < dy.width; ++j) {
                const std::size_t o00 = std::size_t(2 * i) * x.width + 2 * j;
                const std::size_t o01 = o00 + 1, o10 = o00 + x.width, o11 = o10 + 1;
                std::size_t arg = o00;
                T v = xp[o00];
                if (xp[o01] > v) { v = xp[o01]; arg = o01; }
                if (xp[o10] > v) { v = xp[o10]; arg = o10; }
                if (xp[o11] > v) { v = xp[o11]; arg = o11; }
                dxp[arg] += dyp[std::size_t(i) * dy.width + j];
            }
    }
}

} // namespace nn_detail

template <typename T>
void Network<T>::validate() const {
    if (nodes.empty()) throw std::invalid_argument("Network: empty");
    if (nodes[0].kind != LayerKind::Input || !nodes[0].inputs.empty())
        throw std::invalid_argument("Network: node 0 must be the input");
    std::vector<int> ch(nodes.size(), 0);
    ch[0] = nodes[0].out_channels;
    if (ch[0] <= 0) throw std::invalid_argument("Network: input channels not set");
    for (std::size_t i = 1; i < nodes.size(); ++i) {
        const auto& L = nodes[i];
        for (int in : L.inputs)
            if (in < 0 || std::size_t(in) >= i)
                throw std::invalid_argument("Network: node '" + L.name +
                                            "' input is not an earlier node");
        auto one_input = [&] {
            if (L.inputs.size() != 1)
                throw std::invalid_argument("Network: node '" + L.name + "' needs one input");
        };
        switch (L.kind) {
        case LayerKind::Input:
            throw std::invalid_argument("Network: interior input node");
        case LayerKind::Conv:
            one_input();
            if (L.ksize < 1 || L.ksize % 2 == 0)
                throw std::invalid_argument("Network: conv kernel must be odd");
            if (L.in_channels != ch[std::size_t(L.inputs[0])])
                throw std::invalid_argument("Network: conv '" + L.name + "' channel mismatch");
            if (L.weights.size() !=
                    std::size_t(L.out_channels) * L.in_channels * L.ksize * L.ksize ||
                L.bias.size() != std::size_t(L.out_channels))
                throw std::invalid_argument("Network: conv '" + L.name + "' bad param size");
            ch[i] = L.out_channels;
            break;
        case LayerKind::TConv:
            one_input();
            if (L.in_channels != ch[std::size_t(L.inputs[0])])
                throw std::invalid_argument("Network: tconv '" + L.name + "' channel mismatch");
            if (L.weights.size() != std::size_t(L.in_channels) * L.out_channels * 4 ||
                L.bias.size() != std::size_t(L.out_channels))
                throw std::invalid_argument("Network: tconv '" + L.name + "' bad param size");
            ch[i] = L.out_channels;
            break;
        case LayerKind::ReLU:
        case LayerKind::MaxPool:
            one_input();
            ch[i] = ch[std::size_t(L.inputs[0])];
            break;
        case LayerKind::Concat: {
            if (L.inputs.size() < 2)
                throw std::invalid_argument("Network: concat needs two or more inputs");
            int total = 0;
            for (int in : L.inputs) total += ch[std::size_t(in)];
            ch[i] = total;
            break;
        }
        case LayerKind::Add:
            if (L.inputs.size() < 2)
                throw std::invalid_argument("Network: add needs two or more inputs");
            for (int in : L.inputs)
                if (ch[std::size_t(in)] != ch[std::size_t(L.inputs[0])])
                    throw std::invalid_argument("Network: add '" + L.name + "' channel mismatch");
            ch[i] = ch[std::size_t(L.inputs[0])];
            break;
        }
    }
}

// Evaluates every node; the returned vector is indexed by node.
template <typename T>
std::vector<Tensor<T>> forward_all(const Network<T>& net, const Tensor<T>& input) {
    using namespace nn_detail;
    if (input.channels != net.nodes[0].out_channels)
        throw std::invalid_argument("forward: input channel count mismatch");
    std::vector<Tensor<T>> acts(net.nodes.size());
    acts[0] = input;
    for (std::size_t i = 1; i < net.nodes.size(); ++i) {
        const auto& L = net.nodes[i];
        switch (L.kind) {
        case LayerKind::Conv:
            conv_forward(L, acts[std::size_t(L.inputs[0])], acts[i]);
            break;
        case LayerKind::TConv:
            tconv_forward(L, acts[std::size_t(L.inputs[0])], acts[i]);
            break;
        case LayerKind::ReLU: {
            const auto& x = acts[std::size_t(L.inputs[0])];
            acts[i] = Tensor<T>(x.channels, x.height, x.width);
            for (std::size_t p = 0; p < x.size(); ++p)
                acts[i].data[p] = x.data[p] > T(0) ? x.data[p] : T(0);
            break;
        }
        case LayerKind::MaxPool:
            maxpool_forward(acts[std::size_t(L.inputs[0])], acts[i]);
            break;
        case LayerKind::Concat: {
            const auto& first = acts[std::size_t(L.inputs[0])];
            int total = 0;
            for (int in : L.inputs) {
                const auto& x = acts[std::size_t(in)];
                if (x.height != first.height || x.width != first.width)
                    throw std::invalid_argument("concat: spatial dims mismatch at '" + L.name +
                                                "'");
                total += x.channels;
            }
            acts[i] = Tensor<T>(total, first.height, first.width);
            std::size_t off = 0;
            for (int in : L.inputs) {
                const auto& x = acts[std::size_t(in)];
                std::copy(x.data.begin(), x.data.end(), acts[i].data.begin() + long(off));
                off += x.size();
            }
            break;
        }
        case LayerKind::Add: {
            const auto& first = acts[std::size_t(L.inputs[0])];
            acts[i] = first;
            for (std::size_t k = 1; k < L.inputs.size(); ++k) {
                const auto& x = acts[std::size_t(L.inputs[k])];
                if (!x.same_shape(first))
                    throw std::invalid_argument("add: shape mismatch at '" + L.name + "'");
                for (std::size_t p = 0; p < x.size(); ++p) acts[i].data[p] += x.data[p];
            }
            break;
        }
        case LayerKind::Input:
            throw std::logic_error("forward: interior input node");
        }
    }
    return acts;
}

template <typename T>
Tensor<T> forward(const Network<T>& net, const Tensor<T>& input) {
    auto acts = forward_all(net, input);
    return std::move(acts.back());
}

// Backpropagates d(loss)/d(output); parameter gradients are ACCUMULATED into
// `grads` (callers zero them first). If dinput is non-null it receives
// d(loss)/d(input).
template <typename T>
void backward_all(const Network<T>& net, const std::vector<Tensor<T>>& acts,
                  const Tensor<T>& dout, GradBuffers<T>& grads, Tensor<T>* dinput = nullptr) {
    using namespace nn_detail;
    std::vector<Tensor<T>> dacts(net.nodes.size());
    for (std::size_t i = 0; i < net.nodes.size(); ++i)
        dacts[i] = Tensor<T>(acts[i].channels, acts[i].height, acts[i].width);
    if (!dout.same_shape(acts.back()))
        throw std::invalid_argument("backward: output gradient shape mismatch");
    dacts.back() = dout;

    for (std::size_t i = net.nodes.size(); i-- > 1;) {
        const auto& L = net.nodes[i];
        const auto& dy = dacts[i];
        switch (L.kind) {
        case LayerKind::Conv:
            conv_backward(L, acts[std::size_t(L.inputs[0])], dy, dacts[std::size_t(L.inputs[0])],
                          grads.w[i], grads.b[i]);
            break;
        case LayerKind::TConv:
            tconv_backward(L, acts[std::size_t(L.inputs[0])], dy, dacts[std::size_t(L.inputs[0])],
                           grads.w[i], grads.b[i]);
            break;
        case LayerKind::ReLU: {
            const auto& x = acts[std::size_t(L.inputs[0])];
            auto& dx = dacts[std::size_t(L.inputs[0])];
            for (std::size_t p = 0; p < x.size(); ++p)
                if (x.data[p] > T(0)) dx.data[p] += dy.data[p];
            break;
        }
        case LayerKind::MaxPool:
            maxpool_backward(acts[std::size_t(L.inputs[0])], dy, dacts[std::size_t(L.inputs[0])]);
            break;
        case LayerKind::Concat: {
            std::size_t off = 0;
            for (int in : L.inputs) {
                auto& dx = dacts[std::size_t(in)];
                for (std::size_t p = 0; p < dx.size(); ++p) dx.data[p] += dy.data[off + p];
                off += dx.size();
            }
            break;
        }
        case LayerKind::Add:
            for (int in : L.inputs) {
                auto& dx = dacts[std::size_t(in)];
                for (std::size_t p = 0; p < dx.size(); ++p) dx.data[p] += dy.data[p];
            }
            break;
        case LayerKind::Input:
            break;
        }
    }
    if (dinput) *dinput = std::move(dacts[0]);
}

template <typename To, typename From>
Network<To> network_cast(const Network<From>& src) {
    Network<To> dst;
    dst.topology = src.topology;
    dst.nodes.reserve(src.nodes.size());
    for (const auto& L : src.nodes) {
        Layer<To> n;
        n.kind = L.kind;
        n.name = L.name;
        n.in_channels = L.in_channels;
        n.out_channels = L.out_channels;
        n.ksize = L.ksize;
        n.inputs = L.inputs;
        n.weights.assign(L.weights.begin(), L.weights.end());
        n.bias.assign(L.bias.begin(), L.bias.end());
        dst.nodes.push_back(std::move(n));
    }
    return dst;
}

// Residual-learning stack: depth convs (3x3, width channels), ReLU after all
// but the last, plus a global input-to-output skip connection.
Network<float> build_vdsr(int depth, int width);

// Three-level encoder/decoder with skip concatenations; channel widths are
// (w, 2w, 4w). Input spatial dims must be divisible by 8. When
// global_residual is set the input is added to the final 1x1 conv output.
Network<float> build_unet(int base_width, bool global_residual);

// Draws He-normal weights (std = sqrt(2 / fan_in)) and zero biases,
// deterministically from the seed.
void he_init(Network<float>& net, std::uint64_t seed);

// True when the two graphs agree in structure (kinds, wiring, shapes);
// `why` receives a description of the first difference.
template <typename A, typename B>
bool same_topology(const Network<A>& a, const Network<B>& b, std::string* why = nullptr) {
    auto fail = [&](const std::string& msg) {
        if (why) *why = msg;
        return false;
    };
    if (a.nodes.size() != b.nodes.size())
        return fail("node count " + std::to_string(a.nodes.size()) + " vs " +
                    std::to_string(b.nodes.size()));
    for (std::size_t i = 0; i < a.nodes.size(); ++i) {
        const auto& x = a.nodes[i];
        const auto& y = b.nodes[i];
        if (x.kind != y.kind || x.in_channels != y.in_channels ||
            x.out_channels != y.out_channels || x.ksize != y.ksize || x.inputs != y.inputs)
            return fail("node " + std::to_string(i) + " ('" + x.name + "' vs '" + y.name +
                        "') differs: " + std::to_string(x.in_channels) + "->" +
                        std::to_string(x.out_channels) + " k" + std::to_string(x.ksize) +
                        " vs " + std::to_string(y.in_channels) + "->" +
                        std::to_string(y.out_channels) + " k" + std::to_string(y.ksize));
    }
    return true;
}

} // namespace fluxct
