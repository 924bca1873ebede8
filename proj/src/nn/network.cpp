#include "fluxct/nn/network.hpp"

#include <cmath>

#include "fluxct/core/rng.hpp"

namespace fluxct {

namespace {

int add_node(Network<float>& net, Layer<float> L) {
    net.nodes.push_back(std::move(L));
    return int(net.nodes.size()) - 1;
}

int add_input(Network<float>& net, int channels) {
    Layer<float> L;
    L.kind = LayerKind::Input;
    L.name = "input";
    L.out_channels = channels;
    return add_node(net, std::move(L));
}

int add_conv(Network<float>& net, const std::string& name, int from, int in_ch, int out_ch,
             int ksize) {
    Layer<float> L;
    L.kind = LayerKind::Conv;
    L.name = name;
    L.in_channels = in_ch;
    L.out_channels = out_ch;
    L.ksize = ksize;
    L.inputs = {from};
    L.weights.assign(std::size_t(out_ch) * in_ch * ksize * ksize, 0.0f);
    L.bias.assign(std::size_t(out_ch), 0.0f);
    return add_node(net, std::move(L));
}

int add_tconv(Network<float>& net, const std::string& name, int from, int in_ch, int out_ch) {
    Layer<float> L;
    L.kind = LayerKind::TConv;
    L.name = name;
    L.in_channels = in_ch;
    L.out_channels = out_ch;
    L.ksize = 2;
    L.inputs = {from};
    L.weights.assign(std::size_t(in_ch) * out_ch * 4, 0.0f);
    L.bias.assign(std::size_t(out_ch), 0.0f);
    return add_node(net, std::move(L));
}

int add_relu(Network<float>& net, const std::string& name, int from) {
    Layer<float> L;
    L.kind = LayerKind::ReLU;
    L.name = name;
    L.inputs = {from};
    return add_node(net, std::move(L));
}

int add_pool(Network<float>& net, const std::string& name, int from) {
    Layer<float> L;
    L.kind = LayerKind::MaxPool;
    L.name = name;
    L.inputs = {from};
    return add_node(net, std::move(L));
}

int add_concat(Network<float>& net, const std::string& name, std::vector<int> from) {
    Layer<float> L;
    L.kind = LayerKind::Concat;
    L.name = name;
    L.inputs = std::move(from);
    return add_node(net, std::move(L));
}

int add_add(Network<float>& net, const std::string& name, std::vector<int> from) {
    Layer<float> L;
    L.kind = LayerKind::Add;
    L.name = name;
    L.inputs = std::move(from);
    return add_node(net, std::move(L));
}

// conv + ReLU pair; returns the ReLU node.
int conv_relu(Network<float>& net, const std::string& name, int from, int in_ch, int out_ch) {
    const int c = add_conv(net, name, from, in_ch, out_ch, 3);
    return add_relu(net, name + "_relu", c);
}

} // namespace

Network<float> build_vdsr(int depth, int width) {
    if (depth < 2) throw std::invalid_argument("build_vdsr: depth must be at least 2");
    if (width < 1) throw std::invalid_argument("build_vdsr: width must be at least 1");
    Network<float> net;
    net.topology = "vdsr d=" + std::to_string(depth) + " w=" + std::to_string(width);
    const int input = add_input(net, 1);
    int cur = conv_relu(net, "conv1", input, 1, width);
    for (int d = 2; d < depth; ++d)
        cur = conv_relu(net, "conv" + std::to_string(d), cur, width, width);
    cur = add_conv(net, "conv" + std::to_string(depth), cur, width, 1, 3);
    add_add(net, "residual", {cur, input});
    net.validate();
    return net;
}

Network<float> build_unet(int base_width, bool global_residual) {
    if (base_width < 1) throw std::invalid_argument("build_unet: base width must be at least 1");
    const int w1 = base_width, w2 = 2 * base_width, w3 = 4 * base_width;
    Network<float> net;
    net.topology = "unet w=" + std::to_string(base_width) +
                   (global_residual ? " residual" : " plain");
    const int input = add_input(net, 1);

    int e1 = conv_relu(net, "enc1_conv1", input, 1, w1);
    e1 = conv_relu(net, "enc1_conv2", e1, w1, w1);
    e1 = conv_relu(net, "enc1_conv3", e1, w1, w1);
    const int p1 = add_pool(net, "pool1", e1);

    int e2 = conv_relu(net, "enc2_conv1", p1, w1, w2);
    e2 = conv_relu(net, "enc2_conv2", e2, w2, w2);
    e2 = conv_relu(net, "enc2_conv3", e2, w2, w2);
    const int p2 = add_pool(net, "pool2", e2);

    int e3 = conv_relu(net, "enc3_conv1", p2, w2, w3);
    e3 = conv_relu(net, "enc3_conv2", e3, w3, w3);
    e3 = conv_relu(net, "enc3_conv3", e3, w3, w3);
    const int p3 = add_pool(net, "pool3", e3);

    const int u1 = add_tconv(net, "up1", p3, w3, w3);
    int d1 = add_concat(net, "skip1", {u1, e3});
    d1 = conv_relu(net, "dec1_conv1", d1, 2 * w3, w3);
    d1 = conv_relu(net, "dec1_conv2", d1, w3, w3);
    d1 = conv_relu(net, "dec1_conv3", d1, w3, w3);

    const int u2 = add_tconv(net, "up2", d1, w3, w2);
    int d2 = add_concat(net, "skip2", {u2, e2});
    d2 = conv_relu(net, "dec2_conv1", d2, 2 * w2, w2);
    d2 = conv_relu(net, "dec2_conv2", d2, w2, w2);
    d2 = conv_relu(net, "dec2_conv3", d2, w2, w2);

    const int u3 = add_tconv(net, "up3", d2, w2, w1);
    int d3 = add_concat(net, "skip3", {u3, e1});
    d3 = conv_relu(net, "dec3_conv1", d3, 2 * w1, w1);
    d3 = conv_relu(net, "dec3_conv2", d3, w1, w1);
    d3 = conv_relu(net, "dec3_conv3", d3, w1, w1);

    const int out = add_conv(net, "final", d3, w1, 1, 1);
    if (global_residual) add_add(net, "residual", {out, input});
    net.validate();
    return net;
}

void he_init(Network<float>& net, std::uint64_t seed) {
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        auto& L = net.nodes[i];
        if (!L.has_params()) continue;
        const double fan_in = double(L.in_channels) * L.ksize * L.ksize;
        const double std_dev = std::sqrt(2.0 / fan_in);
        for (std::size_t e = 0; e < L.weights.size(); ++e)
            L.weights[e] = float(std_dev * rng::normal(seed, i, e));
        std::fill(L.bias.begin(), L.bias.end(), 0.0f);
    }
}

} // namespace fluxct
