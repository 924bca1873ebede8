#include <cmath>

#include "doctest.h"
#include "fluxct/core/parallel.hpp"
#include "fluxct/nn/network.hpp"
#include "test_util.hpp"

using namespace fluxct;

TEST_CASE("builders produce the frozen parameter counts") {
    CHECK(build_vdsr(20, 64).param_count() == 665921);
    CHECK(build_vdsr(6, 16).param_count() == 9585);
    CHECK(build_unet(32, true).param_count() == 1361761);

    const auto v = build_vdsr(6, 16);
    CHECK(v.topology.find("vdsr") != std::string::npos);
    CHECK(v.nodes.back().kind == LayerKind::Add); // global residual
    v.validate();

    const auto u = build_unet(8, true);
    CHECK(u.topology.find("unet") != std::string::npos);
    CHECK(u.nodes.back().kind == LayerKind::Add);
    u.validate();
    const auto u2 = build_unet(8, false);
    CHECK(u2.nodes.back().kind != LayerKind::Add);
    u2.validate();
}

TEST_CASE("networks preserve spatial shape") {
    auto v = build_vdsr(4, 8);
    he_init(v, 1);
    const auto x = testutil::random_tensor<float>(1, 48, 32, 11);
    const auto y = forward(v, x);
    CHECK(y.channels == 1);
    CHECK(y.height == 48);
    CHECK(y.width == 32);

    auto u = build_unet(8, true);
    he_init(u, 2);
    const auto xu = testutil::random_tensor<float>(1, 64, 64, 12);
    const auto yu = forward(u, xu);
    CHECK(yu.channels == 1);
    CHECK(yu.height == 64);
    CHECK(yu.width == 64);
}

TEST_CASE("unet needs dimensions divisible by eight") {
    auto u = build_unet(8, true);
    he_init(u, 3);
    const auto bad = testutil::random_tensor<float>(1, 36, 36, 13);
    CHECK_THROWS(forward(u, bad));
}

TEST_CASE("maxpool rejects odd spatial dims") {
    auto net = build_unet(8, false);
    he_init(net, 4);
    const auto odd = testutil::random_tensor<float>(1, 33, 32, 14);
    CHECK_THROWS(forward(net, odd));
}

TEST_CASE("zero weights make a residual network the identity") {
    auto v = build_vdsr(5, 12);
    for (auto& node : v.nodes) {
        std::fill(node.weights.begin(), node.weights.end(), 0.0f);
        std::fill(node.bias.begin(), node.bias.end(), 0.0f);
    }
    const auto x = testutil::random_tensor<float>(1, 20, 24, 15);
    const auto y = forward(v, x);
    CHECK(y.data == x.data);
}

TEST_CASE("he_init is seeded and scaled to the fan-in") {
    auto a = build_vdsr(6, 16);
    auto b = build_vdsr(6, 16);
    he_init(a, 42);
    he_init(b, 42);
    for (std::size_t n = 0; n < a.nodes.size(); ++n) {
        CHECK(a.nodes[n].weights == b.nodes[n].weights);
        for (const float bias : a.nodes[n].bias) CHECK(bias == 0.0f);
    }
    he_init(b, 43);
    CHECK(a.nodes[1].weights != b.nodes[1].weights);

    // a middle conv has fan-in 16*3*3; sample std should sit near sqrt(2/144)
    const auto& mid = a.nodes[3];
    REQUIRE(mid.kind == LayerKind::Conv);
    REQUIRE(mid.in_channels == 16);
    double sum = 0.0, sq = 0.0;
    for (const float w : mid.weights) {
        sum += w;
        sq += double(w) * w;
    }
    const double n = double(mid.weights.size());
    const double std = std::sqrt(sq / n - (sum / n) * (sum / n));
    CHECK(std == doctest::Approx(std::sqrt(2.0 / 144.0)).epsilon(0.15));
}

TEST_CASE("forward pass is thread-count invariant") {
    struct Guard {
        ~Guard() { set_thread_count(0); }
    } guard;
    auto u = build_unet(8, true);
    he_init(u, 5);
    const auto x = testutil::random_tensor<float>(1, 32, 32, 16);
    set_thread_count(1);
    const auto y1 = forward(u, x);
    set_thread_count(4);
    const auto y4 = forward(u, x);
    CHECK(y1.data == y4.data);
}

TEST_CASE("maxpool breaks ties toward the first scanned element") {
    Network<float> net;
    Layer<float> in;
    in.kind = LayerKind::Input;
    in.name = "input";
    in.out_channels = 1;
    net.nodes.push_back(in);
    Layer<float> pool;
    pool.kind = LayerKind::MaxPool;
    pool.name = "pool";
    pool.inputs = {0};
    net.nodes.push_back(pool);
    net.validate();

    Tensor<float> x(1, 2, 2);
    std::fill(x.data.begin(), x.data.end(), 0.7f);
    const auto acts = forward_all(net, x);
    CHECK(acts.back().data[0] == 0.7f);

    Tensor<float> dout(1, 1, 1);
    dout.data[0] = 1.0f;
    auto grads = GradBuffers<float>::zeros_like(net);
    Tensor<float> dx;
    backward_all(net, acts, dout, grads, &dx);
    CHECK(dx.data[0] == 1.0f); // row-major first element wins the tie
    CHECK(dx.data[1] == 0.0f);
    CHECK(dx.data[2] == 0.0f);
    CHECK(dx.data[3] == 0.0f);
}

TEST_CASE("concat stacks channels in input order and add sums") {
    Network<float> net;
    Layer<float> in;
    in.kind = LayerKind::Input;
    in.name = "input";
    in.out_channels = 2;
    net.nodes.push_back(in);
    Layer<float> cat;
    cat.kind = LayerKind::Concat;
    cat.name = "cat";
    cat.inputs = {0, 0};
    net.nodes.push_back(cat);
    net.validate();

    const auto x = testutil::random_tensor<float>(2, 3, 3, 17);
    const auto y = forward(net, x);
    CHECK(y.channels == 4);
    for (std::size_t i = 0; i < x.data.size(); ++i) {
        CHECK(y.data[i] == x.data[i]);
        CHECK(y.data[x.data.size() + i] == x.data[i]);
    }

    net.nodes[1].kind = LayerKind::Add;
    net.validate();
    const auto z = forward(net, x);
    CHECK(z.channels == 2);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(z.data[i] == 2.0f * x.data[i]);
}

TEST_CASE("network validation catches malformed graphs") {
    auto v = build_vdsr(3, 8);
    he_init(v, 6);

    auto broken = v;
    broken.nodes[1].in_channels = 7; // lies about its input
    CHECK_THROWS(broken.validate());

    broken = v;
    broken.nodes[1].ksize = 4; // even kernel
    CHECK_THROWS(broken.validate());

    broken = v;
    broken.nodes[2].inputs = {5}; // forward reference
    CHECK_THROWS(broken.validate());

    broken = v;
    broken.nodes[0].kind = LayerKind::ReLU; // node 0 must be the input
    CHECK_THROWS(broken.validate());
}

TEST_CASE("network_cast and same_topology") {
    auto v = build_vdsr(4, 8);
    he_init(v, 7);
    const auto d = network_cast<double>(v);
    CHECK(d.nodes.size() == v.nodes.size());
    CHECK(d.topology == v.topology);
    for (std::size_t n = 0; n < v.nodes.size(); ++n)
        for (std::size_t i = 0; i < v.nodes[n].weights.size(); ++i)
            CHECK(d.nodes[n].weights[i] == double(v.nodes[n].weights[i]));
    CHECK(same_topology(v, d));

    const auto other = build_vdsr(5, 8);
    std::string why;
    CHECK(!same_topology(v, other, &why));
    CHECK(!why.empty());
}
