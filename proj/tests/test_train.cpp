#include <cmath>
#include <fstream>
#include <limits>

#include "doctest.h"
#include "fluxct/core/parallel.hpp"
#include "fluxct/nn/nnwt.hpp"
#include "fluxct/nn/train.hpp"
#include "test_util.hpp"

using namespace fluxct;

namespace {

// Noisy-input / clean-target pairs around a smooth ramp field.
std::vector<TrainSample> make_samples(int count, int size, std::uint64_t seed) {
    std::vector<TrainSample> out;
    for (int s = 0; s < count; ++s) {
        TrainSample ts;
        ts.target = Tensor<float>(1, size, size);
        ts.input = Tensor<float>(1, size, size);
        for (int i = 0; i < size; ++i)
            for (int j = 0; j < size; ++j) {
                const float clean = 0.2f + 0.6f * float(i + j) / float(2 * size);
                const auto key = std::uint64_t(s) * size * size + std::uint64_t(i) * size + j;
                ts.target.data[std::size_t(i) * size + j] = clean;
                ts.input.data[std::size_t(i) * size + j] =
                    clean + 0.1f * float(rng::normal(seed, key, 0));
            }
        out.push_back(std::move(ts));
    }
    return out;
}

} // namespace

TEST_CASE("training drives the loss down and logs every epoch") {
    auto net = build_vdsr(3, 8);
    he_init(net, 1);
    auto adam = AdamState::zeros_like(net);
    const auto train_set = make_samples(6, 16, 10);
    const auto val_set = make_samples(2, 16, 11);

    TrainConfig cfg;
    cfg.epochs = 30;
    cfg.batch_size = 4;
    cfg.learning_rate = 1e-3;
    cfg.seed = 5;
    const auto hist = train_network(net, adam, train_set, val_set, cfg);

    REQUIRE(hist.rows.size() == 30);
    CHECK(hist.rows.front().epoch == 1);
    CHECK(hist.rows.back().epoch == 30);
    CHECK(hist.rows.back().train_loss < 0.3 * hist.rows.front().train_loss);
    for (const auto& row : hist.rows) {
        REQUIRE(row.val_psnr.has_value());
        REQUIRE(row.val_ssim.has_value());
        CHECK(std::isfinite(*row.val_psnr));
        CHECK(*row.val_ssim <= 1.0);
    }
    CHECK(adam.step > 0);
}

TEST_CASE("training is deterministic and thread-count invariant") {
    struct Guard {
        ~Guard() { set_thread_count(0); }
    } guard;
    const auto train_set = make_samples(5, 12, 20);
    const auto val_set = make_samples(1, 12, 21);
    TrainConfig cfg;
    cfg.epochs = 3;
    cfg.batch_size = 2;
    cfg.learning_rate = 5e-4;
    cfg.seed = 9;

    const auto run = [&](unsigned threads, std::uint64_t init_seed) {
        set_thread_count(threads);
        auto net = build_vdsr(3, 8);
        he_init(net, init_seed);
        auto adam = AdamState::zeros_like(net);
        train_network(net, adam, train_set, val_set, cfg);
        return net;
    };
    const auto a = run(1, 7);
    const auto b = run(4, 7);
    for (std::size_t n = 0; n < a.nodes.size(); ++n) {
        CHECK(a.nodes[n].weights == b.nodes[n].weights);
        CHECK(a.nodes[n].bias == b.nodes[n].bias);
    }
    const auto c = run(1, 8); // different init, different result
    CHECK(a.nodes[1].weights != c.nodes[1].weights);
}

TEST_CASE("divergent training aborts with a diagnosis") {
    auto net = build_vdsr(3, 8);
    he_init(net, 2);
    auto adam = AdamState::zeros_like(net);
    const auto train_set = make_samples(2, 12, 30);
    TrainConfig cfg;
    cfg.epochs = 50;
    cfg.batch_size = 1;
    cfg.learning_rate = 1e18;
    cfg.seed = 1;
    CHECK_THROWS_WITH_AS(train_network(net, adam, train_set, {}, cfg),
                         doctest::Contains("learning rate"), std::runtime_error);
}

TEST_CASE("history csv serializes infinities and gaps verbatim") {
    testutil::TempDir tmp("hist");
    TrainHistory h;
    h.rows.push_back({1, 0.5, std::numeric_limits<double>::infinity(), 1.0});
    h.rows.push_back({2, 0.25, std::nullopt, std::nullopt});
    const auto path = (tmp.path / "h.csv").string();
    h.write_csv(path, 3, "beef");

    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "epoch,train_loss,val_psnr,val_ssim,seed,config_hash");
    std::getline(in, line);
    CHECK(line == "1,0.5,inf,1,3,beef");
    std::getline(in, line);
    CHECK(line == "2,0.25,,,3,beef");
}

TEST_CASE("predict clamps to the unit interval") {
    auto net = build_vdsr(3, 8);
    for (auto& node : net.nodes) {
        std::fill(node.weights.begin(), node.weights.end(), 0.0f);
        std::fill(node.bias.begin(), node.bias.end(), 5.0f); // drive outputs far above 1
    }
    const Image img = testutil::random_image(16, 16, 40);
    const Image out = predict(net, img);
    for (const float v : out.data) {
        CHECK(v >= 0.0f);
        CHECK(v <= 1.0f);
    }
    float mx = 0.0f;
    for (const float v : out.data) mx = std::max(mx, v);
    CHECK(mx == 1.0f);
}

TEST_CASE("nnwt round-trips weights and optimizer state bit-exactly") {
    testutil::TempDir tmp("nnwt");
    auto net = build_vdsr(3, 8);
    he_init(net, 77);
    auto adam = AdamState::zeros_like(net);
    const auto train_set = make_samples(2, 12, 50);
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 1;
    cfg.learning_rate = 1e-4;
    cfg.seed = 4;
    train_network(net, adam, train_set, {}, cfg);

    const auto p1 = (tmp.path / "a.nnwt").string();
    const auto p2 = (tmp.path / "b.nnwt").string();
    write_nnwt(p1, net, &adam);
    write_nnwt(p2, net, &adam);
    CHECK(testutil::same_bytes(p1, p2));

    const auto loaded = read_nnwt(p1);
    CHECK(loaded.net.topology == net.topology);
    REQUIRE(loaded.net.nodes.size() == net.nodes.size());
    for (std::size_t n = 0; n < net.nodes.size(); ++n) {
        CHECK(loaded.net.nodes[n].weights == net.nodes[n].weights);
        CHECK(loaded.net.nodes[n].bias == net.nodes[n].bias);
        CHECK(loaded.net.nodes[n].kind == net.nodes[n].kind);
    }
    REQUIRE(loaded.adam.has_value());
    CHECK(loaded.adam->step == adam.step);
    CHECK(loaded.adam->m.w == adam.m.w);
    CHECK(loaded.adam->v.w == adam.v.w);

    // and the reload writes the same bytes again
    write_nnwt(p2, loaded.net, &*loaded.adam);
    CHECK(testutil::same_bytes(p1, p2));

    // without the trailer the moments are absent
    write_nnwt(p2, net, nullptr);
    CHECK(!read_nnwt(p2).adam.has_value());
}

TEST_CASE("warm_start rejects a topology mismatch") {
    testutil::TempDir tmp("warm");
    auto donor = build_vdsr(4, 8);
    he_init(donor, 1);
    const auto path = (tmp.path / "donor.nnwt").string();
    write_nnwt(path, donor);

    auto same = build_vdsr(4, 8);
    he_init(same, 2);
    warm_start(same, path);
    for (std::size_t n = 0; n < donor.nodes.size(); ++n)
        CHECK(same.nodes[n].weights == donor.nodes[n].weights);

    auto other = build_vdsr(3, 8);
    he_init(other, 2);
    CHECK_THROWS(warm_start(other, path));

    auto unet = build_unet(8, true);
    he_init(unet, 2);
    CHECK_THROWS(warm_start(unet, path));
}

TEST_CASE("train config validates") {
    TrainConfig cfg;
    cfg.batch_size = 0;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS(cfg.validate());
    cfg = TrainConfig{};
    cfg.beta1 = 1.0;
    CHECK_THROWS(cfg.validate());
}
