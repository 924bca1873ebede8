#include "fluxct/pipeline/experiments.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <stdexcept>
#include <string_view>

#include "fluxct/core/image_io.hpp"
#include "fluxct/core/rng.hpp"
#include "fluxct/metrics/metrics.hpp"
#include "fluxct/nn/nnwt.hpp"
#include "fluxct/nn/train.hpp"
#include "fluxct/phantom/phantom.hpp"
#include "fluxct/recon/recon.hpp"
#include "fluxct/tomo/exposure.hpp"
#include "fluxct/tomo/projector.hpp"
#include "fluxct/tomo/sinogram.hpp"

namespace fluxct {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// output lock

OutputLock::OutputLock(const std::string& out_dir) {
    fs::create_directories(out_dir);
    path_ = (fs::path(out_dir) / ".fluxct.lock").string();
    int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd < 0) {
        if (errno == EEXIST)
            throw std::runtime_error("output directory '" + out_dir +
                                     "' is locked by another run (found " + path_ +
                                     "); remove the lock file if that run is dead");
        throw std::runtime_error("cannot create lock file " + path_);
    }
    std::string pid = std::to_string(::getpid()) + "\n";
    ssize_t ignored = ::write(fd, pid.data(), pid.size());
    (void)ignored;
    ::close(fd);
}

OutputLock::~OutputLock() { ::unlink(path_.c_str()); }

// ---------------------------------------------------------------------------
// shared helpers

namespace {

std::ofstream open_csv(const fs::path& path, const std::string& header) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << '\n';
    out << std::setprecision(17);
    return out;
}

std::string tile_id(size_t image_index, size_t tile_index) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "img%03zu_t%02zu", image_index, tile_index);
    return buf;
}

struct SimulatedImage {
    Image truth;  // raw phantom densities
    Sinogram atten_low;
    Sinogram atten_high;
    Image recon_low;  // raw reconstruction, not yet normalized
    Image recon_high;
};

// Phantom densities are unitless in [0,1]; attenuation_scale converts them
// to attenuation per pixel of path before projection, and reconstructions
// are divided back so they sit in density units next to the truth.
Image scale_image(const Image& img, double s) {
    Image out = img;
    for (float& v : out.data) v = float(double(v) * s);
    return out;
}

struct ScannedTile {
    Sinogram atten_low;
    Sinogram atten_high;
    Image recon_low;
    Image recon_high;
};

ScannedTile scan_at_two_exposures(const ExperimentConfig& cfg, const Image& truth,
                                  const Geometry& geom, std::uint64_t seed_low,
                                  std::uint64_t seed_high) {
    ScannedTile out;
    Sinogram clean = forward_project(scale_image(truth, cfg.attenuation_scale), geom);
    ExposureModel low = cfg.exposure_model(cfg.exposure_low, seed_low);
    ExposureModel high = cfg.exposure_model(cfg.exposure_high, seed_high);
    out.atten_low = counts_to_attenuation(apply_exposure(clean, low), low);
    out.atten_high = counts_to_attenuation(apply_exposure(clean, high), high);
    out.recon_low =
        scale_image(reconstruct(out.atten_low, cfg.recon), 1.0 / cfg.attenuation_scale);
    out.recon_high =
        scale_image(reconstruct(out.atten_high, cfg.recon), 1.0 / cfg.attenuation_scale);
    return out;
}

SimulatedImage simulate_image(const ExperimentConfig& cfg, RockPhantomSpec spec,
                              const Geometry& geom, std::uint64_t seed_low,
                              std::uint64_t seed_high) {
    SimulatedImage out;
    out.truth = rock_phantom(spec);
    ScannedTile scan = scan_at_two_exposures(cfg, out.truth, geom, seed_low, seed_high);
    out.atten_low = std::move(scan.atten_low);
    out.atten_high = std::move(scan.atten_high);
    out.recon_low = std::move(scan.recon_low);
    out.recon_high = std::move(scan.recon_high);
    return out;
}

std::vector<SimulatedImage> simulate_family_raw(const ExperimentConfig& cfg,
                                                const PhantomFamily& family,
                                                std::uint64_t family_seed) {
    Geometry geom = Geometry::parallel(cfg.views, cfg.detectors, family.spec.size,
                                       cfg.detector_spacing);
    std::vector<SimulatedImage> out;
    out.reserve(family.count);
    for (int i = 0; i < family.count; ++i) {
        RockPhantomSpec spec = family.spec;
        spec.seed = rng::hash(family_seed, 0, std::uint64_t(i));
        out.push_back(simulate_image(cfg, spec, geom,
                                     rng::hash(family_seed, 1, std::uint64_t(i)),
                                     rng::hash(family_seed, 2, std::uint64_t(i))));
    }
    return out;
}

// Shared normalization: percentiles are pooled over the high-exposure
// reconstructions only, then the same affine map is applied to truth, low
// and high so the three stay photometrically comparable.
std::vector<GeneratedTriple> normalize_family(const ExperimentConfig& cfg,
                                              const std::vector<SimulatedImage>& sims) {
    std::vector<Image> high_pool;
    high_pool.reserve(sims.size());
    for (const auto& s : sims) high_pool.push_back(s.recon_high);
    double lo = pooled_percentile(high_pool, cfg.norm_lo_pct);
    double hi = pooled_percentile(high_pool, cfg.norm_hi_pct);
    if (!(hi > lo))
        throw std::runtime_error("normalization collapsed: percentile window is empty");

    std::vector<GeneratedTriple> out;
    out.reserve(sims.size());
    for (const auto& s : sims) {
        GeneratedTriple t;
        t.porosity = porosity(s.truth);
        // Noise level in reconstruction units, before any clamping.
        t.flat_std_low = flat_region_std(s.recon_low, s.truth);
        t.flat_std_high = flat_region_std(s.recon_high, s.truth);
        t.truth = normalize(s.truth, lo, hi);
        t.low = normalize(s.recon_low, lo, hi);
        t.high = normalize(s.recon_high, lo, hi);
        out.push_back(std::move(t));
    }
    return out;
}

PairedDataset split_dataset(const LoadedDataset& ds, double train_fraction,
                            std::uint64_t split_seed) {
    return pair_dataset(ds.low, ds.high, ds.truth, train_fraction, split_seed);
}

// Training samples map the low-exposure tile to its high-exposure sibling.
std::vector<TrainSample> to_train_samples(const std::vector<TileTriple>& tiles) {
    std::vector<TrainSample> out;
    out.reserve(tiles.size());
    for (const auto& t : tiles) out.push_back({t.low, t.high});
    return out;
}

// Validation scores predictions against ground truth.
std::vector<TrainSample> to_val_samples(const std::vector<TileTriple>& tiles) {
    std::vector<TrainSample> out;
    out.reserve(tiles.size());
    for (const auto& t : tiles) out.push_back({t.low, t.truth});
    return out;
}

std::vector<TrainSample> patch_samples(const PairedDataset& split,
                                       const ExperimentConfig& cfg,
                                       std::uint64_t patch_seed) {
    std::vector<TrainSample> out;
    for (size_t idx : split.train_indices) {
        const ImagePair& p = split.pairs[idx];
        auto patches = extract_patches(p.low, p.high, cfg.patch, cfg.patches_per_image,
                                       rng::hash(patch_seed, 0, idx));
        for (auto& [lo, hi] : patches) {
            Tensor<float> tl(1, lo.size, lo.size), th(1, hi.size, hi.size);
            tl.data = lo.data;
            th.data = hi.data;
            out.push_back({std::move(tl), std::move(th)});
        }
    }
    return out;
}

struct TileMetrics {
    double psnr_before = 0, psnr_after = 0, ssim_before = 0, ssim_after = 0;
};

TileMetrics score_tile(const Network<float>& net, const TileTriple& t) {
    Tensor<float> pred = predict_tensor(net, t.low);
    Image truth_img = image_from_tensor(t.truth);
    Image low_img = image_from_tensor(t.low);
    Image pred_img = image_from_tensor(pred);
    TileMetrics m;
    m.psnr_before = psnr(low_img, truth_img);
    m.psnr_after = psnr(pred_img, truth_img);
    m.ssim_before = mssim(low_img, truth_img);
    m.ssim_after = mssim(pred_img, truth_img);
    return m;
}

struct MeanMetrics {
    double psnr_before = 0, psnr_after = 0, ssim_before = 0, ssim_after = 0;
    size_t n = 0;
    void add(const TileMetrics& m) {
        psnr_before += m.psnr_before;
        psnr_after += m.psnr_after;
        ssim_before += m.ssim_before;
        ssim_after += m.ssim_after;
        ++n;
    }
    void finish() {
        if (n == 0) return;
        psnr_before /= double(n);
        psnr_after /= double(n);
        ssim_before /= double(n);
        ssim_after /= double(n);
    }
};

void cap_tiles(std::vector<TileTriple>& tiles, int cap) {
    if (cap > 0 && tiles.size() > size_t(cap)) tiles.resize(size_t(cap));
}

std::string sino_name(const char* prefix, size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "sino_%s_%03zu.sinf", prefix, i);
    return buf;
}

std::uint64_t sub_seed(const ExperimentConfig& cfg, std::string_view name) {
    return derive_seed(cfg.seed, name);
}

}  // namespace

// ---------------------------------------------------------------------------
// public helpers

std::vector<GeneratedTriple> simulate_family(const ExperimentConfig& cfg,
                                             const PhantomFamily& family,
                                             std::uint64_t family_seed) {
    return normalize_family(cfg, simulate_family_raw(cfg, family, family_seed));
}

std::vector<TileTriple> cut_tiles(const std::vector<Image>& low,
                                  const std::vector<Image>& high,
                                  const std::vector<Image>& truth,
                                  const std::vector<std::size_t>& indices, int tile_px) {
    std::vector<TileTriple> out;
    for (size_t idx : indices) {
        auto lt = tile(low[idx], tile_px);
        auto ht = tile(high[idx], tile_px);
        auto tt = tile(truth[idx], tile_px);
        for (size_t k = 0; k < lt.size(); ++k) {
            TileTriple t;
            t.low = tensor_from_image<float>(lt[k].image);
            t.high = tensor_from_image<float>(ht[k].image);
            t.truth = tensor_from_image<float>(tt[k].image);
            t.id = tile_id(idx, k);
            out.push_back(std::move(t));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// generate

void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir) {
    OutputLock lock(out_dir);
    fs::path dataset_dir = fs::path(out_dir) / "dataset";

    auto sims = simulate_family_raw(cfg, cfg.phantom, sub_seed(cfg, "phantom-a"));
    auto triples = normalize_family(cfg, sims);
    save_dataset(dataset_dir.string(), triples, cfg.seed, cfg.config_hash);

    for (size_t i = 0; i < sims.size(); ++i) {
        write_sinf((dataset_dir / sino_name("low", i)).string(), sims[i].atten_low);
        write_sinf((dataset_dir / sino_name("high", i)).string(), sims[i].atten_high);
    }
    // Eyeball previews for the first sample.
    write_pgm16(dataset_dir / "preview_truth.pgm", triples[0].truth);
    write_pgm16(dataset_dir / "preview_low.pgm", triples[0].low);
    write_pgm16(dataset_dir / "preview_high.pgm", triples[0].high);

    std::cout << "generate: wrote " << triples.size() << " image triples to "
              << dataset_dir.string() << "\n";
}

// ---------------------------------------------------------------------------
// train

void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir) {
    OutputLock lock(out_dir);
    fs::path dataset_dir = fs::path(out_dir) / "dataset";
    if (!fs::exists(dataset_dir / "manifest.csv"))
        throw std::runtime_error("train: no dataset under " + out_dir +
                                 " — run `generate` into the same output directory first");
    LoadedDataset ds = load_dataset(dataset_dir.string());
    PairedDataset split = split_dataset(ds, cfg.train_fraction, sub_seed(cfg, "split"));

    std::vector<TrainSample> train_set;
    if (cfg.sample_mode == SampleMode::Tiles) {
        train_set = to_train_samples(
            cut_tiles(ds.low, ds.high, ds.truth, split.train_indices, cfg.tile));
    } else {
        train_set = patch_samples(split, cfg, sub_seed(cfg, "patches"));
    }
    auto val_tiles = cut_tiles(ds.low, ds.high, ds.truth, split.test_indices, cfg.tile);
    cap_tiles(val_tiles, cfg.max_test_tiles);
    auto val_set = to_val_samples(val_tiles);

    Network<float> net = cfg.build_network();
    he_init(net, sub_seed(cfg, "init"));
    if (!cfg.warm_start.empty()) warm_start(net, cfg.warm_start);

    TrainConfig tc = cfg.train;
    tc.seed = sub_seed(cfg, "train");
    AdamState adam = AdamState::zeros_like(net);
    TrainHistory history = train_network(net, adam, train_set, val_set, tc);

    history.write_csv((fs::path(out_dir) / "history.csv").string(), cfg.seed,
                      cfg.config_hash);
    write_nnwt((fs::path(out_dir) / "model.nnwt").string(), net, &adam);

    std::cout << "train: " << train_set.size() << " samples, " << tc.epochs
              << " epochs -> " << (fs::path(out_dir) / "model.nnwt").string() << "\n";
}

// ---------------------------------------------------------------------------
// eval

void cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir,
              const std::string& weights_path) {
    OutputLock lock(out_dir);
    fs::path dataset_dir = fs::path(out_dir) / "dataset";
    std::string weights =
        weights_path.empty() ? (fs::path(out_dir) / "model.nnwt").string() : weights_path;

    LoadedDataset ds = load_dataset(dataset_dir.string());
    PairedDataset split = split_dataset(ds, cfg.train_fraction, sub_seed(cfg, "split"));
    auto tiles = cut_tiles(ds.low, ds.high, ds.truth, split.test_indices, cfg.tile);
    cap_tiles(tiles, cfg.max_test_tiles);
    if (tiles.empty()) throw std::runtime_error("eval: test split has no tiles");

    Network<float> net = read_nnwt(weights).net;

    fs::path eval_dir = fs::path(out_dir) / "eval";
    auto csv = open_csv(eval_dir / "metrics.csv",
                        "image_id,psnr_before,psnr_after,ssim_before,ssim_after,"
                        "seed,config_hash");
    MeanMetrics mean;
    for (const auto& t : tiles) {
        TileMetrics m = score_tile(net, t);
        csv << t.id << ',' << m.psnr_before << ',' << m.psnr_after << ',' << m.ssim_before
            << ',' << m.ssim_after << ',' << cfg.seed << ',' << cfg.config_hash << '\n';
        mean.add(m);

        Tensor<float> pred = predict_tensor(net, t.low);
        write_imgf(eval_dir / ("denoised_" + t.id + ".imgf"), image_from_tensor(pred));
    }
    mean.finish();

    auto summary = open_csv(eval_dir / "summary.csv",
                            "n_tiles,mean_psnr_before,mean_psnr_after,mean_ssim_before,"
                            "mean_ssim_after,seed,config_hash");
    summary << mean.n << ',' << mean.psnr_before << ',' << mean.psnr_after << ','
            << mean.ssim_before << ',' << mean.ssim_after << ',' << cfg.seed << ','
            << cfg.config_hash << '\n';

    write_pgm16(eval_dir / "preview_input.pgm", image_from_tensor(tiles[0].low));
    write_pgm16(eval_dir / "preview_denoised.pgm",
                image_from_tensor(predict_tensor(net, tiles[0].low)));
    write_pgm16(eval_dir / "preview_truth.pgm", image_from_tensor(tiles[0].truth));

    std::cout << "eval: " << mean.n << " test tiles, mean PSNR " << mean.psnr_before
              << " -> " << mean.psnr_after << " dB, mean SSIM " << mean.ssim_before
              << " -> " << mean.ssim_after << "\n";
}

// ---------------------------------------------------------------------------
// transfer study

void cmd_transfer_study(const ExperimentConfig& cfg, const std::string& out_dir) {
    if (!cfg.phantom_b)
        throw std::runtime_error(
            "transfer-study: config needs a [phantom_b] section for the second family");
    OutputLock lock(out_dir);
    fs::path dir = fs::path(out_dir) / "transfer";
    fs::create_directories(dir);

    auto fam_a = simulate_family(cfg, cfg.phantom, sub_seed(cfg, "phantom-a"));
    auto fam_b = simulate_family(cfg, *cfg.phantom_b, sub_seed(cfg, "phantom-b"));

    // Pretrain on every tile of family A.
    std::vector<Image> a_low, a_high, a_truth;
    for (auto& t : fam_a) {
        a_low.push_back(std::move(t.low));
        a_high.push_back(std::move(t.high));
        a_truth.push_back(std::move(t.truth));
    }
    std::vector<std::size_t> all_a(a_low.size());
    for (size_t i = 0; i < all_a.size(); ++i) all_a[i] = i;
    auto pretrain_set = to_train_samples(cut_tiles(a_low, a_high, a_truth, all_a, cfg.tile));

    Network<float> pre_net = cfg.build_network();
    he_init(pre_net, sub_seed(cfg, "transfer-init"));
    TrainConfig pre_tc = cfg.train;
    pre_tc.epochs = cfg.pretrain_epochs;
    pre_tc.seed = sub_seed(cfg, "transfer-pretrain");
    AdamState pre_adam = AdamState::zeros_like(pre_net);
    train_network(pre_net, pre_adam, pretrain_set, {}, pre_tc);
    std::string pretrain_path = (dir / "pretrain.nnwt").string();
    write_nnwt(pretrain_path, pre_net);
    std::cout << "transfer-study: pretrained on " << pretrain_set.size()
              << " tiles of family A\n";

    // Family B: deterministic split into a training pool and a test set.
    std::vector<Image> b_low, b_high, b_truth;
    for (auto& t : fam_b) {
        b_low.push_back(std::move(t.low));
        b_high.push_back(std::move(t.high));
        b_truth.push_back(std::move(t.truth));
    }
    LoadedDataset b_ds{std::move(b_truth), std::move(b_low), std::move(b_high)};
    PairedDataset split =
        split_dataset(b_ds, cfg.train_fraction, sub_seed(cfg, "transfer-split"));
    auto test_tiles = cut_tiles(b_ds.low, b_ds.high, b_ds.truth, split.test_indices, cfg.tile);
    cap_tiles(test_tiles, cfg.max_test_tiles);
    if (split.train_indices.size() < size_t(cfg.transfer_grid.back()))
        throw std::runtime_error(
            "transfer-study: training pool has " +
            std::to_string(split.train_indices.size()) + " images but the grid asks for " +
            std::to_string(cfg.transfer_grid.back()));
    if (test_tiles.empty()) throw std::runtime_error("transfer-study: empty test set");
    auto val_set = to_val_samples(test_tiles);

    auto curve = open_csv(dir / "transfer_curve.csv",
                          "n_train,arm,mean_psnr,mean_ssim,seed,config_hash");
    auto hist = open_csv(dir / "transfer_history.csv",
                         "n_train,arm,epoch,train_loss,val_psnr,val_ssim,seed,config_hash");

    std::uint64_t train_seed_base = sub_seed(cfg, "transfer-train");
    for (int n : cfg.transfer_grid) {
        // The grid counts whole training images; each image contributes all its tiles.
        std::vector<std::size_t> first_n(split.train_indices.begin(),
                                         split.train_indices.begin() + n);
        auto train_set =
            to_train_samples(cut_tiles(b_ds.low, b_ds.high, b_ds.truth, first_n, cfg.tile));

        for (int arm = 0; arm < 2; ++arm) {
            const char* arm_name = arm == 0 ? "scratch" : "warm";
            Network<float> net = cfg.build_network();
            he_init(net, sub_seed(cfg, "transfer-arm-init"));
            if (arm == 1) warm_start(net, pretrain_path);

            TrainConfig tc = cfg.train;
            tc.seed = rng::hash(train_seed_base, std::uint64_t(arm), std::uint64_t(n));
            AdamState adam = AdamState::zeros_like(net);
            TrainHistory history = train_network(net, adam, train_set, val_set, tc);

            for (const auto& row : history.rows) {
                hist << n << ',' << arm_name << ',' << row.epoch << ',' << row.train_loss
                     << ',' << (row.val_psnr ? *row.val_psnr : 0.0) << ','
                     << (row.val_ssim ? *row.val_ssim : 0.0) << ',' << cfg.seed << ','
                     << cfg.config_hash << '\n';
            }
            MeanMetrics mean;
            for (const auto& t : test_tiles) mean.add(score_tile(net, t));
            mean.finish();
            curve << n << ',' << arm_name << ',' << mean.psnr_after << ','
                  << mean.ssim_after << ',' << cfg.seed << ',' << cfg.config_hash << '\n';
            std::cout << "transfer-study: n=" << n << " " << arm_name << " mean SSIM "
                      << mean.ssim_after << "\n";
        }
    }
}

// ---------------------------------------------------------------------------
// loss study

namespace {

void write_histogram(std::ofstream& csv, const char* metric, const char* arm,
                     const std::vector<double>& values, double lo, double hi, int bins,
                     std::uint64_t seed, const std::string& hash) {
    std::vector<size_t> counts(bins, 0);
    double w = (hi - lo) / bins;
    for (double v : values) {
        int b = int(std::floor((v - lo) / w));
        b = std::max(0, std::min(bins - 1, b));  // clamp outliers into edge bins
        ++counts[size_t(b)];
    }
    for (int b = 0; b < bins; ++b)
        csv << metric << ',' << arm << ',' << lo + b * w << ',' << lo + (b + 1) * w << ','
            << counts[size_t(b)] << ',' << seed << ',' << hash << '\n';
}

}  // namespace

void cmd_loss_study(const ExperimentConfig& cfg, const std::string& out_dir) {
    OutputLock lock(out_dir);
    fs::path dataset_dir = fs::path(out_dir) / "dataset";
    if (!fs::exists(dataset_dir / "manifest.csv"))
        throw std::runtime_error("loss-study: no dataset under " + out_dir +
                                 " — run `generate` into the same output directory first");
    fs::path dir = fs::path(out_dir) / "loss_study";

    LoadedDataset ds = load_dataset(dataset_dir.string());
    PairedDataset split = split_dataset(ds, cfg.train_fraction, sub_seed(cfg, "split"));
    auto train_set =
        to_train_samples(cut_tiles(ds.low, ds.high, ds.truth, split.train_indices, cfg.tile));
    auto test_tiles = cut_tiles(ds.low, ds.high, ds.truth, split.test_indices, cfg.tile);
    cap_tiles(test_tiles, cfg.max_test_tiles);
    if (test_tiles.empty()) throw std::runtime_error("loss-study: empty test set");
    auto val_set = to_val_samples(test_tiles);

    auto metrics_csv = open_csv(dir / "metrics.csv",
                                "arm,image_id,psnr_before,psnr_after,ssim_before,"
                                "ssim_after,seed,config_hash");
    auto hist_csv = open_csv(dir / "histogram.csv",
                             "metric,arm,bin_lo,bin_hi,count,seed,config_hash");

    // Both arms start from the same weights and see the same batch order;
    // only the loss differs.
    std::uint64_t init_seed = sub_seed(cfg, "loss-init");
    std::uint64_t train_seed = sub_seed(cfg, "loss-train");

    std::vector<double> psnr_before, ssim_before;
    for (int arm = 0; arm < 2; ++arm) {
        const char* arm_name = arm == 0 ? "mse" : "ssim";
        Network<float> net = cfg.build_network();
        he_init(net, init_seed);
        TrainConfig tc = cfg.train;
        tc.loss = arm == 0 ? LossKind::MSE : LossKind::SSIM;
        tc.seed = train_seed;
        AdamState adam = AdamState::zeros_like(net);
        TrainHistory history = train_network(net, adam, train_set, val_set, tc);
        history.write_csv((dir / (std::string("history_") + arm_name + ".csv")).string(),
                          cfg.seed, cfg.config_hash);
        write_nnwt((dir / (std::string("model_") + arm_name + ".nnwt")).string(), net);

        std::vector<double> psnr_after, ssim_after;
        MeanMetrics mean;
        for (const auto& t : test_tiles) {
            TileMetrics m = score_tile(net, t);
            metrics_csv << arm_name << ',' << t.id << ',' << m.psnr_before << ','
                        << m.psnr_after << ',' << m.ssim_before << ',' << m.ssim_after
                        << ',' << cfg.seed << ',' << cfg.config_hash << '\n';
            mean.add(m);
            psnr_after.push_back(m.psnr_after);
            ssim_after.push_back(m.ssim_after);
            if (arm == 0) {
                psnr_before.push_back(m.psnr_before);
                ssim_before.push_back(m.ssim_before);
            }
        }
        mean.finish();
        write_histogram(hist_csv, "psnr", arm_name, psnr_after, 0.0, 60.0, 30, cfg.seed,
                        cfg.config_hash);
        write_histogram(hist_csv, "ssim", arm_name, ssim_after, 0.0, 1.0, 20, cfg.seed,
                        cfg.config_hash);
        std::cout << "loss-study: arm " << arm_name << " mean PSNR " << mean.psnr_after
                  << " dB, mean SSIM " << mean.ssim_after << "\n";
    }
    write_histogram(hist_csv, "psnr", "before", psnr_before, 0.0, 60.0, 30, cfg.seed,
                    cfg.config_hash);
    write_histogram(hist_csv, "ssim", "before", ssim_before, 0.0, 1.0, 20, cfg.seed,
                    cfg.config_hash);
}

// ---------------------------------------------------------------------------
// closed loop

void cmd_closed_loop(const ExperimentConfig& cfg, const std::string& out_dir,
                     const std::string& weights_path) {
    OutputLock lock(out_dir);
    fs::path dataset_dir = fs::path(out_dir) / "dataset";
    std::string weights =
        weights_path.empty() ? (fs::path(out_dir) / "model.nnwt").string() : weights_path;
    fs::path dir = fs::path(out_dir) / "closed_loop";
    fs::create_directories(dir);

    LoadedDataset ds = load_dataset(dataset_dir.string());
    Network<float> net0 = read_nnwt(weights).net;

    // Denoised outputs of the trained network become the new ground truths.
    std::vector<Image> truth_pool;
    truth_pool.reserve(ds.low.size());
    for (const auto& low : ds.low) truth_pool.push_back(predict(net0, low));

    // Scan each tile of the new truths at both exposures and reconstruct.
    Geometry geom = cfg.tile_geometry();
    std::uint64_t noise_seed = sub_seed(cfg, "loop-noise");

    std::vector<Image> truth_tiles, low_raw, high_raw;
    std::vector<std::string> ids;
    for (size_t i = 0; i < truth_pool.size(); ++i) {
        auto tiles = tile(truth_pool[i], cfg.tile);
        for (size_t k = 0; k < tiles.size(); ++k) {
            const Image& t = tiles[k].image;
            std::uint64_t tile_index = truth_tiles.size();
            ScannedTile scan =
                scan_at_two_exposures(cfg, t, geom, rng::hash(noise_seed, 0, tile_index),
                                      rng::hash(noise_seed, 1, tile_index));
            low_raw.push_back(std::move(scan.recon_low));
            high_raw.push_back(std::move(scan.recon_high));
            truth_tiles.push_back(t);
            ids.push_back(tile_id(i, k));
        }
    }

    // Same normalization policy as generate: percentile window over the
    // high-exposure pool, one affine map for everything.
    double lo = pooled_percentile(high_raw, cfg.norm_lo_pct);
    double hi = pooled_percentile(high_raw, cfg.norm_hi_pct);
    if (!(hi > lo)) throw std::runtime_error("closed-loop: normalization collapsed");
    std::vector<Image> low_n, high_n, truth_n;
    for (size_t i = 0; i < truth_tiles.size(); ++i) {
        low_n.push_back(normalize(low_raw[i], lo, hi));
        high_n.push_back(normalize(high_raw[i], lo, hi));
        truth_n.push_back(normalize(truth_tiles[i], lo, hi));
    }

    // Deterministic split over tiles, then train a fresh network on the
    // artificial pairs exactly as the primary training path does.
    std::vector<size_t> order(truth_tiles.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    seeded_shuffle(order, sub_seed(cfg, "loop-split"));
    size_t n_train = size_t(std::floor(cfg.train_fraction * double(order.size())));
    if (n_train == 0 || n_train == order.size())
        throw std::runtime_error("closed-loop: split produced an empty side");

    std::vector<TrainSample> train_set;
    std::vector<size_t> test_ids;
    for (size_t i = 0; i < order.size(); ++i) {
        size_t idx = order[i];
        if (i < n_train) {
            train_set.push_back({tensor_from_image<float>(low_n[idx]),
                                 tensor_from_image<float>(high_n[idx])});
        } else {
            test_ids.push_back(idx);
        }
    }
    std::sort(test_ids.begin(), test_ids.end());

    Network<float> net = cfg.build_network();
    he_init(net, sub_seed(cfg, "loop-init"));
    TrainConfig tc = cfg.train;
    tc.seed = sub_seed(cfg, "loop-train");
    AdamState adam = AdamState::zeros_like(net);
    TrainHistory history = train_network(net, adam, train_set, {}, tc);
    history.write_csv((dir / "history.csv").string(), cfg.seed, cfg.config_hash);
    write_nnwt((dir / "model.nnwt").string(), net);

    auto csv = open_csv(dir / "metrics.csv",
                        "image_id,psnr_low,psnr_high,psnr_net,ssim_low,ssim_high,"
                        "ssim_net,seed,config_hash");
    double s_low = 0, s_high = 0, s_net = 0, p_low = 0, p_high = 0, p_net = 0;
    for (size_t idx : test_ids) {
        Image pred = predict(net, low_n[idx]);
        const Image& t = truth_n[idx];
        double pl = psnr(low_n[idx], t), ph = psnr(high_n[idx], t), pn = psnr(pred, t);
        double sl = mssim(low_n[idx], t), sh = mssim(high_n[idx], t), sn = mssim(pred, t);
        csv << ids[idx] << ',' << pl << ',' << ph << ',' << pn << ',' << sl << ',' << sh
            << ',' << sn << ',' << cfg.seed << ',' << cfg.config_hash << '\n';
        p_low += pl;
        p_high += ph;
        p_net += pn;
        s_low += sl;
        s_high += sh;
        s_net += sn;
    }
    double n = double(test_ids.size());
    auto summary = open_csv(dir / "summary.csv",
                            "n_tiles,mean_psnr_low,mean_psnr_high,mean_psnr_net,"
                            "mean_ssim_low,mean_ssim_high,mean_ssim_net,seed,config_hash");
    summary << test_ids.size() << ',' << p_low / n << ',' << p_high / n << ',' << p_net / n
            << ',' << s_low / n << ',' << s_high / n << ',' << s_net / n << ',' << cfg.seed
            << ',' << cfg.config_hash << '\n';

    write_pgm16(dir / "preview_truth.pgm", truth_n[test_ids[0]]);
    write_pgm16(dir / "preview_low.pgm", low_n[test_ids[0]]);
    write_pgm16(dir / "preview_net.pgm", predict(net, low_n[test_ids[0]]));

    std::cout << "closed-loop: " << test_ids.size() << " test tiles, mean SSIM low "
              << s_low / n << ", high " << s_high / n << ", net " << s_net / n << "\n";
}

}  // namespace fluxct
