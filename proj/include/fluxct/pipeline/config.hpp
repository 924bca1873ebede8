#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fluxct/nn/network.hpp"
#include "fluxct/nn/train.hpp"
#include "fluxct/phantom/phantom.hpp"
#include "fluxct/recon/recon.hpp"
#include "fluxct/tomo/exposure.hpp"
#include "fluxct/tomo/geometry.hpp"

namespace fluxct {

// One family of synthetic rock samples: how many images and how they look.
struct PhantomFamily {
    RockPhantomSpec spec;
    int count = 10;
};

enum class NetPreset { VDSR, UNet };
enum class SampleMode { Tiles, Patches };

// Everything a pipeline run needs, parsed from a flat key=value config file
// with [section] headers.  Unknown keys are rejected so typos fail loudly.
struct ExperimentConfig {
    std::uint64_t seed = 1;

    PhantomFamily phantom;
    std::optional<PhantomFamily> phantom_b;  // second family for transfer studies

    int views = 180;
    int detectors = 192;
    double detector_spacing = 1.0;

    double i0_reference = 1.0e4;
    double reference_exposure = 1.4;
    double exposure_low = 0.5;
    double exposure_high = 1.4;
    // Attenuation per unit phantom density per pixel of path: phantom values
    // are scaled by this before projection (and reconstructions divided by it)
    // so that line integrals land in a physically sensible range instead of
    // starving the detector.
    double attenuation_scale = 0.04;

    ReconConfig recon = ReconConfig::fbp();

    double norm_lo_pct = 0.1;
    double norm_hi_pct = 99.9;

    NetPreset preset = NetPreset::VDSR;
    int vdsr_depth = 6;
    int vdsr_width = 16;
    int unet_width = 8;
    bool unet_residual = true;

    TrainConfig train;
    int tile = 64;
    SampleMode sample_mode = SampleMode::Tiles;
    int patch = 41;
    int patches_per_image = 32;
    double train_fraction = 0.8;
    int max_test_tiles = 0;  // 0 = no cap
    std::string warm_start;  // checkpoint path, empty = cold start

    std::vector<int> transfer_grid = {4, 8, 16, 32};
    int pretrain_epochs = 30;

    // Geometry for the per-tile scans of the closed-loop experiment.
    int loop_views = 90;
    int loop_detectors = 96;

    std::string config_hash;  // hex digest of canonical(), filled by finalize()

    static ExperimentConfig defaults();
    static ExperimentConfig load(const std::string& path);

    // Canonical text form: fixed key order, full-precision numbers.  Two
    // configs with the same semantics hash identically no matter how the
    // source file was formatted.  The master seed is excluded so the hash
    // identifies the experiment, not the run.
    std::string canonical() const;
    void finalize();  // validate() + recompute config_hash
    void validate() const;

    Geometry geometry() const;       // full-image scan geometry
    Geometry tile_geometry() const;  // closed-loop per-tile scan geometry
    ExposureModel exposure_model(double exposure, std::uint64_t seed) const;
    Network<float> build_network() const;
};

std::string hash_hex(const std::string& text);

}  // namespace fluxct
