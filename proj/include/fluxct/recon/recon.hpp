#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fluxct/core/image.hpp"
#include "fluxct/tomo/sinogram.hpp"

namespace fluxct {

enum class ReconAlgorithm { FBP, SIRT, CGLS };
enum class FbpFilter { RamLak, Hann };

struct ReconConfig {
    ReconAlgorithm algorithm = ReconAlgorithm::FBP;
    int iterations = 0;        // ignored by FBP
    double relaxation = 1.0;   // SIRT only
    FbpFilter filter = FbpFilter::RamLak;
    bool nonneg_clamp = false; // SIRT/CGLS clamp; FBP leaves negatives in place

    static ReconConfig fbp(FbpFilter filter = FbpFilter::RamLak) {
        return {ReconAlgorithm::FBP, 0, 1.0, filter, false};
    }
    static ReconConfig sirt(int iterations = 200, double relaxation = 1.0) {
        return {ReconAlgorithm::SIRT, iterations, relaxation, FbpFilter::RamLak, true};
    }
    static ReconConfig cgls(int iterations = 30) {
        return {ReconAlgorithm::CGLS, iterations, 1.0, FbpFilter::RamLak, true};
    }

    void validate() const;
};

// Per-iteration convergence record. rmse_vs_truth is only present when the
// caller supplied a ground-truth image.
struct ResidualRow {
    int iteration = 0;
    double residual_norm = 0.0;
    std::optional<double> rmse_vs_truth;
};

struct ResidualLog {
    std::vector<ResidualRow> rows;
    void write_csv(const std::string& path, std::uint64_t seed,
                   const std::string& config_hash) const;
};

// All three accept attenuation (or clean line-integral) sinograms.
Image reconstruct_fbp(const Sinogram& sino, const ReconConfig& cfg);
Image reconstruct_sirt(const Sinogram& sino, const ReconConfig& cfg,
                       ResidualLog* log = nullptr, const Image* truth = nullptr);
// converged (optional) is set when the recurrence broke down (zero direction
// norm) before reaching the iteration budget.
Image reconstruct_cgls(const Sinogram& sino, const ReconConfig& cfg,
                       ResidualLog* log = nullptr, const Image* truth = nullptr,
                       bool* converged = nullptr);

Image reconstruct(const Sinogram& sino, const ReconConfig& cfg,
                  ResidualLog* log = nullptr, const Image* truth = nullptr);

} // namespace fluxct
