#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fluxct/core/dataset.hpp"
#include "fluxct/nn/tensor.hpp"
#include "fluxct/pipeline/config.hpp"
#include "fluxct/pipeline/dataset_store.hpp"

namespace fluxct {

// Exclusive advisory lock on an output directory, held for the lifetime of
// a command. A second concurrent writer fails fast instead of interleaving
// artifacts.
class OutputLock {
public:
    explicit OutputLock(const std::string& out_dir);
    ~OutputLock();
    OutputLock(const OutputLock&) = delete;
    OutputLock& operator=(const OutputLock&) = delete;

private:
    std::string path_;
};

// Co-located tile cut from a (low, high, truth) image triple.
struct TileTriple {
    Tensor<float> low;
    Tensor<float> high;
    Tensor<float> truth;
    std::string id;  // "img003_t02": source image and tile index
};

// Simulates one phantom family end to end (phantom -> scan -> noise ->
// reconstruction -> shared normalization). Used by the transfer study and
// by tests; `generate` additionally writes sinograms and previews.
std::vector<GeneratedTriple> simulate_family(const ExperimentConfig& cfg,
                                             const PhantomFamily& family,
                                             std::uint64_t family_seed);

// Tiles the selected images of a dataset, image-major then row-major.
std::vector<TileTriple> cut_tiles(const std::vector<Image>& low,
                                  const std::vector<Image>& high,
                                  const std::vector<Image>& truth,
                                  const std::vector<std::size_t>& indices, int tile_px);

// CLI commands. Each takes the parsed config and an output directory, and
// stamps every CSV row with the run seed and the config hash.
void cmd_generate(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_eval(const ExperimentConfig& cfg, const std::string& out_dir,
              const std::string& weights_path = "");
void cmd_transfer_study(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_loss_study(const ExperimentConfig& cfg, const std::string& out_dir);
void cmd_closed_loop(const ExperimentConfig& cfg, const std::string& out_dir,
                     const std::string& weights_path = "");

}  // namespace fluxct
