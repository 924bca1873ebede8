#pragma once

#include <optional>
#include <string>

#include "fluxct/nn/train.hpp"

namespace fluxct {

struct LoadedNetwork {
    Network<float> net;
    std::optional<AdamState> adam;
};

// Weight checkpoint: full graph topology plus parameters, with the Adam
// moments as an optional trailer so training can resume exactly.
void write_nnwt(const std::string& path, const Network<float>& net,
                const AdamState* adam = nullptr);
LoadedNetwork read_nnwt(const std::string& path);

// Copies the checkpoint's parameters into net. Throws, naming the first
// differing node, if the stored topology does not match.
void warm_start(Network<float>& net, const std::string& path);

} // namespace fluxct
