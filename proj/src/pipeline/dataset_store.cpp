#include "fluxct/pipeline/dataset_store.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <stdexcept>

#include "fluxct/core/image_io.hpp"
#include "fluxct/phantom/phantom.hpp"

namespace fluxct {

namespace fs = std::filesystem;

namespace {

std::string index_name(const char* prefix, size_t i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%s_%03zu.imgf", prefix, i);
    return buf;
}

}  // namespace

void save_dataset(const std::string& dir, const std::vector<GeneratedTriple>& triples,
                  std::uint64_t seed, const std::string& config_hash) {
    if (triples.empty()) throw std::invalid_argument("save_dataset: no triples");
    fs::create_directories(dir);
    std::ofstream manifest(fs::path(dir) / "manifest.csv");
    if (!manifest) throw std::runtime_error("save_dataset: cannot write manifest in " + dir);
    manifest << "index,truth,low,high,porosity,flat_std_low,flat_std_high,seed,config_hash\n";
    manifest << std::setprecision(17);
    for (size_t i = 0; i < triples.size(); ++i) {
        const auto& t = triples[i];
        std::string tn = index_name("truth", i), ln = index_name("low", i),
                    hn = index_name("high", i);
        write_imgf(fs::path(dir) / tn, t.truth);
        write_imgf(fs::path(dir) / ln, t.low);
        write_imgf(fs::path(dir) / hn, t.high);
        manifest << i << ',' << tn << ',' << ln << ',' << hn << ',' << t.porosity << ','
                 << t.flat_std_low << ',' << t.flat_std_high << ',' << seed << ','
                 << config_hash << '\n';
    }
}

LoadedDataset load_dataset(const std::string& dir) {
    LoadedDataset out;
    for (size_t i = 0;; ++i) {
        fs::path tp = fs::path(dir) / index_name("truth", i);
        fs::path lp = fs::path(dir) / index_name("low", i);
        fs::path hp = fs::path(dir) / index_name("high", i);
        if (!fs::exists(tp) || !fs::exists(lp) || !fs::exists(hp)) break;
        out.truth.push_back(read_imgf(tp));
        out.low.push_back(read_imgf(lp));
        out.high.push_back(read_imgf(hp));
    }
    if (out.truth.empty())
        throw std::runtime_error("load_dataset: no image triples found in " + dir);
    return out;
}

double flat_region_std(const Image& recon, const Image& truth) {
    if (!recon.same_dims(truth))
        throw std::invalid_argument("flat_region_std: dimension mismatch");
    const int h = truth.height, w = truth.width;
    auto is_pore = [&](int r, int c) { return truth.at(r, c) < kPoreThreshold; };
    double sum = 0.0, sum2 = 0.0;
    size_t n = 0;
    for (int r = 1; r + 1 < h; ++r) {
        for (int c = 1; c + 1 < w; ++c) {
            bool interior = true;
            for (int dr = -1; dr <= 1 && interior; ++dr)
                for (int dc = -1; dc <= 1; ++dc)
                    if (!is_pore(r + dr, c + dc)) {
                        interior = false;
                        break;
                    }
            if (!interior) continue;
            double v = recon.at(r, c);
            sum += v;
            sum2 += v * v;
            ++n;
        }
    }
    if (n < 16)
        throw std::runtime_error(
            "flat_region_std: fewer than 16 interior pore pixels; phantom too dense");
    double mean = sum / double(n);
    double var = sum2 / double(n) - mean * mean;
    return std::sqrt(std::max(0.0, var));
}

}  // namespace fluxct
