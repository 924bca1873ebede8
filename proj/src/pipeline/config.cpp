#include "fluxct/pipeline/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

namespace fluxct {

namespace {

std::string trim(const std::string& s) {
    size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Raw parsed file: section -> key -> value, plus consumed-key bookkeeping so
// we can reject anything the schema never asked for.
class ConfigFile {
public:
    explicit ConfigFile(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("config: cannot open '" + path + "'");
        std::string line, section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            std::string t = trim(line);
            if (t.empty() || t[0] == '#' || t[0] == ';') continue;
            if (t.front() == '[') {
                if (t.back() != ']')
                    throw std::runtime_error("config: bad section header at line " +
                                             std::to_string(lineno));
                section = lower(trim(t.substr(1, t.size() - 2)));
                if (section.empty())
                    throw std::runtime_error("config: empty section name at line " +
                                             std::to_string(lineno));
                continue;
            }
            size_t eq = t.find('=');
            if (eq == std::string::npos)
                throw std::runtime_error("config: expected key = value at line " +
                                         std::to_string(lineno) + ": '" + t + "'");
            std::string key = lower(trim(t.substr(0, eq)));
            std::string value = trim(t.substr(eq + 1));
            if (key.empty())
                throw std::runtime_error("config: empty key at line " + std::to_string(lineno));
            std::string full = section + "." + key;
            if (values_.count(full))
                throw std::runtime_error("config: duplicate key '" + full + "' at line " +
                                         std::to_string(lineno));
            values_[full] = value;
        }
    }

    bool has_section(const std::string& section) const {
        std::string prefix = section + ".";
        for (const auto& [k, v] : values_)
            if (k.rfind(prefix, 0) == 0) return true;
        return false;
    }

    std::optional<std::string> get(const std::string& section, const std::string& key) {
        std::string full = section + "." + key;
        consumed_.insert(full);
        auto it = values_.find(full);
        if (it == values_.end()) return std::nullopt;
        return it->second;
    }

    void reject_unknown() const {
        std::string bad;
        for (const auto& [k, v] : values_)
            if (!consumed_.count(k)) bad += (bad.empty() ? "" : ", ") + k;
        if (!bad.empty()) throw std::runtime_error("config: unknown key(s): " + bad);
    }

private:
    std::map<std::string, std::string> values_;
    std::set<std::string> consumed_;
};

std::string where(const std::string& sec, const std::string& key) {
    return "[" + sec + "] " + key;
}

double to_double(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return d;
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + where(sec, key) + ": not a number: '" + v + "'");
    }
}

int to_int(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        long n = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return static_cast<int>(n);
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + where(sec, key) + ": not an integer: '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& sec, const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        unsigned long long n = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing junk");
        return static_cast<std::uint64_t>(n);
    } catch (const std::exception&) {
        throw std::runtime_error("config: " + where(sec, key) +
                                 ": not an unsigned integer: '" + v + "'");
    }
}

bool to_bool(const std::string& sec, const std::string& key, const std::string& v) {
    std::string l = lower(v);
    if (l == "true" || l == "1" || l == "yes" || l == "on") return true;
    if (l == "false" || l == "0" || l == "no" || l == "off") return false;
    throw std::runtime_error("config: " + where(sec, key) + ": not a boolean: '" + v + "'");
}

std::vector<int> to_int_list(const std::string& sec, const std::string& key,
                             const std::string& v) {
    std::vector<int> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (item.empty()) continue;
        out.push_back(to_int(sec, key, item));
    }
    if (out.empty())
        throw std::runtime_error("config: " + where(sec, key) + ": empty list");
    return out;
}

// Typed fetch helpers: read the key if present, otherwise keep the default.
struct Reader {
    ConfigFile& file;
    std::string section;

    void num(const std::string& key, double& target) {
        if (auto v = file.get(section, key)) target = to_double(section, key, *v);
    }
    void num(const std::string& key, int& target) {
        if (auto v = file.get(section, key)) target = to_int(section, key, *v);
    }
    void num(const std::string& key, std::uint64_t& target) {
        if (auto v = file.get(section, key)) target = to_u64(section, key, *v);
    }
    void flag(const std::string& key, bool& target) {
        if (auto v = file.get(section, key)) target = to_bool(section, key, *v);
    }
    void text(const std::string& key, std::string& target) {
        if (auto v = file.get(section, key)) target = *v;
    }
    void list(const std::string& key, std::vector<int>& target) {
        if (auto v = file.get(section, key)) target = to_int_list(section, key, *v);
    }
};

void read_phantom_family(ConfigFile& file, const std::string& section, PhantomFamily& fam) {
    Reader r{file, section};
    r.num("count", fam.count);
    r.num("size", fam.spec.size);
    r.num("grains", fam.spec.grain_count);
    r.num("radius_min", fam.spec.grain_radius_min);
    r.num("radius_max", fam.spec.grain_radius_max);
    r.num("density_min", fam.spec.grain_density_min);
    r.num("density_max", fam.spec.grain_density_max);
    r.num("porosity", fam.spec.porosity_target);
    r.num("texture", fam.spec.texture_amplitude);
}

ReconAlgorithm parse_algorithm(const std::string& v) {
    std::string l = lower(v);
    if (l == "fbp") return ReconAlgorithm::FBP;
    if (l == "sirt") return ReconAlgorithm::SIRT;
    if (l == "cgls") return ReconAlgorithm::CGLS;
    throw std::runtime_error("config: [recon] algorithm: expected fbp|sirt|cgls, got '" + v + "'");
}

FbpFilter parse_filter(const std::string& v) {
    std::string l = lower(v);
    if (l == "ramlak" || l == "ram-lak") return FbpFilter::RamLak;
    if (l == "hann") return FbpFilter::Hann;
    throw std::runtime_error("config: [recon] filter: expected ramlak|hann, got '" + v + "'");
}

const char* algorithm_name(ReconAlgorithm a) {
    switch (a) {
        case ReconAlgorithm::FBP: return "fbp";
        case ReconAlgorithm::SIRT: return "sirt";
        case ReconAlgorithm::CGLS: return "cgls";
    }
    return "?";
}

const char* filter_name(FbpFilter f) {
    return f == FbpFilter::RamLak ? "ramlak" : "hann";
}

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

void emit_family(std::ostringstream& os, const std::string& name, const PhantomFamily& f) {
    os << name << ".count=" << f.count << "\n"
       << name << ".size=" << f.spec.size << "\n"
       << name << ".grains=" << f.spec.grain_count << "\n"
       << name << ".radius_min=" << fmt(f.spec.grain_radius_min) << "\n"
       << name << ".radius_max=" << fmt(f.spec.grain_radius_max) << "\n"
       << name << ".density_min=" << fmt(f.spec.grain_density_min) << "\n"
       << name << ".density_max=" << fmt(f.spec.grain_density_max) << "\n"
       << name << ".porosity=" << fmt(f.spec.porosity_target) << "\n"
       << name << ".texture=" << fmt(f.spec.texture_amplitude) << "\n";
}

}  // namespace

std::string hash_hex(const std::string& text) {
    // FNV-1a, 64-bit.
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[i] = digits[h & 0xf];
        h >>= 4;
    }
    return out;
}

ExperimentConfig ExperimentConfig::defaults() {
    ExperimentConfig cfg;
    cfg.finalize();
    return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
    ConfigFile file(path);
    ExperimentConfig cfg;

    {
        Reader r{file, "run"};
        r.num("seed", cfg.seed);
    }
    read_phantom_family(file, "phantom", cfg.phantom);
    if (file.has_section("phantom_b")) {
        PhantomFamily b = cfg.phantom;  // second family starts from the first
        read_phantom_family(file, "phantom_b", b);
        cfg.phantom_b = b;
    }
    {
        Reader r{file, "geometry"};
        r.num("views", cfg.views);
        r.num("detectors", cfg.detectors);
        r.num("spacing", cfg.detector_spacing);
    }
    {
        Reader r{file, "exposure"};
        r.num("i0_reference", cfg.i0_reference);
        r.num("reference_exposure", cfg.reference_exposure);
        r.num("low", cfg.exposure_low);
        r.num("high", cfg.exposure_high);
        r.num("attenuation_scale", cfg.attenuation_scale);
    }
    {
        Reader r{file, "recon"};
        if (auto v = file.get("recon", "algorithm"))
            cfg.recon.algorithm = parse_algorithm(*v);
        // Iterative solvers clamp by default, FBP keeps its negative ringing.
        cfg.recon.nonneg_clamp = cfg.recon.algorithm != ReconAlgorithm::FBP;
        if (cfg.recon.algorithm == ReconAlgorithm::SIRT) cfg.recon.iterations = 200;
        if (cfg.recon.algorithm == ReconAlgorithm::CGLS) cfg.recon.iterations = 30;
        r.num("iterations", cfg.recon.iterations);
        r.num("relaxation", cfg.recon.relaxation);
        if (auto v = file.get("recon", "filter")) cfg.recon.filter = parse_filter(*v);
        r.flag("clamp", cfg.recon.nonneg_clamp);
    }
    {
        Reader r{file, "normalize"};
        r.num("lo_percentile", cfg.norm_lo_pct);
        r.num("hi_percentile", cfg.norm_hi_pct);
    }
    {
        Reader r{file, "network"};
        if (auto v = file.get("network", "preset")) {
            std::string l = lower(*v);
            if (l == "vdsr") cfg.preset = NetPreset::VDSR;
            else if (l == "unet") cfg.preset = NetPreset::UNet;
            else
                throw std::runtime_error(
                    "config: [network] preset: expected vdsr|unet, got '" + *v + "'");
        }
        r.num("depth", cfg.vdsr_depth);
        r.num("width", cfg.vdsr_width);
        r.num("unet_width", cfg.unet_width);
        r.flag("residual", cfg.unet_residual);
    }
    {
        Reader r{file, "train"};
        r.num("epochs", cfg.train.epochs);
        r.num("batch", cfg.train.batch_size);
        r.num("lr", cfg.train.learning_rate);
        if (auto v = file.get("train", "loss")) {
            std::string l = lower(*v);
            if (l == "mse") cfg.train.loss = LossKind::MSE;
            else if (l == "ssim") cfg.train.loss = LossKind::SSIM;
            else
                throw std::runtime_error("config: [train] loss: expected mse|ssim, got '" + *v +
                                         "'");
        }
        r.num("tile", cfg.tile);
        if (auto v = file.get("train", "sample_mode")) {
            std::string l = lower(*v);
            if (l == "tiles") cfg.sample_mode = SampleMode::Tiles;
            else if (l == "patches") cfg.sample_mode = SampleMode::Patches;
            else
                throw std::runtime_error(
                    "config: [train] sample_mode: expected tiles|patches, got '" + *v + "'");
        }
        r.num("patch", cfg.patch);
        r.num("patches_per_image", cfg.patches_per_image);
        r.num("train_fraction", cfg.train_fraction);
        r.num("max_test_tiles", cfg.max_test_tiles);
        r.text("warm_start", cfg.warm_start);
    }
    {
        Reader r{file, "transfer"};
        r.list("grid", cfg.transfer_grid);
        r.num("pretrain_epochs", cfg.pretrain_epochs);
    }
    {
        Reader r{file, "closed_loop"};
        r.num("views", cfg.loop_views);
        r.num("detectors", cfg.loop_detectors);
    }

    file.reject_unknown();
    cfg.finalize();
    return cfg;
}

std::string ExperimentConfig::canonical() const {
    std::ostringstream os;
    emit_family(os, "phantom", phantom);
    if (phantom_b) emit_family(os, "phantom_b", *phantom_b);
    os << "geometry.views=" << views << "\n"
       << "geometry.detectors=" << detectors << "\n"
       << "geometry.spacing=" << fmt(detector_spacing) << "\n"
       << "exposure.i0_reference=" << fmt(i0_reference) << "\n"
       << "exposure.reference_exposure=" << fmt(reference_exposure) << "\n"
       << "exposure.low=" << fmt(exposure_low) << "\n"
       << "exposure.high=" << fmt(exposure_high) << "\n"
       << "exposure.attenuation_scale=" << fmt(attenuation_scale) << "\n"
       << "recon.algorithm=" << algorithm_name(recon.algorithm) << "\n"
       << "recon.iterations=" << recon.iterations << "\n"
       << "recon.relaxation=" << fmt(recon.relaxation) << "\n"
       << "recon.filter=" << filter_name(recon.filter) << "\n"
       << "recon.clamp=" << (recon.nonneg_clamp ? "true" : "false") << "\n"
       << "normalize.lo_percentile=" << fmt(norm_lo_pct) << "\n"
       << "normalize.hi_percentile=" << fmt(norm_hi_pct) << "\n"
       << "network.preset=" << (preset == NetPreset::VDSR ? "vdsr" : "unet") << "\n"
       << "network.depth=" << vdsr_depth << "\n"
       << "network.width=" << vdsr_width << "\n"
       << "network.unet_width=" << unet_width << "\n"
       << "network.residual=" << (unet_residual ? "true" : "false") << "\n"
       << "train.epochs=" << train.epochs << "\n"
       << "train.batch=" << train.batch_size << "\n"
       << "train.lr=" << fmt(train.learning_rate) << "\n"
       << "train.loss=" << (train.loss == LossKind::MSE ? "mse" : "ssim") << "\n"
       << "train.tile=" << tile << "\n"
       << "train.sample_mode=" << (sample_mode == SampleMode::Tiles ? "tiles" : "patches") << "\n"
       << "train.patch=" << patch << "\n"
       << "train.patches_per_image=" << patches_per_image << "\n"
       << "train.train_fraction=" << fmt(train_fraction) << "\n"
       << "train.max_test_tiles=" << max_test_tiles << "\n"
       << "train.warm_start=" << warm_start << "\n";
    os << "transfer.grid=";
    for (size_t i = 0; i < transfer_grid.size(); ++i)
        os << (i ? "," : "") << transfer_grid[i];
    os << "\n"
       << "transfer.pretrain_epochs=" << pretrain_epochs << "\n"
       << "closed_loop.views=" << loop_views << "\n"
       << "closed_loop.detectors=" << loop_detectors << "\n";
    return os.str();
}

void ExperimentConfig::finalize() {
    validate();
    config_hash = hash_hex(canonical());
}

void ExperimentConfig::validate() const {
    auto check_family = [](const char* name, const PhantomFamily& f) {
        if (f.count < 1)
            throw std::runtime_error(std::string("config: ") + name + " count must be >= 1");
        if (f.spec.size < 16)
            throw std::runtime_error(std::string("config: ") + name + " size must be >= 16");
        if (f.spec.grain_count < 1 || f.spec.grain_radius_min <= 0.0 ||
            f.spec.grain_radius_max < f.spec.grain_radius_min)
            throw std::runtime_error(std::string("config: ") + name + " grain settings invalid");
        if (f.spec.porosity_target <= 0.0 || f.spec.porosity_target >= 1.0)
            throw std::runtime_error(std::string("config: ") + name +
                                     " porosity must be in (0,1)");
    };
    check_family("phantom", phantom);
    if (phantom_b) check_family("phantom_b", *phantom_b);

    geometry().validate();  // also checks detector coverage
    if (phantom_b) {
        Geometry gb = Geometry::parallel(views, detectors, phantom_b->spec.size,
                                         detector_spacing);
        gb.validate();
    }
    tile_geometry().validate();

    ExposureModel low = exposure_model(exposure_low, 0);
    ExposureModel high = exposure_model(exposure_high, 0);
    low.validate();
    high.validate();
    // Equal exposures are allowed: the two scans still use independent noise
    // streams, which is occasionally useful as a control.
    if (exposure_low > exposure_high)
        throw std::runtime_error("config: [exposure] low must be <= high");
    if (!(attenuation_scale > 0.0))
        throw std::runtime_error("config: [exposure] attenuation_scale must be > 0");

    recon.validate();

    if (!(norm_lo_pct >= 0.0 && norm_lo_pct < norm_hi_pct && norm_hi_pct <= 100.0))
        throw std::runtime_error("config: [normalize] need 0 <= lo < hi <= 100");

    if (preset == NetPreset::VDSR) {
        if (vdsr_depth < 2 || vdsr_width < 1)
            throw std::runtime_error("config: [network] vdsr needs depth >= 2, width >= 1");
    } else {
        if (unet_width < 1)
            throw std::runtime_error("config: [network] unet_width must be >= 1");
        if (tile % 8 != 0)
            throw std::runtime_error(
                "config: [train] tile must be divisible by 8 for the unet preset "
                "(three 2x2 pooling stages)");
    }

    TrainConfig t = train;
    t.seed = 1;  // placeholder, assigned per command
    t.validate();

    if (tile < 8 || tile > phantom.spec.size)
        throw std::runtime_error("config: [train] tile must be in [8, phantom size]");
    if (sample_mode == SampleMode::Patches) {
        if (patch < 8 || patch > phantom.spec.size)
            throw std::runtime_error("config: [train] patch must be in [8, phantom size]");
        if (patches_per_image < 1)
            throw std::runtime_error("config: [train] patches_per_image must be >= 1");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::runtime_error("config: [train] train_fraction must be in (0,1)");
    if (max_test_tiles < 0)
        throw std::runtime_error("config: [train] max_test_tiles must be >= 0");

    if (transfer_grid.empty())
        throw std::runtime_error("config: [transfer] grid must not be empty");
    for (size_t i = 0; i < transfer_grid.size(); ++i) {
        if (transfer_grid[i] < 1)
            throw std::runtime_error("config: [transfer] grid entries must be >= 1");
        if (i > 0 && transfer_grid[i] <= transfer_grid[i - 1])
            throw std::runtime_error("config: [transfer] grid must be strictly increasing");
    }
    if (pretrain_epochs < 1)
        throw std::runtime_error("config: [transfer] pretrain_epochs must be >= 1");
}

Geometry ExperimentConfig::geometry() const {
    return Geometry::parallel(views, detectors, phantom.spec.size, detector_spacing);
}

Geometry ExperimentConfig::tile_geometry() const {
    return Geometry::parallel(loop_views, loop_detectors, tile, detector_spacing);
}

ExposureModel ExperimentConfig::exposure_model(double exposure, std::uint64_t seed_) const {
    ExposureModel m;
    m.i0_reference = i0_reference;
    m.reference_exposure = reference_exposure;
    m.exposure = exposure;
    m.seed = seed_;
    return m;
}

Network<float> ExperimentConfig::build_network() const {
    if (preset == NetPreset::VDSR) return build_vdsr(vdsr_depth, vdsr_width);
    return build_unet(unet_width, unet_residual);
}

}  // namespace fluxct
