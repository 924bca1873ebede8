#include "fluxct/nn/nnwt.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fluxct {

static_assert(std::endian::native == std::endian::little,
              "NNWT I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'N', 'N', 'W', 'T'};
constexpr std::uint16_t kVersion = 1;
constexpr std::uint64_t kMaxParams = 1u << 30;

template <typename T>
void put(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T take(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw std::runtime_error("NNWT: truncated file");
    return v;
}

void put_string(std::ostream& os, const std::string& s) {
    if (s.size() > 0xffff) throw std::runtime_error("NNWT: string too long");
    put(os, std::uint16_t(s.size()));
    os.write(s.data(), std::streamsize(s.size()));
}

std::string take_string(std::istream& is) {
    const auto len = take<std::uint16_t>(is);
    std::string s(len, '\0');
    is.read(s.data(), len);
    if (!is) throw std::runtime_error("NNWT: truncated string");
    return s;
}

void put_floats(std::ostream& os, const std::vector<float>& v) {
    put(os, std::uint64_t(v.size()));
    os.write(reinterpret_cast<const char*>(v.data()), std::streamsize(v.size() * sizeof(float)));
}

std::vector<float> take_floats(std::istream& is) {
    const auto n = take<std::uint64_t>(is);
    if (n > kMaxParams) throw std::runtime_error("NNWT: implausible parameter count");
    std::vector<float> v(n);
    is.read(reinterpret_cast<char*>(v.data()), std::streamsize(n * sizeof(float)));
    if (!is) throw std::runtime_error("NNWT: truncated parameters");
    return v;
}

void take_floats_into(std::istream& is, std::vector<float>& v, std::size_t expect) {
    v = take_floats(is);
    if (v.size() != expect) throw std::runtime_error("NNWT: moment size mismatch");
}

} // namespace

void write_nnwt(const std::string& path, const Network<float>& net, const AdamState* adam) {
    net.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("NNWT: cannot open for write: " + path);
    os.write(kMagic, 4);
    put(os, kVersion);
    put_string(os, net.topology);
    put(os, std::uint32_t(net.nodes.size()));
    for (const auto& L : net.nodes) {
        put(os, std::uint8_t(L.kind));
        put_string(os, L.name);
        put(os, std::int32_t(L.in_channels));
        put(os, std::int32_t(L.out_channels));
        put(os, std::int32_t(L.ksize));
        put(os, std::uint16_t(L.inputs.size()));
        for (int in : L.inputs) put(os, std::int32_t(in));
        put_floats(os, L.weights);
        put_floats(os, L.bias);
    }
    put(os, std::uint8_t(adam != nullptr));
    if (adam) {
        put(os, adam->step);
        for (std::size_t i = 0; i < net.nodes.size(); ++i) {
            put_floats(os, adam->m.w[i]);
            put_floats(os, adam->v.w[i]);
            put_floats(os, adam->m.b[i]);
            put_floats(os, adam->v.b[i]);
        }
    }
    if (!os) throw std::runtime_error("NNWT: write failed: " + path);
}

LoadedNetwork read_nnwt(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("NNWT: cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("NNWT: bad magic: " + path);
    if (take<std::uint16_t>(is) != kVersion)
        throw std::runtime_error("NNWT: unsupported version: " + path);

    LoadedNetwork out;
    out.net.topology = take_string(is);
    const auto n_nodes = take<std::uint32_t>(is);
    if (n_nodes == 0 || n_nodes > 4096)
        throw std::runtime_error("NNWT: implausible node count: " + path);
    out.net.nodes.resize(n_nodes);
    for (auto& L : out.net.nodes) {
        const auto kind = take<std::uint8_t>(is);
        if (kind > std::uint8_t(LayerKind::Add))
            throw std::runtime_error("NNWT: unknown layer kind: " + path);
        L.kind = LayerKind(kind);
        L.name = take_string(is);
        L.in_channels = take<std::int32_t>(is);
        L.out_channels = take<std::int32_t>(is);
        L.ksize = take<std::int32_t>(is);
        const auto n_in = take<std::uint16_t>(is);
        L.inputs.resize(n_in);
        for (auto& in : L.inputs) in = take<std::int32_t>(is);
        L.weights = take_floats(is);
        L.bias = take_floats(is);
    }
    out.net.validate();

    if (take<std::uint8_t>(is) != 0) {
        AdamState adam = AdamState::zeros_like(out.net);
        adam.step = take<std::uint64_t>(is);
        for (std::size_t i = 0; i < out.net.nodes.size(); ++i) {
            const auto& L = out.net.nodes[i];
            take_floats_into(is, adam.m.w[i], L.weights.size());
            take_floats_into(is, adam.v.w[i], L.weights.size());
            take_floats_into(is, adam.m.b[i], L.bias.size());
            take_floats_into(is, adam.v.b[i], L.bias.size());
        }
        out.adam = std::move(adam);
    }
    return out;
}

void warm_start(Network<float>& net, const std::string& path) {
    LoadedNetwork loaded = read_nnwt(path);
    std::string why;
    if (!same_topology(net, loaded.net, &why))
        throw std::runtime_error("warm start: checkpoint '" + path +
                                 "' does not fit this network: " + why);
    for (std::size_t i = 0; i < net.nodes.size(); ++i) {
        net.nodes[i].weights = loaded.net.nodes[i].weights;
        net.nodes[i].bias = loaded.net.nodes[i].bias;
    }
}

} // namespace fluxct
