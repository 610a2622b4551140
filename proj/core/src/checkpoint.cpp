#include "diqnn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "diqnn/error.hpp"

namespace diqnn {

namespace {

constexpr char kMagic[4] = {'D', 'Q', 'N', 'C'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& out, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw FormatError("checkpoint: truncated header");
    return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) |
           (std::uint32_t(b[2]) << 16) | (std::uint32_t(b[3]) << 24);
}

void write_doubles(std::ostream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), std::streamsize(n * sizeof(double)));
}

void read_doubles(std::istream& in, double* p, std::size_t n) {
    in.read(reinterpret_cast<char*>(p), std::streamsize(n * sizeof(double)));
    if (!in) throw FormatError("checkpoint: truncated parameter block");
}

} // namespace

void save_checkpoint(const Network& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("checkpoint: cannot open for writing: " + path);
    out.write(kMagic, 4);
    write_u32(out, kVersion);
    out.put(net.activation() == Activation::ReLU ? 1 : 0);
    write_u32(out, std::uint32_t(net.layers().size()));
    for (const Layer& l : net.layers()) {
        if (const auto* lin = std::get_if<LinearLayer>(&l)) {
            out.put(0);
            write_u32(out, std::uint32_t(lin->in_dim()));
            write_u32(out, std::uint32_t(lin->out_dim()));
            out.put(lin->has_bias() ? 1 : 0);
            write_doubles(out, lin->weight.data(), lin->weight.size());
            if (lin->has_bias()) write_doubles(out, lin->bias.data(), lin->bias.size());
        } else if (const auto* q = std::get_if<QuadraticLayer>(&l)) {
            out.put(1);
            write_u32(out, std::uint32_t(q->in_dim()));
            write_u32(out, std::uint32_t(q->out_dim()));
            for (const Matrix& a : q->weights) write_doubles(out, a.data(), a.size());
        } else if (const auto* lr = std::get_if<LowRankLayer>(&l)) {
            out.put(2);
            write_u32(out, std::uint32_t(lr->in_dim()));
            write_u32(out, std::uint32_t(lr->units));
            write_u32(out, std::uint32_t(lr->rank));
            write_doubles(out, lr->factors.data(), lr->factors.size());
        }
    }
    if (!out) throw FormatError("checkpoint: write failed: " + path);
}

Network load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("checkpoint: cannot open: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError("checkpoint: bad magic in " + path);
    const std::uint32_t version = read_u32(in);
    if (version != kVersion)
        throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const int act = in.get();
    const std::uint32_t layer_count = read_u32(in);
    if (layer_count == 0 || layer_count > 64)
        throw FormatError("checkpoint: implausible layer count");

    std::vector<Layer> layers;

    for (std::uint32_t li = 0; li < layer_count; ++li) {
        const int kind = in.get();
        if (kind < 0) throw FormatError("checkpoint: truncated layer header");
        if (kind == 0) {
            LinearLayer l;
            const std::uint32_t in_d = read_u32(in), out_d = read_u32(in);
            const int has_bias = in.get();
            l.weight = Matrix(out_d, in_d);
            read_doubles(in, l.weight.data(), l.weight.size());
            if (has_bias) {
                l.bias.assign(out_d, 0.0);
                read_doubles(in, l.bias.data(), l.bias.size());
            }
            layers.emplace_back(std::move(l));
        } else if (kind == 1) {
            QuadraticLayer l;
            const std::uint32_t in_d = read_u32(in), out_d = read_u32(in);
            for (std::uint32_t u = 0; u < out_d; ++u) {
                Matrix a(in_d, in_d);
                read_doubles(in, a.data(), a.size());
                l.weights.push_back(std::move(a));
            }
            layers.emplace_back(std::move(l));
        } else if (kind == 2) {
            LowRankLayer l;
            const std::uint32_t in_d = read_u32(in);
            l.units = read_u32(in);
            l.rank = read_u32(in);
            l.factors = Matrix(l.units * l.rank, in_d);
            read_doubles(in, l.factors.data(), l.factors.size());
            layers.emplace_back(std::move(l));
        } else {
            throw FormatError("checkpoint: unknown layer kind " + std::to_string(kind));
        }
    }
    return Network::assemble(std::move(layers),
                             act == 1 ? Activation::ReLU : Activation::None);
}

} // namespace diqnn
