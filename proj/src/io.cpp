#include "spde/io.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace spde::io {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
    std::ofstream out(path, std::ios::binary); // binary: no platform newline drift
    if (!out) throw std::runtime_error("write_csv: cannot open " + path);
    for (size_t i = 0; i < header.size(); ++i)
        out << header[i] << (i + 1 < header.size() ? "," : "");
    out << "\n";
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i)
            out << format_double(row[i]) << (i + 1 < row.size() ? "," : "");
        out << "\n";
    }
}

namespace {
template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}
template <typename T>
T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof v);
    return v;
}
} // namespace

void write_raster(const std::string& path, const GridSpec& g, double t,
                  uint64_t seed, const Field& data) {
    if (static_cast<int>(data.size()) != g.total())
        throw std::invalid_argument("write_raster: field/grid mismatch");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_raster: cannot open " + path);
    out.write(kRasterMagic, 8);
    put<uint32_t>(out, static_cast<uint32_t>(g.dim));
    put<uint32_t>(out, static_cast<uint32_t>(g.n));
    put<uint32_t>(out, static_cast<uint32_t>(g.dim == 2 ? g.n : 1));
    put<double>(out, g.spacing());
    put<double>(out, t);
    put<uint64_t>(out, seed);
    char conv[96] = {0};
    std::strncpy(conv, kSpectralConvention, sizeof conv - 1);
    out.write(conv, sizeof conv);
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size() * sizeof(double)));
}

Raster read_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_raster: cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (std::memcmp(magic, kRasterMagic, 8) != 0)
        throw std::runtime_error("read_raster: bad magic");
    Raster r;
    const auto dim = get<uint32_t>(in);
    const auto nx = get<uint32_t>(in);
    get<uint32_t>(in); // ny, implied by dim/nx
    const double spacing = get<double>(in);
    r.t = get<double>(in);
    r.seed = get<uint64_t>(in);
    char conv[96];
    in.read(conv, sizeof conv);
    r.convention.assign(conv);
    r.grid = GridSpec(static_cast<int>(dim), static_cast<int>(nx),
                      0.5 * spacing * nx);
    r.data.resize(r.grid.total());
    in.read(reinterpret_cast<char*>(r.data.data()),
            static_cast<std::streamsize>(r.data.size() * sizeof(double)));
    if (!in) throw std::runtime_error("read_raster: truncated payload");
    return r;
}

} // namespace spde::io
