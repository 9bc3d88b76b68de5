#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spde/grid.hpp"

namespace spde::io {

/// Deterministic shortest-roundtrip formatting ("%.17g"), so identical runs
/// produce byte-identical artifacts.
std::string format_double(double v);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

inline constexpr char kRasterMagic[8] = {'S', 'P', 'D', 'E', 'R', 'A', 'S', '1'};
inline constexpr char kSpectralConvention[] =
    "modes A_k: Z=sum A_k exp(i xi_k x); xi=pi k/L; var sigma^2 mu (2L)^-d; S=exp(-|xi|^2 t/2)";

struct Raster {
    GridSpec grid;
    double t = 0.0;
    uint64_t seed = 0;
    std::string convention;
    Field data;
};

/// Binary raster: magic, u32 dim, u32 nx, u32 ny, f64 spacing, f64 t,
/// u64 seed, 96-byte convention string, then row-major f64 samples.
/// All integers and floats little-endian.
void write_raster(const std::string& path, const GridSpec& g, double t,
                  uint64_t seed, const Field& data);
Raster read_raster(const std::string& path);

} // namespace spde::io
