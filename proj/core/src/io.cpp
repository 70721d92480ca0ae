#include "dopo/io.hpp"

#include "dopo/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>

namespace dopo::io {

std::string fmt(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

namespace {

std::ofstream open_out(const std::string &path, std::ios::openmode mode) {
    std::ofstream out(path, mode);
    if (!out) throw NumericalError("cannot open output file: " + path);
    return out;
}

} // namespace

void write_pgm(const classical::Raster &raster, const std::string &path) {
    auto out = open_out(path, std::ios::binary);
    out << "P5\n" << raster.width << " " << raster.height << "\n255\n";
    const double vmax =
        *std::max_element(raster.values.begin(), raster.values.end());
    const double scale = vmax > 0.0 ? 255.0 / vmax : 0.0;
    std::string bytes;
    bytes.reserve(raster.values.size());
    for (double v : raster.values)
        bytes.push_back(static_cast<char>(
            static_cast<unsigned char>(std::lround(std::clamp(v * scale, 0.0, 255.0)))));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void write_raster_csv(const classical::Raster &raster, const std::string &path) {
    auto out = open_out(path, std::ios::out);
    out << "x,y,value\n";
    for (int iy = 0; iy < raster.height; ++iy) {
        const double y = raster.extent - 2.0 * raster.extent * iy / (raster.height - 1);
        for (int ix = 0; ix < raster.width; ++ix) {
            const double x = -raster.extent + 2.0 * raster.extent * ix / (raster.width - 1);
            out << fmt(x) << ',' << fmt(y) << ','
                << fmt(raster.values[static_cast<size_t>(iy) * raster.width + ix]) << '\n';
        }
    }
}

} // namespace dopo::io
