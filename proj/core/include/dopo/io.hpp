#ifndef DOPO_IO_HPP
#define DOPO_IO_HPP

#include "dopo/classical.hpp"

#include <string>

namespace dopo::io {

// Shortest round-trippable decimal form; keeps output files byte-stable.
std::string fmt(double value);

// 8-bit binary PGM: "P5\n<width> <height>\n255\n" + row-major bytes,
// values scaled linearly onto [0, 255] by the raster maximum.
void write_pgm(const classical::Raster &raster, const std::string &path);

// CSV with header x,y,value; grid coordinates in waist units.
void write_raster_csv(const classical::Raster &raster, const std::string &path);

} // namespace dopo::io

#endif
