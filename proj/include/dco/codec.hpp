#pragma once

#include <string>
#include <variant>

#include "dco/image.hpp"

namespace dco {

struct FlowField; // flow.hpp

enum class ImageFormat { Pgm, Ppm, Png };

/// Either a gray or a color raster, depending on what the file held.
using LoadedImage = std::variant<GrayImage, ColorImage>;

/// Picks the format from the file extension (.pgm/.ppm/.png).
ImageFormat format_from_path(const std::string& path);

/// Reads an 8-bit image. PGM yields GrayImage, PPM yields ColorImage,
/// PNG yields whichever matches its color type. Values scale to [0,1].
LoadedImage read_image(const std::string& path, ImageFormat format);
LoadedImage read_image(const std::string& path);

GrayImage read_gray(const std::string& path);
ColorImage read_color(const std::string& path);

void write_pgm(const GrayImage& img, const std::string& path);
void write_ppm(const ColorImage& img, const std::string& path);
void write_png(const GrayImage& img, const std::string& path);
void write_png(const ColorImage& img, const std::string& path);

/// 0/255 binary PGM.
void write_mask_pgm(const BinaryMask& mask, const std::string& path);
BinaryMask read_mask_pgm(const std::string& path);

/// Middlebury PFM, "Pf" single channel. Rows are stored bottom-up in the
/// file and converted to top-down here; non-finite payload values map to the
/// nodata sentinel, which round-trips as +inf.
FloatMap read_pfm(const std::string& path);
void write_pfm(const FloatMap& map, const std::string& path);

/// Middlebury .flo: float tag 202021.25, int32 dims, interleaved (u,v).
FlowField read_flo(const std::string& path);
void write_flo(const FlowField& flow, const std::string& path);

/// Normalized false-color rendering of a float map (debug output).
ColorImage render_false_color(const FloatMap& map);

} // namespace dco
