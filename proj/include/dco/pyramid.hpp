#pragma once

#include <vector>

#include "dco/image.hpp"

namespace dco {

/// 2x2 box-mean downsample to (floor(w/2), floor(h/2)). Dimension error
/// when either input dimension is below 2.
GrayImage downsample_half(const GrayImage& img);

/// Level 0 is the input, level i+1 halves level i. The coarsest level must
/// keep both dimensions >= 8 px.
std::vector<GrayImage> build_pyramid(const GrayImage& img, int levels);

} // namespace dco
