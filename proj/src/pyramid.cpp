#include "dco/pyramid.hpp"

namespace dco {

GrayImage downsample_half(const GrayImage& img) {
    if (img.width < 2 || img.height < 2)
        throw InputError("downsample_half: dimensions must be at least 2x2");
    GrayImage out(img.width / 2, img.height / 2);
    for (int y = 0; y < out.height; ++y) {
        for (int x = 0; x < out.width; ++x) {
            float sum = img.at(2 * x, 2 * y) + img.at(2 * x + 1, 2 * y) +
                        img.at(2 * x, 2 * y + 1) + img.at(2 * x + 1, 2 * y + 1);
            out.at(x, y) = sum * 0.25f;
        }
    }
    return out;
}

std::vector<GrayImage> build_pyramid(const GrayImage& img, int levels) {
    if (levels < 1) throw InputError("build_pyramid: levels must be >= 1");
    int w = img.width, h = img.height;
    for (int i = 1; i < levels; ++i) {
        w /= 2;
        h /= 2;
    }
    if (w < 8 || h < 8)
        throw InputError("build_pyramid: coarsest level would drop below 8 px");
    std::vector<GrayImage> pyramid;
    pyramid.reserve(static_cast<size_t>(levels));
    pyramid.push_back(img);
    for (int i = 1; i < levels; ++i) pyramid.push_back(downsample_half(pyramid.back()));
    return pyramid;
}

} // namespace dco
