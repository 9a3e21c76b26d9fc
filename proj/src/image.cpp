#include "dco/image.hpp"

#include <algorithm>

namespace dco {

GrayImage to_gray(const ColorImage& img) {
    GrayImage out(img.width, img.height);
    const float* src = img.data.data();
    for (size_t i = 0; i < out.data.size(); ++i) {
        // Rec. 601 luma
        out.data[i] = 0.299f * src[3 * i] + 0.587f * src[3 * i + 1] + 0.114f * src[3 * i + 2];
    }
    return out;
}

ColorImage to_color(const GrayImage& img) {
    ColorImage out(img.width, img.height);
    for (size_t i = 0; i < img.data.size(); ++i) {
        out.data[3 * i] = img.data[i];
        out.data[3 * i + 1] = img.data[i];
        out.data[3 * i + 2] = img.data[i];
    }
    return out;
}

float sample_bilinear(const GrayImage& img, float x, float y) {
    x = std::clamp(x, 0.0f, static_cast<float>(img.width - 1));
    y = std::clamp(y, 0.0f, static_cast<float>(img.height - 1));
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    int x1 = std::min(x0 + 1, img.width - 1);
    int y1 = std::min(y0 + 1, img.height - 1);
    float fx = x - static_cast<float>(x0);
    float fy = y - static_cast<float>(y0);
    float top = img.at(x0, y0) * (1.0f - fx) + img.at(x1, y0) * fx;
    float bot = img.at(x0, y1) * (1.0f - fx) + img.at(x1, y1) * fx;
    return top * (1.0f - fy) + bot * fy;
}

} // namespace dco
