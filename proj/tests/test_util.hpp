#pragma once

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>

#include "dco/image.hpp"

namespace testutil {

// xorshift64*: deterministic across platforms, unlike std distributions
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed ? seed : 0x9E3779B97F4A7C15ull) {}

    uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1Dull;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(next() % static_cast<uint64_t>(hi - lo + 1));
    }

private:
    uint64_t state_;
};

inline dco::GrayImage random_gray(int w, int h, Rng& rng) {
    dco::GrayImage img(w, h);
    for (float& v : img.data) v = static_cast<float>(rng.uniform());
    return img;
}

inline std::string make_temp_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    static uint64_t counter = 0;
    fs::path dir = fs::temp_directory_path() /
                   ("dco_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++));
    fs::create_directories(dir);
    return dir.string();
}

} // namespace testutil
