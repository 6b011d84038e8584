#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "decomcam/imgproc.hpp"
#include "decomcam/localization.hpp"
#include "decomcam/model.hpp"
#include "decomcam/tensor.hpp"

// Planted-evidence fixtures: a smooth random background carrying one
// checkerboard patch, and a toy CNN whose target concept responds only to that
// checkerboard. The patch box is therefore the complete ground truth.

namespace decomcam::synthetic {

inline constexpr const char* planted_concept = "checker";

/// 57x57 input, 5x5 stride-4 conv with padding 2: a 15x15 feature grid whose
/// node i sits exactly on input pixel 4i, matching align-corners upsampling.
inline ToyCnnShape planted_shape() { return ToyCnnShape{57, 57, 32, 5, 4, 2}; }

inline constexpr std::size_t planted_detectors = 4;
inline constexpr float planted_amplitude = 0.25f;

/// First planted_detectors channels correlate with the checkerboard (with
/// small seeded perturbations so they are not exactly proportional); the rest
/// are random distractors with small class weights.
inline ToyCnn planted_model(std::uint64_t seed = 7, ToyCnnShape shape = planted_shape()) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> noise(0.0f, 1.0f);
    const std::size_t k = shape.kernel;
    std::vector<float> w(shape.channels_out * 3 * k * k);
    std::vector<float> b(shape.channels_out);
    std::vector<float> cls(shape.channels_out);
    for (std::size_t co = 0; co < shape.channels_out; ++co) {
        float* wc = w.data() + co * 3 * k * k;
        const bool detector = co < planted_detectors;
        for (std::size_t ch = 0; ch < 3; ++ch)
            for (std::size_t u = 0; u < k; ++u)
                for (std::size_t v = 0; v < k; ++v) {
                    const float sign = (u + v) % 2 == 0 ? 1.0f : -1.0f;
                    wc[(ch * k + u) * k + v] =
                        detector ? sign * (1.0f + 0.05f * noise(rng)) : 0.2f * noise(rng);
                }
        b[co] = detector ? -4.0f : 0.1f * noise(rng);
        cls[co] = detector ? 8.0f : 0.3f * noise(rng);
    }
    return ToyCnn(shape, std::move(w), std::move(b), {{planted_concept, std::move(cls)}});
}

struct PlantedSample {
    Image image;
    BBox patch;
};

/// Smooth background in [0.3, 0.7] per channel plus a checkerboard patch of
/// side 14..24 at a random position. Checker parity is global (row + col).
inline PlantedSample planted_sample(std::uint64_t seed, std::size_t height = 57,
                                    std::size_t width = 57) {
    std::mt19937_64 rng(seed * 0x9E3779B97F4A7C15ull + 1);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Image img(height, width);
    constexpr double two_pi = 2.0 * std::numbers::pi;
    for (std::size_t c = 0; c < Image::channels; ++c) {
        const double fx = 0.5 + 1.5 * unit(rng), fy = 0.5 + 1.5 * unit(rng);
        const double px = two_pi * unit(rng), py = two_pi * unit(rng);
        const double base = 0.45 + 0.1 * unit(rng);
        for (std::size_t r = 0; r < height; ++r)
            for (std::size_t x = 0; x < width; ++x) {
                const double v = base + 0.07 * std::sin(two_pi * fx * double(x) / double(width) + px) +
                                 0.07 * std::cos(two_pi * fy * double(r) / double(height) + py);
                img(c, r, x) = static_cast<float>(v);
            }
    }
    const std::size_t side_w = 14 + std::size_t(unit(rng) * 11.0);
    const std::size_t side_h = 14 + std::size_t(unit(rng) * 11.0);
    const std::size_t margin = 2;
    const std::size_t x0 = margin + std::size_t(unit(rng) * double(width - side_w - 2 * margin + 1));
    const std::size_t y0 = margin + std::size_t(unit(rng) * double(height - side_h - 2 * margin + 1));
    for (std::size_t c = 0; c < Image::channels; ++c)
        for (std::size_t r = y0; r < y0 + side_h; ++r)
            for (std::size_t x = x0; x < x0 + side_w; ++x)
                img(c, r, x) += (r + x) % 2 == 0 ? planted_amplitude : -planted_amplitude;
    return {std::move(img), BBox{double(x0), double(y0), double(x0 + side_w), double(y0 + side_h)}};
}

/// Saliency that is 1 on the planted box and 0 elsewhere.
inline Map2 box_saliency(const BBox& box, std::size_t height, std::size_t width) {
    Map2 m(height, width);
    for (std::size_t r = 0; r < height; ++r)
        for (std::size_t c = 0; c < width; ++c)
            if (box.contains_pixel(r, c)) m(r, c) = 1.0f;
    return m;
}

/// iid uniform saliency.
inline Map2 random_saliency(std::uint64_t seed, std::size_t height, std::size_t width) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<float> unit(0.0f, 1.0f);
    Map2 m(height, width);
    for (auto& v : m.values()) v = unit(rng);
    return m;
}

/// Blur parameters scaled from the 224-pixel default (sigma 10, kernel 51).
inline BlurConfig scaled_blur(std::size_t image_side) {
    const double ratio = double(image_side) / 224.0;
    std::size_t k = std::size_t(std::lround(51.0 * ratio));
    if (k % 2 == 0) ++k;
    return {10.0 * ratio, std::max<std::size_t>(k, 3)};
}

} // namespace decomcam::synthetic
