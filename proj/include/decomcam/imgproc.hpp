#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

/// Affine rescale to [0,1]. A constant map carries no localization signal and
/// maps to all zeros.
inline Map2 minmax_normalize(const Map2& m) {
    Map2 out(m.height(), m.width());
    if (m.empty()) return out;
    const auto [lo_it, hi_it] = std::minmax_element(m.values().begin(), m.values().end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) return out;
    const double range = hi - lo;
    auto src = m.values();
    auto dst = out.values();
    for (std::size_t i = 0; i < src.size(); ++i) {
        double v = (static_cast<double>(src[i]) - lo) / range;
        dst[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

/// Bilinear resize with the align-corners convention: input corner samples land
/// exactly on output corner pixels.
inline Map2 bilinear_upsample(const Map2& m, std::size_t out_h, std::size_t out_w) {
    if (out_h == 0 || out_w == 0) throw invalid_argument("bilinear_upsample: zero output size");
    if (m.empty()) throw invalid_argument("bilinear_upsample: empty input");

    const std::size_t in_h = m.height();
    const std::size_t in_w = m.width();
    const double sy = out_h > 1 ? double(in_h - 1) / double(out_h - 1) : 0.0;
    const double sx = out_w > 1 ? double(in_w - 1) / double(out_w - 1) : 0.0;

    // Column taps are shared by every output row.
    std::vector<std::size_t> x0(out_w), x1(out_w);
    std::vector<double> fx(out_w);
    for (std::size_t c = 0; c < out_w; ++c) {
        const double x = c * sx;
        x0[c] = std::min(static_cast<std::size_t>(x), in_w - 1);
        x1[c] = std::min(x0[c] + 1, in_w - 1);
        fx[c] = x - double(x0[c]);
    }

    Map2 out(out_h, out_w);
    for (std::size_t r = 0; r < out_h; ++r) {
        const double y = r * sy;
        const std::size_t y0 = std::min(static_cast<std::size_t>(y), in_h - 1);
        const std::size_t y1 = std::min(y0 + 1, in_h - 1);
        const double fy = y - double(y0);
        for (std::size_t c = 0; c < out_w; ++c) {
            const double top = (1.0 - fx[c]) * m(y0, x0[c]) + fx[c] * m(y0, x1[c]);
            const double bot = (1.0 - fx[c]) * m(y1, x0[c]) + fx[c] * m(y1, x1[c]);
            out(r, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
        }
    }
    return out;
}

/// Normalized 1-D Gaussian taps, length kernel_size, centered.
inline std::vector<double> gaussian_kernel(double sigma, std::size_t kernel_size) {
    if (!(sigma > 0.0)) throw invalid_argument("gaussian_kernel: sigma must be positive");
    if (kernel_size < 3 || kernel_size % 2 == 0)
        throw invalid_argument("gaussian_kernel: kernel size must be odd and >= 3");
    const long radius = static_cast<long>(kernel_size / 2);
    std::vector<double> k(kernel_size);
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        const double v = std::exp(-double(i * i) / (2.0 * sigma * sigma));
        k[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& v : k) v /= sum;
    return k;
}

namespace detail {

// Mirror index without repeating the edge sample (dcb|abcd|cba), folded
// periodically so pads wider than the signal stay in range.
inline std::size_t reflect_index(long i, std::size_t n) {
    if (n == 1) return 0;
    const long period = 2 * static_cast<long>(n) - 2;
    long j = i % period;
    if (j < 0) j += period;
    if (j >= static_cast<long>(n)) j = period - j;
    return static_cast<std::size_t>(j);
}

} // namespace detail

struct BlurConfig {
    double sigma = 10.0;
    std::size_t kernel_size = 51;
};

/// Separable Gaussian blur per channel with reflect padding.
inline Image gaussian_blur(const Image& img, double sigma, std::size_t kernel_size) {
    const auto k = gaussian_kernel(sigma, kernel_size);
    const long radius = static_cast<long>(kernel_size / 2);
    const std::size_t h = img.height();
    const std::size_t w = img.width();

    Image out(h, w);
    std::vector<double> tmp(h * w);
    for (std::size_t c = 0; c < Image::channels; ++c) {
        auto src = img.plane(c);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long t = -radius; t <= radius; ++t)
                    acc += k[std::size_t(t + radius)] *
                           src[r * w + detail::reflect_index(long(x) + t, w)];
                tmp[r * w + x] = acc;
            }
        auto dst = out.plane(c);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (long t = -radius; t <= radius; ++t)
                    acc += k[std::size_t(t + radius)] *
                           tmp[detail::reflect_index(long(r) + t, h) * w + x];
                dst[r * w + x] = static_cast<float>(acc);
            }
    }
    return out;
}

inline Image gaussian_blur(const Image& img, const BlurConfig& cfg) {
    return gaussian_blur(img, cfg.sigma, cfg.kernel_size);
}

/// Max-subtracted softmax. temperature divides the logits.
inline std::vector<double> softmax(std::span<const double> v, double temperature = 1.0) {
    if (v.empty()) throw invalid_argument("softmax: empty input");
    if (!(temperature > 0.0)) throw invalid_argument("softmax: temperature must be positive");
    const double hi = *std::max_element(v.begin(), v.end());
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = std::exp((v[i] - hi) / temperature);
        sum += out[i];
    }
    for (auto& x : out) x /= sum;
    return out;
}

inline std::vector<double> softmax(const std::vector<double>& v, double temperature = 1.0) {
    return softmax(std::span<const double>(v), temperature);
}

} // namespace decomcam
