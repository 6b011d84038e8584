#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

/// Axis-aligned box in continuous pixel coordinates, origin top-left. Pixel
/// (row, col) covers [col, col+1) x [row, row+1).
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    double area() const noexcept { return valid() ? width() * height() : 0.0; }
    bool valid() const noexcept { return x1 < x2 && y1 < y2; }

    /// Pixel centre test, boundaries inclusive.
    bool contains_pixel(std::size_t row, std::size_t col) const noexcept {
        const double cx = double(col) + 0.5, cy = double(row) + 0.5;
        return cx >= x1 && cx <= x2 && cy >= y1 && cy <= y2;
    }

    friend bool operator==(const BBox&, const BBox&) = default;
};

using Mask = basic_map<std::uint8_t>;

inline double iou(const BBox& a, const BBox& b) {
    const double ix = std::min(a.x2, b.x2) - std::max(a.x1, b.x1);
    const double iy = std::min(a.y2, b.y2) - std::max(a.y1, b.y1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    return uni > 0.0 ? inter / uni : 0.0;
}

/// Threshold at tau (strictly greater), label 8-connected components, and box
/// the largest one. Equal areas resolve to the component whose box has the
/// earlier row-major top-left corner.
inline std::optional<BBox> binarize_and_box(const Map2& s, double tau) {
    const std::size_t h = s.height(), w = s.width();
    std::vector<std::int32_t> label(h * w, -1);
    std::vector<std::size_t> stack;

    std::size_t best_area = 0;
    std::size_t best_r0 = 0, best_c0 = 0, best_r1 = 0, best_c1 = 0;
    std::int32_t next = 0;

    for (std::size_t start = 0; start < h * w; ++start) {
        if (label[start] >= 0 || !(double(s.values()[start]) > tau)) continue;
        std::size_t area = 0;
        std::size_t r0 = h, c0 = w, r1 = 0, c1 = 0;
        label[start] = next;
        stack.push_back(start);
        while (!stack.empty()) {
            const std::size_t idx = stack.back();
            stack.pop_back();
            const std::size_t r = idx / w, c = idx % w;
            ++area;
            r0 = std::min(r0, r), r1 = std::max(r1, r);
            c0 = std::min(c0, c), c1 = std::max(c1, c);
            for (int dr = -1; dr <= 1; ++dr)
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    const long nr = long(r) + dr, nc = long(c) + dc;
                    if (nr < 0 || nc < 0 || nr >= long(h) || nc >= long(w)) continue;
                    const std::size_t nidx = std::size_t(nr) * w + std::size_t(nc);
                    if (label[nidx] >= 0 || !(double(s.values()[nidx]) > tau)) continue;
                    label[nidx] = next;
                    stack.push_back(nidx);
                }
        }
        ++next;
        const bool better = area > best_area ||
                            (area == best_area && (r0 < best_r0 || (r0 == best_r0 && c0 < best_c0)));
        if (better) {
            best_area = area;
            best_r0 = r0, best_c0 = c0, best_r1 = r1, best_c1 = c1;
        }
    }
    if (best_area == 0) return std::nullopt;
    return BBox{double(best_c0), double(best_r0), double(best_c1 + 1), double(best_r1 + 1)};
}

/// One saliency map with its ground truth.
struct LocSample {
    std::string id;
    Map2 saliency;
    std::vector<BBox> gt_boxes;
    std::optional<Mask> gt_mask;
};

/// IoU of the predicted box against its best-matching ground-truth box; 0
/// when nothing survives the threshold.
inline double best_iou(const std::optional<BBox>& pred, std::span<const BBox> gt) {
    if (!pred) return 0.0;
    double best = 0.0;
    for (const auto& g : gt) best = std::max(best, iou(*pred, g));
    return best;
}

inline double box_acc(std::span<const LocSample> samples, double tau, double delta) {
    if (samples.empty()) throw invalid_argument("box_acc: empty sample set");
    std::size_t hits = 0;
    for (const auto& s : samples) {
        if (s.gt_boxes.empty())
            throw invalid_argument("box_acc: sample '" + s.id + "' has no ground-truth box");
        if (best_iou(binarize_and_box(s.saliency, tau), s.gt_boxes) >= delta) ++hits;
    }
    return double(hits) / double(samples.size());
}

/// Default box IoU threshold for plain BoxAcc.
inline constexpr double default_box_acc_delta = 0.5;

inline constexpr std::array<double, 3> max_box_acc_deltas{0.3, 0.5, 0.7};

/// tau in {0, 0.05, ..., 0.95}.
inline std::vector<double> max_box_acc_taus() {
    std::vector<double> t(20);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0.05 * double(i);
    return t;
}

struct MaxBoxAccResult {
    double value = 0.0;
    std::array<double, 3> best_per_delta{};
    std::array<double, 3> best_tau_per_delta{};
};

using BoxAccFn = std::function<double(std::span<const LocSample>, double, double)>;

/// Mean over delta in {0.3, 0.5, 0.7} of max over the tau grid of BoxAcc.
/// box_acc_fn is called exactly once per (tau, delta) grid point.
inline MaxBoxAccResult max_box_acc_v2(std::span<const LocSample> samples,
                                      const BoxAccFn& box_acc_fn) {
    if (samples.empty()) throw invalid_argument("max_box_acc_v2: empty sample set");
    MaxBoxAccResult r;
    const auto taus = max_box_acc_taus();
    double sum = 0.0;
    for (std::size_t d = 0; d < max_box_acc_deltas.size(); ++d) {
        double best = -1.0;
        for (double tau : taus) {
            const double acc = box_acc_fn(samples, tau, max_box_acc_deltas[d]);
            if (acc > best) {
                best = acc;
                r.best_tau_per_delta[d] = tau;
            }
        }
        r.best_per_delta[d] = best;
        sum += best;
    }
    r.value = sum / 3.0;
    return r;
}

inline MaxBoxAccResult max_box_acc_v2(std::span<const LocSample> samples) {
    return max_box_acc_v2(samples, [](std::span<const LocSample> s, double t, double d) {
        return box_acc(s, t, d);
    });
}

/// First maximum in row-major order.
inline std::pair<std::size_t, std::size_t> argmax_pixel(const Map2& m) {
    const auto v = m.values();
    if (v.empty()) throw invalid_argument("argmax_pixel: empty map");
    const auto idx = std::size_t(std::max_element(v.begin(), v.end()) - v.begin());
    return {idx / m.width(), idx % m.width()};
}

inline bool pointing_hit(const Map2& saliency, std::span<const BBox> boxes,
                         const Mask* mask = nullptr) {
    const auto [r, c] = argmax_pixel(saliency);
    if (mask) return mask->height() > r && mask->width() > c && (*mask)(r, c) != 0;
    return std::any_of(boxes.begin(), boxes.end(),
                       [&](const BBox& b) { return b.contains_pixel(r, c); });
}

/// Hit when the global maximum lies inside any ground-truth box, or inside the
/// mask when use_mask is set and the sample carries one.
inline double pointing_game(std::span<const LocSample> samples, bool use_mask = false) {
    if (samples.empty()) throw invalid_argument("pointing_game: empty sample set");
    std::size_t hits = 0;
    for (const auto& s : samples) {
        const Mask* mask = use_mask && s.gt_mask ? &*s.gt_mask : nullptr;
        if (pointing_hit(s.saliency, s.gt_boxes, mask)) ++hits;
    }
    return double(hits) / double(samples.size());
}

} // namespace decomcam
