#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "decomcam/error.hpp"

namespace decomcam {

/// Row-major 2-D grid of reals. Holds activation maps, sub-saliency maps and
/// final saliency maps alike.
template <typename T>
class basic_map {
public:
    using value_type = T;

    basic_map() = default;

    basic_map(std::size_t height, std::size_t width, T fill = T{})
        : height_(height), width_(width), data_(height * width, fill) {}

    basic_map(std::size_t height, std::size_t width, std::vector<T> data)
        : height_(height), width_(width), data_(std::move(data)) {
        if (data_.size() != height_ * width_)
            throw invalid_argument("map data length " + std::to_string(data_.size()) +
                                   " does not match " + std::to_string(height_) + "x" +
                                   std::to_string(width_));
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    T& operator()(std::size_t row, std::size_t col) noexcept { return data_[row * width_ + col]; }
    const T& operator()(std::size_t row, std::size_t col) const noexcept {
        return data_[row * width_ + col];
    }

    std::span<T> values() noexcept { return data_; }
    std::span<const T> values() const noexcept { return data_; }

    const std::vector<T>& data() const noexcept { return data_; }

    bool same_shape(const basic_map& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    bool all_finite() const noexcept {
        return std::all_of(data_.begin(), data_.end(), [](T v) { return std::isfinite(v); });
    }

    friend bool operator==(const basic_map&, const basic_map&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<T> data_;
};

using Map2 = basic_map<float>;

/// Three-channel image, channel-major (all of R, then G, then B).
class Image {
public:
    static constexpr std::size_t channels = 3;

    Image() = default;

    Image(std::size_t height, std::size_t width, float fill = 0.0f)
        : height_(height), width_(width), data_(channels * height * width, fill) {}

    Image(std::size_t height, std::size_t width, std::vector<float> data)
        : height_(height), width_(width), data_(std::move(data)) {
        if (data_.size() != channels * height_ * width_)
            throw invalid_argument("image data length " + std::to_string(data_.size()) +
                                   " does not match 3x" + std::to_string(height_) + "x" +
                                   std::to_string(width_));
    }

    std::size_t height() const noexcept { return height_; }
    std::size_t width() const noexcept { return width_; }
    std::size_t plane_size() const noexcept { return height_ * width_; }

    float& operator()(std::size_t c, std::size_t row, std::size_t col) noexcept {
        return data_[(c * height_ + row) * width_ + col];
    }
    float operator()(std::size_t c, std::size_t row, std::size_t col) const noexcept {
        return data_[(c * height_ + row) * width_ + col];
    }

    std::span<float> plane(std::size_t c) noexcept {
        return std::span<float>(data_).subspan(c * plane_size(), plane_size());
    }
    std::span<const float> plane(std::size_t c) const noexcept {
        return std::span<const float>(data_).subspan(c * plane_size(), plane_size());
    }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    const std::vector<float>& data() const noexcept { return data_; }

    bool same_shape(const Image& other) const noexcept {
        return height_ == other.height_ && width_ == other.width_;
    }

    friend bool operator==(const Image&, const Image&) = default;

private:
    std::size_t height_ = 0;
    std::size_t width_ = 0;
    std::vector<float> data_;
};

/// Ordered set of equally shaped maps: K activation channels, K gradient
/// channels, or Q decomposed components.
class Stack3 {
public:
    Stack3() = default;

    Stack3(std::size_t count, std::size_t height, std::size_t width)
        : maps_(count, Map2(height, width)) {}

    explicit Stack3(std::vector<Map2> maps) : maps_(std::move(maps)) {
        for (const auto& m : maps_)
            if (!m.same_shape(maps_.front()))
                throw invalid_argument("stack members must share one spatial shape");
    }

    std::size_t count() const noexcept { return maps_.size(); }
    std::size_t height() const noexcept { return maps_.empty() ? 0 : maps_.front().height(); }
    std::size_t width() const noexcept { return maps_.empty() ? 0 : maps_.front().width(); }
    bool empty() const noexcept { return maps_.empty(); }

    Map2& operator[](std::size_t k) noexcept { return maps_[k]; }
    const Map2& operator[](std::size_t k) const noexcept { return maps_[k]; }

    auto begin() noexcept { return maps_.begin(); }
    auto end() noexcept { return maps_.end(); }
    auto begin() const noexcept { return maps_.begin(); }
    auto end() const noexcept { return maps_.end(); }

    void push_back(Map2 m) {
        if (!maps_.empty() && !m.same_shape(maps_.front()))
            throw invalid_argument("stack members must share one spatial shape");
        maps_.push_back(std::move(m));
    }

    bool same_shape(const Stack3& other) const noexcept {
        return count() == other.count() && height() == other.height() && width() == other.width();
    }

    friend bool operator==(const Stack3&, const Stack3&) = default;

private:
    std::vector<Map2> maps_;
};

} // namespace decomcam
