#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "oracles.hpp"

using namespace decomcam;

TEST(Map2, RejectsWrongDataLength) {
    EXPECT_THROW(Map2(2, 2, std::vector<float>{1, 2, 3}), invalid_argument);
    EXPECT_NO_THROW(Map2(2, 2, std::vector<float>{1, 2, 3, 4}));
}

TEST(Map2, FiniteCheck) {
    Map2 m(1, 2);
    EXPECT_TRUE(m.all_finite());
    m(0, 1) = std::nanf("");
    EXPECT_FALSE(m.all_finite());
}

TEST(Image, ChannelMajorLayout) {
    Image img(2, 3);
    img(1, 1, 2) = 7.0f;
    EXPECT_EQ(img.values()[(1 * 2 + 1) * 3 + 2], 7.0f);
    EXPECT_EQ(img.plane(1)[5], 7.0f);
    EXPECT_THROW(Image(2, 2, std::vector<float>(11)), invalid_argument);
}

TEST(Stack3, MembersShareShape) {
    Stack3 s(2, 3, 4);
    EXPECT_EQ(s.count(), 2u);
    EXPECT_EQ(s.height(), 3u);
    EXPECT_THROW(s.push_back(Map2(4, 3)), invalid_argument);
    EXPECT_THROW(Stack3(std::vector<Map2>{Map2(1, 2), Map2(2, 1)}), invalid_argument);
}

TEST(MinmaxNormalize, SpecExample) {
    const Map2 m(2, 2, std::vector<float>{0, 1, 2, 3});
    const Map2 n = minmax_normalize(m);
    EXPECT_FLOAT_EQ(n(0, 0), 0.0f);
    EXPECT_FLOAT_EQ(n(0, 1), 1.0f / 3.0f);
    EXPECT_FLOAT_EQ(n(1, 0), 2.0f / 3.0f);
    EXPECT_FLOAT_EQ(n(1, 1), 1.0f);
}

TEST(MinmaxNormalize, ConstantMapIsZero) {
    const Map2 n = minmax_normalize(Map2(2, 2, 5.0f));
    for (float v : n.values()) EXPECT_EQ(v, 0.0f);
}

TEST(MinmaxNormalize, SeededRandomSpansUnitInterval) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Map2 m = oracle::random_stack(1, 4, 4, seed, -3.0f, 9.0f)[0];
        const Map2 n = minmax_normalize(m);
        float lo = n(0, 0), hi = n(0, 0);
        for (std::size_t r = 0; r < 4; ++r)
            for (std::size_t c = 0; c < 4; ++c) lo = std::min(lo, n(r, c)), hi = std::max(hi, n(r, c));
        EXPECT_EQ(lo, 0.0f);
        EXPECT_EQ(hi, 1.0f);
    }
}

TEST(MinmaxNormalize, OrderPreservingAndIdempotent) {
    const Map2 m = oracle::random_stack(1, 6, 5, 3)[0];
    const Map2 n = minmax_normalize(m);
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
            if (m.values()[i] < m.values()[j]) { EXPECT_LE(n.values()[i], n.values()[j]); }
    const Map2 nn = minmax_normalize(n);
    for (std::size_t i = 0; i < n.size(); ++i) EXPECT_NEAR(nn.values()[i], n.values()[i], 1e-7);
}

TEST(BilinearUpsample, ConstantExtension) {
    const Map2 up = bilinear_upsample(Map2(1, 1, 0.75f), 4, 4);
    for (float v : up.values()) EXPECT_EQ(v, 0.75f);
}

TEST(BilinearUpsample, SameSizeIsIdentity) {
    const Map2 m(2, 2, std::vector<float>{1, -2, 3.5f, 4});
    EXPECT_EQ(bilinear_upsample(m, 2, 2), m);
}

TEST(BilinearUpsample, MatchesOracleOnSpecExample) {
    const Map2 m(2, 2, std::vector<float>{0, 1, 0, 1});
    const Map2 up = bilinear_upsample(m, 4, 4);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            EXPECT_NEAR(up(r, c), oracle::bilinear_at(m, 4, 4, r, c), 1e-6);
            EXPECT_NEAR(up(r, c), double(c) / 3.0, 1e-6);
        }
}

TEST(BilinearUpsample, MatchesOracleOnRandomMaps) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Map2 m = oracle::random_stack(1, 3 + seed % 5, 2 + seed % 4, seed)[0];
        const std::size_t h = 5 + seed * 3, w = 7 + seed * 2;
        const Map2 up = bilinear_upsample(m, h, w);
        for (std::size_t r = 0; r < h; ++r)
            for (std::size_t c = 0; c < w; ++c) EXPECT_NEAR(up(r, c), oracle::bilinear_at(m, h, w, r, c), 1e-6);
    }
}

TEST(BilinearUpsample, CornersAlign) {
    const Map2 m = oracle::random_stack(1, 7, 7, 11)[0];
    const Map2 up = bilinear_upsample(m, 224, 224);
    EXPECT_EQ(up(0, 0), m(0, 0));
    EXPECT_NEAR(up(223, 223), m(6, 6), 1e-6);
    EXPECT_NEAR(up(0, 223), m(0, 6), 1e-6);
    EXPECT_NEAR(up(223, 0), m(6, 0), 1e-6);
}

TEST(BilinearUpsample, StaysWithinInputRange) {
    const Map2 m = oracle::random_stack(1, 5, 4, 2)[0];
    const auto [lo, hi] = std::minmax_element(m.values().begin(), m.values().end());
    for (float v : bilinear_upsample(m, 31, 17).values()) {
        EXPECT_GE(v, *lo - 1e-6);
        EXPECT_LE(v, *hi + 1e-6);
    }
}

TEST(BilinearUpsample, CommutesWithScaling) {
    const Map2 m = oracle::random_stack(1, 4, 4, 5)[0];
    Map2 scaled = m;
    for (auto& v : scaled.values()) v *= 2.5f;
    const Map2 a = bilinear_upsample(scaled, 13, 9);
    const Map2 b = bilinear_upsample(m, 13, 9);
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a.values()[i], 2.5f * b.values()[i], 1e-6);
}

TEST(BilinearUpsample, ZeroOutputDimensionThrows) {
    EXPECT_THROW(bilinear_upsample(Map2(2, 2), 0, 3), invalid_argument);
    EXPECT_THROW(bilinear_upsample(Map2(2, 2), 3, 0), invalid_argument);
}

TEST(GaussianBlur, ConstantImageUnchanged) {
    const Image img(20, 15, 0.3f);
    const Image out = gaussian_blur(img, 10.0, 51);
    for (float v : out.values()) EXPECT_NEAR(v, 0.3f, 1e-6);
}

TEST(GaussianBlur, CenteredImpulseIsOuterProduct) {
    Image img(31, 31);
    img(1, 15, 15) = 1.0f;
    const Image out = gaussian_blur(img, 2.0, 13);
    // Analytic kernel, independent of gaussian_kernel().
    std::vector<double> k(13);
    double sum = 0.0;
    for (int i = -6; i <= 6; ++i) sum += k[std::size_t(i + 6)] = std::exp(-i * i / 8.0);
    for (auto& v : k) v /= sum;
    for (int dr = -6; dr <= 6; ++dr)
        for (int dc = -6; dc <= 6; ++dc)
            EXPECT_NEAR(out(1, std::size_t(15 + dr), std::size_t(15 + dc)), k[std::size_t(dr + 6)] * k[std::size_t(dc + 6)], 1e-7);
    EXPECT_EQ(out(1, 0, 0), 0.0f);
    for (float v : out.plane(0)) EXPECT_EQ(v, 0.0f);
}

TEST(GaussianBlur, InteriorImpulseSumsToOne) {
    Image img(41, 41);
    img(2, 20, 20) = 1.0f;
    const Image out = gaussian_blur(img, 3.0, 15);
    double sum = 0.0;
    for (float v : out.plane(2)) sum += v;
    EXPECT_NEAR(sum, 1.0, 1e-5);
}

TEST(GaussianBlur, PreservesMeanOfInteriorContent) {
    Image img(64, 64, 0.0f);
    std::mt19937 rng(4);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    for (std::size_t c = 0; c < 3; ++c)
        for (std::size_t r = 20; r < 44; ++r)
            for (std::size_t x = 20; x < 44; ++x) img(c, r, x) = u(rng);
    const Image out = gaussian_blur(img, 2.0, 13);
    for (std::size_t c = 0; c < 3; ++c) {
        double a = 0, b = 0;
        for (float v : img.plane(c)) a += v;
        for (float v : out.plane(c)) b += v;
        EXPECT_NEAR(b, a, 1e-4 * a);
    }
}

TEST(GaussianBlur, KernelWiderThanImageStaysInRange) {
    const Image img = oracle::random_image(7, 5, 1);
    const Image out = gaussian_blur(img, 10.0, 51);
    for (float v : out.values()) {
        EXPECT_GE(v, 0.0f);
        EXPECT_LE(v, 1.0f);
    }
}

TEST(GaussianBlur, RejectsBadKernels) {
    const Image img(8, 8);
    EXPECT_THROW(gaussian_blur(img, 1.0, 4), invalid_argument);
    EXPECT_THROW(gaussian_blur(img, 1.0, 1), invalid_argument);
    EXPECT_THROW(gaussian_blur(img, 0.0, 5), invalid_argument);
    EXPECT_THROW(gaussian_blur(img, -1.0, 5), invalid_argument);
}

TEST(ReflectIndex, MirrorsWithoutRepeatingEdge) {
    EXPECT_EQ(detail::reflect_index(-1, 5), 1u);
    EXPECT_EQ(detail::reflect_index(-2, 5), 2u);
    EXPECT_EQ(detail::reflect_index(5, 5), 3u);
    EXPECT_EQ(detail::reflect_index(6, 5), 2u);
    EXPECT_EQ(detail::reflect_index(-9, 5), 1u);
    EXPECT_EQ(detail::reflect_index(3, 1), 0u);
}

TEST(Softmax, SpecExamples) {
    const auto a = softmax(std::vector<double>{2, 2, 2});
    for (double v : a) EXPECT_NEAR(v, 1.0 / 3.0, 1e-12);
    const auto b = softmax(std::vector<double>{0.0, std::log(2.0)});
    EXPECT_NEAR(b[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(b[1], 2.0 / 3.0, 1e-12);
}

TEST(Softmax, ShiftInvariant) {
    const std::vector<double> v{0.3, -1.2, 4.0, 2.2};
    std::vector<double> w = v;
    for (auto& x : w) x += 100.0;
    const auto a = softmax(v), b = softmax(w);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-7);
}

TEST(Softmax, SumsToOneAcrossLengths) {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (std::size_t n : {1u, 2u, 3u, 10u, 100u, 1000u, 10000u}) {
        std::vector<double> v(n);
        for (auto& x : v) x = u(rng);
        const auto p = softmax(v);
        double sum = 0.0;
        for (double x : p) {
            EXPECT_GT(x, 0.0);
            sum += x;
        }
        EXPECT_NEAR(sum, 1.0, 1e-6);
    }
}

TEST(Softmax, EmptyThrows) {
    EXPECT_THROW(softmax(std::vector<double>{}), invalid_argument);
}

TEST(Softmax, TemperatureFlattens) {
    const auto hot = softmax(std::vector<double>{0.0, 1.0}, 10.0);
    const auto cold = softmax(std::vector<double>{0.0, 1.0}, 1.0);
    EXPECT_LT(hot[1], cold[1]);
    EXPECT_THROW(softmax(std::vector<double>{1.0}, 0.0), invalid_argument);
}
