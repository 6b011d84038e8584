#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "oracles.hpp"

using namespace decomcam;

namespace {

SelectedStack from_matrix(const oracle::Mat& m, std::size_t h, std::size_t w) {
    SelectedStack s;
    s.rows = m.rows;
    s.map_height = h;
    s.map_width = w;
    for (double v : m.a) s.data.push_back(float(v));
    for (std::size_t i = 0; i < m.rows; ++i) s.source_channels.push_back(i);
    return s;
}

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += double(a[i]) * b[i];
    return acc;
}

std::vector<ChannelWeight> weights_of(std::initializer_list<double> w) {
    std::vector<ChannelWeight> out;
    std::size_t k = 0;
    for (double v : w) out.push_back({k++, v});
    return out;
}

} // namespace

TEST(ChannelWeights, ZeroAndOnes) {
    Stack3 g(2, 2, 2);
    for (auto& v : g[1].values()) v = 1.0f;
    const auto w = channel_weights(g);
    ASSERT_EQ(w.size(), 2u);
    EXPECT_EQ(w[0].weight, 0.0);
    EXPECT_EQ(w[1].weight, 1.0);
    EXPECT_EQ(w[1].channel_index, 1u);
}

TEST(ChannelWeights, MatchesPerChannelMean) {
    const Stack3 g = oracle::random_stack(8, 3, 3, 17);
    const auto w = channel_weights(g);
    for (std::size_t k = 0; k < 8; ++k) {
        double sum = 0.0;
        for (std::size_t r = 0; r < 3; ++r)
            for (std::size_t c = 0; c < 3; ++c) sum += g[k](r, c);
        EXPECT_NEAR(w[k].weight, sum / 9.0, 1e-6);
    }
}

TEST(WeightedMaps, ScalarMultiply) {
    Stack3 a(3, 2, 2);
    for (auto& m : a) m = Map2(2, 2, std::vector<float>{1, 2, 3, 4});
    const Stack3 s = weighted_maps(a, weights_of({0.0, 1.0, -2.0}));
    for (float v : s[0].values()) EXPECT_EQ(v, 0.0f);
    EXPECT_EQ(s[1], a[1]);
    EXPECT_EQ(s[2], Map2(2, 2, std::vector<float>{-2, -4, -6, -8}));
}

TEST(WeightedMaps, CountMismatchThrows) {
    EXPECT_THROW(weighted_maps(Stack3(3, 2, 2), weights_of({1.0, 2.0})), invalid_argument);
}

TEST(SelectTopP, SpecExamples) {
    const Stack3 maps(4, 1, 1);
    EXPECT_EQ(select_top_p(Stack3(3, 1, 1), weights_of({3, 1, 2}), 2).source_channels,
              (std::vector<std::size_t>{0, 2}));
    EXPECT_EQ(select_top_p(Stack3(3, 1, 1), weights_of({3, 1, 2}), 3).source_channels,
              (std::vector<std::size_t>{0, 2, 1}));
    EXPECT_EQ(select_top_p(maps, weights_of({1, 1, 1, 0}), 2).source_channels,
              (std::vector<std::size_t>{0, 1}));
}

TEST(SelectTopP, RowsAreTheSelectedMaps) {
    const Stack3 maps = oracle::random_stack(5, 2, 3, 4);
    const auto sel = select_top_p(maps, weights_of({0.1, 0.9, -1, 0.5, 0.2}), 3);
    ASSERT_EQ(sel.rows, 3u);
    ASSERT_EQ(sel.cols(), 6u);
    const std::size_t expect[] = {1, 3, 4};
    for (std::size_t p = 0; p < 3; ++p)
        for (std::size_t i = 0; i < 6; ++i) EXPECT_EQ(sel.row(p)[i], maps[expect[p]].values()[i]);
}

TEST(SelectTopP, ClampsWithWarning) {
    const auto sel = select_top_p(Stack3(3, 1, 1), weights_of({1, 2, 3}), 10);
    EXPECT_EQ(sel.rows, 3u);
    ASSERT_EQ(sel.warnings.size(), 1u);
    EXPECT_NE(sel.warnings[0].find("clamped"), std::string::npos);
    EXPECT_THROW(select_top_p(Stack3(3, 1, 1), weights_of({1, 2, 3}), 0), invalid_argument);
}

TEST(SelectTopP, MatchesBruteForceMultiset) {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> small(-3, 3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t K = 1 + std::size_t(trial % 17);
        std::vector<ChannelWeight> w;
        for (std::size_t k = 0; k < K; ++k) w.push_back({k, double(small(rng))}); // many ties
        const std::size_t p = 1 + std::size_t(trial) % K;
        const auto sel = select_top_p(Stack3(K, 1, 1), w, p);
        std::vector<double> all;
        for (auto& cw : w) all.push_back(cw.weight);
        std::sort(all.rbegin(), all.rend());
        std::vector<double> got;
        for (auto c : sel.source_channels) got.push_back(w[c].weight);
        EXPECT_EQ(got, std::vector<double>(all.begin(), all.begin() + long(p)));
        for (std::size_t i = 1; i < got.size(); ++i)
            if (got[i] == got[i - 1]) { EXPECT_LT(sel.source_channels[i - 1], sel.source_channels[i]); }
    }
}

TEST(SvdDecompose, RankOneRows) {
    const std::size_t P = 5;
    const std::vector<float> v{1, 2, -0.5f, 3};
    SelectedStack s;
    s.rows = P;
    s.map_height = 2;
    s.map_width = 2;
    for (std::size_t p = 0; p < P; ++p) s.data.insert(s.data.end(), v.begin(), v.end());
    const auto dec = svd_decompose(s, 1);
    double vn = 0.0;
    for (float x : v) vn += double(x) * x;
    EXPECT_NEAR(dec.singular_values[0], std::sqrt(double(P) * vn), 1e-9);
    const auto f = dec.components[0].values();
    const double ratio = f[0] / v[0];
    EXPECT_GT(ratio, 0.0);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(f[i], ratio * v[i], 1e-5);
}

TEST(SvdDecompose, RankOneTrailingValuesVanish) {
    SelectedStack s;
    s.rows = 4;
    s.map_height = 1;
    s.map_width = 6;
    for (int p = 0; p < 4; ++p)
        for (int i = 0; i < 6; ++i) s.data.push_back(float((p + 1) * (i - 2)));
    const auto dec = svd_decompose(s, 3);
    EXPECT_EQ(dec.count(), 1u); // clamped to the numerical rank
    EXPECT_TRUE(std::any_of(dec.warnings.begin(), dec.warnings.end(),
                            [](const std::string& w) { return w.find("numerical rank") != std::string::npos; }));
}

TEST(SvdDecompose, ThreeByFourMatchesJacobi) {
    const oracle::Mat m = oracle::random_matrix(3, 4, 42);
    const auto dec = svd_decompose(from_matrix(m, 2, 2), 3);
    const auto ref = oracle::singular_values(m);
    ASSERT_EQ(dec.count(), 3u);
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(dec.singular_values[i], ref[i], 1e-5 * ref[i]);
}

TEST(SvdDecompose, TallMatrixUsesDirectPathAndMatchesJacobi) {
    const oracle::Mat m = oracle::random_matrix(20, 6, 7); // P > M*N
    const auto dec = svd_decompose(from_matrix(m, 2, 3), 6);
    const auto ref = oracle::singular_values(m);
    ASSERT_EQ(dec.count(), 6u);
    for (std::size_t i = 0; i < 6; ++i) EXPECT_NEAR(dec.singular_values[i], ref[i], 1e-5 * ref[0]);
}

TEST(SvdDecompose, OrthogonalRowsWithSingularNorms) {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        std::mt19937_64 rng(seed);
        const std::size_t P = 1 + rng() % 64, M = 1 + rng() % 16, N = 1 + rng() % 16;
        const auto m = oracle::random_matrix(P, M * N, seed);
        const auto dec = svd_decompose(from_matrix(m, M, N), std::min(P, M * N));
        for (std::size_t i = 0; i < dec.count(); ++i) {
            const auto fi = dec.components[i].values();
            const double ni = std::sqrt(dot(fi, fi));
            EXPECT_NEAR(ni, dec.singular_values[i], 1e-4 * dec.singular_values[0]);
            for (std::size_t j = i + 1; j < dec.count(); ++j) {
                const auto fj = dec.components[j].values();
                EXPECT_LE(std::abs(dot(fi, fj)), 1e-6 * ni * std::sqrt(dot(fj, fj)) + 1e-9)
                    << "seed " << seed << " rows " << i << "," << j;
            }
        }
        for (std::size_t i = 1; i < dec.count(); ++i)
            EXPECT_LE(dec.singular_values[i], dec.singular_values[i - 1]);
    }
}

TEST(SvdDecompose, FullRankReconstruction) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto m = oracle::random_matrix(6 + seed % 5, 12, seed + 100);
        const auto sel = from_matrix(m, 3, 4);
        const auto dec = svd_decompose(sel, sel.rows);
        // S ~= sum_i u_i f_i
        double err = 0.0, norm = 0.0;
        for (std::size_t r = 0; r < sel.rows; ++r)
            for (std::size_t c = 0; c < sel.cols(); ++c) {
                double rec = 0.0;
                for (std::size_t i = 0; i < dec.count(); ++i)
                    rec += dec.left_vectors[i][r] * dec.components[i].values()[c];
                err += (rec - m(r, c)) * (rec - m(r, c));
                norm += m(r, c) * m(r, c);
            }
        EXPECT_LE(std::sqrt(err / norm), 1e-5);
    }
}

TEST(SvdDecompose, SignCanonicalization) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto m = oracle::random_matrix(8, 9, seed + 7);
        const auto dec = svd_decompose(from_matrix(m, 3, 3), 8);
        for (const auto& f : dec.components) {
            double sum = 0.0;
            for (float v : f.values()) sum += v;
            EXPECT_GE(sum, 0.0);
        }
    }
}

TEST(SvdDecompose, EnergyFractionNonDecreasing) {
    const auto m = oracle::random_matrix(10, 16, 3);
    const auto dec = svd_decompose(from_matrix(m, 4, 4), 10);
    double total = 0.0;
    for (double s : oracle::singular_values(m)) total += s * s;
    double prev = 0.0, acc = 0.0;
    for (double s : dec.singular_values) {
        acc += s * s;
        EXPECT_GE(acc / total, prev);
        prev = acc / total;
    }
    EXPECT_NEAR(prev, 1.0, 1e-9);
}

TEST(SvdDecompose, ClampsQToMinDimension) {
    const auto dec = svd_decompose(from_matrix(oracle::random_matrix(3, 4, 1), 2, 2), 10);
    EXPECT_EQ(dec.count(), 3u);
    EXPECT_FALSE(dec.warnings.empty());
}

TEST(SvdDecompose, ZeroMatrixKeepsOneNullComponent) {
    SelectedStack s;
    s.rows = 2;
    s.map_height = 2;
    s.map_width = 2;
    s.data.assign(8, 0.0f);
    const auto dec = svd_decompose(s, 2);
    ASSERT_EQ(dec.count(), 1u);
    EXPECT_EQ(dec.singular_values[0], 0.0);
    for (float v : dec.components[0].values()) EXPECT_EQ(v, 0.0f);
}

TEST(SvdDecompose, NonFiniteInputFailsWithDiagnostics) {
    SelectedStack s;
    s.rows = 1;
    s.map_height = 1;
    s.map_width = 2;
    s.data = {1.0f, std::numeric_limits<float>::infinity()};
    try {
        svd_decompose(s, 1);
        FAIL();
    } catch (const computation_failed& e) {
        EXPECT_NE(std::string(e.what()).find("frobenius"), std::string::npos);
    }
}

TEST(SvdDecompose, ZeroQThrows) {
    EXPECT_THROW(svd_decompose(from_matrix(oracle::random_matrix(2, 2, 1), 1, 2), 0), invalid_argument);
}

TEST(BuildOssms, ConstantComponentGivesZeros) {
    Decomposition dec;
    dec.singular_values = {1.0};
    dec.components.push_back(Map2(3, 3, 2.0f));
    const auto set = build_ossms(dec, 8, 8);
    for (float v : set.maps[0].values()) EXPECT_EQ(v, 0.0f);
    EXPECT_EQ(set.weights, std::vector<double>{1.0});
}

TEST(BuildOssms, IdentityComposition) {
    Decomposition dec;
    dec.singular_values = {1.0};
    dec.components.push_back(Map2(2, 3, std::vector<float>{0, 0.25f, 1, 0.5f, 0.75f, 0.1f}));
    const auto set = build_ossms(dec, 2, 3);
    EXPECT_EQ(set.maps[0], dec.components[0]);
}

TEST(BuildOssms, NormalizesAfterUpsampling) {
    Decomposition dec;
    dec.singular_values = {2.0, 1.0};
    dec.components.push_back(oracle::random_stack(1, 7, 7, 21)[0]);
    dec.components.push_back(oracle::random_stack(1, 7, 7, 22)[0]);
    const auto set = build_ossms(dec, 224, 224);
    ASSERT_EQ(set.count(), 2u);
    for (std::size_t q = 0; q < 2; ++q) {
        const Map2 spec_order = oracle::normalize(oracle::upsample(dec.components[q], 224, 224));
        const Map2 other_order = oracle::upsample(oracle::normalize(dec.components[q]), 224, 224);
        const auto [lo, hi] = std::minmax_element(set.maps[q].values().begin(), set.maps[q].values().end());
        EXPECT_EQ(*lo, 0.0f);
        EXPECT_EQ(*hi, 1.0f);
        double max_diff_spec = 0.0, max_diff_other = 0.0;
        for (std::size_t i = 0; i < spec_order.size(); ++i) {
            const double v = set.maps[q].values()[i];
            max_diff_spec = std::max(max_diff_spec, std::abs(v - spec_order.values()[i]));
            max_diff_other = std::max(max_diff_other, std::abs(v - other_order.values()[i]));
        }
        EXPECT_LE(max_diff_spec, 1e-5);
        EXPECT_GT(max_diff_other, 1e-4); // interior grid extrema are not output pixels
        EXPECT_EQ(set.weights[q], 0.5);
    }
}

TEST(BuildOssms, EmptyDecompositionThrows) {
    EXPECT_THROW(build_ossms(Decomposition{}, 4, 4), invalid_argument);
}

TEST(RankOneCollapse, MatchesWeightedSum) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<float> u(0.1f, 2.0f);
        const Map2 pattern = oracle::random_stack(1, 5, 6, seed, 0.0f, 1.0f)[0];
        const std::size_t K = 12;
        Stack3 acts(K, 5, 6), grads(K, 5, 6);
        for (std::size_t k = 0; k < K; ++k) {
            const float a = u(rng), g = u(rng);
            for (std::size_t i = 0; i < pattern.size(); ++i) acts[k].values()[i] = a * pattern.values()[i];
            for (auto& v : grads[k].values()) v = g;
        }
        const auto w = channel_weights(grads);
        const auto sel = select_top_p(weighted_maps(acts, w), w, K);
        const auto set = build_ossms(svd_decompose(sel, 1), 20, 24);
        Map2 sum(5, 6);
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t i = 0; i < sum.size(); ++i) sum.values()[i] += float(w[k].weight) * acts[k].values()[i];
        const Map2 ref = oracle::normalize(oracle::upsample(sum, 20, 24));
        for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(set.maps[0].values()[i], ref.values()[i], 1e-5);
    }
}
