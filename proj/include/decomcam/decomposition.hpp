#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "decomcam/error.hpp"
#include "decomcam/imgproc.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

/// Global-average-pooled gradient of one channel.
struct ChannelWeight {
    std::size_t channel_index = 0;
    double weight = 0.0;
};

/// Top-P class-discriminative maps, flattened, one row per selected channel.
struct SelectedStack {
    std::size_t rows = 0;
    std::size_t map_height = 0;
    std::size_t map_width = 0;
    std::vector<float> data; // rows x (map_height * map_width), row-major
    std::vector<std::size_t> source_channels;
    std::vector<std::string> warnings;

    std::size_t cols() const noexcept { return map_height * map_width; }
    std::span<const float> row(std::size_t p) const noexcept {
        return std::span<const float>(data).subspan(p * cols(), cols());
    }
};

struct Decomposition {
    std::vector<double> singular_values;          // non-increasing
    Stack3 components;                            // F_q at M x N, pre-normalization
    std::vector<std::vector<double>> left_vectors; // Q vectors of length P
    std::vector<std::string> warnings;

    std::size_t count() const noexcept { return singular_values.size(); }
};

/// Q sub-saliency maps at input resolution plus their integration weights.
struct OssmSet {
    std::vector<Map2> maps;
    std::vector<double> singular_values;
    std::vector<double> weights;

    std::size_t count() const noexcept { return maps.size(); }
};

/// Singular values below this fraction of the largest count as zero.
inline constexpr double numerical_rank_tolerance = 1e-7;

/// w_k = mean over the M x N grid of dy/dA_k, in channel order.
inline std::vector<ChannelWeight> channel_weights(const Stack3& grads) {
    std::vector<ChannelWeight> out;
    out.reserve(grads.count());
    for (std::size_t k = 0; k < grads.count(); ++k) {
        const auto v = grads[k].values();
        double sum = 0.0;
        for (float g : v) sum += g;
        out.push_back({k, v.empty() ? 0.0 : sum / double(v.size())});
    }
    return out;
}

/// S_k = w_k * A_k.
inline Stack3 weighted_maps(const Stack3& acts, const std::vector<ChannelWeight>& weights) {
    if (acts.count() != weights.size())
        throw invalid_argument("weighted_maps: " + std::to_string(acts.count()) +
                               " channels but " + std::to_string(weights.size()) + " weights");
    std::vector<Map2> maps;
    maps.reserve(acts.count());
    for (std::size_t k = 0; k < acts.count(); ++k) {
        Map2 s = acts[k];
        const float w = static_cast<float>(weights[k].weight);
        for (auto& v : s.values()) v *= w;
        maps.push_back(std::move(s));
    }
    return Stack3(std::move(maps));
}

/// Channel order by descending weight, lower index first on ties.
inline std::vector<std::size_t> rank_channels(const std::vector<ChannelWeight>& weights,
                                              std::size_t p) {
    std::vector<std::size_t> order(weights.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto before = [&](std::size_t a, std::size_t b) {
        if (weights[a].weight != weights[b].weight) return weights[a].weight > weights[b].weight;
        return weights[a].channel_index < weights[b].channel_index;
    };
    p = std::min(p, order.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<long>(p), order.end(), before);
    order.resize(p);
    return order;
}

inline SelectedStack select_top_p(const Stack3& maps, const std::vector<ChannelWeight>& weights,
                                  std::size_t p) {
    if (maps.count() != weights.size())
        throw invalid_argument("select_top_p: map/weight count mismatch");
    if (p == 0) throw invalid_argument("select_top_p: p must be at least 1");
    if (maps.empty()) throw invalid_argument("select_top_p: empty stack");

    SelectedStack sel;
    if (p > maps.count()) {
        sel.warnings.push_back("p=" + std::to_string(p) + " exceeds channel count " +
                               std::to_string(maps.count()) + "; clamped");
        p = maps.count();
    }
    sel.map_height = maps.height();
    sel.map_width = maps.width();
    sel.rows = p;
    sel.data.reserve(p * sel.cols());
    for (std::size_t idx : rank_channels(weights, p)) {
        sel.source_channels.push_back(weights[idx].channel_index);
        const auto v = maps[idx].values();
        sel.data.insert(sel.data.end(), v.begin(), v.end());
    }
    return sel;
}

namespace detail {

inline std::string condition_report(const Eigen::MatrixXd& s) {
    std::ostringstream os;
    os << "matrix " << s.rows() << "x" << s.cols() << ", frobenius norm " << s.norm()
       << ", max |entry| " << (s.size() ? s.cwiseAbs().maxCoeff() : 0.0)
       << ", finite " << (s.allFinite() ? "yes" : "no");
    return os.str();
}

} // namespace detail

/// F = U[:, :q]^T S with S the selected stack. Rows of F are orthogonal with
/// norms equal to the singular values; each row is sign-flipped to a
/// non-negative entry sum.
inline Decomposition svd_decompose(const SelectedStack& sel, std::size_t q) {
    if (q == 0) throw invalid_argument("svd_decompose: q must be at least 1");
    if (sel.rows == 0 || sel.cols() == 0) throw invalid_argument("svd_decompose: empty stack");

    const auto P = static_cast<Eigen::Index>(sel.rows);
    const auto D = static_cast<Eigen::Index>(sel.cols());
    Eigen::MatrixXd s(P, D);
    for (Eigen::Index r = 0; r < P; ++r)
        for (Eigen::Index c = 0; c < D; ++c) s(r, c) = sel.data[std::size_t(r * D + c)];

    if (!s.allFinite())
        throw computation_failed("svd_decompose: non-finite input; " + detail::condition_report(s));

    Decomposition dec;
    dec.warnings = sel.warnings;

    Eigen::VectorXd sigma;
    Eigen::MatrixXd u; // P x r, columns sorted by descending sigma
    if (P <= D) {
        const Eigen::MatrixXd gram = s * s.transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success)
            throw computation_failed("svd_decompose: eigensolver did not converge; " +
                                     detail::condition_report(s));
        // Eigen returns ascending eigenvalues.
        sigma = eig.eigenvalues().reverse().cwiseMax(0.0).cwiseSqrt();
        u = eig.eigenvectors().rowwise().reverse();
    } else {
        Eigen::BDCSVD<Eigen::MatrixXd> svd(s, Eigen::ComputeThinU);
        if (svd.info() != Eigen::Success)
            throw computation_failed("svd_decompose: SVD did not converge; " +
                                     detail::condition_report(s));
        sigma = svd.singularValues();
        u = svd.matrixU();
    }

    const std::size_t max_q = static_cast<std::size_t>(sigma.size());
    if (q > max_q) {
        dec.warnings.push_back("q=" + std::to_string(q) + " exceeds min(P, M*N)=" +
                               std::to_string(max_q) + "; clamped");
        q = max_q;
    }
    const double sigma_max = sigma.size() ? sigma(0) : 0.0;
    std::size_t rank = 0;
    while (rank < max_q && sigma(Eigen::Index(rank)) >= numerical_rank_tolerance * sigma_max &&
           sigma(Eigen::Index(rank)) > 0.0)
        ++rank;
    if (rank == 0) {
        dec.warnings.push_back("selected stack is numerically zero; keeping one null component");
        rank = 1;
    }
    if (q > rank) {
        dec.warnings.push_back("q=" + std::to_string(q) + " exceeds numerical rank " +
                               std::to_string(rank) + "; clamped");
        q = rank;
    }

    const auto M = sel.map_height;
    const auto N = sel.map_width;
    for (std::size_t i = 0; i < q; ++i) {
        Eigen::VectorXd ui = u.col(Eigen::Index(i));
        Eigen::RowVectorXd f = ui.transpose() * s;
        if (f.sum() < 0.0) {
            f = -f;
            ui = -ui;
        }
        Map2 comp(M, N);
        for (Eigen::Index c = 0; c < D; ++c) comp.values()[std::size_t(c)] = float(f(c));
        dec.components.push_back(std::move(comp));
        dec.singular_values.push_back(sigma(Eigen::Index(i)));
        dec.left_vectors.emplace_back(ui.data(), ui.data() + ui.size());
    }
    return dec;
}

/// H_q = minmax_normalize(bilinear_upsample(F_q)); weights start uniform.
inline OssmSet build_ossms(const Decomposition& dec, std::size_t out_h, std::size_t out_w) {
    if (dec.count() == 0) throw invalid_argument("build_ossms: empty decomposition");
    OssmSet set;
    set.singular_values = dec.singular_values;
    set.maps.reserve(dec.count());
    for (const auto& f : dec.components)
        set.maps.push_back(minmax_normalize(bilinear_upsample(f, out_h, out_w)));
    set.weights.assign(dec.count(), 1.0 / double(dec.count()));
    return set;
}

} // namespace decomcam
