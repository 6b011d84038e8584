#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/model.hpp"
#include "decomcam/parallel.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

struct CausalCurve {
    std::vector<double> fractions;
    std::vector<double> scores;
    double auc = 0.0;

    /// Area expressed as a percentage of the unmasked image's score.
    double normalized_auc(double full_score) const {
        if (full_score == 0.0) throw invalid_argument("normalized_auc: zero reference score");
        return 100.0 * auc / full_score;
    }
};

/// {0, 0.1, ..., 1.0}
inline std::vector<double> default_causal_grid() {
    std::vector<double> g(11);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = double(i) / 10.0;
    return g;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
    double a = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) a += 0.5 * (x[i] - x[i - 1]) * (y[i] + y[i - 1]);
    return a;
}

/// Pixel indices by descending saliency; equal values keep row-major order.
inline std::vector<std::size_t> saliency_order(const Map2& s) {
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto v = s.values();
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    return order;
}

inline std::array<float, 3> channel_means(const Image& img) {
    std::array<float, 3> m{};
    for (std::size_t c = 0; c < Image::channels; ++c) {
        double sum = 0.0;
        for (float v : img.plane(c)) sum += v;
        m[c] = img.plane_size() ? float(sum / double(img.plane_size())) : 0.0f;
    }
    return m;
}

/// KAM restores the top-t pixels into an all-mean image; RAM replaces the top-t
/// pixels of the original with the per-channel mean. Both are scored at every
/// fraction of the grid and integrated with the trapezoid rule.
template <Scorer S>
std::pair<CausalCurve, CausalCurve> causal_curves(const S& scorer, const Image& img,
                                                  const ConceptId& concept_id, const Map2& saliency,
                                                  const std::vector<double>& grid = default_causal_grid()) {
    if (saliency.height() != img.height() || saliency.width() != img.width())
        throw invalid_argument("causal_curves: saliency and image sizes differ");
    if (grid.size() < 2 || grid.front() != 0.0 || grid.back() != 1.0 ||
        !std::is_sorted(grid.begin(), grid.end(), std::less_equal<>{}) ||
        std::adjacent_find(grid.begin(), grid.end()) != grid.end())
        throw invalid_argument("causal_curves: grid must increase strictly from 0 to 1");

    const auto order = saliency_order(saliency);
    const auto mean = channel_means(img);
    const std::size_t n = img.plane_size();

    Image mean_img(img.height(), img.width());
    for (std::size_t c = 0; c < Image::channels; ++c)
        std::fill(mean_img.plane(c).begin(), mean_img.plane(c).end(), mean[c]);

    CausalCurve kam, ram;
    kam.fractions = ram.fractions = grid;
    for (double t : grid) {
        const auto count = std::min<std::size_t>(n, std::size_t(std::llround(t * double(n))));
        Image keep = mean_img;
        Image remove = img;
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t px = order[i];
            for (std::size_t c = 0; c < Image::channels; ++c) {
                keep.plane(c)[px] = img.plane(c)[px];
                remove.plane(c)[px] = mean[c];
            }
        }
        kam.scores.push_back(scorer.score(keep, concept_id));
        ram.scores.push_back(scorer.score(remove, concept_id));
    }
    kam.auc = trapezoid(kam.fractions, kam.scores);
    ram.auc = trapezoid(ram.fractions, ram.scores);
    return {std::move(kam), std::move(ram)};
}

struct CausalSample {
    std::string id;
    Image image;
    ConceptId concept_id;
    Map2 saliency;
};

struct StratumRow {
    std::string stratum;
    std::size_t samples = 0;
    double kam = 0.0;
    double ram = 0.0;
    double overall() const noexcept { return kam - ram; }
};

struct StratifiedReport {
    std::vector<StratumRow> rows; // one per non-empty stratum, in key order
    StratumRow aggregate;         // unweighted mean over strata
    std::vector<std::string> warnings;
};

inline constexpr const char* aggregate_stratum_name = "all";

/// Per-stratum means of (KAM, RAM) areas plus the unweighted mean over
/// strata. Empty strata are skipped with a warning.
inline StratifiedReport aggregate_strata(
    const std::map<std::string, std::vector<std::pair<double, double>>>& areas) {
    StratifiedReport rep;
    for (const auto& [name, v] : areas) {
        if (v.empty()) {
            rep.warnings.push_back("stratum '" + name + "' is empty; skipped");
            continue;
        }
        StratumRow row{name, v.size(), 0.0, 0.0};
        for (const auto& [k, r] : v) row.kam += k, row.ram += r;
        row.kam /= double(v.size());
        row.ram /= double(v.size());
        rep.rows.push_back(row);
    }
    rep.aggregate.stratum = aggregate_stratum_name;
    for (const auto& r : rep.rows) {
        rep.aggregate.samples += r.samples;
        rep.aggregate.kam += r.kam;
        rep.aggregate.ram += r.ram;
    }
    if (!rep.rows.empty()) {
        rep.aggregate.kam /= double(rep.rows.size());
        rep.aggregate.ram /= double(rep.rows.size());
    }
    return rep;
}

/// Per-stratum mean KAM/RAM area and Overall = KAM - RAM.
template <Scorer S>
StratifiedReport stratified_causal_report(const std::map<std::string, std::vector<CausalSample>>& groups,
                                          const S& scorer, std::size_t threads = 1) {
    std::map<std::string, std::vector<std::pair<double, double>>> areas;
    for (const auto& [name, samples] : groups) {
        auto& a = areas[name];
        a.resize(samples.size());
        parallel_for(samples.size(), scorer.concurrency_safe() ? threads : 1, [&](std::size_t i) {
            const auto& s = samples[i];
            auto [kam, ram] = causal_curves(scorer, s.image, s.concept_id, s.saliency);
            a[i] = {kam.auc, ram.auc};
        });
    }
    return aggregate_strata(areas);
}

} // namespace decomcam
