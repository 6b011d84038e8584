#pragma once

#include <algorithm>
#include <cstddef>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "decomcam/decomposition.hpp"
#include "decomcam/error.hpp"
#include "decomcam/imgproc.hpp"
#include "decomcam/model.hpp"
#include "decomcam/parallel.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

using SaliencyMap = Map2;

struct ScoreDelta {
    std::size_t ossm_index = 0;
    double delta = 0.0;
};

/// How OSSM integration weights are obtained.
enum class WeightingMode {
    score_delta,    // softmax of forward-score gains over the blurred reference
    singular_value, // softmax of singular values; for static dumps with no live scorer
};

struct DecomConfig {
    std::size_t p = 100;
    std::size_t q = 10;
    BlurConfig blur{};
    double temperature = 1.0;
    WeightingMode weighting = WeightingMode::score_delta;
    std::size_t threads = 1;
};

/// Published (P, Q) settings. "default" is the general setting; the others
/// are the per-dataset localization settings.
struct DecomPreset {
    const char* name;
    std::size_t p;
    std::size_t q;
};

inline constexpr DecomPreset decom_presets[] = {
    {"default", 100, 10},
    {"imagenetv2", 500, 1},
    {"coco", 500, 20},
    {"partimagenet", 1000, 10},
};

/// Probe image that is sharp where h is high and blurred elsewhere:
/// max(img * h, blurred * (1 - h)) per channel.
inline Image blend_blurred(const Image& img, const Map2& h, const Image& blurred) {
    if (img.height() != h.height() || img.width() != h.width())
        throw invalid_argument("blend_blurred: mask is " + std::to_string(h.height()) + "x" +
                               std::to_string(h.width()) + ", image is " +
                               std::to_string(img.height()) + "x" + std::to_string(img.width()));
    if (!img.same_shape(blurred)) throw invalid_argument("blend_blurred: blurred image shape mismatch");
    Image out(img.height(), img.width());
    const auto mask = h.values();
    for (std::size_t c = 0; c < Image::channels; ++c) {
        auto src = img.plane(c);
        auto blr = blurred.plane(c);
        auto dst = out.plane(c);
        for (std::size_t i = 0; i < mask.size(); ++i)
            dst[i] = std::max(src[i] * mask[i], blr[i] * (1.0f - mask[i]));
    }
    return out;
}

/// delta_q = f(blend(I, H_q)) - f(g(I)). The reference score is computed once.
template <Scorer S>
std::vector<ScoreDelta> score_deltas(const S& scorer, const Image& img, const ConceptId& concept_id,
                                     const OssmSet& ossms, const BlurConfig& blur,
                                     std::size_t threads = 1) {
    for (const auto& h : ossms.maps)
        if (h.height() != img.height() || h.width() != img.width())
            throw invalid_argument("score_deltas: OSSMs must be at image resolution");

    const Image blurred = gaussian_blur(img, blur);
    double reference = 0.0;
    try {
        reference = scorer.score(blurred, concept_id);
    } catch (const std::exception& e) {
        throw error(std::string("scorer failed on blurred reference: ") + e.what());
    }

    std::vector<ScoreDelta> out(ossms.count());
    auto one = [&](std::size_t q) {
        try {
            const Image probe = blend_blurred(img, ossms.maps[q], blurred);
            out[q] = {q, scorer.score(probe, concept_id) - reference};
        } catch (const std::exception& e) {
            throw error("scorer failed on OSSM " + std::to_string(q) + ": " + e.what());
        }
    };
    parallel_for(ossms.count(), scorer.concurrency_safe() ? threads : 1, one);
    return out;
}

/// L = sum_q softmax(delta)_q * H_q. Stores the weights back into ossms.
inline SaliencyMap integrate(OssmSet& ossms, const std::vector<ScoreDelta>& deltas,
                             double temperature = 1.0) {
    if (ossms.count() != deltas.size())
        throw invalid_argument("integrate: " + std::to_string(ossms.count()) + " OSSMs but " +
                               std::to_string(deltas.size()) + " deltas");
    if (ossms.count() == 0) throw invalid_argument("integrate: empty OSSM set");
    std::vector<double> logits(deltas.size());
    for (const auto& d : deltas) {
        if (d.ossm_index >= logits.size()) throw invalid_argument("integrate: delta index out of range");
        logits[d.ossm_index] = d.delta;
    }
    ossms.weights = softmax(logits, temperature);

    const auto& first = ossms.maps.front();
    std::vector<double> acc(first.size(), 0.0);
    for (std::size_t q = 0; q < ossms.count(); ++q) {
        const auto h = ossms.maps[q].values();
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += ossms.weights[q] * h[i];
    }
    SaliencyMap out(first.height(), first.width());
    auto dst = out.values();
    for (std::size_t i = 0; i < acc.size(); ++i)
        dst[i] = static_cast<float>(std::clamp(acc[i], 0.0, 1.0));
    return out;
}

/// Everything explain produces, for sidecars and diagnostics.
struct Explanation {
    OssmSet ossms;
    SaliencyMap saliency;
    std::vector<ScoreDelta> deltas;
    std::vector<std::size_t> selected_channels;
    std::vector<std::string> warnings;
};

/// Decomposition stage only: weights, selection, SVD and OSSMs at out_h x out_w.
inline Explanation decompose_stage(const Stack3& acts, const Stack3& grads, std::size_t out_h,
                                   std::size_t out_w, const DecomConfig& cfg) {
    Explanation ex;
    std::vector<ChannelWeight> weights;
    Stack3 maps;
    SelectedStack sel;
    Decomposition dec;
    try {
        if (acts.empty()) throw invalid_argument("no activation channels");
        if (!acts.same_shape(grads))
            throw invalid_argument("activation and gradient stacks differ in shape");
        weights = channel_weights(grads);
    } catch (const std::exception& e) {
        throw stage_error("channel_weights", e.what());
    }
    try {
        maps = weighted_maps(acts, weights);
    } catch (const std::exception& e) {
        throw stage_error("weighted_maps", e.what());
    }
    try {
        sel = select_top_p(maps, weights, cfg.p);
    } catch (const std::exception& e) {
        throw stage_error("select_top_p", e.what());
    }
    try {
        dec = svd_decompose(sel, cfg.q);
    } catch (const std::exception& e) {
        throw stage_error("svd_decompose", e.what());
    }
    try {
        ex.ossms = build_ossms(dec, out_h, out_w);
    } catch (const std::exception& e) {
        throw stage_error("build_ossms", e.what());
    }
    ex.selected_channels = std::move(sel.source_channels);
    ex.warnings = std::move(dec.warnings);
    return ex;
}

/// Integration stage with singular-value weighting, for sources that cannot
/// re-score probe images.
inline void integrate_by_singular_values(Explanation& ex, double temperature = 1.0) {
    try {
        std::vector<ScoreDelta> pseudo;
        for (std::size_t q = 0; q < ex.ossms.count(); ++q)
            pseudo.push_back({q, ex.ossms.singular_values[q]});
        ex.saliency = integrate(ex.ossms, pseudo, temperature);
    } catch (const std::exception& e) {
        throw stage_error("integrate", e.what());
    }
}

/// Full pipeline from precomputed activations/gradients plus a live scorer.
template <Scorer S>
Explanation explain_stacks(const S& scorer, const Stack3& acts, const Stack3& grads,
                           const Image& img, const ConceptId& concept_id, const DecomConfig& cfg) {
    Explanation ex = decompose_stage(acts, grads, img.height(), img.width(), cfg);
    if (cfg.weighting == WeightingMode::singular_value) {
        integrate_by_singular_values(ex, cfg.temperature);
        return ex;
    }
    try {
        ex.deltas = score_deltas(scorer, img, concept_id, ex.ossms, cfg.blur, cfg.threads);
    } catch (const std::exception& e) {
        throw stage_error("score_deltas", e.what());
    }
    try {
        ex.saliency = integrate(ex.ossms, ex.deltas, cfg.temperature);
    } catch (const std::exception& e) {
        throw stage_error("integrate", e.what());
    }
    return ex;
}

/// Probe the model, decompose, re-score each OSSM, and integrate.
template <Scorer S, ActivationProbe P>
Explanation explain(const S& scorer, const P& probe, const Image& img, const ConceptId& concept_id,
                    const DecomConfig& cfg) {
    ProbeResult pr;
    try {
        pr = probe.probe(img, concept_id);
    } catch (const std::exception& e) {
        throw stage_error("probe", e.what());
    }
    return explain_stacks(scorer, pr.activations, pr.gradients, img, concept_id, cfg);
}

} // namespace decomcam
