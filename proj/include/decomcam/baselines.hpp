#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "decomcam/decomposition.hpp"
#include "decomcam/error.hpp"
#include "decomcam/imgproc.hpp"
#include "decomcam/integration.hpp"
#include "decomcam/model.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

/// ReLU(sum_k w_k A_k) at feature resolution, before upsampling.
inline Map2 gradcam_raw(const Stack3& acts, const Stack3& grads) {
    if (acts.empty()) throw invalid_argument("gradcam: empty activation stack");
    if (!acts.same_shape(grads))
        throw invalid_argument("gradcam: activation and gradient stacks differ in shape");
    const auto weights = channel_weights(grads);
    std::vector<double> acc(acts.height() * acts.width(), 0.0);
    for (std::size_t k = 0; k < acts.count(); ++k) {
        const auto a = acts[k].values();
        const double w = weights[k].weight;
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * a[i];
    }
    Map2 out(acts.height(), acts.width());
    for (std::size_t i = 0; i < acc.size(); ++i)
        out.values()[i] = static_cast<float>(std::max(acc[i], 0.0));
    return out;
}

inline SaliencyMap gradcam(const Stack3& acts, const Stack3& grads, std::size_t out_h,
                           std::size_t out_w) {
    return minmax_normalize(bilinear_upsample(gradcam_raw(acts, grads), out_h, out_w));
}

/// Projection of the activations onto their first principal direction (no
/// gradients involved), sign-fixed to a non-negative sum.
inline SaliencyMap eigencam(const Stack3& acts, std::size_t out_h, std::size_t out_w) {
    if (acts.empty()) throw invalid_argument("eigencam: empty activation stack");
    SelectedStack all;
    all.rows = acts.count();
    all.map_height = acts.height();
    all.map_width = acts.width();
    all.data.reserve(all.rows * all.cols());
    for (std::size_t k = 0; k < acts.count(); ++k) {
        all.source_channels.push_back(k);
        const auto v = acts[k].values();
        all.data.insert(all.data.end(), v.begin(), v.end());
    }
    Decomposition dec;
    try {
        dec = svd_decompose(all, 1);
    } catch (const invalid_argument& e) {
        throw computation_failed(std::string("eigencam: ") + e.what());
    }
    return minmax_normalize(bilinear_upsample(dec.components[0], out_h, out_w));
}

/// What a method may consult. scorer is null when no live model is available.
struct AttributionInputs {
    const Stack3& activations;
    const Stack3& gradients;
    const Image& image;
    ConceptId concept_id;
    const AnyScorer* scorer = nullptr;
    DecomConfig config{};
};

using AttributionMethod = std::function<SaliencyMap(const AttributionInputs&)>;

/// Name -> method. Names are the strings the CLI accepts.
inline const std::map<std::string, AttributionMethod>& method_registry() {
    static const std::map<std::string, AttributionMethod> registry = {
        {"decomcam",
         [](const AttributionInputs& in) {
             DecomConfig cfg = in.config;
             if (in.scorer == nullptr || !*in.scorer) cfg.weighting = WeightingMode::singular_value;
             const AnyScorer none;
             const AnyScorer& scorer = in.scorer ? *in.scorer : none;
             return explain_stacks(scorer, in.activations, in.gradients, in.image, in.concept_id, cfg)
                 .saliency;
         }},
        {"gradcam",
         [](const AttributionInputs& in) {
             return gradcam(in.activations, in.gradients, in.image.height(), in.image.width());
         }},
        {"eigencam",
         [](const AttributionInputs& in) {
             return eigencam(in.activations, in.image.height(), in.image.width());
         }},
    };
    return registry;
}

inline const AttributionMethod& find_method(const std::string& name) {
    const auto& reg = method_registry();
    auto it = reg.find(name);
    if (it == reg.end()) throw invalid_argument("unknown attribution method '" + name + "'");
    return it->second;
}

} // namespace decomcam
