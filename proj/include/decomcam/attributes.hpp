#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/localization.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

struct AttributeBox {
    BBox box;
    std::string attribute;
};

/// Ranked OSSMs of one sample plus its annotated attribute (part) boxes.
struct AttributeSample {
    std::string id;
    std::string class_name;
    std::vector<Map2> ossms; // index 0 = largest singular value
    std::vector<AttributeBox> attributes;
};

/// MaxBoxAccV2 of a single map against one box set.
inline double single_map_max_box_acc(const Map2& map, std::vector<BBox> boxes) {
    const LocSample s{"", map, std::move(boxes), std::nullopt};
    return max_box_acc_v2(std::span<const LocSample>(&s, 1)).value;
}

inline std::map<std::string, std::vector<BBox>> boxes_by_attribute(const AttributeSample& s) {
    std::map<std::string, std::vector<BBox>> out;
    for (const auto& a : s.attributes) out[a.attribute].push_back(a.box);
    return out;
}

struct RankHitRate {
    std::size_t rank = 0; // 1-based
    double strict = 0.0;   // MaxBoxAccV2 criterion
    double pointing = 0.0; // pointing-game criterion
    std::size_t samples = 0;
};

struct AttributeRankDetail {
    std::string attribute;
    std::size_t rank = 0;
    double strict = 0.0;
    double pointing = 0.0;
    std::size_t samples = 0; // samples annotated with this attribute
};

struct HitRateReport {
    std::vector<RankHitRate> ranks;
    std::vector<AttributeRankDetail> per_attribute;
};

/// For each OSSM rank: the mean over samples of the best attribute score.
/// Strict score is MaxBoxAccV2 of the OSSM against that attribute's boxes;
/// pointing score is 1 when the OSSM maximum falls inside any of them.
inline HitRateReport hit_rate(const std::vector<AttributeSample>& samples) {
    if (samples.empty()) throw invalid_argument("hit_rate: empty sample set");
    std::size_t max_rank = 0;
    for (const auto& s : samples) {
        if (s.attributes.empty())
            throw invalid_argument("hit_rate: sample '" + s.id + "' has no attribute boxes");
        max_rank = std::max(max_rank, s.ossms.size());
    }

    HitRateReport rep;
    struct Acc { double strict = 0, pointing = 0; std::size_t n = 0; };
    std::map<std::pair<std::string, std::size_t>, Acc> detail;

    for (std::size_t q = 0; q < max_rank; ++q) {
        RankHitRate row{q + 1, 0.0, 0.0, 0};
        for (const auto& s : samples) {
            if (q >= s.ossms.size()) continue;
            double best_strict = 0.0, best_point = 0.0;
            for (const auto& [attr, boxes] : boxes_by_attribute(s)) {
                const double strict = single_map_max_box_acc(s.ossms[q], boxes);
                const double point = pointing_hit(s.ossms[q], boxes) ? 1.0 : 0.0;
                best_strict = std::max(best_strict, strict);
                best_point = std::max(best_point, point);
                auto& a = detail[{attr, q + 1}];
                a.strict += strict, a.pointing += point, ++a.n;
            }
            row.strict += best_strict;
            row.pointing += best_point;
            ++row.samples;
        }
        if (row.samples) {
            row.strict /= double(row.samples);
            row.pointing /= double(row.samples);
        }
        rep.ranks.push_back(row);
    }
    for (const auto& [key, a] : detail)
        rep.per_attribute.push_back({key.first, key.second, a.strict / double(a.n),
                                     a.pointing / double(a.n), a.n});
    return rep;
}

enum class HitCriterion { strict, pointing };

/// Whether any OSSM of a sample localizes one attribute.
struct AttributeVerdict {
    std::string sample_id;
    std::string class_name;
    std::string attribute;
    bool hit = false;
};

/// One verdict per (sample, attribute). Strict: some OSSM reaches IoU >= 0.5
/// at some threshold of the grid. Pointing: some OSSM peaks inside the boxes.
inline std::vector<AttributeVerdict> attribute_verdicts(const std::vector<AttributeSample>& samples,
                                                        HitCriterion criterion) {
    std::vector<AttributeVerdict> out;
    const auto taus = max_box_acc_taus();
    for (const auto& s : samples)
        for (const auto& [attr, boxes] : boxes_by_attribute(s)) {
            bool hit = false;
            for (const auto& h : s.ossms) {
                if (criterion == HitCriterion::pointing) {
                    hit = pointing_hit(h, boxes);
                } else {
                    for (double tau : taus)
                        if (best_iou(binarize_and_box(h, tau), boxes) >= default_box_acc_delta) {
                            hit = true;
                            break;
                        }
                }
                if (hit) break;
            }
            out.push_back({s.id, s.class_name, attr, hit});
        }
    return out;
}

struct AttributeFrequency {
    std::string attribute;
    std::size_t hits = 0;
    double proportion = 0.0; // share of the class's hits
};

/// Per class, attributes ranked by hit count (ties alphabetical) with each
/// attribute's share of that class's hits.
inline std::map<std::string, std::vector<AttributeFrequency>> attribute_hit_frequency(
    const std::vector<AttributeVerdict>& verdicts) {
    std::map<std::string, std::map<std::string, std::size_t>> counts;
    for (const auto& v : verdicts) {
        auto& c = counts[v.class_name][v.attribute];
        if (v.hit) ++c;
    }
    std::map<std::string, std::vector<AttributeFrequency>> out;
    for (const auto& [cls, attrs] : counts) {
        std::size_t total = 0;
        for (const auto& kv : attrs) total += kv.second;
        auto& rows = out[cls];
        for (const auto& [attr, n] : attrs)
            rows.push_back({attr, n, total ? double(n) / double(total) : 0.0});
        std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
            return a.hits > b.hits; // input is alphabetical, stable keeps ties that way
        });
    }
    return out;
}

} // namespace decomcam
