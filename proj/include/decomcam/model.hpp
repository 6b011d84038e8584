#pragma once

#include <concepts>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "decomcam/error.hpp"
#include "decomcam/tensor.hpp"

namespace decomcam {

using ConceptId = std::string;

/// Anything that maps (image, concept) to a scalar score. Implementations
/// report whether score() may be called from several threads at once.
template <typename S>
concept Scorer = requires(const S& s, const Image& img, const ConceptId& c) {
    { s.score(img, c) } -> std::convertible_to<double>;
    { s.concurrency_safe() } -> std::convertible_to<bool>;
};

struct ProbeResult {
    Stack3 activations;
    Stack3 gradients;
    double score = 0.0;
};

/// Supplies activations, gradients of the concept score with respect to those
/// activations, and the score itself, at one fixed layer.
template <typename P>
concept ActivationProbe = requires(const P& p, const Image& img, const ConceptId& c) {
    { p.probe(img, c) } -> std::same_as<ProbeResult>;
};

/// Type-erased scorer for call sites that pick a model at runtime.
class AnyScorer {
public:
    using fn_type = std::function<double(const Image&, const ConceptId&)>;

    AnyScorer() = default;
    AnyScorer(fn_type fn, bool concurrency_safe)
        : fn_(std::move(fn)), concurrency_safe_(concurrency_safe) {}

    template <Scorer S>
        requires(!std::same_as<std::remove_cvref_t<S>, AnyScorer>)
    explicit AnyScorer(std::shared_ptr<const S> impl)
        : fn_([impl](const Image& img, const ConceptId& c) { return double(impl->score(img, c)); }),
          concurrency_safe_(impl->concurrency_safe()) {}

    double score(const Image& img, const ConceptId& c) const {
        if (!fn_) throw invalid_argument("AnyScorer: no scorer bound");
        return fn_(img, c);
    }
    bool concurrency_safe() const noexcept { return concurrency_safe_; }
    explicit operator bool() const noexcept { return static_cast<bool>(fn_); }

private:
    fn_type fn_;
    bool concurrency_safe_ = false;
};

struct ToyCnnShape {
    std::size_t in_height = 57;
    std::size_t in_width = 57;
    std::size_t channels_out = 32;
    std::size_t kernel = 5;
    std::size_t stride = 4;
    std::size_t padding = 2;

    std::size_t out_height() const { return (in_height + 2 * padding - kernel) / stride + 1; }
    std::size_t out_width() const { return (in_width + 2 * padding - kernel) / stride + 1; }
};

/// Single-layer differentiable CNN:
///   y_c = < class_vector_c, GAP(ReLU(conv(img) + bias)) >
/// Immutable after construction, so every member is safe to call concurrently.
class ToyCnn {
public:
    ToyCnn(ToyCnnShape shape, std::vector<float> weights, std::vector<float> bias,
           std::map<ConceptId, std::vector<float>> class_vectors)
        : shape_(shape), weights_(std::move(weights)), bias_(std::move(bias)),
          classes_(std::move(class_vectors)) {
        const auto k = shape_.kernel;
        if (shape_.kernel == 0 || shape_.stride == 0 || shape_.channels_out == 0)
            throw invalid_argument("ToyCnn: kernel, stride and channel count must be positive");
        if (shape_.in_height + 2 * shape_.padding < k || shape_.in_width + 2 * shape_.padding < k)
            throw invalid_argument("ToyCnn: kernel larger than padded input");
        if (weights_.size() != shape_.channels_out * 3 * k * k)
            throw invalid_argument("ToyCnn: conv weight count mismatch");
        if (bias_.size() != shape_.channels_out) throw invalid_argument("ToyCnn: bias count mismatch");
        for (const auto& [name, v] : classes_)
            if (v.size() != shape_.channels_out)
                throw invalid_argument("ToyCnn: class vector '" + name + "' has wrong length");
    }

    /// Gaussian weights and class vectors from a fixed seed.
    static ToyCnn random(const ToyCnnShape& shape, std::uint64_t seed,
                         const std::vector<ConceptId>& concepts = {"target"}) {
        std::mt19937_64 rng(seed);
        std::normal_distribution<float> dist(0.0f, 0.2f);
        std::vector<float> w(shape.channels_out * 3 * shape.kernel * shape.kernel);
        for (auto& v : w) v = dist(rng);
        std::vector<float> b(shape.channels_out);
        for (auto& v : b) v = 0.5f * dist(rng);
        std::map<ConceptId, std::vector<float>> cls;
        for (const auto& c : concepts) {
            std::vector<float> cv(shape.channels_out);
            for (auto& v : cv) v = 5.0f * dist(rng);
            cls.emplace(c, std::move(cv));
        }
        return ToyCnn(shape, std::move(w), std::move(b), std::move(cls));
    }

    const ToyCnnShape& shape() const noexcept { return shape_; }
    const std::vector<float>& weights() const noexcept { return weights_; }
    const std::vector<float>& bias() const noexcept { return bias_; }
    const std::vector<float>& class_vector(const ConceptId& c) const {
        auto it = classes_.find(c);
        if (it == classes_.end()) throw invalid_argument("ToyCnn: unknown concept '" + c + "'");
        return it->second;
    }
    std::vector<ConceptId> concepts() const {
        std::vector<ConceptId> out;
        for (const auto& kv : classes_) out.push_back(kv.first);
        return out;
    }

    /// conv(img) + bias before the ReLU.
    Stack3 pre_activations(const Image& img) const {
        check_input(img);
        const auto& s = shape_;
        const std::size_t M = s.out_height(), N = s.out_width(), k = s.kernel;
        const long pad = static_cast<long>(s.padding);
        Stack3 out(s.channels_out, M, N);
        for (std::size_t co = 0; co < s.channels_out; ++co) {
            const float* wc = weights_.data() + co * 3 * k * k;
            for (std::size_t i = 0; i < M; ++i)
                for (std::size_t j = 0; j < N; ++j) {
                    double acc = bias_[co];
                    const long r0 = long(i * s.stride) - pad;
                    const long c0 = long(j * s.stride) - pad;
                    for (std::size_t ch = 0; ch < 3; ++ch)
                        for (std::size_t u = 0; u < k; ++u) {
                            const long r = r0 + long(u);
                            if (r < 0 || r >= long(s.in_height)) continue;
                            for (std::size_t v = 0; v < k; ++v) {
                                const long c = c0 + long(v);
                                if (c < 0 || c >= long(s.in_width)) continue;
                                acc += double(wc[(ch * k + u) * k + v]) *
                                       img(ch, std::size_t(r), std::size_t(c));
                            }
                        }
                    out[co](i, j) = static_cast<float>(acc);
                }
        }
        return out;
    }

    /// Post-ReLU activations and the concept score.
    std::pair<double, Stack3> forward(const Image& img, const ConceptId& concept_id) const {
        const auto& cv = class_vector(concept_id);
        Stack3 acts = pre_activations(img);
        for (auto& m : acts)
            for (auto& v : m.values()) v = v > 0.0f ? v : 0.0f;
        return {head(acts, cv), std::move(acts)};
    }

    /// dy/dA_k = class_vector[k] / (M*N) where the unit is active, 0 where the
    /// ReLU is closed.
    Stack3 backward(const Image& img, const ConceptId& concept_id) const {
        const auto& cv = class_vector(concept_id);
        Stack3 grads = pre_activations(img);
        const double area = double(shape_.out_height() * shape_.out_width());
        for (std::size_t k = 0; k < grads.count(); ++k) {
            const float g = static_cast<float>(cv[k] / area);
            for (auto& v : grads[k].values()) v = v > 0.0f ? g : 0.0f;
        }
        return grads;
    }

    ProbeResult probe(const Image& img, const ConceptId& concept_id) const {
        const auto& cv = class_vector(concept_id);
        Stack3 pre = pre_activations(img);
        Stack3 acts = pre;
        Stack3 grads = std::move(pre);
        const double area = double(shape_.out_height() * shape_.out_width());
        for (std::size_t k = 0; k < acts.count(); ++k) {
            const float g = static_cast<float>(cv[k] / area);
            auto a = acts[k].values();
            auto d = grads[k].values();
            for (std::size_t i = 0; i < a.size(); ++i) {
                const bool on = a[i] > 0.0f;
                a[i] = on ? a[i] : 0.0f;
                d[i] = on ? g : 0.0f;
            }
        }
        const double y = head(acts, cv);
        return {std::move(acts), std::move(grads), y};
    }

    double score(const Image& img, const ConceptId& concept_id) const {
        return forward(img, concept_id).first;
    }

    bool concurrency_safe() const noexcept { return true; }

private:
    void check_input(const Image& img) const {
        if (img.height() != shape_.in_height || img.width() != shape_.in_width)
            throw invalid_argument("ToyCnn: expected " + std::to_string(shape_.in_height) + "x" +
                                   std::to_string(shape_.in_width) + " input, got " +
                                   std::to_string(img.height()) + "x" +
                                   std::to_string(img.width()));
    }

    static double head(const Stack3& acts, const std::vector<float>& cv) {
        double y = 0.0;
        for (std::size_t k = 0; k < acts.count(); ++k) {
            double sum = 0.0;
            for (float a : acts[k].values()) sum += a;
            y += double(cv[k]) * sum / double(acts[k].size());
        }
        return y;
    }

    ToyCnnShape shape_;
    std::vector<float> weights_; // C_out x 3 x k x k
    std::vector<float> bias_;
    std::map<ConceptId, std::vector<float>> classes_;
};

static_assert(Scorer<ToyCnn>);
static_assert(ActivationProbe<ToyCnn>);

} // namespace decomcam
