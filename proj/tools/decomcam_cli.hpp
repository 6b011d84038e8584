#pragma once

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "decomcam/decomcam.hpp"

namespace decomcam::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int exit_ok = 0;
inline constexpr int exit_failure = 1;
inline constexpr int exit_input = 2;
inline constexpr int exit_sample_failures = 3;
inline constexpr int exit_config = 64;

/// Invalid flag values or combinations.
class config_error : public error {
public:
    using error::error;
};

struct RunConfig {
    std::string method = "decomcam";
    std::string preset;
    std::size_t p = 100;
    std::size_t q = 10;
    double blur_sigma = 0.0;     // 0: scaled from sigma 10 at 224 px
    std::size_t blur_kernel = 0; // 0: scaled from 51 at 224 px
    double temperature = 1.0;
    std::string scorer = "toy"; // toy | dump | dump+endpoint
    std::string endpoint;
    std::string dump;
    std::string image;
    std::string concept_id;
    std::string annotations;
    std::string metric_suite = "loc";
    std::string causal_scale = "raw";
    std::string out_dir = ".";
    std::string out;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
    std::string config_file;
};

inline bool live_scorer(const RunConfig& c) { return c.scorer != "dump"; }

/// Blur actually used for an image of the given size.
inline BlurConfig resolve_blur(const RunConfig& c, std::size_t h, std::size_t w) {
    BlurConfig b = synthetic::scaled_blur(std::max(h, w));
    if (c.blur_sigma > 0.0) b.sigma = c.blur_sigma;
    if (c.blur_kernel > 0) b.kernel_size = c.blur_kernel;
    return b;
}

inline DecomConfig decom_config(const RunConfig& c, std::size_t h, std::size_t w, std::size_t threads) {
    DecomConfig d;
    d.p = c.p;
    d.q = c.q;
    d.blur = resolve_blur(c, h, w);
    d.temperature = c.temperature;
    d.threads = threads;
    if (!live_scorer(c)) d.weighting = WeightingMode::singular_value;
    return d;
}

/// Resolved settings in a fixed order, echoed into every report.
inline std::vector<std::pair<std::string, std::string>> config_echo(const RunConfig& c,
                                                                    const std::string& command) {
    auto num = [](double v) { return format_value(v); };
    std::vector<std::pair<std::string, std::string>> e = {
        {"command", command},
        {"method", c.method},
        {"preset", c.preset.empty() ? "none" : c.preset},
        {"p", std::to_string(c.p)},
        {"q", std::to_string(c.q)},
        {"blur_sigma", c.blur_sigma > 0 ? num(c.blur_sigma) : "scaled(10 at 224px)"},
        {"blur_kernel", c.blur_kernel > 0 ? std::to_string(c.blur_kernel) : "scaled(51 at 224px)"},
        {"temperature", num(c.temperature)},
        {"weighting", live_scorer(c) ? "score_delta" : "singular_value"},
        {"scorer", c.scorer},
        {"endpoint", c.endpoint},
        {"dump", c.dump},
        {"image", c.image},
        {"concept", c.concept_id},
        {"annotations", c.annotations},
        {"metric_suite", c.metric_suite},
        {"causal_scale", c.causal_scale},
        {"pointing_criterion", "box"},
        {"seed", std::to_string(c.seed)},
        {"threads", std::to_string(c.threads)},
    };
    return e;
}

inline void validate(RunConfig& c, const std::string& command) {
    if (!c.preset.empty()) {
        auto it = std::find_if(std::begin(decom_presets), std::end(decom_presets),
                               [&](const DecomPreset& p) { return c.preset == p.name; });
        if (it == std::end(decom_presets)) throw config_error("unknown preset '" + c.preset + "'");
    }
    const bool precomputed = c.method == "precomputed";
    if (!method_registry().contains(c.method) && !(precomputed && command == "eval"))
        throw config_error("unknown method '" + c.method + "'");
    if (c.p < 1) throw config_error("--p must be at least 1");
    if (c.q < 1) throw config_error("--q must be at least 1");
    if (c.blur_sigma < 0.0) throw config_error("--blur-sigma must be positive");
    if (c.blur_kernel != 0 && (c.blur_kernel < 3 || c.blur_kernel % 2 == 0))
        throw config_error("--blur-kernel must be odd and at least 3");
    if (!(c.temperature > 0.0)) throw config_error("--temperature must be positive");
    if (c.threads < 1) throw config_error("--threads must be at least 1");
    if (c.scorer != "toy" && c.scorer != "dump" && c.scorer != "dump+endpoint")
        throw config_error("--scorer must be toy, dump or dump+endpoint");
    if (c.scorer == "dump+endpoint" && c.endpoint.empty())
        throw config_error("--scorer dump+endpoint needs --endpoint host:port");
    if (command == "explain" && c.scorer != "toy" && c.dump.empty())
        throw config_error("--scorer " + c.scorer + " needs --dump");
    if (command == "eval") {
        if (c.metric_suite != "loc" && c.metric_suite != "causal" && c.metric_suite != "attr")
            throw config_error("--metric-suite must be loc, causal or attr");
        if (c.metric_suite == "causal" && !live_scorer(c))
            throw config_error("the causal suite re-scores images and needs a live scorer");
        if (c.metric_suite == "attr" && c.method != "decomcam")
            throw config_error("the attr suite needs OSSMs, use --method decomcam");
        if (c.causal_scale != "raw" && c.causal_scale != "percent")
            throw config_error("--causal-scale must be raw or percent");
    }
}

/// Everything one sample contributes to a method.
struct SampleInputs {
    Image image;
    Stack3 activations;
    Stack3 gradients;
    ConceptId concept_id;
    double score = 0.0;
    AnyScorer scorer; // empty when no live scorer
};

inline ToyCnnShape toy_shape(std::size_t h, std::size_t w) {
    ToyCnnShape s = synthetic::planted_shape();
    s.in_height = h;
    s.in_width = w;
    return s;
}

/// "planted:<seed>" or a PNG path.
inline Image load_image(const std::string& spec) {
    if (spec.starts_with("planted:")) {
        const std::string digits = spec.substr(8);
        if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
            throw schema_error("bad planted image spec '" + spec + "'");
        return synthetic::planted_sample(std::stoull(digits)).image;
    }
    return from_rgb8(read_png(spec));
}

inline SampleInputs toy_inputs(const RunConfig& c, Image img, const std::string& concept_id) {
    auto model = std::make_shared<const ToyCnn>(
        synthetic::planted_model(c.seed, toy_shape(img.height(), img.width())));
    SampleInputs in;
    in.concept_id = concept_id.empty() ? synthetic::planted_concept : concept_id;
    auto pr = model->probe(img, in.concept_id);
    in.image = std::move(img);
    in.activations = std::move(pr.activations);
    in.gradients = std::move(pr.gradients);
    in.score = pr.score;
    in.scorer = AnyScorer(model);
    return in;
}

inline SampleInputs dump_inputs(const RunConfig& c, const std::string& path, const std::string& concept_id) {
    TensorDump d = load_tensor_dump(path);
    SampleInputs in;
    in.image = std::move(d.image);
    in.activations = std::move(d.activations);
    in.gradients = std::move(d.gradients);
    in.concept_id = concept_id.empty() ? d.concept_id : concept_id;
    in.score = d.score;
    if (c.scorer == "dump+endpoint") in.scorer = AnyScorer(std::make_shared<const RemoteScorer>(c.endpoint));
    return in;
}

inline Explanation run_decomcam(const RunConfig& c, const SampleInputs& in, std::size_t threads) {
    const DecomConfig cfg = decom_config(c, in.image.height(), in.image.width(), threads);
    return explain_stacks(in.scorer, in.activations, in.gradients, in.image, in.concept_id, cfg);
}

inline SaliencyMap run_method(const RunConfig& c, const SampleInputs& in) {
    AttributionInputs ai{in.activations, in.gradients, in.image, in.concept_id,
                         in.scorer ? &in.scorer : nullptr,
                         decom_config(c, in.image.height(), in.image.width(), 1)};
    return find_method(c.method)(ai);
}

inline std::string ossm_file_name(std::size_t q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ossm_%02zu.png", q + 1);
    return buf;
}

inline void make_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw io_error("cannot create output directory '" + dir + "': " + ec.message());
}

inline int cmd_explain(const RunConfig& c, std::ostream& out) {
    SampleInputs in;
    if (c.scorer == "toy") {
        Image img = c.image.empty() ? synthetic::planted_sample(c.seed).image : load_image(c.image);
        in = toy_inputs(c, std::move(img), c.concept_id);
    } else {
        in = dump_inputs(c, c.dump, c.concept_id);
    }
    make_out_dir(c.out_dir);
    const auto t0 = std::chrono::steady_clock::now();

    json side;
    json cfg = json::object();
    for (const auto& [k, v] : config_echo(c, "explain")) cfg[k] = v;
    const BlurConfig blur = resolve_blur(c, in.image.height(), in.image.width());
    cfg["resolved_blur_sigma"] = blur.sigma;
    cfg["resolved_blur_kernel"] = blur.kernel_size;
    side["config"] = cfg;
    side["concept"] = in.concept_id;
    side["score"] = in.score;
    side["image_size"] = {in.image.height(), in.image.width()};
    side["feature_shape"] = {in.activations.count(), in.activations.height(), in.activations.width()};

    std::vector<std::string> files{"saliency.png"};
    SaliencyMap saliency;
    if (c.method == "decomcam") {
        Explanation ex = run_decomcam(c, in, c.threads);
        saliency = ex.saliency;
        side["singular_values"] = ex.ossms.singular_values;
        side["weights"] = ex.ossms.weights;
        std::vector<double> deltas;
        for (const auto& d : ex.deltas) deltas.push_back(d.delta);
        side["deltas"] = deltas;
        side["selected_channels"] = ex.selected_channels;
        side["warnings"] = ex.warnings;
        for (std::size_t q = 0; q < ex.ossms.count(); ++q) {
            files.push_back(ossm_file_name(q));
            write_png((fs::path(c.out_dir) / files.back()).string(), overlay(in.image, ex.ossms.maps[q]));
        }
    } else {
        saliency = run_method(c, in);
        side["warnings"] = json::array();
    }
    write_png((fs::path(c.out_dir) / "saliency.png").string(), overlay(in.image, saliency));
    side["method"] = c.method;
    side["files"] = files;
    write_text_file((fs::path(c.out_dir) / "explain.json").string(), side.dump(2) + "\n");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out << "explain: method=" << c.method << " concept=" << in.concept_id << " images=" << files.size()
        << " out=" << c.out_dir << " seconds=" << format_value(secs) << "\n";
    for (const auto& w : side["warnings"]) out << "warning: " << w.get<std::string>() << "\n";
    return exit_ok;
}

/// Per-sample result of an eval run.
struct SampleOutcome {
    bool ok = false;
    std::string error;
    json detail = json::object();
    Map2 saliency;
    std::vector<Map2> ossms;
    std::pair<double, double> areas{0.0, 0.0};
};

inline SampleInputs eval_inputs(const RunConfig& c, const Annotation& a) {
    if (a.dump) return dump_inputs(c, *a.dump, a.concept_id);
    if (c.scorer != "toy") throw schema_error("sample has no 'dump' entry");
    return toy_inputs(c, load_image(a.image), a.concept_id);
}

inline SampleOutcome eval_sample(const RunConfig& c, const Annotation& a) {
    SampleOutcome o;
    const auto boxes = a.plain_boxes();
    if (c.method == "precomputed") {
        if (!a.saliency) throw schema_error("method 'precomputed' needs a 'saliency' entry");
        o.saliency = luminance_map(read_png(*a.saliency));
        if (c.metric_suite == "causal") {
            SampleInputs in = eval_inputs(c, a);
            if (!o.saliency.same_shape(Map2(in.image.height(), in.image.width())))
                throw invalid_argument("saliency and image sizes differ");
            auto [kam, ram] = causal_curves(in.scorer, in.image, in.concept_id, o.saliency);
            o.detail["kam_scores"] = kam.scores;
            o.detail["ram_scores"] = ram.scores;
            o.areas = {kam.auc, ram.auc};
        }
    } else {
        SampleInputs in = eval_inputs(c, a);
        if (c.metric_suite == "attr") {
            Explanation ex = run_decomcam(c, in, 1);
            o.saliency = ex.saliency;
            o.ossms = ex.ossms.maps;
        } else {
            o.saliency = run_method(c, in);
        }
        if (c.metric_suite == "causal") {
            auto [kam, ram] = causal_curves(in.scorer, in.image, in.concept_id, o.saliency);
            double k = kam.auc, r = ram.auc;
            if (c.causal_scale == "percent") {
                const double full = kam.scores.back();
                if (!(full > 0.0))
                    throw computation_failed("percent scale needs a positive unmasked score");
                k = kam.normalized_auc(full);
                r = ram.normalized_auc(full);
            }
            o.detail["kam_scores"] = kam.scores;
            o.detail["ram_scores"] = ram.scores;
            o.areas = {k, r};
        }
    }
    if (c.metric_suite == "loc") {
        const auto [r, col] = argmax_pixel(o.saliency);
        o.detail["argmax"] = {r, col};
        o.detail["pointing_hit"] = pointing_hit(o.saliency, boxes);
        double best = 0.0, best_tau = 0.0;
        for (double tau : max_box_acc_taus()) {
            const double v = best_iou(binarize_and_box(o.saliency, tau), boxes);
            if (v > best) best = v, best_tau = tau;
        }
        o.detail["max_iou"] = best;
        o.detail["max_iou_tau"] = best_tau;
    } else if (c.metric_suite == "causal") {
        o.detail["kam_auc"] = o.areas.first;
        o.detail["ram_auc"] = o.areas.second;
    }
    o.ok = true;
    return o;
}

inline std::string attribute_name(const std::string& s) { return s.empty() ? "object" : s; }

inline int cmd_eval(const RunConfig& c, std::ostream& out, std::ostream& err) {
    auto anns = load_annotations(c.annotations);
    std::sort(anns.begin(), anns.end(), [](const Annotation& a, const Annotation& b) { return a.id < b.id; });
    make_out_dir(c.out_dir);

    // Scorer access is serialized unless the backing model allows concurrency.
    const std::size_t workers = c.scorer == "toy" ? c.threads : 1;
    std::vector<SampleOutcome> results(anns.size());
    parallel_for(anns.size(), workers, [&](std::size_t i) {
        try {
            results[i] = eval_sample(c, anns[i]);
        } catch (const std::exception& e) {
            results[i].ok = false;
            results[i].error = e.what();
        }
    });

    std::vector<ReportRow> rows;
    for (const auto& [k, v] : config_echo(c, "eval")) rows.push_back({"config", k, "", v});
    for (auto& r : paper_reference_rows(c.metric_suite)) rows.push_back(std::move(r));

    std::size_t failures = 0;
    std::vector<json> lines;
    for (std::size_t i = 0; i < anns.size(); ++i) {
        json j = results[i].detail;
        j["id"] = anns[i].id;
        j["stratum"] = anns[i].stratum;
        j["method"] = c.method;
        j["ok"] = results[i].ok;
        if (!results[i].ok) {
            j["error"] = results[i].error;
            ++failures;
            err << "sample '" << anns[i].id << "' failed: " << results[i].error << "\n";
        }
        lines.push_back(std::move(j));
    }

    std::vector<ReportRow> metrics;
    const std::string& m = c.method;
    if (c.metric_suite == "loc") {
        std::vector<LocSample> loc;
        for (std::size_t i = 0; i < anns.size(); ++i)
            if (results[i].ok) loc.push_back({anns[i].id, results[i].saliency, anns[i].plain_boxes(), std::nullopt});
        if (!loc.empty()) {
            const auto mba = max_box_acc_v2(loc);
            metrics.push_back({m, "MaxBoxAccV2", "all", format_value(mba.value)});
            for (std::size_t d = 0; d < max_box_acc_deltas.size(); ++d) {
                const std::string tag = "IoU" + format_value(max_box_acc_deltas[d]).substr(0, 3);
                metrics.push_back({m, "MaxBoxAcc_" + tag, "all", format_value(mba.best_per_delta[d])});
                metrics.push_back({m, "BestTau_" + tag, "all", format_value(mba.best_tau_per_delta[d])});
            }
            metrics.push_back({m, "PointingGame", "all", format_value(pointing_game(loc))});
        }
    } else if (c.metric_suite == "causal") {
        std::map<std::string, std::vector<std::pair<double, double>>> areas;
        for (std::size_t i = 0; i < anns.size(); ++i)
            if (results[i].ok) areas[anns[i].stratum].push_back(results[i].areas);
        const auto rep = aggregate_strata(areas);
        auto emit = [&](const StratumRow& r) {
            metrics.push_back({m, "KAM", r.stratum, format_value(r.kam)});
            metrics.push_back({m, "RAM", r.stratum, format_value(r.ram)});
            metrics.push_back({m, "Overall", r.stratum, format_value(r.overall())});
        };
        for (const auto& r : rep.rows) emit(r);
        if (!rep.rows.empty()) emit(rep.aggregate);
    } else {
        std::vector<AttributeSample> attr;
        for (std::size_t i = 0; i < anns.size(); ++i) {
            if (!results[i].ok) continue;
            AttributeSample s{anns[i].id, anns[i].class_name, results[i].ossms, {}};
            for (const auto& b : anns[i].boxes) s.attributes.push_back({b.box, attribute_name(b.attribute)});
            attr.push_back(std::move(s));
        }
        if (!attr.empty()) {
            const auto hr = hit_rate(attr);
            for (const auto& r : hr.ranks) {
                metrics.push_back({m, "HitRate_strict", std::to_string(r.rank), format_value(r.strict)});
                metrics.push_back({m, "HitRate_pointing", std::to_string(r.rank), format_value(r.pointing)});
            }
            for (const auto& d : hr.per_attribute) {
                const std::string where = d.attribute + "@" + std::to_string(d.rank);
                metrics.push_back({m, "AttributeHitRate_strict", where, format_value(d.strict)});
                metrics.push_back({m, "AttributeHitRate_pointing", where, format_value(d.pointing)});
            }
            for (auto [crit, tag] : {std::pair{HitCriterion::strict, "strict"},
                                     std::pair{HitCriterion::pointing, "pointing"}}) {
                const auto verdicts = attribute_verdicts(attr, crit);
                for (const auto& [cls, freq] : attribute_hit_frequency(verdicts))
                    for (const auto& f : freq)
                        metrics.push_back({m, std::string("AttributeHitFrequency_") + tag,
                                           cls + "/" + f.attribute, format_value(f.proportion)});
                for (const auto& v : verdicts) {
                    auto it = std::find_if(lines.begin(), lines.end(),
                                           [&](const json& j) { return j["id"] == v.sample_id; });
                    (*it)["attribute_hits"][v.attribute][tag] = v.hit;
                }
            }
        }
    }
    metrics.push_back({m, "Samples", "all", std::to_string(anns.size())});
    metrics.push_back({m, "SampleFailures", "all", std::to_string(failures)});
    rows.insert(rows.end(), metrics.begin(), metrics.end());

    write_text_file((fs::path(c.out_dir) / "report.csv").string(), render_csv(rows));
    write_text_file((fs::path(c.out_dir) / "samples.jsonl").string(), render_jsonl(lines));

    for (const auto& r : metrics) out << r.metric << "[" << r.stratum << "] = " << r.value << "\n";
    return failures ? exit_sample_failures : exit_ok;
}

inline int cmd_dump_toy(const RunConfig& c, std::ostream& out) {
    Image img = c.image.empty() ? synthetic::planted_sample(c.seed).image : load_image(c.image);
    SampleInputs in = toy_inputs(c, std::move(img), c.concept_id);
    TensorDump d;
    d.image = std::move(in.image);
    d.activations = std::move(in.activations);
    d.gradients = std::move(in.gradients);
    d.score = static_cast<float>(in.score);
    d.concept_id = in.concept_id;
    d.layer = "conv";
    d.model = "toy-cnn:seed=" + std::to_string(c.seed);
    write_tensor_dump(c.out, d);
    out << "wrote " << c.out << " (" << d.activations.count() << "x" << d.activations.height() << "x"
        << d.activations.width() << ")\n";
    return exit_ok;
}

inline void add_model_options(CLI::App* sub, RunConfig& c) {
    sub->add_option("--config", c.config_file, "TOML/INI file of option values; command-line flags win");
    sub->add_option("--method", c.method, "decomcam | gradcam | eigencam");
    sub->add_option("--preset", c.preset, "default | imagenetv2 | coco | partimagenet (sets P and Q)");
    sub->add_option("--p", c.p, "Top-P channels kept before the SVD");
    sub->add_option("--q", c.q, "Number of OSSMs");
    sub->add_option("--blur-sigma", c.blur_sigma, "Gaussian sigma of the reference blur");
    sub->add_option("--blur-kernel", c.blur_kernel, "Odd kernel size of the reference blur");
    sub->add_option("--temperature", c.temperature, "Softmax temperature for integration weights");
    sub->add_option("--scorer", c.scorer, "toy | dump | dump+endpoint");
    sub->add_option("--endpoint", c.endpoint, "Scoring endpoint host:port");
    sub->add_option("--dump", c.dump, "DCAM tensor dump");
    sub->add_option("--concept", c.concept_id, "Target concept (default: model's or dump's)");
    sub->add_option("--seed", c.seed, "Seed of the toy model and synthetic images");
    sub->add_option("--threads", c.threads, "Worker threads");
}

/// Fills options not given on the command line from a TOML/INI file. Keys are
/// long option names without dashes; '_' and '-' are interchangeable.
inline void apply_config_file(CLI::App* sub, const std::string& path) {
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigTOML().from_file(path);
    } catch (const CLI::FileError& e) {
        throw io_error(std::string("config file: ") + e.what());
    } catch (const CLI::Error& e) {
        throw config_error("config file '" + path + "': " + e.what());
    }
    for (const auto& item : items) {
        if (item.name == "++" || item.name == "--") continue;
        if (!item.parents.empty())
            throw config_error("config file '" + path + "': sections are not supported ('" + item.fullname() + "')");
        std::string name = item.name;
        std::replace(name.begin(), name.end(), '_', '-');
        CLI::Option* opt = name == "config" ? nullptr : sub->get_option_no_throw("--" + name);
        if (opt == nullptr) throw config_error("config file '" + path + "': unknown key '" + item.name + "'");
        if (opt->count() > 0) continue;
        try {
            opt->add_result(item.inputs);
            opt->run_callback();
        } catch (const CLI::Error& e) {
            throw config_error("config file '" + path + "': " + item.name + ": " + e.what());
        }
    }
}

/// Parses argv and runs one subcommand. Returns the process exit code.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout,
                   std::ostream& err = std::cerr) {
    RunConfig c;
    CLI::App app{"DecomCAM saliency toolkit"};
    app.require_subcommand(1);

    auto* ex = app.add_subcommand("explain", "Explain one image: overlay, OSSM images, JSON sidecar");
    add_model_options(ex, c);
    ex->add_option("--image", c.image, "Input PNG or planted:<seed> (toy scorer)");
    ex->add_option("--out-dir", c.out_dir, "Output directory");

    auto* ev = app.add_subcommand("eval", "Evaluate a method over an annotation set");
    add_model_options(ev, c);
    ev->add_option("--annotations", c.annotations, "JSON-lines annotation file")->required();
    ev->add_option("--metric-suite", c.metric_suite, "loc | causal | attr");
    ev->add_option("--causal-scale", c.causal_scale, "raw | percent (of the unmasked score)");
    ev->add_option("--out-dir", c.out_dir, "Output directory");

    auto* dt = app.add_subcommand("dump-toy", "Write a DCAM dump from the built-in toy model");
    dt->add_option("--image", c.image, "Input PNG or planted:<seed>");
    dt->add_option("--concept", c.concept_id, "Target concept");
    dt->add_option("--seed", c.seed, "Seed of the toy model and synthetic image");
    dt->add_option("--out", c.out, "Output dump path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    try {
        if (command == "dump-toy") return cmd_dump_toy(c, out);
        CLI::App* sub = app.get_subcommands().front();
        if (!c.config_file.empty()) apply_config_file(sub, c.config_file);
        if (!c.preset.empty()) {
            for (const auto& p : decom_presets)
                if (c.preset == p.name) {
                    if (sub->get_option("--p")->count() == 0) c.p = p.p;
                    if (sub->get_option("--q")->count() == 0) c.q = p.q;
                }
        }
        validate(c, command);
        return command == "explain" ? cmd_explain(c, out) : cmd_eval(c, out, err);
    } catch (const config_error& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const io_error& e) {
        err << "input error: " << e.what() << "\n";
        return exit_input;
    } catch (const format_error& e) {
        err << "format error: " << e.what() << "\n";
        return exit_input;
    } catch (const schema_error& e) {
        err << "schema error: " << e.what() << "\n";
        return exit_input;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_failure;
    }
}

} // namespace decomcam::cli
