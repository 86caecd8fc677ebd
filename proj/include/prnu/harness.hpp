#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image.hpp"
#include "prnu/image_io.hpp"
#include "prnu/parallel.hpp"
#include "prnu/rng.hpp"
#include "prnu/spoof.hpp"
#include "prnu/synth.hpp"

namespace prnu {

enum class SensorKind { synthetic, directory };

/// One sensor of an experiment: either simulated or a directory of images.
struct SensorSpec {
    std::string sensor_id;
    SensorKind kind = SensorKind::synthetic;
    double strength = 0.02;
    double read_noise_sigma = 2.0;
    std::filesystem::path directory;
    /// Regex applied to file stems; capture group 1 (or the whole match) is
    /// the subject id used for the disjoint train/test split.
    std::optional<std::string> subject_pattern;

    friend bool operator==(const SensorSpec&, const SensorSpec&) = default;
};

struct SpoofSettings {
    std::vector<std::pair<std::string, std::string>> pairs;
    SpoofMethod method = SpoofMethod::proposed;
    std::size_t images_per_pair = 50;
    /// Number of target-sensor test images offered to candidate selection (L).
    std::size_t candidate_gallery_size = 50;
    std::vector<std::size_t> m_values{3000, 6000};
    double gamma = 1.0;
    double beta = 1.0;
    bool save_trajectories = false;

    friend bool operator==(const SpoofSettings&, const SpoofSettings&) = default;
};

struct ExperimentConfig {
    std::vector<SensorSpec> sensors;
    std::size_t train_count = 55;
    /// Test images per sensor; synthetic sensors generate exactly this many,
    /// directory sensors are capped at it (0 = no cap).
    std::size_t test_count = 100;
    Dims working_dims{120, 160};
    PerturbParams perturb;
    DenoiseParams denoise;
    Postprocess postprocess = Postprocess::reference_pattern;
    SpoofSettings spoof;
    std::filesystem::path output_dir = "prnu_out";
    std::uint64_t seed = 1;
    unsigned jobs = 0;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

inline void validate(const ExperimentConfig& cfg)
{
    if (cfg.train_count == 0) {
        throw InvalidArgument("train_count must be >= 1");
    }
    if (cfg.working_dims.height == 0 || cfg.working_dims.width == 0) {
        throw InvalidArgument("working dimensions must be >= 1");
    }
    std::set<std::string> ids;
    for (const SensorSpec& s : cfg.sensors) {
        if (s.sensor_id.empty()) {
            throw InvalidArgument("sensor id must not be empty");
        }
        if (!ids.insert(s.sensor_id).second) {
            throw InvalidArgument("duplicate sensor id '" + s.sensor_id + "'");
        }
        if (s.kind == SensorKind::directory && s.directory.empty()) {
            throw InvalidArgument("sensor '" + s.sensor_id + "' needs a directory");
        }
    }
    validate(cfg.denoise);
    validate(cfg.perturb);
}

struct SensorImages {
    std::string sensor_id;
    std::vector<Image> train;
    std::vector<Image> test;
};

struct Dataset {
    std::vector<SensorImages> sensors;

    const SensorImages& at(std::string_view id) const
    {
        for (const SensorImages& s : sensors) {
            if (s.sensor_id == id) {
                return s;
            }
        }
        throw InvalidArgument("unknown sensor '" + std::string(id) + "'");
    }
};

/// The simulated sensor a synthetic spec stands for.
inline SyntheticSensor synthetic_sensor(const ExperimentConfig& cfg, std::size_t index)
{
    const SensorSpec& s = cfg.sensors.at(index);
    return make_sensor(s.sensor_id, cfg.working_dims, derive_seed(cfg.seed, "harness.sensor", index), s.strength,
                       s.read_noise_sigma);
}

namespace detail {

inline SensorImages synthetic_images(const ExperimentConfig& cfg, std::size_t index)
{
    const SyntheticSensor sensor = synthetic_sensor(cfg, index);
    const std::size_t total = cfg.train_count + cfg.test_count;
    const auto scenes = make_scene_bank(total, cfg.working_dims, derive_seed(cfg.seed, "harness.scenes", index));
    SensorImages out{sensor.sensor_id, {}, {}};
    std::vector<Image> shots(total);
    parallel_for(total, cfg.jobs, [&](std::size_t i) { shots[i] = capture(sensor, scenes[i], i); });
    out.train.assign(shots.begin(), shots.begin() + static_cast<std::ptrdiff_t>(cfg.train_count));
    out.test.assign(shots.begin() + static_cast<std::ptrdiff_t>(cfg.train_count), shots.end());
    return out;
}

inline std::string subject_of(const std::filesystem::path& file, const std::regex& pattern)
{
    const std::string stem = file.stem().string();
    std::smatch m;
    if (!std::regex_search(stem, m, pattern)) {
        throw FormatError("file '" + file.string() + "' does not match the subject pattern");
    }
    return m.size() > 1 && m[1].matched ? m[1].str() : m[0].str();
}

inline SensorImages directory_images(const ExperimentConfig& cfg, const SensorSpec& spec)
{
    const auto files = list_image_files(spec.directory);
    if (files.size() < cfg.train_count + 1) {
        throw InvalidArgument("sensor '" + spec.sensor_id + "' has " + std::to_string(files.size()) +
                              " images, needs at least " + std::to_string(cfg.train_count + 1));
    }
    std::vector<Image> images(files.size());
    parallel_for(files.size(), cfg.jobs, [&](std::size_t i) {
        images[i] = resize_bilinear(load_image(files[i]), cfg.working_dims);
    });

    SensorImages out{spec.sensor_id, {}, {}};
    std::optional<std::regex> pattern;
    std::set<std::string> train_subjects;
    if (spec.subject_pattern) {
        pattern.emplace(*spec.subject_pattern);
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
        if (i < cfg.train_count) {
            out.train.push_back(std::move(images[i]));
            if (pattern) {
                train_subjects.insert(subject_of(files[i], *pattern));
            }
            continue;
        }
        if (pattern && train_subjects.count(subject_of(files[i], *pattern)) != 0) {
            continue;
        }
        if (cfg.test_count != 0 && out.test.size() == cfg.test_count) {
            break;
        }
        out.test.push_back(std::move(images[i]));
    }
    if (out.test.empty()) {
        throw InvalidArgument("sensor '" + spec.sensor_id + "' has no test images left after the split");
    }
    return out;
}

} // namespace detail

/// Loads or simulates every sensor's images at the working resolution and
/// splits them into training and test sets.
inline Dataset load_dataset(const ExperimentConfig& cfg)
{
    validate(cfg);
    Dataset ds;
    for (std::size_t i = 0; i < cfg.sensors.size(); ++i) {
        const SensorSpec& s = cfg.sensors[i];
        ds.sensors.push_back(s.kind == SensorKind::synthetic ? detail::synthetic_images(cfg, i)
                                                             : detail::directory_images(cfg, s));
    }
    return ds;
}

/// One reference pattern per sensor from its training images.
inline SensorGallery build_gallery(const ExperimentConfig& cfg, const Dataset& ds)
{
    SensorGallery gallery;
    for (const SensorImages& s : ds.sensors) {
        gallery.add(estimate_reference(s.train, cfg.denoise, s.sensor_id, cfg.postprocess, cfg.jobs));
    }
    return gallery;
}

struct ConfusionMatrix {
    std::vector<std::string> labels;
    /// counts[i][j]: test images of sensor i classified as sensor j.
    std::vector<std::vector<std::size_t>> counts;
    std::vector<double> accuracies;

    std::size_t row_sum(std::size_t i) const
    {
        std::size_t s = 0;
        for (std::size_t v : counts.at(i)) {
            s += v;
        }
        return s;
    }

    double overall_accuracy() const
    {
        std::size_t hits = 0;
        std::size_t total = 0;
        for (std::size_t i = 0; i < counts.size(); ++i) {
            hits += counts[i][i];
            total += row_sum(i);
        }
        return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
    }
};

inline ConfusionMatrix run_identification(const ExperimentConfig& cfg, const Dataset& ds,
                                          const SensorGallery& gallery)
{
    if (ds.sensors.size() < 2) {
        throw InvalidArgument("identification needs at least 2 sensors");
    }
    ConfusionMatrix cm;
    for (const SensorImages& s : ds.sensors) {
        cm.labels.push_back(s.sensor_id);
    }
    const std::size_t n = cm.labels.size();
    cm.counts.assign(n, std::vector<std::size_t>(n, 0));

    struct Item {
        std::size_t sensor;
        const Image* image;
    };
    std::vector<Item> items;
    for (std::size_t i = 0; i < n; ++i) {
        for (const Image& img : ds.sensors[i].test) {
            items.push_back({i, &img});
        }
    }
    std::vector<std::size_t> predicted(items.size());
    parallel_for(items.size(), cfg.jobs, [&](std::size_t k) {
        const auto c = classify(*items[k].image, gallery, cfg.denoise);
        const auto it = std::find(cm.labels.begin(), cm.labels.end(), c.predicted);
        predicted[k] = static_cast<std::size_t>(it - cm.labels.begin());
    });
    for (std::size_t k = 0; k < items.size(); ++k) {
        ++cm.counts[items[k].sensor][predicted[k]];
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t rs = cm.row_sum(i);
        cm.accuracies.push_back(rs == 0 ? 0.0 : 100.0 * static_cast<double>(cm.counts[i][i]) / static_cast<double>(rs));
    }
    return cm;
}

inline ConfusionMatrix run_identification(const ExperimentConfig& cfg)
{
    const Dataset ds = load_dataset(cfg);
    return run_identification(cfg, ds, build_gallery(cfg, ds));
}

/// Peak signal-to-noise ratio in dB; identical images give +infinity.
inline double psnr(const Image& a, const Image& b)
{
    require_same_dims(a.dims(), b.dims(), "psnr");
    double sse = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a.plane().data()[i] - b.plane().data()[i];
        sse += d * d;
    }
    if (sse == 0.0) {
        return std::numeric_limits<double>::infinity();
    }
    const double mse = sse / static_cast<double>(a.size());
    return 10.0 * std::log10(kMaxIntensity * kMaxIntensity / mse);
}

/// True when every pixel outside the listed patches equals the input.
inline bool outside_patches_unchanged(const Image& input, const Image& output, std::span<const PatchIndex> visited,
                                      std::size_t patch_h, std::size_t patch_w)
{
    require_same_dims(input.dims(), output.dims(), "locality check");
    const std::set<PatchIndex> inside(visited.begin(), visited.end());
    for (std::size_t r = 0; r < input.height(); ++r) {
        for (std::size_t c = 0; c < input.width(); ++c) {
            if (inside.count(PatchIndex{r / patch_h, c / patch_w}) != 0) {
                continue;
            }
            if (input.plane()(r, c) != output.plane()(r, c)) {
                return false;
            }
        }
    }
    return true;
}

struct SpoofRecord {
    std::size_t index = 0;
    std::string predicted;
    bool hit = false;
    /// Perturbation loop details; zero / false for the one-shot baselines.
    std::size_t iterations = 0;
    bool succeeded = false;
    double final_criterion = 0.0;
    /// Set when phi(X, S_o) <= 0 made the proposed method reject the image;
    /// the unmodified image is then classified.
    bool rejected = false;
    double psnr = 0.0;
    std::optional<bool> locality_ok;
    std::vector<NCCScore> scores;
};

struct SSRReport {
    std::string source_id;
    std::string target_id;
    SpoofMethod method = SpoofMethod::proposed;
    std::size_t max_iters = 0;
    std::size_t n_attempted = 0;
    std::size_t n_classified_as_target = 0;
    double ssr = 0.0;
    std::vector<SpoofRecord> images;

    /// Median over finite and infinite PSNR values alike.
    double median_psnr() const
    {
        if (images.empty()) {
            return 0.0;
        }
        std::vector<double> v;
        for (const SpoofRecord& r : images) {
            v.push_back(r.psnr);
        }
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
};

/// Aggregate SSR over several reports (pooled counts).
inline double aggregate_ssr(std::span<const SSRReport> reports)
{
    std::size_t hits = 0;
    std::size_t total = 0;
    for (const SSRReport& r : reports) {
        hits += r.n_classified_as_target;
        total += r.n_attempted;
    }
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(total);
}

/// Per-spoofed-image hook, e.g. for trajectory export.
using SpoofObserver = std::function<void(std::size_t image_index, std::size_t budget_index, const SpoofResult&)>;

namespace detail {

inline std::string pair_tag(std::string_view source, std::string_view target)
{
    return std::string(source) + "->" + std::string(target);
}

inline void finish_report(SSRReport& rep)
{
    rep.n_attempted = rep.images.size();
    rep.n_classified_as_target = 0;
    for (const SpoofRecord& r : rep.images) {
        rep.n_classified_as_target += r.hit ? 1 : 0;
    }
    rep.ssr = rep.n_attempted == 0 ? 0.0
                                   : 100.0 * static_cast<double>(rep.n_classified_as_target) /
                                         static_cast<double>(rep.n_attempted);
}

inline SpoofRecord evaluate(std::size_t index, const Image& input, const Image& output, const SensorGallery& gallery,
                            const std::string& target_id, const DenoiseParams& dp)
{
    SpoofRecord rec;
    rec.index = index;
    auto c = classify(output, gallery, dp);
    rec.predicted = std::move(c.predicted);
    rec.scores = std::move(c.scores);
    rec.hit = rec.predicted == target_id;
    rec.psnr = psnr(input, output);
    return rec;
}

/// Shared driver: runs the proposed method once per image over all budgets
/// (prefix-seeded) or a baseline once, and returns one report per budget.
inline std::vector<SSRReport> spoof_pair(const ExperimentConfig& cfg, const Dataset& ds, const SensorGallery& gallery,
                                         const std::string& source_id, const std::string& target_id,
                                         SpoofMethod method, std::span<const std::size_t> budgets,
                                         const SpoofObserver& observer)
{
    if (source_id == target_id) {
        throw InvalidArgument("source and target sensor must differ");
    }
    const SensorImages& src = ds.at(source_id);
    const SensorImages& tgt = ds.at(target_id);
    const ReferencePattern& s_pat = gallery.at(source_id);
    const ReferencePattern& t_pat = gallery.at(target_id);
    const std::size_t n = std::min(cfg.spoof.images_per_pair, src.test.size());
    if (n == 0) {
        throw InvalidArgument("spoof experiment " + pair_tag(source_id, target_id) + " has no test images to attack");
    }
    std::span<const Image> candidates;
    if (method == SpoofMethod::proposed) {
        const std::size_t l = std::min(cfg.spoof.candidate_gallery_size, tgt.test.size());
        if (l == 0) {
            throw InvalidArgument("target sensor '" + target_id + "' has no candidate images");
        }
        candidates = std::span<const Image>(tgt.test).first(l);
    }
    const std::string tag = pair_tag(source_id, target_id);

    // records[image][budget]
    std::vector<std::vector<SpoofRecord>> records(n);
    parallel_for(n, cfg.jobs, [&](std::size_t i) {
        const Image& input = src.test[i];
        if (method != SpoofMethod::proposed) {
            Image out;
            switch (method) {
            case SpoofMethod::baseline1:
                out = baseline1_inject(input, t_pat, cfg.spoof.gamma);
                break;
            case SpoofMethod::baseline2:
                out = baseline2_substitute(input, s_pat, t_pat, cfg.spoof.gamma, cfg.spoof.beta);
                break;
            default:
                out = baseline_denoised_inject(input, t_pat, cfg.spoof.gamma, cfg.denoise);
                break;
            }
            records[i].assign(budgets.size(), evaluate(i, input, out, gallery, target_id, cfg.denoise));
            return;
        }

        PatchSpec ps = cfg.perturb.patch;
        ps.rng_seed = derive_seed(cfg.seed, "harness.candidate/" + tag, i);
        const CandidateSelection sel = select_candidate(input, candidates, ps);
        PerturbParams pp = cfg.perturb;
        pp.patch = ps;
        pp.rng_seed = derive_seed(cfg.seed, "harness.perturb/" + tag, i);
        std::vector<SpoofResult> results;
        try {
            results = perturb_budgets(input, sel.candidate, s_pat, t_pat, pp, cfg.denoise, budgets);
        } catch (const DegenerateCriterion&) {
            SpoofRecord rec = evaluate(i, input, input, gallery, target_id, cfg.denoise);
            rec.rejected = true;
            rec.locality_ok = true;
            records[i].assign(budgets.size(), rec);
            return;
        }
        for (std::size_t b = 0; b < results.size(); ++b) {
            SpoofResult& r = results[b];
            SpoofRecord rec = evaluate(i, input, r.perturbed, gallery, target_id, cfg.denoise);
            rec.iterations = r.iterations_used;
            rec.succeeded = r.succeeded;
            rec.final_criterion = r.final_criterion;
            rec.locality_ok = outside_patches_unchanged(input, r.perturbed, r.visited, pp.patch.patch_h, pp.patch.patch_w);
            r.final_scores = rec.scores;
            if (observer) {
                observer(i, b, r);
            }
            records[i].push_back(std::move(rec));
        }
    });

    std::vector<SSRReport> reports(budgets.size());
    for (std::size_t b = 0; b < budgets.size(); ++b) {
        SSRReport& rep = reports[b];
        rep.source_id = source_id;
        rep.target_id = target_id;
        rep.method = method;
        rep.max_iters = method == SpoofMethod::proposed ? budgets[b] : 0;
        for (std::size_t i = 0; i < n; ++i) {
            rep.images.push_back(records[i][b]);
        }
        finish_report(rep);
    }
    return reports;
}

} // namespace detail

/// Spoof Success Rate of one source -> target pair: each source test image is
/// attacked and classified against the full gallery.
inline SSRReport run_spoof_experiment(const ExperimentConfig& cfg, const Dataset& ds, const SensorGallery& gallery,
                                      const std::string& source_id, const std::string& target_id, SpoofMethod method,
                                      const SpoofObserver& observer = {})
{
    const std::size_t budget[] = {cfg.perturb.max_iters};
    return std::move(detail::spoof_pair(cfg, ds, gallery, source_id, target_id, method, budget, observer).front());
}

inline SSRReport run_spoof_experiment(const ExperimentConfig& cfg, const std::string& source_id,
                                      const std::string& target_id, SpoofMethod method)
{
    const Dataset ds = load_dataset(cfg);
    return run_spoof_experiment(cfg, ds, build_gallery(cfg, ds), source_id, target_id, method);
}

/// One SSR report per iteration budget. Every budget sees the same seeds, so
/// each run's patch sequence is a prefix of the next one's; all budgets are
/// served by a single pass per image.
inline std::vector<SSRReport> run_iteration_study(const ExperimentConfig& cfg, const Dataset& ds,
                                                  const SensorGallery& gallery, const std::string& source_id,
                                                  const std::string& target_id, std::span<const std::size_t> m_values,
                                                  const SpoofObserver& observer = {})
{
    if (m_values.empty()) {
        throw InvalidArgument("iteration study needs at least one m value");
    }
    if (!std::is_sorted(m_values.begin(), m_values.end())) {
        throw InvalidArgument("iteration study m values must be sorted ascending");
    }
    if (m_values.front() == 0) {
        throw InvalidArgument("iteration study m values must be >= 1");
    }
    return detail::spoof_pair(cfg, ds, gallery, source_id, target_id, SpoofMethod::proposed, m_values, observer);
}

inline std::vector<SSRReport> run_iteration_study(const ExperimentConfig& cfg, const std::string& source_id,
                                                  const std::string& target_id, std::span<const std::size_t> m_values)
{
    const Dataset ds = load_dataset(cfg);
    return run_iteration_study(cfg, ds, build_gallery(cfg, ds), source_id, target_id, m_values);
}

} // namespace prnu
