// prnu: command-line front end for fingerprint estimation, identification,
// spoofing and the experiment harness.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "prnu/prnu.hpp"

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> jobs;
    bool verbose = false;
};

Globals g;

void log(const std::string& msg)
{
    if (g.verbose) {
        std::cerr << "[prnu] " << msg << '\n';
    }
}

prnu::ExperimentConfig base_config(const std::string& path)
{
    prnu::ExperimentConfig cfg = path.empty() ? prnu::ExperimentConfig{} : prnu::load_config(path);
    if (g.seed) {
        cfg.seed = *g.seed;
    }
    if (g.jobs) {
        cfg.jobs = *g.jobs;
    }
    return cfg;
}

std::vector<prnu::Image> load_images(const fs::path& dir)
{
    std::vector<prnu::Image> images;
    for (const auto& f : prnu::list_image_files(dir)) {
        images.push_back(prnu::load_image(f, images.empty() ? std::nullopt : std::optional(images.front().dims())));
    }
    return images;
}

// ---- estimate --------------------------------------------------------------

struct EstimateArgs {
    std::string sensor_dir;
    std::string out;
    std::string id;
};

int cmd_estimate(const EstimateArgs& a)
{
    const auto cfg = base_config(g.config);
    const auto train = load_images(a.sensor_dir);
    if (train.empty()) {
        throw prnu::InvalidArgument("no training images in '" + a.sensor_dir + "'");
    }
    std::string id = a.id;
    if (id.empty()) {
        id = fs::path(a.sensor_dir).lexically_normal().filename().string();
        if (id.empty()) {
            id = fs::path(a.sensor_dir).lexically_normal().parent_path().filename().string();
        }
    }
    log("estimating '" + id + "' from " + std::to_string(train.size()) + " images");
    const auto pattern = prnu::estimate_reference(train, cfg.denoise, id, cfg.postprocess, cfg.jobs);
    prnu::save_pattern(a.out, pattern);
    return 0;
}

// ---- identify --------------------------------------------------------------

struct IdentifyArgs {
    std::string image;
    std::string gallery_dir;
};

int cmd_identify(const IdentifyArgs& a)
{
    const auto cfg = base_config(g.config);
    const auto gallery = prnu::load_gallery(a.gallery_dir);
    const auto img = prnu::load_image(a.image, gallery.dims());
    const auto c = prnu::classify(img, gallery, cfg.denoise);
    prnu::Json j;
    j["image"] = a.image;
    j["predicted"] = c.predicted;
    j["scores"] = prnu::detail::scores_json(c.scores);
    std::cout << prnu::dump(j);
    return 0;
}

// ---- spoof -----------------------------------------------------------------

struct SpoofArgs {
    std::string image;
    std::string candidate_dir;
    std::string source_pattern;
    std::string target_pattern;
    std::string out;
    std::string method = "proposed";
    std::string result;
    std::string trajectory;
    std::string gallery_dir;
};

int cmd_spoof(const SpoofArgs& a)
{
    const auto cfg = base_config(g.config);
    const auto method = prnu::parse_spoof_method(a.method);
    const auto source = prnu::load_pattern(a.source_pattern);
    const auto target = prnu::load_pattern(a.target_pattern);
    const auto input = prnu::load_image(a.image, target.dims());

    prnu::SpoofResult result;
    switch (method) {
    case prnu::SpoofMethod::proposed: {
        if (a.candidate_dir.empty()) {
            throw prnu::InvalidArgument("--candidate-gallery-dir is required for the proposed method");
        }
        const auto candidates = load_images(a.candidate_dir);
        if (candidates.empty()) {
            throw prnu::InvalidArgument("no candidate images in '" + a.candidate_dir + "'");
        }
        prnu::PerturbParams pp = cfg.perturb;
        pp.patch.rng_seed = prnu::derive_seed(cfg.seed, "cli.candidate");
        pp.rng_seed = prnu::derive_seed(cfg.seed, "cli.perturb");
        const auto sel = prnu::select_candidate(input, candidates, pp.patch);
        log("candidate #" + std::to_string(sel.index) + " (corr " + std::to_string(sel.correlation) + ")");
        result = prnu::perturb(input, sel.candidate, source, target, pp, cfg.denoise);
        break;
    }
    case prnu::SpoofMethod::baseline1:
        result.perturbed = prnu::baseline1_inject(input, target, cfg.spoof.gamma);
        break;
    case prnu::SpoofMethod::baseline2:
        result.perturbed = prnu::baseline2_substitute(input, source, target, cfg.spoof.gamma, cfg.spoof.beta);
        break;
    case prnu::SpoofMethod::denoised_inject:
        result.perturbed = prnu::baseline_denoised_inject(input, target, cfg.spoof.gamma, cfg.denoise);
        break;
    }

    // Scores over the full gallery when given, otherwise over the pair.
    prnu::SensorGallery gallery;
    if (!a.gallery_dir.empty()) {
        gallery = prnu::load_gallery(a.gallery_dir);
    } else {
        gallery.add(source);
        if (target.sensor_id != source.sensor_id) {
            gallery.add(target);
        }
    }
    const auto c = prnu::classify(result.perturbed, gallery, cfg.denoise);
    result.final_scores = c.scores;

    prnu::save_pgm(a.out, result.perturbed);
    prnu::Json j = prnu::to_json(result, prnu::to_string(method));
    j["predicted"] = c.predicted;
    j["psnr"] = prnu::detail::number_or_null(prnu::psnr(input, prnu::quantized(result.perturbed)));
    const fs::path result_path = a.result.empty() ? fs::path(a.out).replace_extension(".json") : fs::path(a.result);
    prnu::write_text(result_path, prnu::dump(j));
    if (!a.trajectory.empty()) {
        std::ofstream csv(a.trajectory);
        if (!csv) {
            throw prnu::IoError("cannot create '" + a.trajectory + "'");
        }
        prnu::write_trajectory_csv(csv, result);
    }
    return 0;
}

// ---- experiment ------------------------------------------------------------

struct ExperimentArgs {
    std::string config;
    std::string kind;
    std::string output_dir;
};

void save_trajectory(const fs::path& dir, const std::string& name, const prnu::SpoofResult& r)
{
    fs::create_directories(dir);
    std::ofstream csv(dir / name);
    if (!csv) {
        throw prnu::IoError("cannot create '" + (dir / name).string() + "'");
    }
    prnu::write_trajectory_csv(csv, r);
}

int cmd_experiment(const ExperimentArgs& a)
{
    auto cfg = base_config(a.config.empty() ? g.config : a.config);
    if (!a.output_dir.empty()) {
        cfg.output_dir = a.output_dir;
    }
    if (a.kind != "identify" && a.kind != "spoof" && a.kind != "iterations") {
        throw prnu::InvalidArgument("unknown experiment kind '" + a.kind + "'");
    }
    log("building dataset for " + std::to_string(cfg.sensors.size()) + " sensors");
    const auto ds = prnu::load_dataset(cfg);
    const auto gallery = prnu::build_gallery(cfg, ds);
    const fs::path out = cfg.output_dir;

    if (a.kind == "identify") {
        const auto cm = prnu::run_identification(cfg, ds, gallery);
        prnu::write_text(out / "identification.json", prnu::dump(prnu::to_json(cm)));
        prnu::write_text(out / "identification.txt", prnu::confusion_table(cm));
        std::cout << prnu::confusion_table(cm);
        return 0;
    }
    if (cfg.spoof.pairs.empty()) {
        throw prnu::InvalidArgument("config has no spoof.pairs");
    }

    std::vector<prnu::SSRReport> reports;
    for (const auto& [src, tgt] : cfg.spoof.pairs) {
        log("spoofing " + src + " -> " + tgt);
        const std::string tag = src + "_" + tgt;
        prnu::SpoofObserver observer;
        if (cfg.spoof.save_trajectories) {
            observer = [&, tag](std::size_t i, std::size_t b, const prnu::SpoofResult& r) {
                const std::string suffix = a.kind == "iterations" ? "_m" + std::to_string(cfg.spoof.m_values[b]) : "";
                save_trajectory(out / "trajectories", tag + "_" + std::to_string(i) + suffix + ".csv", r);
            };
        }
        if (a.kind == "spoof") {
            reports.push_back(prnu::run_spoof_experiment(cfg, ds, gallery, src, tgt, cfg.spoof.method, observer));
        } else {
            auto study = prnu::run_iteration_study(cfg, ds, gallery, src, tgt, cfg.spoof.m_values, observer);
            reports.insert(reports.end(), study.begin(), study.end());
        }
    }
    const std::string stem = a.kind == "spoof" ? "spoof" : "iterations";
    prnu::write_text(out / (stem + ".json"), prnu::dump(prnu::to_json(std::span<const prnu::SSRReport>(reports))));
    prnu::write_text(out / (stem + ".txt"), prnu::ssr_table(reports));
    std::cout << prnu::ssr_table(reports);
    return 0;
}

// ---- synth gen -------------------------------------------------------------

struct SynthArgs {
    std::string out_dir;
    std::size_t sensors = 2;
    std::size_t count = 60;
    std::size_t height = 120;
    std::size_t width = 160;
    double strength = 0.02;
    double read_noise = 2.0;
};

int cmd_synth_gen(const SynthArgs& a)
{
    const auto cfg = base_config(g.config);
    const prnu::Dims dims{a.height, a.width};
    const fs::path root = a.out_dir;
    for (std::size_t s = 0; s < a.sensors; ++s) {
        const std::string id = "sensor" + std::to_string(s + 1);
        const auto sensor =
            prnu::make_sensor(id, dims, prnu::derive_seed(cfg.seed, "harness.sensor", s), a.strength, a.read_noise);
        const auto scenes = prnu::make_scene_bank(a.count, dims, prnu::derive_seed(cfg.seed, "harness.scenes", s));
        fs::create_directories(root / id);
        for (std::size_t i = 0; i < a.count; ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "%04zu.pgm", i);
            prnu::save_pgm(root / id / name, prnu::capture(sensor, scenes[i], i));
        }
        prnu::save_sensor_field(root / (id + ".synk"), sensor);
        log("wrote " + std::to_string(a.count) + " captures for " + id);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    int rc = 0;
    CLI::App app{"PRNU sensor fingerprinting and spoofing toolkit"};
    app.require_subcommand(1);
    app.add_option("--config", g.config, "TOML configuration file")->check(CLI::ExistingFile);
    app.add_option("--seed", g.seed, "Root seed for every random stream");
    app.add_option("--jobs", g.jobs, "Worker threads (0 = all cores)");
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    EstimateArgs est;
    auto* estimate = app.add_subcommand("estimate", "Estimate a reference pattern from a directory of images");
    estimate->add_option("--sensor-dir", est.sensor_dir, "Directory of training images")->required();
    estimate->add_option("--out", est.out, "Output .prnu file")->required();
    estimate->add_option("--id", est.id, "Sensor id (default: directory name)");
    estimate->callback([&] { rc = cmd_estimate(est); });

    IdentifyArgs idn;
    auto* identify = app.add_subcommand("identify", "Attribute an image to the best-matching sensor");
    identify->add_option("--image", idn.image, "Test image")->required();
    identify->add_option("--gallery-dir", idn.gallery_dir, "Directory of .prnu patterns")->required();
    identify->callback([&] { rc = cmd_identify(idn); });

    SpoofArgs sp;
    auto* spoof = app.add_subcommand("spoof", "Perturb an image toward a target sensor");
    spoof->add_option("--image", sp.image, "Input image")->required();
    spoof->add_option("--candidate-gallery-dir", sp.candidate_dir, "Target-sensor images for candidate selection");
    spoof->add_option("--source-pattern", sp.source_pattern, "Source sensor .prnu")->required();
    spoof->add_option("--target-pattern", sp.target_pattern, "Target sensor .prnu")->required();
    spoof->add_option("--out", sp.out, "Output PGM")->required();
    spoof->add_option("--method", sp.method, "proposed | baseline1 | baseline2 | denoised_inject");
    spoof->add_option("--result", sp.result, "Result JSON (default: <out>.json)");
    spoof->add_option("--trajectory", sp.trajectory, "Write the per-iteration trajectory CSV here");
    spoof->add_option("--gallery-dir", sp.gallery_dir, "Evaluation gallery for the final scores");
    spoof->add_option("--seed", g.seed, "Root seed (same as the global flag)");
    spoof->callback([&] { rc = cmd_spoof(sp); });

    ExperimentArgs ex;
    auto* experiment = app.add_subcommand("experiment", "Run a harness protocol from a config file");
    experiment->add_option("--config", ex.config, "TOML configuration file")->check(CLI::ExistingFile);
    experiment->add_option("--kind", ex.kind, "identify | spoof | iterations")->required();
    experiment->add_option("--output-dir", ex.output_dir, "Override output_dir from the config");
    experiment->callback([&] { rc = cmd_experiment(ex); });

    SynthArgs sy;
    auto* synth = app.add_subcommand("synth", "Synthetic sensor tools");
    synth->require_subcommand(1);
    auto* gen = synth->add_subcommand("gen", "Write captures of simulated sensors as PGM files");
    gen->add_option("--out-dir", sy.out_dir, "Output directory (one subdirectory per sensor)")->required();
    gen->add_option("--sensors", sy.sensors, "Number of sensors")->check(CLI::PositiveNumber);
    gen->add_option("--count", sy.count, "Captures per sensor")->check(CLI::PositiveNumber);
    gen->add_option("--height", sy.height, "Image height")->check(CLI::PositiveNumber);
    gen->add_option("--width", sy.width, "Image width")->check(CLI::PositiveNumber);
    gen->add_option("--strength", sy.strength, "PRNU strength");
    gen->add_option("--read-noise", sy.read_noise, "Read noise sigma");
    gen->callback([&] { rc = cmd_synth_gen(sy); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return rc;
}
