#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "toml.hpp"

#include "prnu/error.hpp"
#include "prnu/harness.hpp"

namespace prnu {

namespace detail {

inline std::string key_path(std::string_view where, std::string_view key)
{
    return where.empty() ? std::string(key) : std::string(where) + "." + std::string(key);
}

inline void reject_unknown(const toml::table& t, std::string_view where, std::initializer_list<std::string_view> known)
{
    for (const auto& [k, v] : t) {
        bool ok = false;
        for (std::string_view name : known) {
            ok = ok || k.str() == name;
        }
        if (!ok) {
            throw InvalidArgument("config: unknown key '" + key_path(where, k.str()) + "'");
        }
    }
}

inline const toml::table* subtable(const toml::table& t, std::string_view key, std::string_view where)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return nullptr;
    }
    if (!n->is_table()) {
        throw InvalidArgument("config: '" + key_path(where, key) + "' must be a table");
    }
    return n->as_table();
}

inline void read_double(const toml::table& t, std::string_view key, std::string_view where, double& out)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return;
    }
    if (auto v = n->value<double>()) {
        out = *v;
        return;
    }
    throw InvalidArgument("config: '" + key_path(where, key) + "' must be a number");
}

inline std::int64_t integer_node(const toml::node& n, const std::string& name, std::int64_t min)
{
    auto v = n.value_exact<std::int64_t>();
    if (!v) {
        throw InvalidArgument("config: '" + name + "' must be an integer");
    }
    if (*v < min) {
        throw InvalidArgument("config: '" + name + "' must be >= " + std::to_string(min));
    }
    return *v;
}

template <typename T>
void read_unsigned(const toml::table& t, std::string_view key, std::string_view where, T& out)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return;
    }
    const auto v = integer_node(*n, key_path(where, key), 0);
    if (static_cast<std::uint64_t>(v) > std::numeric_limits<T>::max()) {
        throw InvalidArgument("config: '" + key_path(where, key) + "' is out of range");
    }
    out = static_cast<T>(v);
}

inline void read_string(const toml::table& t, std::string_view key, std::string_view where, std::string& out)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return;
    }
    if (auto v = n->value<std::string>()) {
        out = *v;
        return;
    }
    throw InvalidArgument("config: '" + key_path(where, key) + "' must be a string");
}

inline void read_bool(const toml::table& t, std::string_view key, std::string_view where, bool& out)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return;
    }
    if (auto v = n->value<bool>()) {
        out = *v;
        return;
    }
    throw InvalidArgument("config: '" + key_path(where, key) + "' must be a boolean");
}

inline std::vector<std::size_t> read_size_list(const toml::table& t, std::string_view key, std::string_view where,
                                               std::vector<std::size_t> fallback)
{
    const toml::node* n = t.get(key);
    if (n == nullptr) {
        return fallback;
    }
    const std::string name = key_path(where, key);
    if (!n->is_array()) {
        throw InvalidArgument("config: '" + name + "' must be an array of integers");
    }
    std::vector<std::size_t> out;
    for (const toml::node& item : *n->as_array()) {
        out.push_back(static_cast<std::size_t>(integer_node(item, name, 0)));
    }
    return out;
}

inline void apply_denoise(const toml::table& t, DenoiseParams& p)
{
    reject_unknown(t, "denoise", {"levels", "noise_variance", "window_sizes"});
    read_unsigned(t, "levels", "denoise", p.levels);
    read_double(t, "noise_variance", "denoise", p.noise_variance);
    p.window_sizes = read_size_list(t, "window_sizes", "denoise", p.window_sizes);
}

inline void apply_perturb(const toml::table& t, PerturbParams& p)
{
    reject_unknown(t, "perturb", {"alpha", "eta", "max_iters", "patch"});
    read_double(t, "alpha", "perturb", p.alpha);
    read_double(t, "eta", "perturb", p.eta);
    read_unsigned(t, "max_iters", "perturb", p.max_iters);
    if (const toml::table* patch = subtable(t, "patch", "perturb")) {
        reject_unknown(*patch, "perturb.patch", {"count", "height", "width"});
        read_unsigned(*patch, "count", "perturb.patch", p.patch.count);
        read_unsigned(*patch, "height", "perturb.patch", p.patch.patch_h);
        read_unsigned(*patch, "width", "perturb.patch", p.patch.patch_w);
    }
}

inline void apply_spoof(const toml::table& t, SpoofSettings& s)
{
    reject_unknown(t, "spoof",
                   {"method", "images_per_pair", "candidate_gallery_size", "pairs", "m_values", "gamma", "beta",
                    "save_trajectories"});
    std::string method(to_string(s.method));
    read_string(t, "method", "spoof", method);
    s.method = parse_spoof_method(method);
    read_unsigned(t, "images_per_pair", "spoof", s.images_per_pair);
    read_unsigned(t, "candidate_gallery_size", "spoof", s.candidate_gallery_size);
    s.m_values = read_size_list(t, "m_values", "spoof", s.m_values);
    read_double(t, "gamma", "spoof", s.gamma);
    read_double(t, "beta", "spoof", s.beta);
    read_bool(t, "save_trajectories", "spoof", s.save_trajectories);
    if (const toml::node* n = t.get("pairs")) {
        if (!n->is_array()) {
            throw InvalidArgument("config: 'spoof.pairs' must be an array of [source, target] pairs");
        }
        s.pairs.clear();
        for (const toml::node& item : *n->as_array()) {
            const toml::array* pair = item.as_array();
            if (pair == nullptr || pair->size() != 2 || !(*pair)[0].is_string() || !(*pair)[1].is_string()) {
                throw InvalidArgument("config: each entry of 'spoof.pairs' must be [\"source\", \"target\"]");
            }
            s.pairs.emplace_back(*(*pair)[0].value<std::string>(), *(*pair)[1].value<std::string>());
        }
    }
}

inline SensorSpec parse_sensor(const toml::table& t, std::size_t index)
{
    const std::string where = "sensors[" + std::to_string(index) + "]";
    reject_unknown(t, where, {"id", "kind", "strength", "read_noise", "path", "subject_pattern"});
    SensorSpec s;
    read_string(t, "id", where, s.sensor_id);
    if (s.sensor_id.empty()) {
        throw InvalidArgument("config: '" + where + ".id' is required");
    }
    std::string kind = "synthetic";
    read_string(t, "kind", where, kind);
    if (kind == "synthetic") {
        s.kind = SensorKind::synthetic;
    } else if (kind == "directory") {
        s.kind = SensorKind::directory;
    } else {
        throw InvalidArgument("config: '" + where + ".kind' must be \"synthetic\" or \"directory\"");
    }
    read_double(t, "strength", where, s.strength);
    read_double(t, "read_noise", where, s.read_noise_sigma);
    std::string path;
    read_string(t, "path", where, path);
    s.directory = path;
    if (t.contains("subject_pattern")) {
        std::string pattern;
        read_string(t, "subject_pattern", where, pattern);
        s.subject_pattern = pattern;
    }
    if (s.kind == SensorKind::directory && s.directory.empty()) {
        throw InvalidArgument("config: '" + where + ".path' is required for directory sensors");
    }
    return s;
}

} // namespace detail

/// Applies a parsed TOML document on top of `cfg`. Unknown keys are errors.
inline void apply_config(const toml::table& doc, ExperimentConfig& cfg)
{
    detail::reject_unknown(doc, "",
                           {"seed", "jobs", "train_count", "test_count", "working_dims", "output_dir", "postprocess",
                            "denoise", "perturb", "spoof", "sensors"});
    detail::read_unsigned(doc, "seed", "", cfg.seed);
    detail::read_unsigned(doc, "jobs", "", cfg.jobs);
    detail::read_unsigned(doc, "train_count", "", cfg.train_count);
    detail::read_unsigned(doc, "test_count", "", cfg.test_count);
    const auto dims = detail::read_size_list(doc, "working_dims", "", {cfg.working_dims.height, cfg.working_dims.width});
    if (dims.size() != 2) {
        throw InvalidArgument("config: 'working_dims' must be [height, width]");
    }
    cfg.working_dims = {dims[0], dims[1]};
    std::string out = cfg.output_dir.string();
    detail::read_string(doc, "output_dir", "", out);
    cfg.output_dir = out;
    std::string post(to_string(cfg.postprocess));
    detail::read_string(doc, "postprocess", "", post);
    cfg.postprocess = parse_postprocess(post);

    if (const toml::table* t = detail::subtable(doc, "denoise", "")) {
        detail::apply_denoise(*t, cfg.denoise);
    }
    if (const toml::table* t = detail::subtable(doc, "perturb", "")) {
        detail::apply_perturb(*t, cfg.perturb);
    }
    if (const toml::table* t = detail::subtable(doc, "spoof", "")) {
        detail::apply_spoof(*t, cfg.spoof);
    }
    if (const toml::node* n = doc.get("sensors")) {
        const toml::array* arr = n->as_array();
        if (arr == nullptr) {
            throw InvalidArgument("config: 'sensors' must be an array of tables ([[sensors]])");
        }
        cfg.sensors.clear();
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const toml::table* t = (*arr)[i].as_table();
            if (t == nullptr) {
                throw InvalidArgument("config: 'sensors' entries must be tables");
            }
            cfg.sensors.push_back(detail::parse_sensor(*t, i));
        }
    }
    validate(cfg);
}

inline ExperimentConfig parse_config(std::string_view text, std::string_view source_name = "<config>")
{
    ExperimentConfig cfg;
    try {
        const toml::table doc = toml::parse(text, source_name);
        apply_config(doc, cfg);
    } catch (const toml::parse_error& e) {
        std::ostringstream msg;
        msg << "config: " << e.description() << " (" << e.source() << ")";
        throw FormatError(msg.str());
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), path.string());
}

} // namespace prnu
