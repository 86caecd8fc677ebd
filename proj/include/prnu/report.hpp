#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "prnu/error.hpp"
#include "prnu/harness.hpp"
#include "prnu/spoof.hpp"

namespace prnu {

using Json = nlohmann::ordered_json;

namespace detail {

/// Non-finite values (the identical-image PSNR) become null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

inline Json scores_json(std::span<const NCCScore> scores)
{
    Json out = Json::array();
    for (const NCCScore& s : scores) {
        out.push_back({{"sensor_id", s.sensor_id}, {"value", s.value}});
    }
    return out;
}

inline std::string fixed(double v, int decimals)
{
    if (!std::isfinite(v)) {
        return v > 0 ? "inf" : "nan";
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

inline std::string pad_left(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

inline std::string pad_right(const std::string& s, std::size_t width)
{
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

} // namespace detail

inline Json to_json(const ConfusionMatrix& cm)
{
    Json j;
    j["labels"] = cm.labels;
    j["counts"] = cm.counts;
    j["accuracies"] = cm.accuracies;
    Json rows = Json::array();
    for (std::size_t i = 0; i < cm.counts.size(); ++i) {
        rows.push_back(cm.row_sum(i));
    }
    j["test_counts"] = rows;
    j["overall_accuracy"] = cm.overall_accuracy();
    return j;
}

inline Json to_json(const SpoofRecord& r)
{
    Json j;
    j["index"] = r.index;
    j["predicted"] = r.predicted;
    j["classified_as_target"] = r.hit;
    j["iterations"] = r.iterations;
    j["succeeded"] = r.succeeded;
    j["final_criterion"] = r.final_criterion;
    j["rejected"] = r.rejected;
    j["psnr"] = detail::number_or_null(r.psnr);
    j["locality_ok"] = r.locality_ok ? Json(*r.locality_ok) : Json(nullptr);
    j["scores"] = detail::scores_json(r.scores);
    return j;
}

inline Json to_json(const SSRReport& r)
{
    Json j;
    j["source"] = r.source_id;
    j["target"] = r.target_id;
    j["method"] = std::string(to_string(r.method));
    j["max_iters"] = r.max_iters;
    j["n_attempted"] = r.n_attempted;
    j["n_classified_as_target"] = r.n_classified_as_target;
    j["ssr"] = r.ssr;
    j["median_psnr"] = detail::number_or_null(r.median_psnr());
    Json images = Json::array();
    for (const SpoofRecord& rec : r.images) {
        images.push_back(to_json(rec));
    }
    j["images"] = std::move(images);
    return j;
}

inline Json to_json(std::span<const SSRReport> reports)
{
    Json j;
    Json arr = Json::array();
    for (const SSRReport& r : reports) {
        arr.push_back(to_json(r));
    }
    j["aggregate_ssr"] = aggregate_ssr(reports);
    j["reports"] = std::move(arr);
    return j;
}

/// SpoofResult as written by the CLI; the trajectory goes to CSV instead.
inline Json to_json(const SpoofResult& r, std::string_view method)
{
    Json j;
    j["method"] = std::string(method);
    j["iterations_used"] = r.iterations_used;
    j["succeeded"] = r.succeeded;
    j["final_criterion"] = r.final_criterion;
    j["initial_phi_source"] = r.initial_phi_source;
    j["final_scores"] = detail::scores_json(r.final_scores);
    Json visited = Json::array();
    for (const PatchIndex& p : r.visited) {
        visited.push_back({p.row, p.col});
    }
    j["visited_patches"] = std::move(visited);
    return j;
}

inline std::string confusion_table(const ConfusionMatrix& cm)
{
    std::size_t w = 8;
    for (const auto& l : cm.labels) {
        w = std::max(w, l.size() + 2);
    }
    std::ostringstream out;
    out << detail::pad_right("true\\pred", w);
    for (const auto& l : cm.labels) {
        out << detail::pad_left(l, w);
    }
    out << detail::pad_left("acc(%)", 10) << '\n';
    for (std::size_t i = 0; i < cm.labels.size(); ++i) {
        out << detail::pad_right(cm.labels[i], w);
        for (std::size_t v : cm.counts[i]) {
            out << detail::pad_left(std::to_string(v), w);
        }
        out << detail::pad_left(detail::fixed(cm.accuracies[i], 2), 10) << '\n';
    }
    out << "overall accuracy: " << detail::fixed(cm.overall_accuracy(), 2) << "%\n";
    return out.str();
}

inline std::string ssr_table(std::span<const SSRReport> reports)
{
    std::ostringstream out;
    out << detail::pad_right("source", 12) << detail::pad_right("target", 12) << detail::pad_right("method", 17)
        << detail::pad_left("m", 7) << detail::pad_left("hits", 7) << detail::pad_left("n", 6)
        << detail::pad_left("SSR(%)", 9) << detail::pad_left("PSNR~", 9) << '\n';
    for (const SSRReport& r : reports) {
        out << detail::pad_right(r.source_id, 12) << detail::pad_right(r.target_id, 12)
            << detail::pad_right(std::string(to_string(r.method)), 17)
            << detail::pad_left(r.max_iters == 0 ? "-" : std::to_string(r.max_iters), 7)
            << detail::pad_left(std::to_string(r.n_classified_as_target), 7)
            << detail::pad_left(std::to_string(r.n_attempted), 6) << detail::pad_left(detail::fixed(r.ssr, 2), 9)
            << detail::pad_left(detail::fixed(r.median_psnr(), 2), 9) << '\n';
    }
    out << "aggregate SSR: " << detail::fixed(aggregate_ssr(reports), 2) << "%\n";
    return out.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text)
{
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot create '" + path.string() + "'");
    }
    out << text;
    if (!out) {
        throw IoError("write failed for '" + path.string() + "'");
    }
}

/// Stable serialization: fixed key order, two-space indent, trailing newline.
inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

} // namespace prnu
