#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prnu/denoise.hpp"
#include "prnu/error.hpp"
#include "prnu/fingerprint.hpp"
#include "prnu/image.hpp"
#include "prnu/rng.hpp"

namespace prnu {

struct PatchSpec {
    /// Number of random patches used for candidate selection (K).
    std::size_t count = 10;
    std::size_t patch_h = 10;
    std::size_t patch_w = 10;
    std::uint64_t rng_seed = 0;

    friend bool operator==(const PatchSpec&, const PatchSpec&) = default;
};

struct PerturbParams {
    double alpha = 0.01;
    double eta = 0.1;
    std::size_t max_iters = 3000;
    PatchSpec patch;
    std::uint64_t rng_seed = 0;

    friend bool operator==(const PerturbParams&, const PerturbParams&) = default;
};

inline void validate(const PatchSpec& p)
{
    if (p.count == 0) {
        throw InvalidArgument("patch count K must be >= 1");
    }
    if (p.patch_h == 0 || p.patch_w == 0) {
        throw InvalidArgument("patch dimensions must be >= 1");
    }
}

inline void validate(const PerturbParams& p)
{
    if (!(p.alpha > 0.0 && p.alpha < 1.0)) {
        throw InvalidArgument("alpha must lie in (0, 1)");
    }
    if (!(p.eta > 0.0)) {
        throw InvalidArgument("eta must be > 0");
    }
    if (p.max_iters == 0) {
        throw InvalidArgument("max_iters must be >= 1");
    }
    validate(p.patch);
}

/// Position of a patch on the aligned grid, in patch units.
struct PatchIndex {
    std::size_t row = 0;
    std::size_t col = 0;

    friend auto operator<=>(const PatchIndex&, const PatchIndex&) = default;
};

/// Aligned patch grid of an image; partial patches at the bottom/right edges
/// are not addressable.
struct PatchGrid {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::size_t patch_h = 0;
    std::size_t patch_w = 0;

    PatchGrid(Dims d, std::size_t ph, std::size_t pw) : patch_h(ph), patch_w(pw)
    {
        if (ph == 0 || pw == 0 || ph > d.height || pw > d.width) {
            throw InvalidArgument("patch " + std::to_string(ph) + "x" + std::to_string(pw) +
                                  " does not fit image " + to_string(d));
        }
        rows = d.height / ph;
        cols = d.width / pw;
    }

    std::size_t size() const noexcept { return rows * cols; }
    PatchIndex at(std::size_t flat) const noexcept { return {flat / cols, flat % cols}; }

    /// True iff pixel (r, c) lies in patch p, i.e. (r / h_p, c / w_p) == p.
    bool contains(PatchIndex p, std::size_t r, std::size_t c) const noexcept
    {
        return r / patch_h == p.row && c / patch_w == p.col;
    }
};

inline double patch_mean(const Image& img, const PatchGrid& grid, PatchIndex p)
{
    double s = 0.0;
    for (std::size_t r = p.row * grid.patch_h; r < (p.row + 1) * grid.patch_h; ++r) {
        for (std::size_t c = p.col * grid.patch_w; c < (p.col + 1) * grid.patch_w; ++c) {
            s += img(r, c);
        }
    }
    return s / static_cast<double>(grid.patch_h * grid.patch_w);
}

/// Pearson correlation; 0 when either vector has zero variance.
inline double pearson(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) {
        throw DimensionMismatch("pearson: length mismatch");
    }
    if (a.empty()) {
        return 0.0;
    }
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double da = a[i] - ma;
        const double db = b[i] - mb;
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if (saa <= 0.0 || sbb <= 0.0) {
        return 0.0;
    }
    return sab / std::sqrt(saa * sbb);
}

/// K distinct patch positions drawn uniformly from the grid.
inline std::vector<PatchIndex> sample_patches(const PatchGrid& grid, std::size_t count, std::uint64_t seed)
{
    if (count > grid.size()) {
        throw InvalidArgument("cannot sample " + std::to_string(count) + " distinct patches from a grid of " +
                              std::to_string(grid.size()));
    }
    std::vector<std::size_t> order(grid.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = 0; i < count; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, order.size() - 1);
        std::swap(order[i], order[pick(rng)]);
    }
    std::vector<PatchIndex> patches;
    patches.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        patches.push_back(grid.at(order[i]));
    }
    return patches;
}

struct CandidateSelection {
    Image candidate;
    std::size_t index = 0;
    double correlation = 0.0;
    std::vector<PatchIndex> patches;
};

/// Picks the gallery image whose per-patch mean intensities correlate best
/// with the input's over K random patches (first index wins ties).
inline CandidateSelection select_candidate(const Image& input, std::span<const Image> gallery,
                                           const PatchSpec& spec)
{
    validate(spec);
    if (gallery.empty()) {
        throw InvalidArgument("select_candidate: empty gallery");
    }
    for (const Image& g : gallery) {
        require_same_dims(input.dims(), g.dims(), "select_candidate");
    }
    const PatchGrid grid(input.dims(), spec.patch_h, spec.patch_w);

    CandidateSelection sel;
    sel.patches = sample_patches(grid, spec.count, derive_seed(spec.rng_seed, "spoof.candidate_patches"));

    auto means = [&](const Image& img) {
        std::vector<double> v;
        v.reserve(sel.patches.size());
        for (PatchIndex p : sel.patches) {
            v.push_back(patch_mean(img, grid, p));
        }
        return v;
    };
    const auto vx = means(input);
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < gallery.size(); ++i) {
        const double corr = pearson(vx, means(gallery[i]));
        if (corr > best) {
            best = corr;
            sel.index = i;
        }
    }
    sel.correlation = best;
    sel.candidate = gallery[sel.index];
    return sel;
}

struct TrajectorySample {
    std::size_t iteration = 0;
    /// phi(Y, S_t) of the retained image.
    double phi_target = 0.0;
    /// phi(Y, S_o) of the retained image.
    double phi_source = 0.0;
    /// phi(., S_t) of the discarded branch.
    double phi_target_discarded = 0.0;
};

struct SpoofResult {
    Image perturbed;
    std::size_t iterations_used = 0;
    bool succeeded = false;
    /// (phi_t - phi_o) / phi(X, S_o) at exit.
    double final_criterion = 0.0;
    double initial_phi_source = 0.0;
    std::vector<TrajectorySample> trajectory;
    std::vector<NCCScore> final_scores;
    /// Distinct patches touched, sorted.
    std::vector<PatchIndex> visited;
};

namespace detail {

inline void require_perturb_dims(const Image& input, const Image& candidate, const ReferencePattern& source,
                                 const ReferencePattern& target)
{
    require_same_dims(input.dims(), candidate.dims(), "perturb (candidate)");
    require_same_dims(input.dims(), source.dims(), "perturb (source pattern)");
    require_same_dims(input.dims(), target.dims(), "perturb (target pattern)");
}

} // namespace detail

/// Iterative patch perturbation toward the target sensor, evaluated at
/// several iteration budgets in one pass.
///
/// Each iteration picks a uniformly random grid patch, forms
/// Y +/- alpha * (X_c - Y) inside it (both saturated to [0, 255]) and keeps
/// the branch correlating better with the target pattern (ties keep the
/// positive branch). The loop stops once
/// (phi(Y, S_t) - phi(Y, S_o)) / phi(X, S_o) > eta or the budget runs out.
///
/// `budgets` must be non-empty and ascending; entry j of the result is exactly
/// what a run with max_iters = budgets[j] returns, since patch draws come from
/// one stream seeded by params.rng_seed. params.max_iters is ignored here.
inline std::vector<SpoofResult> perturb_budgets(const Image& input, const Image& candidate,
                                                const ReferencePattern& source, const ReferencePattern& target,
                                                const PerturbParams& params, const DenoiseParams& dp,
                                                std::span<const std::size_t> budgets)
{
    validate(params);
    validate(dp);
    detail::require_perturb_dims(input, candidate, source, target);
    if (budgets.empty() || !std::is_sorted(budgets.begin(), budgets.end()) || budgets.front() == 0) {
        throw InvalidArgument("perturb: iteration budgets must be non-empty, ascending and >= 1");
    }
    const PatchGrid grid(input.dims(), params.patch.patch_h, params.patch.patch_w);

    const auto source_unit = normalized_vector(source.values);
    const auto target_unit = normalized_vector(target.values);
    auto phi = [&](const RealPlane& w, const std::vector<double>& unit) {
        return normalized_correlation(normalized_vector(w), unit);
    };

    const double phi_x_source = phi(residual(input, dp).values, source_unit);
    if (!(phi_x_source > 0.0)) {
        throw DegenerateCriterion("perturb: phi(X, S_o) = " + std::to_string(phi_x_source) +
                                  " is not positive; the termination criterion is undefined");
    }

    const std::size_t w = input.width();
    RealPlane y = input.plane();
    RealPlane yu = y;
    RealPlane yv = y;
    const RealPlane& xc = candidate.plane();

    Rng rng(params.rng_seed);
    std::uniform_int_distribution<std::size_t> pick_row(0, grid.rows - 1);
    std::uniform_int_distribution<std::size_t> pick_col(0, grid.cols - 1);

    std::vector<SpoofResult> results;
    results.reserve(budgets.size());
    std::vector<TrajectorySample> trajectory;
    std::set<PatchIndex> visited;

    auto snapshot = [&](std::size_t iters, bool succeeded, double criterion) {
        SpoofResult r;
        r.perturbed = Image(y);
        r.iterations_used = iters;
        r.succeeded = succeeded;
        r.final_criterion = criterion;
        r.initial_phi_source = phi_x_source;
        r.trajectory = trajectory;
        r.visited.assign(visited.begin(), visited.end());
        if (!trajectory.empty()) {
            r.final_scores = {{source.sensor_id, trajectory.back().phi_source},
                              {target.sensor_id, trajectory.back().phi_target}};
        }
        return r;
    };

    const std::size_t max_budget = budgets.back();
    std::size_t next_budget = 0;
    for (std::size_t iter = 1; iter <= max_budget; ++iter) {
        const PatchIndex p{pick_row(rng), pick_col(rng)};
        visited.insert(p);
        const std::size_t r0 = p.row * grid.patch_h;
        const std::size_t c0 = p.col * grid.patch_w;
        for (std::size_t r = r0; r < r0 + grid.patch_h; ++r) {
            for (std::size_t c = c0; c < c0 + grid.patch_w; ++c) {
                const std::size_t i = r * w + c;
                const double step = params.alpha * (xc.data()[i] - y.data()[i]);
                yu.data()[i] = saturate(y.data()[i] + step);
                yv.data()[i] = saturate(y.data()[i] - step);
            }
        }
        RealPlane wu = residual(yu, dp).values;
        RealPlane wv = residual(yv, dp).values;
        const double phi_u = phi(wu, target_unit);
        const double phi_v = phi(wv, target_unit);
        const bool take_v = phi_v > phi_u;
        const RealPlane& chosen = take_v ? yv : yu;
        for (std::size_t r = r0; r < r0 + grid.patch_h; ++r) {
            for (std::size_t c = c0; c < c0 + grid.patch_w; ++c) {
                const std::size_t i = r * w + c;
                y.data()[i] = chosen.data()[i];
                yu.data()[i] = y.data()[i];
                yv.data()[i] = y.data()[i];
            }
        }
        const double phi_t = take_v ? phi_v : phi_u;
        const double phi_o = phi(take_v ? wv : wu, source_unit);
        trajectory.push_back({iter, phi_t, phi_o, take_v ? phi_u : phi_v});

        const double criterion = (phi_t - phi_o) / phi_x_source;
        if (criterion > params.eta) {
            const SpoofResult done = snapshot(iter, true, criterion);
            while (results.size() < budgets.size()) {
                results.push_back(done);
            }
            return results;
        }
        while (next_budget < budgets.size() && budgets[next_budget] == iter) {
            results.push_back(snapshot(iter, false, criterion));
            ++next_budget;
        }
    }
    return results;
}

/// Single-budget form of perturb_budgets using params.max_iters.
inline SpoofResult perturb(const Image& input, const Image& candidate, const ReferencePattern& source,
                           const ReferencePattern& target, const PerturbParams& params, const DenoiseParams& dp)
{
    const std::size_t budget[] = {params.max_iters};
    return std::move(perturb_budgets(input, candidate, source, target, params, dp, budget).front());
}

/// I' = I + I * gamma * K_T, saturated.
inline Image baseline1_inject(const Image& input, const ReferencePattern& target, double gamma = 1.0)
{
    require_same_dims(input.dims(), target.dims(), "baseline1_inject");
    RealPlane out(input.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double v = input.plane().data()[i];
        out.data()[i] = v + v * gamma * target.values.data()[i];
    }
    return clamp(out);
}

/// I' = I - gamma * K_S' + beta * K_T', where both patterns are divided by
/// the largest absolute value found in either of them.
inline Image baseline2_substitute(const Image& input, const ReferencePattern& source, const ReferencePattern& target,
                                  double gamma = 1.0, double beta = 1.0)
{
    require_same_dims(input.dims(), source.dims(), "baseline2_substitute (source)");
    require_same_dims(input.dims(), target.dims(), "baseline2_substitute (target)");
    const double norm = std::max(max_abs(source.values), max_abs(target.values));
    if (!(norm > 0.0)) {
        throw InvalidArgument("baseline2_substitute: both reference patterns are identically zero");
    }
    RealPlane out(input.dims());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] = input.plane().data()[i] - gamma * (source.values.data()[i] / norm) +
                        beta * (target.values.data()[i] / norm);
    }
    return clamp(out);
}

/// I' = F(I) + gamma * K_T, saturated.
inline Image baseline_denoised_inject(const Image& input, const ReferencePattern& target, double gamma,
                                      const DenoiseParams& dp)
{
    require_same_dims(input.dims(), target.dims(), "baseline_denoised_inject");
    RealPlane out = denoise(input, dp);
    for (std::size_t i = 0; i < out.size(); ++i) {
        out.data()[i] += gamma * target.values.data()[i];
    }
    return clamp(out);
}

enum class SpoofMethod { proposed, baseline1, baseline2, denoised_inject };

inline std::string_view to_string(SpoofMethod m)
{
    switch (m) {
    case SpoofMethod::proposed:
        return "proposed";
    case SpoofMethod::baseline1:
        return "baseline1";
    case SpoofMethod::baseline2:
        return "baseline2";
    case SpoofMethod::denoised_inject:
        return "denoised_inject";
    }
    return "?";
}

inline SpoofMethod parse_spoof_method(std::string_view s)
{
    for (auto m : {SpoofMethod::proposed, SpoofMethod::baseline1, SpoofMethod::baseline2,
                   SpoofMethod::denoised_inject}) {
        if (to_string(m) == s) {
            return m;
        }
    }
    throw InvalidArgument("unknown spoof method '" + std::string(s) +
                          "' (expected proposed, baseline1, baseline2 or denoised_inject)");
}

/// iteration,phi_target,phi_source rows with a header line.
inline void write_trajectory_csv(std::ostream& out, const SpoofResult& r)
{
    out << "iteration,phi_target,phi_source\n";
    const auto old_precision = out.precision(17);
    for (const auto& s : r.trajectory) {
        out << s.iteration << ',' << s.phi_target << ',' << s.phi_source << '\n';
    }
    out.precision(old_precision);
}

} // namespace prnu
