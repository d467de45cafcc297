#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/rng.hpp"

namespace fginpaint {

struct IntRange {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
    bool empty() const { return hi < lo; }
};

struct RealRange {
    double lo = 0.0;
    double hi = 0.0;
    bool empty() const { return hi < lo; }
    bool contains(double v) const { return v >= lo && v <= hi; }
};

/// Free-form brush stroke generator settings. Hole area is controlled by
/// rejection sampling against target_ratio.
struct StrokeConfig {
    IntRange num_strokes{1, 5};
    IntRange vertex_count{4, 12};
    double max_stroke_width = 18.0; // pixels
    double max_turn_angle = 1.0471975511965976; // pi/3 radians
    RealRange target_ratio{0.01, 0.60};

    /// Width scaled to the mask size; the other defaults are size-free.
    static StrokeConfig defaults_for(std::int64_t h, std::int64_t w) {
        StrokeConfig cfg;
        cfg.max_stroke_width = std::max(3.0, 0.07 * static_cast<double>(std::min(h, w)));
        return cfg;
    }

    /// Enforces the documented invariants (CLI-facing; the generator itself
    /// accepts any nonempty ratio interval and reports infeasibility).
    void validate() const {
        if (num_strokes.empty() || num_strokes.lo < 1)
            throw ConfigError("StrokeConfig: num_strokes range empty or < 1");
        if (vertex_count.empty() || vertex_count.lo < 1)
            throw ConfigError("StrokeConfig: vertex_count range empty or < 1");
        if (max_stroke_width < 1.0) throw ConfigError("StrokeConfig: max_stroke_width < 1");
        if (max_turn_angle < 0.0) throw ConfigError("StrokeConfig: negative max_turn_angle");
        if (target_ratio.empty() || target_ratio.lo < 0.01 || target_ratio.hi > 0.60)
            throw ConfigError("StrokeConfig: target_ratio must be within [0.01, 0.60]");
    }
};

/// Fraction of hole pixels (zeros) in a mask.
inline double hole_to_image_ratio(const HoleMask& mask) {
    std::int64_t zeros = 0;
    for (std::uint8_t v : mask.data) zeros += (v == 0);
    return static_cast<double>(zeros) / static_cast<double>(mask.height * mask.width);
}

namespace detail {

// Marks as holes all pixels whose integer-coordinate center lies within
// radius r of segment p0-p1 (capsule; round caps and joins come from the
// union of capsules).
inline void rasterize_capsule(HoleMask& mask, double x0, double y0, double x1, double y1,
                              double r) {
    const double dx = x1 - x0, dy = y1 - y0;
    const double len2 = dx * dx + dy * dy;
    const double r2 = r * r;
    const std::int64_t ylo = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::floor(std::min(y0, y1) - r)));
    const std::int64_t yhi = std::min<std::int64_t>(
        mask.height - 1, static_cast<std::int64_t>(std::ceil(std::max(y0, y1) + r)));
    const std::int64_t xlo = std::max<std::int64_t>(
        0, static_cast<std::int64_t>(std::floor(std::min(x0, x1) - r)));
    const std::int64_t xhi = std::min<std::int64_t>(
        mask.width - 1, static_cast<std::int64_t>(std::ceil(std::max(x0, x1) + r)));
    for (std::int64_t y = ylo; y <= yhi; ++y) {
        for (std::int64_t x = xlo; x <= xhi; ++x) {
            const double px = static_cast<double>(x), py = static_cast<double>(y);
            double t = 0.0;
            if (len2 > 0.0) t = std::clamp(((px - x0) * dx + (py - y0) * dy) / len2, 0.0, 1.0);
            const double cx = x0 + t * dx, cy = y0 + t * dy;
            const double ex = px - cx, ey = py - cy;
            if (ex * ex + ey * ey <= r2) mask.at(y, x) = 0;
        }
    }
}

inline HoleMask draw_strokes(Rng& rng, std::int64_t h, std::int64_t w, const StrokeConfig& cfg) {
    HoleMask mask(h, w, 1);
    const double side = static_cast<double>(std::min(h, w));
    const std::int64_t strokes = rng.uniform_int(cfg.num_strokes.lo, cfg.num_strokes.hi);
    for (std::int64_t s = 0; s < strokes; ++s) {
        const double radius = 0.5 * rng.uniform(1.0, cfg.max_stroke_width);
        double x = rng.uniform(0.0, static_cast<double>(w - 1));
        double y = rng.uniform(0.0, static_cast<double>(h - 1));
        double angle = rng.uniform(0.0, 2.0 * 3.14159265358979323846);
        const std::int64_t verts = rng.uniform_int(cfg.vertex_count.lo, cfg.vertex_count.hi);
        for (std::int64_t v = 0; v < verts; ++v) {
            angle += rng.uniform(-cfg.max_turn_angle, cfg.max_turn_angle);
            const double len = rng.uniform(0.06, 0.22) * side;
            const double nx = x + len * std::cos(angle);
            const double ny = y + len * std::sin(angle);
            rasterize_capsule(mask, x, y, nx, ny, radius);
            x = nx;
            y = ny;
        }
    }
    return mask;
}

} // namespace detail

/// Rasterizes random polyline brush strokes as holes and rejection-resamples
/// until the hole-to-image ratio falls inside cfg.target_ratio. Deterministic
/// for a fixed (seed, size, cfg); throws GenerationError after 100 rejected
/// samples.
inline HoleMask generate_freeform_mask(std::uint64_t seed, std::int64_t h, std::int64_t w,
                                       const StrokeConfig& cfg) {
    if (h < 32 || w < 32) throw DimensionError("generate_freeform_mask: size must be >= 32x32");
    if (cfg.target_ratio.empty() || cfg.target_ratio.lo < 0.0 || cfg.target_ratio.hi > 1.0)
        throw ConfigError("generate_freeform_mask: bad target_ratio interval");
    Rng rng(seed);
    for (int attempt = 0; attempt < 100; ++attempt) {
        HoleMask mask = detail::draw_strokes(rng, h, w, cfg);
        if (cfg.target_ratio.contains(hole_to_image_ratio(mask))) return mask;
    }
    throw GenerationError("generate_freeform_mask: no sample hit the target ratio in 100 tries");
}

/// Integer label map with a name -> label dictionary.
struct AttributeMap {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<int> labels; // per pixel, row-major
    std::map<std::string, int> label_of;

    int at(std::int64_t h, std::int64_t w) const {
        return labels[static_cast<std::size_t>(h * width + w)];
    }

    /// Every pixel must exist and carry one of the mapped labels.
    void validate() const {
        if (height <= 0 || width <= 0 ||
            labels.size() != static_cast<std::size_t>(height * width))
            throw DimensionError("AttributeMap: label buffer does not match dims");
        std::set<int> known;
        for (const auto& [name, v] : label_of) known.insert(v);
        for (int v : labels)
            if (!known.count(v))
                throw ValueError("AttributeMap: pixel label " + std::to_string(v) +
                                 " missing from the label mapping");
    }
};

/// Pixel is foreground iff its label belongs to the selected attribute set
/// (skin and hair by default).
inline ForegroundMask foreground_from_attributes(
    const AttributeMap& attrs, const std::vector<std::string>& names = {"skin", "hair"}) {
    std::set<int> selected;
    for (const auto& name : names) {
        const auto it = attrs.label_of.find(name);
        if (it == attrs.label_of.end())
            throw ConfigError("foreground_from_attributes: label mapping has no '" + name + "'");
        selected.insert(it->second);
    }
    ForegroundMask fg(attrs.height, attrs.width, 0);
    for (std::int64_t i = 0; i < attrs.height * attrs.width; ++i)
        fg.data[static_cast<std::size_t>(i)] =
            selected.count(attrs.labels[static_cast<std::size_t>(i)]) ? 1 : 0;
    return fg;
}

} // namespace fginpaint
