#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/tensor.hpp"

namespace fginpaint {

/// Declared value range of an image: [0,1] for metrics and file I/O,
/// [-1,1] for the network (tanh output). Conversion is always explicit.
enum class ValueRange { unit, symmetric };

inline double range_lo(ValueRange r) { return r == ValueRange::unit ? 0.0 : -1.0; }
inline double range_hi(ValueRange) { return 1.0; }

/// H x W x C real image, interleaved row-major, with a declared value range.
struct ImageTensor {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::int64_t channels = 0;
    ValueRange range = ValueRange::unit;
    std::vector<double> data; // size H*W*C, index (h*W + w)*C + c

    ImageTensor() = default;
    ImageTensor(std::int64_t h, std::int64_t w, std::int64_t c, ValueRange r)
        : height(h), width(w), channels(c), range(r),
          data(static_cast<std::size_t>(h * w * c), 0.0) {
        if (h <= 0 || w <= 0 || c <= 0) throw DimensionError("ImageTensor: nonpositive dims");
    }

    double& at(std::int64_t h, std::int64_t w, std::int64_t c) {
        return data[static_cast<std::size_t>((h * width + w) * channels + c)];
    }
    double at(std::int64_t h, std::int64_t w, std::int64_t c) const {
        return data[static_cast<std::size_t>((h * width + w) * channels + c)];
    }

    std::int64_t numel() const { return height * width * channels; }

    bool same_shape(const ImageTensor& o) const {
        return height == o.height && width == o.width && channels == o.channels;
    }
};

/// Binary H x W map; convention 1 = valid pixel, 0 = hole.
struct HoleMask {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<std::uint8_t> data;

    HoleMask() = default;
    HoleMask(std::int64_t h, std::int64_t w, std::uint8_t fill = 1)
        : height(h), width(w), data(static_cast<std::size_t>(h * w), fill) {
        if (h <= 0 || w <= 0) throw DimensionError("HoleMask: nonpositive dims");
    }

    std::uint8_t& at(std::int64_t h, std::int64_t w) {
        return data[static_cast<std::size_t>(h * width + w)];
    }
    std::uint8_t at(std::int64_t h, std::int64_t w) const {
        return data[static_cast<std::size_t>(h * width + w)];
    }
};

/// Binary H x W map of the face skin and hair region (used only in losses
/// and evaluation, never as a convolutional input).
struct ForegroundMask {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::vector<std::uint8_t> data;

    ForegroundMask() = default;
    ForegroundMask(std::int64_t h, std::int64_t w, std::uint8_t fill = 0)
        : height(h), width(w), data(static_cast<std::size_t>(h * w), fill) {
        if (h <= 0 || w <= 0) throw DimensionError("ForegroundMask: nonpositive dims");
    }

    std::uint8_t& at(std::int64_t h, std::int64_t w) {
        return data[static_cast<std::size_t>(h * width + w)];
    }
    std::uint8_t at(std::int64_t h, std::int64_t w) const {
        return data[static_cast<std::size_t>(h * width + w)];
    }

    bool any() const {
        for (std::uint8_t v : data)
            if (v) return true;
        return false;
    }
};

/// One dataset element: image + its foreground mask + an assigned hole mask.
struct SamplePair {
    ImageTensor image;
    ForegroundMask foreground;
    HoleMask hole;
    std::string id;
};

/// Checks the invariants a freshly loaded or converted image must satisfy.
inline void validate_loaded_image(const ImageTensor& img, const std::string& context) {
    if (img.height < 8 || img.width < 8)
        throw DimensionError(context + ": image smaller than 8x8");
    if (img.channels != 1 && img.channels != 3)
        throw ValueError(context + ": channel count must be 1 or 3");
    const double lo = range_lo(img.range), hi = range_hi(img.range);
    for (double v : img.data)
        if (!(v >= lo && v <= hi))
            throw ValueError(context + ": pixel value outside declared range");
}

/// Explicit range conversion; identity when already in the target range.
inline ImageTensor to_range(const ImageTensor& img, ValueRange target) {
    if (img.range == target) return img;
    ImageTensor out(img.height, img.width, img.channels, target);
    if (target == ValueRange::symmetric) {
        for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] * 2.0 - 1.0;
    } else {
        for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = (img.data[i] + 1.0) * 0.5;
    }
    return out;
}

/// M_I = image * hole, broadcast over channels. Hole pixels become the
/// zero of the current value range.
inline ImageTensor apply_hole_mask(const ImageTensor& image, const HoleMask& hole) {
    if (image.height != hole.height || image.width != hole.width)
        throw DimensionError("apply_hole_mask: image and mask differ spatially");
    ImageTensor out = image;
    for (std::int64_t h = 0; h < image.height; ++h)
        for (std::int64_t w = 0; w < image.width; ++w) {
            if (hole.at(h, w)) continue;
            for (std::int64_t c = 0; c < image.channels; ++c) out.at(h, w, c) = 0.0;
        }
    return out;
}

/// hole*gt + (1-hole)*pred: valid pixels from the source, holes from the
/// prediction.
inline ImageTensor composite_output(const ImageTensor& gt, const ImageTensor& pred,
                                    const HoleMask& hole) {
    if (!pred.same_shape(gt)) throw DimensionError("composite_output: pred/gt shape mismatch");
    if (gt.height != hole.height || gt.width != hole.width)
        throw DimensionError("composite_output: mask shape mismatch");
    if (pred.range != gt.range) throw ValueError("composite_output: mixed value ranges");
    ImageTensor out = pred;
    for (std::int64_t h = 0; h < gt.height; ++h)
        for (std::int64_t w = 0; w < gt.width; ++w) {
            if (!hole.at(h, w)) continue;
            for (std::int64_t c = 0; c < gt.channels; ++c) out.at(h, w, c) = gt.at(h, w, c);
        }
    return out;
}

/// Bilinear resize with half-pixel centers; result clamped to the range.
inline ImageTensor resize_image(const ImageTensor& img, std::int64_t out_h, std::int64_t out_w) {
    if (out_h < 8 || out_w < 8) throw DimensionError("resize_image: target dims must be >= 8");
    if (out_h == img.height && out_w == img.width) return img;
    ImageTensor out(out_h, out_w, img.channels, img.range);
    const double sy = static_cast<double>(img.height) / static_cast<double>(out_h);
    const double sx = static_cast<double>(img.width) / static_cast<double>(out_w);
    const double lo = range_lo(img.range), hi = range_hi(img.range);
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const double src_y = (static_cast<double>(oy) + 0.5) * sy - 0.5;
        const std::int64_t y0 = static_cast<std::int64_t>(std::floor(src_y));
        const double fy = src_y - static_cast<double>(y0);
        const std::int64_t y0c = std::clamp<std::int64_t>(y0, 0, img.height - 1);
        const std::int64_t y1c = std::clamp<std::int64_t>(y0 + 1, 0, img.height - 1);
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const double src_x = (static_cast<double>(ox) + 0.5) * sx - 0.5;
            const std::int64_t x0 = static_cast<std::int64_t>(std::floor(src_x));
            const double fx = src_x - static_cast<double>(x0);
            const std::int64_t x0c = std::clamp<std::int64_t>(x0, 0, img.width - 1);
            const std::int64_t x1c = std::clamp<std::int64_t>(x0 + 1, 0, img.width - 1);
            for (std::int64_t c = 0; c < img.channels; ++c) {
                const double v = (1.0 - fy) * ((1.0 - fx) * img.at(y0c, x0c, c) +
                                               fx * img.at(y0c, x1c, c)) +
                                 fy * ((1.0 - fx) * img.at(y1c, x0c, c) +
                                       fx * img.at(y1c, x1c, c));
                out.at(oy, ox, c) = std::clamp(v, lo, hi);
            }
        }
    }
    return out;
}

namespace detail {

inline std::vector<std::uint8_t> resize_nearest(const std::vector<std::uint8_t>& in,
                                                std::int64_t in_h, std::int64_t in_w,
                                                std::int64_t out_h, std::int64_t out_w) {
    if (out_h <= 0 || out_w <= 0) throw DimensionError("resize_mask: nonpositive target dims");
    std::vector<std::uint8_t> out(static_cast<std::size_t>(out_h * out_w));
    const double sy = static_cast<double>(in_h) / static_cast<double>(out_h);
    const double sx = static_cast<double>(in_w) / static_cast<double>(out_w);
    for (std::int64_t oy = 0; oy < out_h; ++oy) {
        const std::int64_t iy = std::clamp<std::int64_t>(
            static_cast<std::int64_t>(std::floor((static_cast<double>(oy) + 0.5) * sy)), 0,
            in_h - 1);
        for (std::int64_t ox = 0; ox < out_w; ++ox) {
            const std::int64_t ix = std::clamp<std::int64_t>(
                static_cast<std::int64_t>(std::floor((static_cast<double>(ox) + 0.5) * sx)), 0,
                in_w - 1);
            out[static_cast<std::size_t>(oy * out_w + ox)] =
                in[static_cast<std::size_t>(iy * in_w + ix)];
        }
    }
    return out;
}

} // namespace detail

/// Nearest-neighbor resize; binariness is preserved by construction.
inline HoleMask resize_mask(const HoleMask& m, std::int64_t out_h, std::int64_t out_w) {
    if (out_h == m.height && out_w == m.width) return m;
    HoleMask out;
    out.height = out_h;
    out.width = out_w;
    out.data = detail::resize_nearest(m.data, m.height, m.width, out_h, out_w);
    return out;
}

inline ForegroundMask resize_mask(const ForegroundMask& m, std::int64_t out_h,
                                  std::int64_t out_w) {
    if (out_h == m.height && out_w == m.width) return m;
    ForegroundMask out;
    out.height = out_h;
    out.width = out_w;
    out.data = detail::resize_nearest(m.data, m.height, m.width, out_h, out_w);
    return out;
}

/// Pack an image into a (1,C,H,W) network tensor.
inline Tensor image_to_nchw(const ImageTensor& img) {
    Tensor t({1, img.channels, img.height, img.width});
    for (std::int64_t c = 0; c < img.channels; ++c)
        for (std::int64_t h = 0; h < img.height; ++h)
            for (std::int64_t w = 0; w < img.width; ++w)
                t[nchw_index(0, c, h, w, img.channels, img.height, img.width)] = img.at(h, w, c);
    return t;
}

/// Unpack slice n of an (N,C,H,W) tensor into an image with the given range.
inline ImageTensor nchw_to_image(const Tensor& t, std::int64_t n, ValueRange range) {
    if (t.rank() != 4) throw DimensionError("nchw_to_image: rank-4 tensor expected");
    const std::int64_t C = t.dim(1), H = t.dim(2), W = t.dim(3);
    ImageTensor img(H, W, C, range);
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w)
                img.at(h, w, c) = t[nchw_index(n, c, h, w, C, H, W)];
    return img;
}

} // namespace fginpaint
