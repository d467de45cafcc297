#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"

namespace fginpaint {

/// Raw 8-bit pixel buffer straight from a PNG file (1 = gray, 3 = RGB).
struct Png8 {
    std::int64_t height = 0;
    std::int64_t width = 0;
    std::int64_t channels = 0;
    std::vector<std::uint8_t> pixels; // interleaved, row-major
};

namespace detail {

struct PngReadCtx {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReadCtx() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
        if (fp) std::fclose(fp);
    }
};

struct PngWriteCtx {
    std::FILE* fp = nullptr;
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriteCtx() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
        if (fp) std::fclose(fp);
    }
};

inline void open_reader(PngReadCtx& ctx, const std::filesystem::path& path) {
    ctx.fp = std::fopen(path.string().c_str(), "rb");
    if (!ctx.fp) throw IoError("cannot open PNG for reading: " + path.string());
    ctx.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = ctx.png ? png_create_info_struct(ctx.png) : nullptr;
    if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG decode failed: " + path.string());
    png_init_io(ctx.png, ctx.fp);
    png_read_info(ctx.png, ctx.info);
}

inline std::vector<std::uint8_t> read_rows(png_structp png, png_infop info, std::int64_t h,
                                           std::int64_t rowbytes) {
    std::vector<std::uint8_t> buf(static_cast<std::size_t>(h * rowbytes));
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (std::int64_t y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = buf.data() + y * rowbytes;
    png_read_image(png, rows.data());
    png_read_end(png, info);
    return buf;
}

} // namespace detail

/// Reads a PNG as 8-bit gray or RGB pixels. Palette images are expanded to
/// RGB, 16-bit depth is reduced to 8. Alpha channels are rejected.
inline Png8 read_png_image(const std::filesystem::path& path) {
    detail::PngReadCtx ctx;
    detail::open_reader(ctx, path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG decode failed: " + path.string());

    const int color = png_get_color_type(ctx.png, ctx.info);
    if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(ctx.png, ctx.info, PNG_INFO_tRNS))
        throw ValueError("alpha channels are not supported: " + path.string());
    if (png_get_bit_depth(ctx.png, ctx.info) == 16) png_set_strip_16(ctx.png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(ctx.png);
    if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(ctx.png, ctx.info) < 8)
        png_set_expand_gray_1_2_4_to_8(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    Png8 out;
    out.height = png_get_image_height(ctx.png, ctx.info);
    out.width = png_get_image_width(ctx.png, ctx.info);
    out.channels = png_get_channels(ctx.png, ctx.info);
    if (out.channels != 1 && out.channels != 3)
        throw ValueError("unsupported channel count in " + path.string());
    out.pixels = detail::read_rows(ctx.png, ctx.info, out.height,
                                   static_cast<std::int64_t>(png_get_rowbytes(ctx.png, ctx.info)));
    return out;
}

/// Reads a label map: palette indices of an indexed PNG, or raw values of a
/// grayscale PNG. No palette expansion.
inline Png8 read_png_labels(const std::filesystem::path& path) {
    detail::PngReadCtx ctx;
    detail::open_reader(ctx, path);
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG decode failed: " + path.string());

    const int color = png_get_color_type(ctx.png, ctx.info);
    if (color != PNG_COLOR_TYPE_PALETTE && color != PNG_COLOR_TYPE_GRAY)
        throw ValueError("label maps must be indexed or grayscale PNG: " + path.string());
    if (png_get_bit_depth(ctx.png, ctx.info) == 16) png_set_strip_16(ctx.png);
    if (png_get_bit_depth(ctx.png, ctx.info) < 8) png_set_packing(ctx.png);
    png_read_update_info(ctx.png, ctx.info);

    Png8 out;
    out.height = png_get_image_height(ctx.png, ctx.info);
    out.width = png_get_image_width(ctx.png, ctx.info);
    out.channels = 1;
    out.pixels = detail::read_rows(ctx.png, ctx.info, out.height,
                                   static_cast<std::int64_t>(png_get_rowbytes(ctx.png, ctx.info)));
    return out;
}

inline void write_png8(const std::filesystem::path& path, std::int64_t h, std::int64_t w,
                       std::int64_t channels, const std::uint8_t* pixels) {
    if (channels != 1 && channels != 3) throw ValueError("write_png8: channels must be 1 or 3");
    detail::PngWriteCtx ctx;
    ctx.fp = std::fopen(path.string().c_str(), "wb");
    if (!ctx.fp) throw IoError("cannot open PNG for writing: " + path.string());
    ctx.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    ctx.info = ctx.png ? png_create_info_struct(ctx.png) : nullptr;
    if (!ctx.png || !ctx.info) throw IoError("libpng init failed");
    if (setjmp(png_jmpbuf(ctx.png))) throw IoError("PNG encode failed: " + path.string());
    png_init_io(ctx.png, ctx.fp);
    png_set_IHDR(ctx.png, ctx.info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8,
                 channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(ctx.png, ctx.info);
    std::vector<png_bytep> rows(static_cast<std::size_t>(h));
    for (std::int64_t y = 0; y < h; ++y)
        rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(pixels + y * w * channels);
    png_write_image(ctx.png, rows.data());
    png_write_end(ctx.png, ctx.info);
}

/// 8-bit samples -> ImageTensor via the linear map {0..255} -> value range.
inline ImageTensor image_from_png8(const Png8& p, ValueRange range) {
    ImageTensor img(p.height, p.width, p.channels, range);
    const double lo = range_lo(range), hi = range_hi(range);
    for (std::size_t i = 0; i < p.pixels.size(); ++i)
        img.data[i] = lo + (hi - lo) * (static_cast<double>(p.pixels[i]) / 255.0);
    return img;
}

/// ImageTensor -> 8-bit samples (round to nearest after mapping to [0,255]).
inline std::vector<std::uint8_t> image_to_png8(const ImageTensor& img) {
    const ImageTensor unit = to_range(img, ValueRange::unit);
    std::vector<std::uint8_t> out(unit.data.size());
    for (std::size_t i = 0; i < unit.data.size(); ++i) {
        const double v = std::clamp(unit.data[i], 0.0, 1.0) * 255.0;
        out[i] = static_cast<std::uint8_t>(std::lround(v));
    }
    return out;
}

inline void write_image_png(const std::filesystem::path& path, const ImageTensor& img) {
    const auto bytes = image_to_png8(img);
    write_png8(path, img.height, img.width, img.channels, bytes.data());
}

/// Loads straight to a validated ImageTensor in the requested range.
inline ImageTensor read_png_image(const std::filesystem::path& path, ValueRange range) {
    ImageTensor img = image_from_png8(read_png_image(path), range);
    validate_loaded_image(img, path.string());
    return img;
}

namespace detail {

/// Strict binary decode: only 0 and 255 samples are accepted.
inline std::vector<std::uint8_t> binary_from_png(const Png8& p, const std::string& context) {
    if (p.channels != 1) throw ValueError(context + ": binary masks must be grayscale");
    std::vector<std::uint8_t> out(p.pixels.size());
    for (std::size_t i = 0; i < p.pixels.size(); ++i) {
        if (p.pixels[i] == 0)
            out[i] = 0;
        else if (p.pixels[i] == 255)
            out[i] = 1;
        else
            throw IngestionError(context + ": non-binary mask value " +
                                 std::to_string(p.pixels[i]));
    }
    return out;
}

} // namespace detail

/// Binary PNG (255 = valid) -> HoleMask.
inline HoleMask read_hole_mask_png(const std::filesystem::path& path) {
    const Png8 p = read_png_image(path);
    HoleMask m;
    m.height = p.height;
    m.width = p.width;
    m.data = detail::binary_from_png(p, path.string());
    return m;
}

/// Binary PNG (255 = foreground) -> ForegroundMask.
inline ForegroundMask read_foreground_mask_png(const std::filesystem::path& path) {
    const Png8 p = read_png_image(path);
    ForegroundMask m;
    m.height = p.height;
    m.width = p.width;
    m.data = detail::binary_from_png(p, path.string());
    return m;
}

template <class MaskT>
inline void write_mask_png(const std::filesystem::path& path, const MaskT& mask) {
    std::vector<std::uint8_t> bytes(mask.data.size());
    for (std::size_t i = 0; i < mask.data.size(); ++i) bytes[i] = mask.data[i] ? 255 : 0;
    write_png8(path, mask.height, mask.width, 1, bytes.data());
}

} // namespace fginpaint
