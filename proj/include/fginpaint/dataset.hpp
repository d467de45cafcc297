#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/png_io.hpp"
#include "fginpaint/rng.hpp"

namespace fginpaint {

enum class Split { train, test, flat };

inline std::string split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::test: return "test";
        default: return "";
    }
}

namespace detail {

inline std::vector<std::filesystem::path> sorted_pngs(const std::filesystem::path& dir) {
    std::vector<std::filesystem::path> files;
    if (!std::filesystem::is_directory(dir)) return files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end(),
              [](const auto& a, const auto& b) { return a.stem() < b.stem(); });
    return files;
}

} // namespace detail

/// Loads `<dir>/images/<id>.png` + `<dir>/foreground/<id>.png` pairs and
/// assigns each a hole mask from the `<dir>/holes/` pool. `dir` is
/// `root/<split>` when that subdirectory exists, otherwise `root` itself.
///
/// Ordering is lexicographic by id. Hole assignment depends only on
/// (seed, id), never on iteration order. Images load in [0,1]; masks that
/// do not match the image size are resampled (nearest) to it.
inline std::vector<SamplePair> load_dataset(const std::filesystem::path& root, Split split,
                                            std::uint64_t seed) {
    std::filesystem::path dir = root;
    const std::string sub = split_name(split);
    if (!sub.empty() && std::filesystem::is_directory(root / sub)) dir = root / sub;
    if (!std::filesystem::is_directory(dir))
        throw IngestionError("dataset root does not exist: " + dir.string());
    if (!std::filesystem::is_directory(dir / "images"))
        throw IngestionError("dataset has no images/ directory: " + dir.string());

    const auto image_files = detail::sorted_pngs(dir / "images");
    if (image_files.empty()) return {};

    const auto hole_pool = detail::sorted_pngs(dir / "holes");
    if (hole_pool.empty())
        throw IngestionError("dataset has no hole masks in " + (dir / "holes").string());

    std::vector<SamplePair> out;
    out.reserve(image_files.size());
    for (const auto& file : image_files) {
        const std::string id = file.stem().string();
        SamplePair sample;
        sample.id = id;
        sample.image = image_from_png8(read_png_image(file), ValueRange::unit);
        validate_loaded_image(sample.image, "load_dataset(" + id + ")");

        const auto fg_path = dir / "foreground" / (id + ".png");
        if (!std::filesystem::exists(fg_path))
            throw IngestionError("missing foreground mask for id '" + id + "'");
        ForegroundMask fg = read_foreground_mask_png(fg_path);
        fg = resize_mask(fg, sample.image.height, sample.image.width);
        if (!fg.any())
            throw IngestionError("all-zero foreground mask rejected for id '" + id + "'");
        sample.foreground = std::move(fg);

        const std::size_t pick = static_cast<std::size_t>(
            mix64(seed, fnv1a64(id)) % static_cast<std::uint64_t>(hole_pool.size()));
        HoleMask hole = read_hole_mask_png(hole_pool[pick]);
        sample.hole = resize_mask(hole, sample.image.height, sample.image.width);

        out.push_back(std::move(sample));
    }
    return out;
}

} // namespace fginpaint
