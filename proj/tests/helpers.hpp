#pragma once

// Shared fixtures for the test binaries: throwaway directories, random
// images, and a tiny synthetic portrait dataset.

#include <atomic>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "fginpaint/fginpaint.hpp"

namespace fgtest {

/// Unique directory under the system temp root, removed on destruction.
class TempDir {
  public:
    TempDir() {
        static std::atomic<int> counter{0};
        const int id = counter.fetch_add(1);
        path_ = std::filesystem::temp_directory_path() /
                ("fginpaint-test-" + std::to_string(::getpid()) + "-" + std::to_string(id));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

  private:
    std::filesystem::path path_;
};

inline fginpaint::ImageTensor random_image(std::int64_t h, std::int64_t w, std::int64_t c,
                                           fginpaint::ValueRange range, std::uint64_t seed) {
    fginpaint::ImageTensor img(h, w, c, range);
    fginpaint::Rng rng(seed);
    const double lo = fginpaint::range_lo(range), hi = fginpaint::range_hi(range);
    for (double& v : img.data) v = rng.uniform(lo, hi);
    return img;
}

inline fginpaint::ForegroundMask random_foreground(std::int64_t h, std::int64_t w,
                                                   std::uint64_t seed, double p = 0.5) {
    fginpaint::ForegroundMask fg(h, w, 0);
    fginpaint::Rng rng(seed);
    for (auto& v : fg.data) v = rng.uniform() < p ? 1 : 0;
    if (!fg.any()) fg.at(h / 2, w / 2) = 1;
    return fg;
}

/// Flat-shaded portrait stand-in: skin ellipse, hair cap, striped backdrop.
/// Distinct enough per seed that a small model can tell the images apart.
inline fginpaint::ImageTensor synthetic_face(std::int64_t size, std::uint64_t seed) {
    using namespace fginpaint;
    ImageTensor img(size, size, 3, ValueRange::unit);
    Rng rng(mix64(seed, fnv1a64("face")));
    const double cy = size * rng.uniform(0.52, 0.60), cx = size * rng.uniform(0.45, 0.55);
    const double ry = size * rng.uniform(0.26, 0.34), rx = size * rng.uniform(0.20, 0.27);
    const double skin_r = rng.uniform(0.75, 0.95), skin_g = rng.uniform(0.55, 0.72);
    const double hair_v = rng.uniform(0.05, 0.35);
    const int stripe = 4 + static_cast<int>(rng.uniform(0, 5));
    for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
            const bool band = ((x / stripe) % 2) == 0;
            img.at(y, x, 0) = band ? 0.25 : 0.45;
            img.at(y, x, 1) = band ? 0.35 : 0.55;
            img.at(y, x, 2) = band ? 0.55 : 0.75;
            const double dy = (y - cy) / ry, dx = (x - cx) / rx;
            const double d = dy * dy + dx * dx;
            if (d < 1.0) {
                img.at(y, x, 0) = skin_r;
                img.at(y, x, 1) = skin_g;
                img.at(y, x, 2) = 0.50;
            }
            if (d < 1.35 && d >= 0.75 && y < cy - 0.2 * ry) {
                img.at(y, x, 0) = hair_v;
                img.at(y, x, 1) = hair_v * 0.8;
                img.at(y, x, 2) = hair_v * 0.6;
            }
        }
    return img;
}

/// Foreground for synthetic_face built the same way: skin plus hair support.
inline fginpaint::ForegroundMask synthetic_face_foreground(std::int64_t size,
                                                           std::uint64_t seed) {
    using namespace fginpaint;
    ForegroundMask fg(size, size, 0);
    Rng rng(mix64(seed, fnv1a64("face")));
    const double cy = size * rng.uniform(0.52, 0.60), cx = size * rng.uniform(0.45, 0.55);
    const double ry = size * rng.uniform(0.26, 0.34), rx = size * rng.uniform(0.20, 0.27);
    for (std::int64_t y = 0; y < size; ++y)
        for (std::int64_t x = 0; x < size; ++x) {
            const double dy = (y - cy) / ry, dx = (x - cx) / rx;
            const double d = dy * dy + dx * dx;
            if (d < 1.0 || (d < 1.35 && y < cy - 0.2 * ry)) fg.at(y, x) = 1;
        }
    return fg;
}

inline std::vector<fginpaint::SamplePair> synthetic_face_samples(int n, std::int64_t size,
                                                                 std::uint64_t seed) {
    using namespace fginpaint;
    std::vector<SamplePair> out;
    const StrokeConfig cfg = StrokeConfig::defaults_for(size, size);
    for (int i = 0; i < n; ++i) {
        SamplePair s;
        const std::uint64_t si = mix64(seed, static_cast<std::uint64_t>(i));
        s.image = synthetic_face(size, si);
        s.foreground = synthetic_face_foreground(size, si);
        s.hole = generate_freeform_mask(mix64(si, fnv1a64("hole")), size, size, cfg);
        char buf[16];
        std::snprintf(buf, sizeof buf, "face_%03d", i);
        s.id = buf;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace fgtest
