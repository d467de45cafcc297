// Generates a handful of free-form hole masks plus a foreground mask from a
// synthetic attribute map, and prints their coverage ratios.

#include <cstdio>
#include <filesystem>

#include "fginpaint/fginpaint.hpp"

using namespace fginpaint;

int main() {
    const std::filesystem::path out = "demo_masks_out";
    std::filesystem::create_directories(out);

    const std::int64_t h = 128, w = 128;
    StrokeConfig cfg = StrokeConfig::defaults_for(h, w);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const HoleMask mask = generate_freeform_mask(seed, h, w, cfg);
        char name[32];
        std::snprintf(name, sizeof name, "hole_%llu.png", static_cast<unsigned long long>(seed));
        write_mask_png(out / name, mask);
        std::printf("hole seed %llu: ratio %.4f\n", static_cast<unsigned long long>(seed),
                    hole_to_image_ratio(mask));
    }

    // Attribute map with a skin ellipse and a hair band above it.
    AttributeMap attrs;
    attrs.height = h;
    attrs.width = w;
    attrs.labels.assign(static_cast<std::size_t>(h * w), 0);
    attrs.label_of = {{"background", 0}, {"skin", 1}, {"hair", 2}, {"clothes", 3}};
    for (std::int64_t y = 0; y < h; ++y) {
        for (std::int64_t x = 0; x < w; ++x) {
            const double dy = (y - 70.0) / 38.0, dx = (x - 64.0) / 30.0;
            if (dy * dy + dx * dx < 1.0) attrs.labels[static_cast<std::size_t>(y * w + x)] = 1;
            const double hy = (y - 38.0) / 22.0, hx = (x - 64.0) / 34.0;
            if (hy * hy + hx * hx < 1.0 && y < 44)
                attrs.labels[static_cast<std::size_t>(y * w + x)] = 2;
        }
    }
    attrs.validate();
    const ForegroundMask fg = foreground_from_attributes(attrs);
    write_mask_png(out / "foreground.png", fg);

    std::int64_t on = 0;
    for (std::uint8_t v : fg.data) on += v ? 1 : 0;
    std::printf("foreground: %.4f of the frame\n", static_cast<double>(on) / (h * w));
    std::printf("wrote masks to %s\n", out.string().c_str());
    return 0;
}
