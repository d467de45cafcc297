// Scores a noisy reconstruction of a synthetic image, globally and restricted
// to a foreground region, and prints the usual quality numbers.

#include <cstdio>

#include "fginpaint/fginpaint.hpp"

using namespace fginpaint;

namespace {

ImageTensor make_scene(std::int64_t h, std::int64_t w) {
    ImageTensor img(h, w, 3, ValueRange::unit);
    for (std::int64_t y = 0; y < h; ++y)
        for (std::int64_t x = 0; x < w; ++x) {
            img.at(y, x, 0) = 0.2 + 0.6 * x / (w - 1.0);
            img.at(y, x, 1) = 0.2 + 0.6 * y / (h - 1.0);
            img.at(y, x, 2) = ((x / 8 + y / 8) % 2) ? 0.8 : 0.3;
        }
    return img;
}

} // namespace

int main() {
    const std::int64_t h = 64, w = 64;
    const ImageTensor gt = make_scene(h, w);

    ImageTensor pred = gt;
    Rng rng(7);
    for (double& v : pred.data) v = std::clamp(v + 0.04 * rng.normal(), 0.0, 1.0);

    ForegroundMask fg(h, w, 0);
    for (std::int64_t y = h / 4; y < 3 * h / 4; ++y)
        for (std::int64_t x = w / 4; x < 3 * w / 4; ++x) fg.at(y, x) = 1;

    std::printf("%-12s %10s %10s %10s %10s\n", "scope", "mse", "mae", "psnr", "ssim");
    std::printf("%-12s %10.6f %10.6f %10.4f %10.6f\n", "global", mse(gt, pred), mae(gt, pred),
                psnr(gt, pred), ssim(gt, pred));
    std::printf("%-12s %10.6f %10.6f %10.4f %10.6f\n", "foreground", mse(gt, pred, &fg),
                mae(gt, pred, &fg), psnr(gt, pred, &fg), ssim(gt, pred, &fg));

    // FID needs sets of images; reuse shifted crops so the demo stays tiny.
    std::vector<ImageTensor> set_a, set_b;
    for (int i = 0; i < 8; ++i) {
        ImageTensor a = make_scene(h, w), b = make_scene(h, w);
        for (double& v : b.data) v = std::clamp(v + 0.02 * rng.normal(), 0.0, 1.0);
        set_a.push_back(std::move(a));
        set_b.push_back(std::move(b));
    }
    TestConvEmbedding backend;
    std::printf("fid(clean, noisy): %.6f\n", fid(set_a, set_b, backend));
    return 0;
}
