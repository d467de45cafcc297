// Walks the training objective end to end on one tiny sample: builds a masked
// input, runs an untrained generator and critic, and prints every loss term.

#include <cstdio>

#include "fginpaint/fginpaint.hpp"

using namespace fginpaint;

int main() {
    const std::int64_t size = 32;

    GeneratorSpec gspec;
    gspec.depth = 3;
    gspec.base_channels = 8;
    CriticSpec cspec;
    cspec.depth = 3;
    cspec.base_channels = 8;
    const NetParams np = init_params(41, gspec, cspec);

    ImageTensor gt(size, size, 3, ValueRange::symmetric);
    Rng rng(11);
    for (double& v : gt.data) v = std::clamp(0.4 * rng.normal(), -1.0, 1.0);

    const HoleMask hole = generate_freeform_mask(3, size, size, StrokeConfig::defaults_for(size, size));
    ForegroundMask fg(size, size, 0);
    for (std::int64_t y = 4; y < size - 4; ++y)
        for (std::int64_t x = 6; x < size - 6; ++x) fg.at(y, x) = 1;

    const ImageTensor masked = apply_hole_mask(gt, hole);
    const ImageTensor pred = generator_forward(np, masked);

    const double fake = critic_forward(np, pred);
    const double real = critic_forward(np, gt);
    std::printf("critic: real %.6f  fake %.6f  critic_loss %.6f\n", real, fake,
                critic_loss({real}, {fake}));

    FixedConvExtractor fx(0x9e3779b97f4a7c15ULL);
    LossWeights w;
    LossBreakdown bd = generator_total_loss(gt, masked, pred, fg, fx, {fake}, w);
    std::printf("loss_cF %.6f  loss_F %.6f  loss_pF %.6f  adv %.6f\n", bd.l_cF, bd.l_F, bd.l_pF,
                bd.l_adv);
    std::printf("weighted total %.6f\n", bd.total);
    return 0;
}
