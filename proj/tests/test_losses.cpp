#include <functional>

#include <catch2/catch_amalgamated.hpp>

#include "fginpaint/fginpaint.hpp"
#include "helpers.hpp"

using namespace fginpaint;

namespace {

/// 2x2 grayscale fixture: target [[1,0],[0,1]], prediction [[0.5,0],[0,1]],
/// foreground = top row. One residual of 0.5 spread over 4 elements gives
/// 0.125 for the absolute loss and 0.0625 for the squared loss.
struct TinyFixture {
    ImageTensor a{2, 2, 1, ValueRange::unit};
    ImageTensor b{2, 2, 1, ValueRange::unit};
    ForegroundMask fg{2, 2, 0};

    TinyFixture() {
        a.at(0, 0, 0) = 1.0;
        a.at(1, 1, 0) = 1.0;
        b.at(0, 0, 0) = 0.5;
        b.at(1, 1, 0) = 1.0;
        fg.at(0, 0) = 1;
        fg.at(0, 1) = 1;
    }
};

double sum_abs_diff(const Tensor& a, const Tensor& b) {
    double acc = 0.0;
    for (std::int64_t i = 0; i < a.numel(); ++i) acc += std::abs(a[i] - b[i]);
    return acc;
}

void check_grad_image(ImageTensor& pred, const Tensor& grad,
                      const std::function<double()>& eval, double tol = 1e-6) {
    double worst = 0.0;
    const double eps = 1e-5;
    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        const double saved = pred.data[i];
        pred.data[i] = saved + eps;
        const double up = eval();
        pred.data[i] = saved - eps;
        const double down = eval();
        pred.data[i] = saved;
        const double numeric = (up - down) / (2.0 * eps);
        worst = std::max(worst, std::abs(grad[static_cast<std::int64_t>(i)] - numeric) /
                                    std::max(1.0, std::abs(numeric)));
    }
    CAPTURE(worst);
    REQUIRE(worst < tol);
}

} // namespace

TEST_CASE("hand-derived 2x2 fixtures") {
    TinyFixture f;
    REQUIRE(loss_cF(f.a, f.b, f.fg) == Catch::Approx(0.125).margin(1e-9));
    REQUIRE(loss_F(f.a, f.b, f.fg) == Catch::Approx(0.0625).margin(1e-9));

    // A second residual of the same size doubles both losses.
    ImageTensor b2 = f.b;
    b2.at(0, 1, 0) = 0.5;
    REQUIRE(loss_cF(f.a, b2, f.fg) == Catch::Approx(0.25).margin(1e-9));
    REQUIRE(loss_F(f.a, b2, f.fg) == Catch::Approx(0.125).margin(1e-9));
}

TEST_CASE("losses vanish at the target") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const ImageTensor x = fgtest::random_image(8, 8, 3, ValueRange::unit, seed);
        const ForegroundMask fg = fgtest::random_foreground(8, 8, seed + 100);
        const IdentityExtractor fx;
        REQUIRE(loss_cF(x, x, fg) == 0.0);
        REQUIRE(loss_F(x, x, fg) == 0.0);
        REQUIRE(loss_pF(x, x, fg, fx) == 0.0);
    }
}

TEST_CASE("losses ignore pixels outside the foreground") {
    TinyFixture f;
    ImageTensor pred = f.b;
    pred.at(1, 0, 0) = 0.3;
    pred.at(1, 1, 0) = 0.7;
    REQUIRE(loss_cF(f.a, pred, f.fg) == loss_cF(f.a, f.b, f.fg));
    REQUIRE(loss_F(f.a, pred, f.fg) == loss_F(f.a, f.b, f.fg));
}

TEST_CASE("loss scaling properties") {
    const ImageTensor gt = fgtest::random_image(8, 8, 3, ValueRange::unit, 1);
    ImageTensor pred = gt;
    const ForegroundMask fg = fgtest::random_foreground(8, 8, 2);
    Rng rng(3);
    std::vector<double> delta(pred.data.size());
    for (auto& d : delta) d = 0.1 * rng.uniform(-1.0, 1.0);

    for (std::size_t i = 0; i < pred.data.size(); ++i) pred.data[i] = gt.data[i] + delta[i];
    const double l1 = loss_cF(gt, pred, fg);
    const double l2 = loss_F(gt, pred, fg);

    for (std::size_t i = 0; i < pred.data.size(); ++i)
        pred.data[i] = gt.data[i] + 2.0 * delta[i];
    REQUIRE(loss_cF(gt, pred, fg) == Catch::Approx(2.0 * l1).margin(1e-12));
    REQUIRE(loss_F(gt, pred, fg) == Catch::Approx(4.0 * l2).margin(1e-12));
}

TEST_CASE("growing the foreground cannot lower a loss") {
    const ImageTensor gt = fgtest::random_image(8, 8, 3, ValueRange::unit, 4);
    const ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 5);
    ForegroundMask small(8, 8, 0);
    small.at(1, 1) = 1;
    small.at(2, 5) = 1;
    ForegroundMask big = small;
    big.at(6, 6) = 1;
    big.at(7, 0) = 1;
    REQUIRE(loss_cF(gt, pred, big) >= loss_cF(gt, pred, small));
    REQUIRE(loss_F(gt, pred, big) >= loss_F(gt, pred, small));
}

TEST_CASE("losses are invariant to foreground pixel layout") {
    // Same multiset of residuals, different mask positions: the element-count
    // normalizer must not care where foreground pixels sit.
    ImageTensor gt(2, 2, 1, ValueRange::unit);
    ImageTensor pred(2, 2, 1, ValueRange::unit);
    ForegroundMask fg1(2, 2, 0), fg2(2, 2, 0);
    gt.at(0, 0, 0) = 0.8;
    pred.at(0, 0, 0) = 0.5;
    gt.at(1, 1, 0) = 0.8;
    pred.at(1, 1, 0) = 0.5;
    fg1.at(0, 0) = 1;
    fg2.at(1, 1) = 1;
    REQUIRE(loss_cF(gt, pred, fg1) == loss_cF(gt, pred, fg2));
    REQUIRE(loss_F(gt, pred, fg1) == loss_F(gt, pred, fg2));
}

TEST_CASE("identity extractor reduces the perceptual loss to pixels") {
    const ImageTensor masked = fgtest::random_image(8, 8, 3, ValueRange::unit, 6);
    const ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 7);
    const ForegroundMask fg = fgtest::random_foreground(8, 8, 8);
    const IdentityExtractor fx;
    REQUIRE(loss_pF(masked, pred, fg, fx) ==
            Catch::Approx(loss_F(masked, pred, fg)).margin(1e-12));
}

TEST_CASE("perceptual loss uses per-tap mask resolution") {
    const ImageTensor masked = fgtest::random_image(16, 16, 3, ValueRange::unit, 9);
    const ImageTensor pred = fgtest::random_image(16, 16, 3, ValueRange::unit, 10);
    const ForegroundMask fg = fgtest::random_foreground(16, 16, 11);
    const FixedConvExtractor fx(77);
    const double full = loss_pF(masked, pred, ForegroundMask(16, 16, 1), fx);
    const double part = loss_pF(masked, pred, fg, fx);
    REQUIRE(full > 0.0);
    REQUIRE(part > 0.0);
    REQUIRE(part < full);
}

TEST_CASE("critic loss oracles") {
    REQUIRE(critic_loss({1.0}, {0.0}) == Catch::Approx(-1.0).margin(1e-12));
    REQUIRE(critic_loss({0.0, 0.0}, {2.0, 2.0}) == Catch::Approx(2.0).margin(1e-12));
    REQUIRE(critic_loss({1.0, 3.0}, {2.0}) == Catch::Approx(0.0).margin(1e-12));
    REQUIRE_THROWS_AS(critic_loss({}, {1.0}), ValueError);
    REQUIRE_THROWS_AS(critic_loss({1.0}, {}), ValueError);
}

TEST_CASE("generator adversarial loss oracles") {
    REQUIRE(generator_adv_loss({2.0}) == Catch::Approx(-2.0).margin(1e-12));
    REQUIRE(generator_adv_loss({1.0, 3.0}) == Catch::Approx(-2.0).margin(1e-12));
    REQUIRE(generator_adv_loss({-4.0, 2.0}) == Catch::Approx(1.0).margin(1e-12));
    REQUIRE_THROWS_AS(generator_adv_loss({}), ValueError);
}

TEST_CASE("total loss combines weighted terms") {
    TinyFixture f;
    const IdentityExtractor fx;
    LossWeights w;

    // masked == a here, so l_cF and l_pF share a's residuals; fake score 0
    // makes the adversarial term vanish.
    const LossBreakdown bd = generator_total_loss(f.a, f.a, f.b, f.fg, fx, {0.0}, w);
    REQUIRE(bd.l_cF == Catch::Approx(0.125).margin(1e-12));
    REQUIRE(bd.l_F == Catch::Approx(0.0625).margin(1e-12));
    REQUIRE(bd.l_pF == Catch::Approx(0.0625).margin(1e-12));
    REQUIRE(bd.l_adv == 0.0);
    REQUIRE(bd.total == Catch::Approx(0.753125).margin(1e-12));
}

TEST_CASE("composite target switch changes the reconstruction reference") {
    const ImageTensor gt = fgtest::random_image(8, 8, 3, ValueRange::unit, 12);
    HoleMask hole(8, 8, 1);
    for (std::int64_t x = 0; x < 8; ++x) hole.at(3, x) = 0;
    const ImageTensor masked = apply_hole_mask(gt, hole);
    const ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 13);
    const ForegroundMask fg(8, 8, 1);
    const IdentityExtractor fx;
    LossWeights w;
    w.lambda_adv = 0.0;

    const auto vs_masked = generator_total_loss(gt, masked, pred, fg, fx, {}, w,
                                                CompositeTarget::masked_input);
    const auto vs_gt = generator_total_loss(gt, masked, pred, fg, fx, {}, w,
                                            CompositeTarget::ground_truth);
    REQUIRE(vs_masked.l_cF == Catch::Approx(loss_cF(masked, pred, fg)).margin(1e-15));
    REQUIRE(vs_gt.l_cF == Catch::Approx(loss_cF(gt, pred, fg)).margin(1e-15));
    REQUIRE(vs_masked.l_cF != vs_gt.l_cF);
    REQUIRE(vs_masked.l_F == vs_gt.l_F);
}

TEST_CASE("adversarial weight without scores is an error") {
    TinyFixture f;
    const IdentityExtractor fx;
    LossWeights w;
    REQUIRE_THROWS_AS(generator_total_loss(f.a, f.a, f.b, f.fg, fx, {}, w), ValueError);
    w.lambda_adv = 0.0;
    REQUIRE_NOTHROW(generator_total_loss(f.a, f.a, f.b, f.fg, fx, {}, w));
}

TEST_CASE("weight validation") {
    LossWeights w;
    REQUIRE_NOTHROW(w.validate());
    w.lambda_F = -1.0;
    REQUIRE_THROWS_AS(w.validate(), ConfigError);
    LossWeights zero{0.0, 0.0, 0.0, 0.0};
    REQUIRE_THROWS_AS(zero.validate(), ConfigError);
}

TEST_CASE("shape mismatches are rejected") {
    const ImageTensor a = fgtest::random_image(8, 8, 3, ValueRange::unit, 14);
    const ImageTensor b = fgtest::random_image(8, 10, 3, ValueRange::unit, 15);
    const ForegroundMask fg(8, 8, 1);
    const ForegroundMask fg_small(4, 4, 1);
    REQUIRE_THROWS_AS(loss_cF(a, b, fg), DimensionError);
    REQUIRE_THROWS_AS(loss_F(a, a, fg_small), DimensionError);
}

TEST_CASE("pixel loss gradients match finite differences") {
    const ImageTensor gt = fgtest::random_image(6, 6, 3, ValueRange::unit, 16);
    ImageTensor pred = fgtest::random_image(6, 6, 3, ValueRange::unit, 17);
    const ForegroundMask fg = fgtest::random_foreground(6, 6, 18);

    // Keep probes away from the absolute-value kink.
    for (std::size_t i = 0; i < pred.data.size(); ++i)
        if (std::abs(pred.data[i] - gt.data[i]) < 1e-3) pred.data[i] += 0.01;

    Tensor g;
    loss_cF(gt, pred, fg, &g);
    check_grad_image(pred, g, [&] { return loss_cF(gt, pred, fg); });

    loss_F(gt, pred, fg, &g);
    check_grad_image(pred, g, [&] { return loss_F(gt, pred, fg); });
}

TEST_CASE("perceptual loss gradient matches finite differences") {
    const ImageTensor masked = fgtest::random_image(8, 8, 3, ValueRange::unit, 19);
    ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 20);
    const ForegroundMask fg = fgtest::random_foreground(8, 8, 21);
    const FixedConvExtractor fx(5);

    Tensor g;
    loss_pF(masked, pred, fg, fx, &g);
    check_grad_image(pred, g, [&] { return loss_pF(masked, pred, fg, fx); }, 1e-5);
}

TEST_CASE("total loss gradient covers the reconstruction terms") {
    const ImageTensor gt = fgtest::random_image(8, 8, 3, ValueRange::unit, 22);
    HoleMask hole(8, 8, 1);
    hole.at(4, 4) = 0;
    const ImageTensor masked = apply_hole_mask(gt, hole);
    ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 23);
    const ForegroundMask fg = fgtest::random_foreground(8, 8, 24);
    const FixedConvExtractor fx(6);
    LossWeights w;

    for (std::size_t i = 0; i < pred.data.size(); ++i) {
        if (std::abs(pred.data[i] - masked.data[i]) < 1e-3) pred.data[i] += 0.01;
    }

    Tensor g;
    generator_total_loss(gt, masked, pred, fg, fx, {0.7}, w, CompositeTarget::masked_input, &g);
    auto eval = [&] {
        return generator_total_loss(gt, masked, pred, fg, fx, {0.7}, w).total;
    };
    // fake_scores stay fixed, so eval's adversarial term is constant and
    // drops out of the finite differences.
    check_grad_image(pred, g, eval, 1e-5);
}

TEST_CASE("total loss gradient is additive in the term gradients") {
    const ImageTensor gt = fgtest::random_image(8, 8, 3, ValueRange::unit, 25);
    const ImageTensor masked = gt;
    const ImageTensor pred = fgtest::random_image(8, 8, 3, ValueRange::unit, 26);
    const ForegroundMask fg = fgtest::random_foreground(8, 8, 27);
    const IdentityExtractor fx;
    LossWeights w{0.5, 2.0, 3.0, 0.0};

    Tensor g_total;
    generator_total_loss(gt, masked, pred, fg, fx, {}, w, CompositeTarget::masked_input,
                         &g_total);

    Tensor g1, g2, g3;
    loss_cF(masked, pred, fg, &g1);
    loss_F(gt, pred, fg, &g2);
    loss_pF(masked, pred, fg, fx, &g3);
    Tensor want(g_total.shape());
    want.axpy(0.5, g1);
    want.axpy(2.0, g2);
    want.axpy(3.0, g3);
    REQUIRE(sum_abs_diff(g_total, want) < 1e-12);
}
