#include <algorithm>
#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "fginpaint/fginpaint.hpp"
#include "helpers.hpp"

using namespace fginpaint;

namespace {

/// Small-but-real trainer setup: 32x32 inputs, depth-3 nets.
RunConfig tiny_config(const std::filesystem::path& out_dir) {
    RunConfig cfg;
    cfg.image_size = 32;
    cfg.depth = 3;
    cfg.base_channels = 4;
    cfg.critic_depth = 3;
    cfg.critic_base_channels = 4;
    cfg.batch_size = 2;
    cfg.epochs = 1000000;
    cfg.seed = 5;
    cfg.out_dir = out_dir.string();
    return cfg;
}

double max_param_delta(const ParamSet& a, const ParamSet& b) {
    double m = 0.0;
    for (const auto& name : a.order) {
        const Tensor& ta = a.entry(name).value;
        const Tensor& tb = b.entry(name).value;
        for (std::int64_t i = 0; i < ta.numel(); ++i)
            m = std::max(m, std::abs(ta[i] - tb[i]));
    }
    return m;
}

bool params_bit_equal(const ParamSet& a, const ParamSet& b) {
    for (const auto& name : a.order)
        if (!a.entry(name).value.bit_equal(b.entry(name).value)) return false;
    return true;
}

} // namespace

TEST_CASE("prepare_sample normalizes size and range") {
    SamplePair s;
    s.image = fgtest::random_image(16, 16, 1, ValueRange::unit, 1);
    s.foreground = fgtest::random_foreground(16, 16, 2);
    s.hole = HoleMask(16, 16, 1);
    s.hole.at(4, 4) = 0;
    s.id = "x";

    const PreparedSample p = prepare_sample(s, 32);
    REQUIRE(p.gt_sym.height == 32);
    REQUIRE(p.gt_sym.channels == 3);
    REQUIRE(p.gt_sym.range == ValueRange::symmetric);
    REQUIRE(p.fg.height == 32);
    REQUIRE(p.hole.height == 32);
    // Hole pixels are zeroed in the symmetric-range masked input.
    bool any_zeroed = false;
    for (std::int64_t h = 0; h < 32; ++h)
        for (std::int64_t w = 0; w < 32; ++w)
            if (!p.hole.at(h, w)) {
                any_zeroed = true;
                for (std::int64_t c = 0; c < 3; ++c) REQUIRE(p.masked_sym.at(h, w, c) == 0.0);
            }
    REQUIRE(any_zeroed);
}

TEST_CASE("epoch order is a seeded permutation") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    const auto samples = fgtest::synthetic_face_samples(5, 32, 7);
    Trainer t(cfg, samples);

    const auto order0 = t.epoch_order(0);
    REQUIRE(order0 == t.epoch_order(0));
    REQUIRE(order0.size() == 5);
    auto sorted = order0;
    std::sort(sorted.begin(), sorted.end());
    REQUIRE(sorted == std::vector<std::size_t>{0, 1, 2, 3, 4});

    bool some_epoch_differs = false;
    for (std::int64_t e = 1; e < 6; ++e)
        some_epoch_differs = some_epoch_differs || t.epoch_order(e) != order0;
    REQUIRE(some_epoch_differs);

    Trainer t2(cfg, samples);
    REQUIRE(t2.epoch_order(3) == t.epoch_order(3));
}

TEST_CASE("epoch batches partition the epoch") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    const auto samples = fgtest::synthetic_face_samples(5, 32, 8);
    Trainer t(cfg, samples);
    REQUIRE(t.steps_per_epoch() == 3);

    const auto batches = t.epoch_batches(0);
    REQUIRE(batches.size() == 3);
    std::vector<std::size_t> seen;
    for (const auto& b : batches) {
        REQUIRE(b.size() <= 2);
        REQUIRE(!b.empty());
        seen.insert(seen.end(), b.begin(), b.end());
    }
    std::sort(seen.begin(), seen.end());
    REQUIRE(seen == std::vector<std::size_t>{0, 1, 2, 3, 4});
}

TEST_CASE("zero learning rates leave parameters bit-identical") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.lr_g = 0.0;
    cfg.lr_d = 0.0;
    const auto samples = fgtest::synthetic_face_samples(4, 32, 9);
    Trainer t(cfg, samples);
    const NetParams before = t.params();

    for (const auto& batch : t.epoch_batches(0)) t.step_batch(batch);

    REQUIRE(params_bit_equal(t.params().gen, before.gen));
    REQUIRE(params_bit_equal(t.params().critic, before.critic));
    REQUIRE(t.step() == 2);
    // Adam state still advances; only the values must stand still.
    REQUIRE(t.params().gen.adam_t == 2);
}

TEST_CASE("critic weights respect the clip bound after every update") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.lr_d = 5e-2; // far above the bound so clipping must engage
    cfg.lr_g = 1e-4;
    const auto samples = fgtest::synthetic_face_samples(4, 32, 10);
    Trainer t(cfg, samples);

    for (int s = 0; s < 4; ++s) {
        t.step_batch(t.epoch_batches(0)[static_cast<std::size_t>(s) % 2]);
        REQUIRE(t.params().critic.max_abs_value() <= cfg.clip_value);
    }
}

TEST_CASE("critic updates move weights when the rate is real") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.lr_d = 1e-3;
    const auto samples = fgtest::synthetic_face_samples(2, 32, 11);
    Trainer t(cfg, samples);
    const NetParams before = t.params();
    t.step_batch({0, 1});
    REQUIRE(max_param_delta(t.params().critic, before.critic) > 0.0);
    REQUIRE(max_param_delta(t.params().gen, before.gen) > 0.0);
}

TEST_CASE("multiple critic steps per generator step run") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.critic_steps_per_gen_step = 3;
    cfg.lr_d = 1e-3;
    const auto samples = fgtest::synthetic_face_samples(2, 32, 12);
    Trainer t(cfg, samples);
    t.step_batch({0, 1});
    REQUIRE(t.params().critic.adam_t == 3);
    REQUIRE(t.params().gen.adam_t == 1);
}

TEST_CASE("reconstruction loss falls on a fixed overfit batch") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.lr_g = 2e-3;
    const auto samples = fgtest::synthetic_face_samples(2, 32, 13);
    Trainer t(cfg, samples);

    double first = 0.0, last = 0.0;
    const int steps = 60;
    for (int s = 0; s < steps; ++s) {
        const StepLog log = t.step_batch({0, 1});
        const double recon = log.losses.l_cF + 10.0 * log.losses.l_F + 0.05 * log.losses.l_pF;
        if (s < 5) first += recon;
        if (s >= steps - 5) last += recon;
    }
    CAPTURE(first, last);
    REQUIRE(last < 0.6 * first);
}

TEST_CASE("hole channel input is accepted end to end") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    cfg.use_hole_channel = true;
    const auto samples = fgtest::synthetic_face_samples(2, 32, 14);
    Trainer t(cfg, samples);
    const StepLog log = t.step_batch({0, 1});
    REQUIRE(std::isfinite(log.losses.total));
}

TEST_CASE("training run writes csv, checkpoints, and samples") {
    fgtest::TempDir tmp;
    const auto out = tmp / "run";
    RunConfig cfg = tiny_config(out);
    cfg.max_steps = 4;
    cfg.checkpoint_every = 2;
    cfg.lambda_pF = 0.0; // keep this end-to-end case fast
    const auto samples = fgtest::synthetic_face_samples(4, 32, 15);

    Trainer t(cfg, samples);
    const auto final_path = t.run();
    REQUIRE(std::filesystem::exists(final_path));
    REQUIRE(std::filesystem::exists(out / "ckpt_step_000002.ckpt"));
    REQUIRE(std::filesystem::exists(out / "ckpt_step_000004.ckpt"));

    std::ifstream csv(out / "losses.csv");
    std::string line;
    std::getline(csv, line);
    REQUIRE(line == "step,l_cF,l_F,l_pF,l_adv,total");
    int rows = 0;
    while (std::getline(csv, line))
        if (!line.empty()) ++rows;
    REQUIRE(rows == 4);

    bool found_sample = false;
    for (const auto& e : std::filesystem::directory_iterator(out / "samples"))
        found_sample = found_sample || e.path().extension() == ".png";
    REQUIRE(found_sample);

    const Checkpoint ck = load_checkpoint(final_path);
    REQUIRE(ck.step == 4);
}

TEST_CASE("resume reproduces the uninterrupted run") {
    fgtest::TempDir tmp;
    const auto out_full = tmp / "full";
    const auto out_resumed = tmp / "resumed";
    const auto samples = fgtest::synthetic_face_samples(4, 32, 16);

    RunConfig cfg = tiny_config(out_full);
    cfg.max_steps = 6;
    cfg.checkpoint_every = 3;
    cfg.lambda_pF = 0.0;
    cfg.lr_d = 1e-3;
    Trainer full(cfg, samples);
    full.run();

    RunConfig cfg2 = cfg;
    cfg2.out_dir = out_resumed.string();
    cfg2.resume = (out_full / "ckpt_step_000003.ckpt").string();
    Trainer resumed(cfg2, samples);
    resumed.run();

    REQUIRE(params_bit_equal(resumed.params().gen, full.params().gen));
    REQUIRE(params_bit_equal(resumed.params().critic, full.params().critic));
    REQUIRE(resumed.step() == 6);
}

TEST_CASE("infer writes a composite by default") {
    fgtest::TempDir tmp;
    const auto out = tmp / "run";
    RunConfig cfg = tiny_config(out);
    cfg.max_steps = 1;
    cfg.lambda_pF = 0.0;
    const auto samples = fgtest::synthetic_face_samples(2, 32, 17);
    Trainer t(cfg, samples);
    const auto ckpt = t.run();

    const auto img_path = tmp / "in.png";
    const auto hole_path = tmp / "hole.png";
    const auto out_path = tmp / "out.png";
    const ImageTensor img = fgtest::synthetic_face(32, 99);
    write_image_png(img_path, img);
    HoleMask hole(32, 32, 1);
    for (std::int64_t h = 10; h < 20; ++h)
        for (std::int64_t w = 10; w < 20; ++w) hole.at(h, w) = 0;
    write_mask_png(hole_path, hole);

    infer(ckpt, img_path, hole_path, out_path, true);
    const ImageTensor result = read_png_image(out_path, ValueRange::unit);
    REQUIRE(result.same_shape(img));
    // Valid pixels survive compositing exactly (up to 8-bit quantization).
    REQUIRE(std::abs(result.at(0, 0, 0) - img.at(0, 0, 0)) <= 1.0 / 255.0 + 1e-9);

    infer(ckpt, img_path, hole_path, out_path, false);
    const ImageTensor raw = read_png_image(out_path, ValueRange::unit);
    REQUIRE(raw.same_shape(img));
}

TEST_CASE("trainer rejects an empty dataset") {
    fgtest::TempDir tmp;
    RunConfig cfg = tiny_config(tmp.path());
    REQUIRE_THROWS_AS(Trainer(cfg, {}), IngestionError);
}
