#include <fstream>

#include <catch2/catch_amalgamated.hpp>

#include "fginpaint/fginpaint.hpp"
#include "helpers.hpp"

using namespace fginpaint;

namespace {

NetParams exercised_params(std::uint64_t seed) {
    GeneratorSpec gs;
    gs.depth = 3;
    gs.base_channels = 2;
    CriticSpec cs;
    cs.depth = 3;
    cs.base_channels = 2;
    NetParams np = init_params(seed, gs, cs);

    // Give the optimizer state nontrivial content so the round trip covers it.
    Rng rng(mix64(seed, 99));
    for (auto* ps : {&np.gen, &np.critic}) {
        ps->adam_t = 17;
        for (const auto& name : ps->order) {
            ParamEntry& e = ps->entry(name);
            for (std::int64_t i = 0; i < e.m.numel(); ++i) {
                e.m[i] = rng.normal();
                e.v[i] = std::abs(rng.normal());
            }
        }
    }
    return np;
}

bool entry_bit_equal(const ParamSet& a, const ParamSet& b) {
    if (a.order != b.order || a.adam_t != b.adam_t) return false;
    for (const auto& name : a.order) {
        const ParamEntry& ea = a.entry(name);
        const ParamEntry& eb = b.entry(name);
        if (!ea.value.bit_equal(eb.value)) return false;
        if (!ea.m.bit_equal(eb.m)) return false;
        if (!ea.v.bit_equal(eb.v)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("checkpoint round trip is bit exact") {
    fgtest::TempDir tmp;
    const auto path = tmp / "a.ckpt";
    const NetParams np = exercised_params(3);
    save_checkpoint(path, np, 42);

    const Checkpoint ck = load_checkpoint(path);
    REQUIRE(ck.step == 42);
    REQUIRE(ck.params.seed == np.seed);
    REQUIRE(ck.params.gspec == np.gspec);
    REQUIRE(ck.params.cspec == np.cspec);
    REQUIRE(entry_bit_equal(ck.params.gen, np.gen));
    REQUIRE(entry_bit_equal(ck.params.critic, np.critic));
}

TEST_CASE("spec check accepts matching and rejects differing configs") {
    fgtest::TempDir tmp;
    const auto path = tmp / "b.ckpt";
    const NetParams np = exercised_params(4);
    save_checkpoint(path, np, 1);
    const Checkpoint ck = load_checkpoint(path);

    REQUIRE_NOTHROW(check_checkpoint_specs(ck, np.gspec, np.cspec));

    GeneratorSpec other = np.gspec;
    other.base_channels = 16;
    REQUIRE_THROWS_AS(check_checkpoint_specs(ck, other, np.cspec), ConfigError);

    CriticSpec other_c = np.cspec;
    other_c.depth = 4;
    REQUIRE_THROWS_AS(check_checkpoint_specs(ck, np.gspec, other_c), ConfigError);
}

TEST_CASE("corrupt magic is rejected") {
    fgtest::TempDir tmp;
    const auto path = tmp / "c.ckpt";
    save_checkpoint(path, exercised_params(5), 7);

    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(0);
    f.write("XXXXXXXX", 8);
    f.close();
    REQUIRE_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("truncated checkpoint is rejected") {
    fgtest::TempDir tmp;
    const auto path = tmp / "d.ckpt";
    save_checkpoint(path, exercised_params(6), 7);

    const auto size = std::filesystem::file_size(path);
    std::filesystem::resize_file(path, size / 2);
    REQUIRE_THROWS_AS(load_checkpoint(path), IoError);
}

TEST_CASE("missing checkpoint file is rejected") {
    fgtest::TempDir tmp;
    REQUIRE_THROWS_AS(load_checkpoint(tmp / "missing.ckpt"), IoError);
}

TEST_CASE("checkpoint survives adam steps and reproduces the next update") {
    // Two trainers, one round-tripped through disk, must take identical steps.
    fgtest::TempDir tmp;
    const auto path = tmp / "e.ckpt";
    NetParams a = exercised_params(7);
    save_checkpoint(path, a, 0);
    NetParams b = load_checkpoint(path).params;

    GradSet g = GradSet::zeros_like(a.gen);
    Rng rng(8);
    for (const auto& name : a.gen.order) {
        Tensor& t = g.at(name);
        for (std::int64_t i = 0; i < t.numel(); ++i) t[i] = rng.normal();
    }
    const AdamConfig opt{1e-3, 0.9, 0.999, 1e-8};
    adam_step(a.gen, g, opt);
    adam_step(b.gen, g, opt);
    REQUIRE(entry_bit_equal(a.gen, b.gen));
}
