#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/nn.hpp"
#include "fginpaint/rng.hpp"
#include "fginpaint/tensor.hpp"

namespace fginpaint {

inline constexpr std::int64_t kChannelCap = 512;
inline constexpr double kEncoderSlope = 0.2;

struct GeneratorSpec {
    std::int64_t depth = 5;
    std::int64_t base_channels = 64;
    std::int64_t input_channels = 3;
    std::int64_t output_channels = 3;
    bool hole_channel = false;

    std::int64_t stage_channels(std::int64_t stage) const {
        std::int64_t c = base_channels;
        for (std::int64_t i = 1; i < stage; ++i) c = std::min(c * 2, kChannelCap);
        return c;
    }
    std::int64_t in_channels() const { return input_channels + (hole_channel ? 1 : 0); }
    std::int64_t divisor() const { return std::int64_t{1} << depth; }

    void validate() const {
        if (depth < 3) throw ConfigError("generator depth must be >= 3");
        if (base_channels < 1) throw ConfigError("generator base_channels must be >= 1");
        if (input_channels != 3) throw ConfigError("generator input_channels must be 3");
    }

    bool operator==(const GeneratorSpec&) const = default;
};

struct CriticSpec {
    std::int64_t depth = 4;
    std::int64_t base_channels = 64;
    std::int64_t input_channels = 3;
    double weight_clip = 0.01;

    std::int64_t stage_channels(std::int64_t stage) const {
        std::int64_t c = base_channels;
        for (std::int64_t i = 1; i < stage; ++i) c = std::min(c * 2, kChannelCap);
        return c;
    }
    std::int64_t divisor() const { return std::int64_t{1} << depth; }

    void validate() const {
        if (depth < 1) throw ConfigError("critic depth must be >= 1");
        if (base_channels < 1) throw ConfigError("critic base_channels must be >= 1");
        if (weight_clip <= 0.0) throw ConfigError("critic weight_clip must be > 0");
    }

    bool operator==(const CriticSpec&) const = default;
};

struct ParamEntry {
    Tensor value;
    Tensor m;
    Tensor v;
};

/// Ordered, name-keyed parameter store for one network.
struct ParamSet {
    std::vector<std::string> order;
    std::map<std::string, ParamEntry> entries;
    std::int64_t adam_t = 0;

    void add(const std::string& name, const std::vector<std::int64_t>& shape) {
        if (entries.count(name)) throw ValueError("duplicate param " + name);
        ParamEntry e;
        e.value = Tensor(shape);
        e.m = Tensor(shape);
        e.v = Tensor(shape);
        entries.emplace(name, std::move(e));
        order.push_back(name);
    }
    ParamEntry& entry(const std::string& name) {
        auto it = entries.find(name);
        if (it == entries.end()) throw ValueError("unknown param " + name);
        return it->second;
    }
    const ParamEntry& entry(const std::string& name) const {
        auto it = entries.find(name);
        if (it == entries.end()) throw ValueError("unknown param " + name);
        return it->second;
    }
    Tensor& value(const std::string& name) { return entry(name).value; }
    const Tensor& value(const std::string& name) const { return entry(name).value; }

    bool all_finite() const {
        for (const auto& [name, e] : entries)
            if (!e.value.all_finite() || !e.m.all_finite() || !e.v.all_finite()) return false;
        return true;
    }
    double max_abs_value() const {
        double m = 0.0;
        for (const auto& [name, e] : entries)
            for (std::int64_t i = 0; i < e.value.numel(); ++i)
                m = std::max(m, std::abs(e.value[i]));
        return m;
    }
};

/// Per-name gradient accumulator matching a ParamSet's layout.
struct GradSet {
    std::map<std::string, Tensor> grads;

    static GradSet zeros_like(const ParamSet& ps) {
        GradSet g;
        for (const auto& name : ps.order) g.grads.emplace(name, Tensor(ps.entry(name).value.shape()));
        return g;
    }
    Tensor& at(const std::string& name) {
        auto it = grads.find(name);
        if (it == grads.end()) throw ValueError("unknown grad " + name);
        return it->second;
    }
    const Tensor& at(const std::string& name) const {
        auto it = grads.find(name);
        if (it == grads.end()) throw ValueError("unknown grad " + name);
        return it->second;
    }
    bool all_finite() const {
        for (const auto& [name, t] : grads)
            if (!t.all_finite()) return false;
        return true;
    }
};

struct NetParams {
    GeneratorSpec gspec;
    CriticSpec cspec;
    ParamSet gen;
    ParamSet critic;
    std::uint64_t seed = 0;
};

namespace detail {

inline nn::ConvSpec enc_conv_spec(const GeneratorSpec& gs, std::int64_t stage) {
    nn::ConvSpec cs;
    cs.in_ch = stage == 1 ? gs.in_channels() : gs.stage_channels(stage - 1);
    cs.out_ch = gs.stage_channels(stage);
    cs.ksize = 4;
    cs.stride = 2;
    cs.pad = 1;
    return cs;
}

inline nn::ConvSpec dec_conv_spec(const GeneratorSpec& gs, std::int64_t stage) {
    nn::ConvSpec cs;
    cs.in_ch = gs.stage_channels(gs.depth - stage + 1);
    cs.out_ch = stage == gs.depth ? gs.output_channels : gs.stage_channels(gs.depth - stage);
    cs.ksize = 3;
    cs.stride = 1;
    cs.pad = 1;
    return cs;
}

inline nn::ConvSpec critic_conv_spec(const CriticSpec& cs_, std::int64_t stage) {
    nn::ConvSpec cs;
    cs.in_ch = stage == 1 ? cs_.input_channels : cs_.stage_channels(stage - 1);
    cs.out_ch = cs_.stage_channels(stage);
    cs.ksize = 4;
    cs.stride = 2;
    cs.pad = 1;
    return cs;
}

inline void fill_he_normal(Tensor& w, std::int64_t fan_in, Rng& rng) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = stddev * rng.normal();
}

inline void init_entry(ParamSet& ps, std::uint64_t seed, const std::string& name,
                       std::int64_t fan_in) {
    Rng rng(mix64(seed, fnv1a64(name)));
    fill_he_normal(ps.value(name), fan_in, rng);
}

} // namespace detail

/// All-zero parameter store with the full layer layout for the given specs.
inline NetParams build_param_layout(const GeneratorSpec& gspec, const CriticSpec& cspec) {
    gspec.validate();
    cspec.validate();
    NetParams np;
    np.gspec = gspec;
    np.cspec = cspec;

    for (std::int64_t i = 1; i <= gspec.depth; ++i) {
        const auto cs = detail::enc_conv_spec(gspec, i);
        const std::string base = "enc" + std::to_string(i);
        np.gen.add(base + ".w", cs.weight_shape());
        np.gen.add(base + ".b", {cs.out_ch});
        if (i >= 2) {
            np.gen.add(base + ".gamma", {cs.out_ch});
            np.gen.add(base + ".beta", {cs.out_ch});
        }
    }
    for (std::int64_t j = 1; j <= gspec.depth; ++j) {
        const auto cs = detail::dec_conv_spec(gspec, j);
        const std::string base = "dec" + std::to_string(j);
        np.gen.add(base + ".w", cs.weight_shape());
        np.gen.add(base + ".b", {cs.out_ch});
        if (j < gspec.depth) {
            np.gen.add(base + ".gamma", {cs.out_ch});
            np.gen.add(base + ".beta", {cs.out_ch});
        }
    }

    for (std::int64_t i = 1; i <= cspec.depth; ++i) {
        const auto cs = detail::critic_conv_spec(cspec, i);
        const std::string base = "crit" + std::to_string(i);
        np.critic.add(base + ".w", cs.weight_shape());
        np.critic.add(base + ".b", {cs.out_ch});
        if (i >= 2) {
            np.critic.add(base + ".gamma", {cs.out_ch});
            np.critic.add(base + ".beta", {cs.out_ch});
        }
    }
    const std::int64_t head_in = cspec.stage_channels(cspec.depth);
    np.critic.add("head.w", {head_in});
    np.critic.add("head.b", {1});
    return np;
}

inline NetParams init_params(std::uint64_t seed, const GeneratorSpec& gspec,
                             const CriticSpec& cspec) {
    NetParams np = build_param_layout(gspec, cspec);
    np.seed = seed;
    for (auto* ps : {&np.gen, &np.critic}) {
        for (const auto& name : ps->order) {
            if (name.ends_with(".gamma")) {
                ps->value(name).fill(1.0);
            } else if (name.ends_with(".w")) {
                const Tensor& w = ps->value(name);
                const std::int64_t fan_in =
                    w.rank() == 4 ? w.dim(1) * w.dim(2) * w.dim(3) : w.numel();
                detail::init_entry(*ps, seed, name, fan_in);
            }
        }
    }
    // The clip invariant must hold from the first update onward; clamping at
    // init (normalization gains included) keeps the critic inside the ball so
    // clipping never has to move a parameter that an update did not touch.
    for (const auto& name : np.critic.order) {
        Tensor& t = np.critic.value(name);
        for (std::int64_t i = 0; i < t.numel(); ++i)
            t[i] = std::clamp(t[i], -cspec.weight_clip, cspec.weight_clip);
    }
    return np;
}

// ---------------------------------------------------------------------------
// Generator
// ---------------------------------------------------------------------------

struct GenCache {
    std::vector<nn::ConvCache> enc_conv, dec_conv;
    std::vector<nn::InstanceNormCache> enc_norm, dec_norm;
    std::vector<nn::ActCache> enc_act, dec_act;
    std::vector<Tensor> enc_out;
    std::vector<std::int64_t> dec_in_h, dec_in_w;
};

inline void check_generator_input(const GeneratorSpec& gs, const Tensor& x) {
    if (x.rank() != 4) throw DimensionError("generator input must be NCHW");
    if (x.dim(1) != gs.in_channels())
        throw DimensionError("generator input channels " + std::to_string(x.dim(1)) +
                             ", expected " + std::to_string(gs.in_channels()));
    if (x.dim(2) % gs.divisor() || x.dim(3) % gs.divisor())
        throw DimensionError("generator input dims must be divisible by " +
                             std::to_string(gs.divisor()));
}

inline Tensor generator_forward_batch(const NetParams& np, const Tensor& x, GenCache* cache,
                                      bool use_chain = true) {
    const GeneratorSpec& gs = np.gspec;
    check_generator_input(gs, x);
    GenCache local;
    GenCache& cc = cache ? *cache : local;
    cc.enc_conv.resize(static_cast<std::size_t>(gs.depth));
    cc.dec_conv.resize(static_cast<std::size_t>(gs.depth));
    cc.enc_norm.resize(static_cast<std::size_t>(gs.depth));
    cc.dec_norm.resize(static_cast<std::size_t>(gs.depth));
    cc.enc_act.resize(static_cast<std::size_t>(gs.depth));
    cc.dec_act.resize(static_cast<std::size_t>(gs.depth));
    cc.enc_out.resize(static_cast<std::size_t>(gs.depth));
    cc.dec_in_h.assign(static_cast<std::size_t>(gs.depth), 0);
    cc.dec_in_w.assign(static_cast<std::size_t>(gs.depth), 0);

    Tensor h = x;
    for (std::int64_t i = 1; i <= gs.depth; ++i) {
        const auto cs = detail::enc_conv_spec(gs, i);
        const std::string base = "enc" + std::to_string(i);
        const std::size_t idx = static_cast<std::size_t>(i - 1);
        h = nn::conv2d_forward(cs, np.gen.value(base + ".w"), np.gen.value(base + ".b"), h,
                               &cc.enc_conv[idx]);
        if (i >= 2)
            h = nn::instance_norm_forward(np.gen.value(base + ".gamma"),
                                          np.gen.value(base + ".beta"), h, &cc.enc_norm[idx]);
        h = nn::leaky_relu_forward(h, kEncoderSlope, &cc.enc_act[idx]);
        cc.enc_out[idx] = h;
    }
    for (std::int64_t j = 1; j <= gs.depth; ++j) {
        const auto cs = detail::dec_conv_spec(gs, j);
        const std::string base = "dec" + std::to_string(j);
        const std::size_t idx = static_cast<std::size_t>(j - 1);
        cc.dec_in_h[idx] = h.dim(2);
        cc.dec_in_w[idx] = h.dim(3);
        h = nn::upsample2_nearest_forward(h);
        h = nn::conv2d_forward(cs, np.gen.value(base + ".w"), np.gen.value(base + ".b"), h,
                               &cc.dec_conv[idx]);
        if (j < gs.depth) {
            if (use_chain) h.axpy(1.0, cc.enc_out[static_cast<std::size_t>(gs.depth - j - 1)]);
            h = nn::instance_norm_forward(np.gen.value(base + ".gamma"),
                                          np.gen.value(base + ".beta"), h, &cc.dec_norm[idx]);
            h = nn::leaky_relu_forward(h, 0.0, &cc.dec_act[idx]);
        } else {
            h = nn::tanh_forward(h, &cc.dec_act[idx]);
        }
    }
    return h;
}

/// Backpropagates through the generator, accumulating into `gg`.
inline void generator_backward_batch(const NetParams& np, const GenCache& cc, const Tensor& gy,
                                     GradSet& gg, bool use_chain = true) {
    const GeneratorSpec& gs = np.gspec;
    std::vector<Tensor> skip_grads(static_cast<std::size_t>(gs.depth));

    Tensor g = gy;
    for (std::int64_t j = gs.depth; j >= 1; --j) {
        const auto cs = detail::dec_conv_spec(gs, j);
        const std::string base = "dec" + std::to_string(j);
        const std::size_t idx = static_cast<std::size_t>(j - 1);
        if (j < gs.depth) {
            g = nn::leaky_relu_backward(0.0, cc.dec_act[idx], g);
            g = nn::instance_norm_backward(np.gen.value(base + ".gamma"), cc.dec_norm[idx], g,
                                           &gg.at(base + ".gamma"), &gg.at(base + ".beta"));
            // The chain add forks the gradient into the matching encoder output.
            if (use_chain) skip_grads[static_cast<std::size_t>(gs.depth - j - 1)] = g;
        } else {
            g = nn::tanh_backward(cc.dec_act[idx], g);
        }
        g = nn::conv2d_backward(cs, np.gen.value(base + ".w"), cc.dec_conv[idx], g,
                                &gg.at(base + ".w"), &gg.at(base + ".b"), true);
        g = nn::upsample2_nearest_backward(g);
    }

    for (std::int64_t i = gs.depth; i >= 1; --i) {
        const auto cs = detail::enc_conv_spec(gs, i);
        const std::string base = "enc" + std::to_string(i);
        const std::size_t idx = static_cast<std::size_t>(i - 1);
        if (skip_grads[idx].numel() > 0) g.axpy(1.0, skip_grads[idx]);
        g = nn::leaky_relu_backward(kEncoderSlope, cc.enc_act[idx], g);
        if (i >= 2)
            g = nn::instance_norm_backward(np.gen.value(base + ".gamma"), cc.enc_norm[idx], g,
                                           &gg.at(base + ".gamma"), &gg.at(base + ".beta"));
        const bool need_input = i > 1;
        g = nn::conv2d_backward(cs, np.gen.value(base + ".w"), cc.enc_conv[idx], g,
                                &gg.at(base + ".w"), &gg.at(base + ".b"), need_input);
    }
}

inline ImageTensor generator_forward(const NetParams& np, const ImageTensor& masked) {
    if (masked.range != ValueRange::symmetric)
        throw ValueError("generator input must be in symmetric range");
    Tensor x = image_to_nchw(masked);
    Tensor y = generator_forward_batch(np, x, nullptr);
    return nchw_to_image(y, 0, ValueRange::symmetric);
}

// ---------------------------------------------------------------------------
// Critic
// ---------------------------------------------------------------------------

struct CriticCache {
    std::vector<nn::ConvCache> conv;
    std::vector<nn::InstanceNormCache> norm;
    std::vector<nn::ActCache> act;
    nn::HeadCache head;
};

inline void check_critic_input(const CriticSpec& cs, const Tensor& x) {
    if (x.rank() != 4) throw DimensionError("critic input must be NCHW");
    if (x.dim(1) != cs.input_channels) throw DimensionError("critic input channels");
    if (x.dim(2) % cs.divisor() || x.dim(3) % cs.divisor())
        throw DimensionError("critic input dims must be divisible by " +
                             std::to_string(cs.divisor()));
}

inline std::vector<double> critic_forward_batch(const NetParams& np, const Tensor& x,
                                                CriticCache* cache) {
    const CriticSpec& spec = np.cspec;
    check_critic_input(spec, x);
    CriticCache local;
    CriticCache& cc = cache ? *cache : local;
    cc.conv.resize(static_cast<std::size_t>(spec.depth));
    cc.norm.resize(static_cast<std::size_t>(spec.depth));
    cc.act.resize(static_cast<std::size_t>(spec.depth));

    Tensor h = x;
    for (std::int64_t i = 1; i <= spec.depth; ++i) {
        const auto cs = detail::critic_conv_spec(spec, i);
        const std::string base = "crit" + std::to_string(i);
        const std::size_t idx = static_cast<std::size_t>(i - 1);
        h = nn::conv2d_forward(cs, np.critic.value(base + ".w"), np.critic.value(base + ".b"),
                               h, &cc.conv[idx]);
        if (i >= 2)
            h = nn::instance_norm_forward(np.critic.value(base + ".gamma"),
                                          np.critic.value(base + ".beta"), h, &cc.norm[idx]);
        h = nn::leaky_relu_forward(h, kEncoderSlope, &cc.act[idx]);
    }
    auto scores = nn::head_forward(np.critic.value("head.w"), np.critic.value("head.b"), h,
                                   &cc.head);
    for (double s : scores)
        if (!std::isfinite(s)) throw NumericError("critic produced a non-finite score");
    return scores;
}

/// Backpropagates through the critic. `gg` may be null when only the input
/// gradient is needed (generator adversarial term).
inline Tensor critic_backward_batch(const NetParams& np, const CriticCache& cc,
                                    const std::vector<double>& gscores, GradSet* gg,
                                    bool need_input_grad) {
    const CriticSpec& spec = np.cspec;
    Tensor g = nn::head_backward(np.critic.value("head.w"), cc.head, gscores,
                                 gg ? &gg->at("head.w") : nullptr,
                                 gg ? &gg->at("head.b") : nullptr);
    Tensor gw_scratch, gb_scratch;
    for (std::int64_t i = spec.depth; i >= 1; --i) {
        const auto cs = detail::critic_conv_spec(spec, i);
        const std::string base = "crit" + std::to_string(i);
        const std::size_t idx = static_cast<std::size_t>(i - 1);
        g = nn::leaky_relu_backward(kEncoderSlope, cc.act[idx], g);
        if (i >= 2) {
            if (gg) {
                g = nn::instance_norm_backward(np.critic.value(base + ".gamma"), cc.norm[idx],
                                               g, &gg->at(base + ".gamma"),
                                               &gg->at(base + ".beta"));
            } else {
                gw_scratch = Tensor({cs.out_ch});
                gb_scratch = Tensor({cs.out_ch});
                g = nn::instance_norm_backward(np.critic.value(base + ".gamma"), cc.norm[idx],
                                               g, &gw_scratch, &gb_scratch);
            }
        }
        const bool need_input = need_input_grad || i > 1;
        if (gg) {
            g = nn::conv2d_backward(cs, np.critic.value(base + ".w"), cc.conv[idx], g,
                                    &gg->at(base + ".w"), &gg->at(base + ".b"), need_input);
        } else {
            gw_scratch = Tensor(cs.weight_shape());
            gb_scratch = Tensor({cs.out_ch});
            g = nn::conv2d_backward(cs, np.critic.value(base + ".w"), cc.conv[idx], g,
                                    &gw_scratch, &gb_scratch, need_input);
        }
    }
    return g;
}

inline double critic_forward(const NetParams& np, const ImageTensor& image) {
    if (image.range != ValueRange::symmetric)
        throw ValueError("critic input must be in symmetric range");
    Tensor x = image_to_nchw(image);
    return critic_forward_batch(np, x, nullptr)[0];
}

} // namespace fginpaint
