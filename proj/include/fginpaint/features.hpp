#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/nn.hpp"
#include "fginpaint/rng.hpp"
#include "fginpaint/tensor.hpp"

namespace fginpaint {

/// Frozen feature network exposing intermediate taps for perceptual distances.
/// Implementations must be deterministic and never mutate their weights.
class FeatureExtractor {
  public:
    struct Run {
        std::vector<Tensor> taps;
        std::shared_ptr<void> cache;
    };

    virtual ~FeatureExtractor() = default;
    virtual std::string name() const = 0;
    virtual std::size_t tap_count() const = 0;
    /// x is NCHW with N = 1.
    virtual Run forward(const Tensor& x) const = 0;
    /// Gradient of a scalar w.r.t. x given gradients w.r.t. every tap.
    virtual Tensor backward(const Run& run, const std::vector<Tensor>& gtaps) const = 0;
};

/// Single tap equal to the input. Lets tests collapse the perceptual
/// distance onto the plain pixel-space quadratic loss.
class IdentityExtractor final : public FeatureExtractor {
  public:
    std::string name() const override { return "identity"; }
    std::size_t tap_count() const override { return 1; }
    Run forward(const Tensor& x) const override { return Run{{x}, nullptr}; }
    Tensor backward(const Run&, const std::vector<Tensor>& gtaps) const override {
        if (gtaps.size() != 1) throw DimensionError("identity extractor expects one tap grad");
        return gtaps[0];
    }
};

/// Fixed convolutional pyramid: three stages of 3x3 conv, tanh, 2x2 average
/// pool, with a tap after each pool. Weights are seeded once and frozen; a
/// stand-in with the same interface and tap geometry as a pretrained backbone.
class FixedConvExtractor final : public FeatureExtractor {
  public:
    explicit FixedConvExtractor(std::uint64_t seed, std::int64_t in_channels = 3,
                                std::vector<std::int64_t> channels = {16, 32, 64})
        : seed_(seed), channels_(std::move(channels)) {
        if (channels_.empty()) throw ConfigError("feature extractor needs at least one stage");
        std::int64_t prev = in_channels;
        for (std::size_t s = 0; s < channels_.size(); ++s) {
            nn::ConvSpec cs;
            cs.in_ch = prev;
            cs.out_ch = channels_[s];
            cs.ksize = 3;
            cs.stride = 1;
            cs.pad = 1;
            specs_.push_back(cs);
            Tensor w(cs.weight_shape());
            Rng rng(mix64(seed, fnv1a64("fx.stage" + std::to_string(s) + ".w")));
            const double stddev = std::sqrt(2.0 / static_cast<double>(cs.in_ch * 9));
            for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = stddev * rng.normal();
            weights_.push_back(std::move(w));
            biases_.emplace_back(std::vector<std::int64_t>{cs.out_ch});
            prev = channels_[s];
        }
    }

    std::string name() const override { return "fixedconv:" + std::to_string(seed_); }
    std::size_t tap_count() const override { return channels_.size(); }

    Run forward(const Tensor& x) const override {
        const std::int64_t div = std::int64_t{1} << channels_.size();
        if (x.rank() != 4 || x.dim(1) != specs_[0].in_ch)
            throw DimensionError("feature extractor input shape " + x.shape_str());
        if (x.dim(2) % div || x.dim(3) % div)
            throw DimensionError("feature extractor input dims must be divisible by " +
                                 std::to_string(div));
        auto cache = std::make_shared<Cache>();
        cache->conv.resize(specs_.size());
        cache->act.resize(specs_.size());
        cache->pre_pool_h.resize(specs_.size());
        cache->pre_pool_w.resize(specs_.size());
        Run run;
        run.cache = cache;
        Tensor h = x;
        for (std::size_t s = 0; s < specs_.size(); ++s) {
            h = nn::conv2d_forward(specs_[s], weights_[s], biases_[s], h, &cache->conv[s]);
            h = nn::tanh_forward(h, &cache->act[s]);
            cache->pre_pool_h[s] = h.dim(2);
            cache->pre_pool_w[s] = h.dim(3);
            h = nn::avgpool2_forward(h);
            run.taps.push_back(h);
        }
        return run;
    }

    Tensor backward(const Run& run, const std::vector<Tensor>& gtaps) const override {
        if (gtaps.size() != specs_.size())
            throw DimensionError("feature extractor expects one grad per tap");
        auto cache = std::static_pointer_cast<Cache>(run.cache);
        Tensor g = gtaps.back();
        Tensor gw_scratch, gb_scratch;
        for (std::size_t s = specs_.size(); s-- > 0;) {
            g = nn::avgpool2_backward(g, cache->pre_pool_h[s], cache->pre_pool_w[s]);
            g = nn::tanh_backward(cache->act[s], g);
            gw_scratch = Tensor(specs_[s].weight_shape());
            gb_scratch = Tensor({specs_[s].out_ch});
            g = nn::conv2d_backward(specs_[s], weights_[s], cache->conv[s], g, &gw_scratch,
                                    &gb_scratch, true);
            if (s > 0) g.axpy(1.0, gtaps[s - 1]);
        }
        return g;
    }

  private:
    struct Cache {
        std::vector<nn::ConvCache> conv;
        std::vector<nn::ActCache> act;
        std::vector<std::int64_t> pre_pool_h, pre_pool_w;
    };

    std::uint64_t seed_;
    std::vector<std::int64_t> channels_;
    std::vector<nn::ConvSpec> specs_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
};

} // namespace fginpaint
