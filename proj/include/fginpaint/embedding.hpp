#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/nn.hpp"
#include "fginpaint/rng.hpp"

namespace fginpaint {

/// Maps an image in [0,1] to a fixed-length real vector for distribution
/// distances. Implementations must be deterministic.
class EmbeddingBackend {
  public:
    virtual ~EmbeddingBackend() = default;
    virtual std::string name() const = 0;
    virtual std::int64_t dim() const = 0;
    virtual std::vector<double> embed(const ImageTensor& image) const = 0;
};

/// Deterministic fixed-weight convolutional embedding (d = 64). Input is
/// resized to 32x32, passed through three stride-2 conv+tanh stages, then
/// globally average-pooled. A fast offline stand-in for a pretrained
/// embedding network; values are only comparable within the same backend.
class TestConvEmbedding final : public EmbeddingBackend {
  public:
    explicit TestConvEmbedding(std::uint64_t seed = 0x7ec0de64)
        : seed_(seed) {
        const std::int64_t chans[3] = {16, 32, 64};
        std::int64_t prev = 3;
        for (int s = 0; s < 3; ++s) {
            nn::ConvSpec cs;
            cs.in_ch = prev;
            cs.out_ch = chans[s];
            cs.ksize = 3;
            cs.stride = 2;
            cs.pad = 1;
            specs_.push_back(cs);
            Tensor w(cs.weight_shape());
            Rng rng(mix64(seed, fnv1a64("embed.stage" + std::to_string(s) + ".w")));
            const double stddev = std::sqrt(2.0 / static_cast<double>(cs.in_ch * 9));
            for (std::int64_t i = 0; i < w.numel(); ++i) w[i] = stddev * rng.normal();
            weights_.push_back(std::move(w));
            biases_.emplace_back(std::vector<std::int64_t>{cs.out_ch});
            prev = chans[s];
        }
    }

    std::string name() const override { return "testconv64"; }
    std::int64_t dim() const override { return 64; }

    std::vector<double> embed(const ImageTensor& image) const override {
        if (image.range != ValueRange::unit)
            throw ValueError("embedding input must be in unit range");
        ImageTensor rgb = image;
        if (rgb.channels == 1) {
            ImageTensor e(rgb.height, rgb.width, 3, rgb.range);
            for (std::int64_t h = 0; h < rgb.height; ++h)
                for (std::int64_t w = 0; w < rgb.width; ++w)
                    for (std::int64_t c = 0; c < 3; ++c) e.at(h, w, c) = rgb.at(h, w, 0);
            rgb = std::move(e);
        }
        Tensor h = image_to_nchw(resize_image(rgb, 32, 32));
        for (std::size_t s = 0; s < specs_.size(); ++s) {
            h = nn::conv2d_forward(specs_[s], weights_[s], biases_[s], h, nullptr);
            h = nn::tanh_forward(h, nullptr);
        }
        const std::int64_t C = h.dim(1), HW = h.dim(2) * h.dim(3);
        std::vector<double> out(static_cast<std::size_t>(C));
        for (std::int64_t c = 0; c < C; ++c) {
            double s = 0.0;
            for (std::int64_t i = 0; i < HW; ++i) s += h[c * HW + i];
            out[static_cast<std::size_t>(c)] = s / static_cast<double>(HW);
        }
        for (double v : out)
            if (!std::isfinite(v)) throw NumericError("non-finite embedding");
        return out;
    }

  private:
    std::uint64_t seed_;
    std::vector<nn::ConvSpec> specs_;
    std::vector<Tensor> weights_;
    std::vector<Tensor> biases_;
};

} // namespace fginpaint
