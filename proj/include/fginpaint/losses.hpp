#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "fginpaint/errors.hpp"
#include "fginpaint/features.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/tensor.hpp"

namespace fginpaint {

struct LossWeights {
    double lambda_cF = 1.0;
    double lambda_F = 10.0;
    double lambda_pF = 0.05;
    double lambda_adv = 0.01;

    void validate() const {
        if (lambda_cF < 0 || lambda_F < 0 || lambda_pF < 0 || lambda_adv < 0)
            throw ConfigError("loss weights must be nonnegative");
        if (lambda_cF == 0 && lambda_F == 0 && lambda_pF == 0 && lambda_adv == 0)
            throw ConfigError("at least one loss weight must be positive");
    }
};

enum class CompositeTarget { masked_input, ground_truth };

struct LossBreakdown {
    double l_cF = 0.0;
    double l_F = 0.0;
    double l_pF = 0.0;
    double l_adv = 0.0;
    double total = 0.0;
};

namespace detail {

inline void check_loss_shapes(const ImageTensor& a, const ImageTensor& b,
                              const ForegroundMask& fg) {
    if (!a.same_shape(b)) throw DimensionError("loss: image shapes differ");
    if (fg.height != a.height || fg.width != a.width)
        throw DimensionError("loss: foreground mask shape differs from images");
}

inline Tensor nchw_to_hwc(const Tensor& g) {
    const std::int64_t C = g.dim(1), H = g.dim(2), W = g.dim(3);
    Tensor out({H, W, C});
    for (std::int64_t c = 0; c < C; ++c)
        for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w)
                out[(h * W + w) * C + c] = g[(c * H + h) * W + w];
    return out;
}

} // namespace detail

/// Mean absolute residual against the masked input, restricted to the
/// foreground, normalized by the full element count. Optional gradient with
/// respect to pred (HWC layout, zero subgradient at ties).
inline double loss_cF(const ImageTensor& masked, const ImageTensor& pred,
                      const ForegroundMask& fg, Tensor* grad_pred = nullptr) {
    detail::check_loss_shapes(masked, pred, fg);
    const std::int64_t H = masked.height, W = masked.width, C = masked.channels;
    const double inv_n = 1.0 / static_cast<double>(H * W * C);
    if (grad_pred) *grad_pred = Tensor({H, W, C});
    double acc = 0.0;
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < W; ++w) {
            if (!fg.at(h, w)) continue;
            for (std::int64_t c = 0; c < C; ++c) {
                const double d = masked.at(h, w, c) - pred.at(h, w, c);
                acc += std::abs(d);
                if (grad_pred) {
                    const double s = d > 0.0 ? -1.0 : (d < 0.0 ? 1.0 : 0.0);
                    (*grad_pred)[(h * W + w) * C + c] = s * inv_n;
                }
            }
        }
    return acc * inv_n;
}

/// Mean squared residual against the ground truth, restricted to the
/// foreground, normalized by the full element count.
inline double loss_F(const ImageTensor& gt, const ImageTensor& pred, const ForegroundMask& fg,
                     Tensor* grad_pred = nullptr) {
    detail::check_loss_shapes(gt, pred, fg);
    const std::int64_t H = gt.height, W = gt.width, C = gt.channels;
    const double inv_n = 1.0 / static_cast<double>(H * W * C);
    if (grad_pred) *grad_pred = Tensor({H, W, C});
    double acc = 0.0;
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < W; ++w) {
            if (!fg.at(h, w)) continue;
            for (std::int64_t c = 0; c < C; ++c) {
                const double d = gt.at(h, w, c) - pred.at(h, w, c);
                acc += d * d;
                if (grad_pred) (*grad_pred)[(h * W + w) * C + c] = -2.0 * d * inv_n;
            }
        }
    return acc * inv_n;
}

/// Squared feature-space residual summed over taps, each normalized by the
/// image element count, with the foreground mask resized to each tap's dims.
inline double loss_pF(const ImageTensor& masked, const ImageTensor& pred,
                      const ForegroundMask& fg, const FeatureExtractor& fx,
                      Tensor* grad_pred = nullptr) {
    detail::check_loss_shapes(masked, pred, fg);
    const std::int64_t H = masked.height, W = masked.width, C = masked.channels;
    const double inv_n = 1.0 / static_cast<double>(H * W * C);

    const auto run_m = fx.forward(image_to_nchw(masked));
    const auto run_p = fx.forward(image_to_nchw(pred));
    if (run_m.taps.size() != run_p.taps.size())
        throw DimensionError("feature extractor tap count mismatch");

    std::vector<Tensor> gtaps;
    double acc = 0.0;
    for (std::size_t i = 0; i < run_m.taps.size(); ++i) {
        const Tensor& tm = run_m.taps[i];
        const Tensor& tp = run_p.taps[i];
        if (!tm.same_shape(tp)) throw DimensionError("feature tap shape mismatch");
        const std::int64_t Ci = tm.dim(1), Hi = tm.dim(2), Wi = tm.dim(3);
        const ForegroundMask fgi = resize_mask(fg, Hi, Wi);
        Tensor gt_i;
        if (grad_pred) gt_i = Tensor(tm.shape());
        for (std::int64_t c = 0; c < Ci; ++c)
            for (std::int64_t h = 0; h < Hi; ++h)
                for (std::int64_t w = 0; w < Wi; ++w) {
                    if (!fgi.at(h, w)) continue;
                    const std::int64_t idx = (c * Hi + h) * Wi + w;
                    const double d = tm[idx] - tp[idx];
                    acc += d * d * inv_n;
                    if (grad_pred) gt_i[idx] = -2.0 * d * inv_n;
                }
        if (grad_pred) gtaps.push_back(std::move(gt_i));
    }
    if (grad_pred) *grad_pred = detail::nchw_to_hwc(fx.backward(run_p, gtaps));
    return acc;
}

/// Critic objective for minimization: mean fake score minus mean real score.
inline double critic_loss(const std::vector<double>& real_scores,
                          const std::vector<double>& fake_scores) {
    if (real_scores.empty() || fake_scores.empty())
        throw ValueError("critic_loss: empty score list");
    double mr = 0.0, mf = 0.0;
    for (double s : real_scores) mr += s;
    for (double s : fake_scores) mf += s;
    mr /= static_cast<double>(real_scores.size());
    mf /= static_cast<double>(fake_scores.size());
    return mf - mr;
}

inline double generator_adv_loss(const std::vector<double>& fake_scores) {
    if (fake_scores.empty()) throw ValueError("generator_adv_loss: empty score list");
    double mf = 0.0;
    for (double s : fake_scores) mf += s;
    return -mf / static_cast<double>(fake_scores.size());
}

/// Weighted composite objective. The optional gradient covers the three
/// reconstruction terms; the adversarial term treats fake_scores as given,
/// so its dependence on pred (through the critic) is the caller's to add.
/// A zero perceptual weight skips feature extraction and reports l_pF = 0.
inline LossBreakdown generator_total_loss(const ImageTensor& gt, const ImageTensor& masked,
                                          const ImageTensor& pred, const ForegroundMask& fg,
                                          const FeatureExtractor& fx,
                                          const std::vector<double>& fake_scores,
                                          const LossWeights& w,
                                          CompositeTarget cF_target = CompositeTarget::masked_input,
                                          Tensor* grad_pred = nullptr) {
    const ImageTensor& cF_ref = cF_target == CompositeTarget::masked_input ? masked : gt;
    LossBreakdown out;
    Tensor g_term;
    Tensor* g = grad_pred ? &g_term : nullptr;
    if (grad_pred)
        *grad_pred = Tensor({masked.height, masked.width, masked.channels});

    out.l_cF = loss_cF(cF_ref, pred, fg, g);
    if (grad_pred) grad_pred->axpy(w.lambda_cF, g_term);
    out.l_F = loss_F(gt, pred, fg, g);
    if (grad_pred) grad_pred->axpy(w.lambda_F, g_term);
    if (w.lambda_pF != 0.0) {
        out.l_pF = loss_pF(masked, pred, fg, fx, g);
        if (grad_pred) grad_pred->axpy(w.lambda_pF, g_term);
    }
    if (!fake_scores.empty()) {
        out.l_adv = generator_adv_loss(fake_scores);
    } else if (w.lambda_adv != 0.0) {
        throw ValueError("generator_total_loss: adversarial weight set but no scores given");
    }
    out.total = w.lambda_cF * out.l_cF + w.lambda_F * out.l_F + w.lambda_pF * out.l_pF +
                w.lambda_adv * out.l_adv;
    return out;
}

} // namespace fginpaint
