#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "fginpaint/errors.hpp"
#include "fginpaint/tensor.hpp"

namespace fginpaint::nn {

using MatRM = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapRM = Eigen::Map<MatRM>;
using CMapRM = Eigen::Map<const MatRM>;

// ---------------------------------------------------------------------------
// Convolution (im2col + GEMM)
// ---------------------------------------------------------------------------

struct ConvSpec {
    std::int64_t in_ch = 0;
    std::int64_t out_ch = 0;
    std::int64_t ksize = 3;
    std::int64_t stride = 1;
    std::int64_t pad = 1;

    std::int64_t out_dim(std::int64_t in) const { return (in + 2 * pad - ksize) / stride + 1; }
    std::vector<std::int64_t> weight_shape() const { return {out_ch, in_ch, ksize, ksize}; }
};

struct ConvCache {
    Tensor input; // saved for the weight gradient; im2col is recomputed
};

namespace detail {

inline void im2col(const ConvSpec& cs, const double* x, std::int64_t H, std::int64_t W,
                   std::int64_t Ho, std::int64_t Wo, Eigen::MatrixXd& cols) {
    const std::int64_t k = cs.ksize, s = cs.stride, p = cs.pad;
    cols.resize(cs.in_ch * k * k, Ho * Wo);
    for (std::int64_t oy = 0; oy < Ho; ++oy) {
        for (std::int64_t ox = 0; ox < Wo; ++ox) {
            const std::int64_t q = oy * Wo + ox;
            double* col = cols.data() + q * cols.rows(); // column-major
            std::int64_t r = 0;
            for (std::int64_t ci = 0; ci < cs.in_ch; ++ci) {
                const double* plane = x + ci * H * W;
                for (std::int64_t ky = 0; ky < k; ++ky) {
                    const std::int64_t iy = oy * s - p + ky;
                    for (std::int64_t kx = 0; kx < k; ++kx, ++r) {
                        const std::int64_t ix = ox * s - p + kx;
                        col[r] = (iy >= 0 && iy < H && ix >= 0 && ix < W)
                                     ? plane[iy * W + ix]
                                     : 0.0;
                    }
                }
            }
        }
    }
}

inline void col2im_add(const ConvSpec& cs, const Eigen::MatrixXd& cols, std::int64_t H,
                       std::int64_t W, std::int64_t Ho, std::int64_t Wo, double* gx) {
    const std::int64_t k = cs.ksize, s = cs.stride, p = cs.pad;
    for (std::int64_t oy = 0; oy < Ho; ++oy) {
        for (std::int64_t ox = 0; ox < Wo; ++ox) {
            const std::int64_t q = oy * Wo + ox;
            const double* col = cols.data() + q * cols.rows();
            std::int64_t r = 0;
            for (std::int64_t ci = 0; ci < cs.in_ch; ++ci) {
                double* plane = gx + ci * H * W;
                for (std::int64_t ky = 0; ky < k; ++ky) {
                    const std::int64_t iy = oy * s - p + ky;
                    for (std::int64_t kx = 0; kx < k; ++kx, ++r) {
                        const std::int64_t ix = ox * s - p + kx;
                        if (iy >= 0 && iy < H && ix >= 0 && ix < W) plane[iy * W + ix] += col[r];
                    }
                }
            }
        }
    }
}

} // namespace detail

inline Tensor conv2d_forward(const ConvSpec& cs, const Tensor& w, const Tensor& b,
                             const Tensor& x, ConvCache* cache) {
    if (x.rank() != 4 || x.dim(1) != cs.in_ch)
        throw DimensionError("conv2d: input shape " + x.shape_str());
    const std::int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::int64_t Ho = cs.out_dim(H), Wo = cs.out_dim(W);
    if (Ho <= 0 || Wo <= 0) throw DimensionError("conv2d: input too small");
    Tensor y({N, cs.out_ch, Ho, Wo});

    Eigen::MatrixXd cols;
    CMapRM wm(w.data(), cs.out_ch, cs.in_ch * cs.ksize * cs.ksize);
    for (std::int64_t n = 0; n < N; ++n) {
        detail::im2col(cs, x.data() + n * cs.in_ch * H * W, H, W, Ho, Wo, cols);
        MapRM ym(y.data() + n * cs.out_ch * Ho * Wo, cs.out_ch, Ho * Wo);
        ym.noalias() = wm * cols;
        for (std::int64_t co = 0; co < cs.out_ch; ++co) ym.row(co).array() += b[co];
    }
    if (cache) cache->input = x;
    return y;
}

/// Accumulates gw/gb and returns the input gradient when requested.
inline Tensor conv2d_backward(const ConvSpec& cs, const Tensor& w, const ConvCache& cache,
                              const Tensor& gy, Tensor* gw, Tensor* gb, bool need_input_grad) {
    const Tensor& x = cache.input;
    const std::int64_t N = x.dim(0), H = x.dim(2), W = x.dim(3);
    const std::int64_t Ho = gy.dim(2), Wo = gy.dim(3);

    Eigen::MatrixXd cols;
    Tensor gx;
    if (need_input_grad) gx = Tensor({N, cs.in_ch, H, W});
    CMapRM wm(w.data(), cs.out_ch, cs.in_ch * cs.ksize * cs.ksize);
    MapRM gwm(gw->data(), cs.out_ch, cs.in_ch * cs.ksize * cs.ksize);
    Eigen::MatrixXd colsg;
    for (std::int64_t n = 0; n < N; ++n) {
        detail::im2col(cs, x.data() + n * cs.in_ch * H * W, H, W, Ho, Wo, cols);
        CMapRM gym(gy.data() + n * cs.out_ch * Ho * Wo, cs.out_ch, Ho * Wo);
        gwm.noalias() += gym * cols.transpose();
        for (std::int64_t co = 0; co < cs.out_ch; ++co) (*gb)[co] += gym.row(co).sum();
        if (need_input_grad) {
            colsg.noalias() = wm.transpose() * gym;
            detail::col2im_add(cs, colsg, H, W, Ho, Wo,
                               gx.data() + n * cs.in_ch * H * W);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Instance normalization (per sample, per channel, affine)
// ---------------------------------------------------------------------------

inline constexpr double kInstNormEps = 1e-5;

struct InstanceNormCache {
    Tensor xhat;
    std::vector<double> invstd; // per (n, c)
};

inline Tensor instance_norm_forward(const Tensor& gamma, const Tensor& beta, const Tensor& x,
                                    InstanceNormCache* cache) {
    const std::int64_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    Tensor y(x.shape());
    Tensor xhat(x.shape());
    std::vector<double> invstd(static_cast<std::size_t>(N * C));
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xs = x.data() + (n * C + c) * HW;
            double mean = 0.0;
            for (std::int64_t i = 0; i < HW; ++i) mean += xs[i];
            mean /= static_cast<double>(HW);
            double var = 0.0;
            for (std::int64_t i = 0; i < HW; ++i) {
                const double d = xs[i] - mean;
                var += d * d;
            }
            var /= static_cast<double>(HW);
            const double is = 1.0 / std::sqrt(var + kInstNormEps);
            invstd[static_cast<std::size_t>(n * C + c)] = is;
            double* xh = xhat.data() + (n * C + c) * HW;
            double* ys = y.data() + (n * C + c) * HW;
            const double g = gamma[c], b = beta[c];
            for (std::int64_t i = 0; i < HW; ++i) {
                xh[i] = (xs[i] - mean) * is;
                ys[i] = g * xh[i] + b;
            }
        }
    }
    if (cache) {
        cache->xhat = std::move(xhat);
        cache->invstd = std::move(invstd);
    }
    return y;
}

inline Tensor instance_norm_backward(const Tensor& gamma, const InstanceNormCache& cache,
                                     const Tensor& gy, Tensor* ggamma, Tensor* gbeta) {
    const Tensor& xhat = cache.xhat;
    const std::int64_t N = gy.dim(0), C = gy.dim(1), HW = gy.dim(2) * gy.dim(3);
    Tensor gx(gy.shape());
    for (std::int64_t n = 0; n < N; ++n) {
        for (std::int64_t c = 0; c < C; ++c) {
            const double* gys = gy.data() + (n * C + c) * HW;
            const double* xh = xhat.data() + (n * C + c) * HW;
            double sum_gy = 0.0, sum_gy_xhat = 0.0;
            for (std::int64_t i = 0; i < HW; ++i) {
                sum_gy += gys[i];
                sum_gy_xhat += gys[i] * xh[i];
            }
            (*gbeta)[c] += sum_gy;
            (*ggamma)[c] += sum_gy_xhat;
            const double inv_n = 1.0 / static_cast<double>(HW);
            const double scale =
                gamma[c] * cache.invstd[static_cast<std::size_t>(n * C + c)];
            double* gxs = gx.data() + (n * C + c) * HW;
            for (std::int64_t i = 0; i < HW; ++i)
                gxs[i] = scale * (gys[i] - inv_n * sum_gy - xh[i] * inv_n * sum_gy_xhat);
        }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Activations
// ---------------------------------------------------------------------------

struct ActCache {
    Tensor ref; // input for (leaky) relu, output for tanh
};

inline Tensor leaky_relu_forward(const Tensor& x, double slope, ActCache* cache) {
    Tensor y(x.shape());
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : slope * x[i];
    if (cache) cache->ref = x;
    return y;
}

inline Tensor leaky_relu_backward(double slope, const ActCache& cache, const Tensor& gy) {
    Tensor gx(gy.shape());
    const std::int64_t n = gy.numel();
    for (std::int64_t i = 0; i < n; ++i) gx[i] = cache.ref[i] > 0.0 ? gy[i] : slope * gy[i];
    return gx;
}

inline Tensor tanh_forward(const Tensor& x, ActCache* cache) {
    Tensor y(x.shape());
    const std::int64_t n = x.numel();
    for (std::int64_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
    if (cache) cache->ref = y;
    return y;
}

inline Tensor tanh_backward(const ActCache& cache, const Tensor& gy) {
    Tensor gx(gy.shape());
    const std::int64_t n = gy.numel();
    for (std::int64_t i = 0; i < n; ++i) gx[i] = gy[i] * (1.0 - cache.ref[i] * cache.ref[i]);
    return gx;
}

// ---------------------------------------------------------------------------
// Fixed resampling
// ---------------------------------------------------------------------------

inline Tensor upsample2_nearest_forward(const Tensor& x) {
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor y({N, C, H * 2, W * 2});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const double* xs = x.data() + nc * H * W;
        double* ys = y.data() + nc * 4 * H * W;
        for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w) {
                const double v = xs[h * W + w];
                double* row0 = ys + (2 * h) * 2 * W + 2 * w;
                double* row1 = row0 + 2 * W;
                row0[0] = row0[1] = row1[0] = row1[1] = v;
            }
    }
    return y;
}

inline Tensor upsample2_nearest_backward(const Tensor& gy) {
    const std::int64_t N = gy.dim(0), C = gy.dim(1), H = gy.dim(2) / 2, W = gy.dim(3) / 2;
    Tensor gx({N, C, H, W});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const double* gs = gy.data() + nc * 4 * H * W;
        double* gd = gx.data() + nc * H * W;
        for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w) {
                const double* row0 = gs + (2 * h) * 2 * W + 2 * w;
                const double* row1 = row0 + 2 * W;
                gd[h * W + w] = row0[0] + row0[1] + row1[0] + row1[1];
            }
    }
    return gx;
}

inline Tensor avgpool2_forward(const Tensor& x) {
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (H % 2 || W % 2) throw DimensionError("avgpool2: spatial dims must be even");
    Tensor y({N, C, H / 2, W / 2});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const double* xs = x.data() + nc * H * W;
        double* ys = y.data() + nc * (H / 2) * (W / 2);
        for (std::int64_t h = 0; h < H / 2; ++h)
            for (std::int64_t w = 0; w < W / 2; ++w) {
                const double* row0 = xs + (2 * h) * W + 2 * w;
                const double* row1 = row0 + W;
                ys[h * (W / 2) + w] = 0.25 * (row0[0] + row0[1] + row1[0] + row1[1]);
            }
    }
    return y;
}

inline Tensor avgpool2_backward(const Tensor& gy, std::int64_t H, std::int64_t W) {
    const std::int64_t N = gy.dim(0), C = gy.dim(1);
    Tensor gx({N, C, H, W});
    for (std::int64_t nc = 0; nc < N * C; ++nc) {
        const double* gs = gy.data() + nc * (H / 2) * (W / 2);
        double* gd = gx.data() + nc * H * W;
        for (std::int64_t h = 0; h < H / 2; ++h)
            for (std::int64_t w = 0; w < W / 2; ++w) {
                const double v = 0.25 * gs[h * (W / 2) + w];
                double* row0 = gd + (2 * h) * W + 2 * w;
                double* row1 = row0 + W;
                row0[0] = row0[1] = row1[0] = row1[1] = v;
            }
    }
    return gx;
}

// ---------------------------------------------------------------------------
// Critic head: global average pool + affine map to one score per sample
// ---------------------------------------------------------------------------

struct HeadCache {
    Tensor pooled; // (N, C)
    std::int64_t H = 0, W = 0;
};

inline std::vector<double> head_forward(const Tensor& w, const Tensor& b, const Tensor& x,
                                        HeadCache* cache) {
    const std::int64_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    Tensor pooled({N, C});
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::int64_t n = 0; n < N; ++n)
        for (std::int64_t c = 0; c < C; ++c) {
            const double* xs = x.data() + (n * C + c) * H * W;
            double s = 0.0;
            for (std::int64_t i = 0; i < H * W; ++i) s += xs[i];
            pooled[n * C + c] = s * inv;
        }
    std::vector<double> scores(static_cast<std::size_t>(N));
    for (std::int64_t n = 0; n < N; ++n) {
        double s = b[0];
        for (std::int64_t c = 0; c < C; ++c) s += w[c] * pooled[n * C + c];
        scores[static_cast<std::size_t>(n)] = s;
    }
    if (cache) {
        cache->pooled = std::move(pooled);
        cache->H = H;
        cache->W = W;
    }
    return scores;
}

inline Tensor head_backward(const Tensor& w, const HeadCache& cache,
                            const std::vector<double>& gscores, Tensor* gw, Tensor* gb) {
    const std::int64_t N = cache.pooled.dim(0), C = cache.pooled.dim(1);
    const std::int64_t H = cache.H, W = cache.W;
    Tensor gx({N, C, H, W});
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::int64_t n = 0; n < N; ++n) {
        const double gs = gscores[static_cast<std::size_t>(n)];
        if (gb) (*gb)[0] += gs;
        for (std::int64_t c = 0; c < C; ++c) {
            if (gw) (*gw)[c] += gs * cache.pooled[n * C + c];
            const double v = gs * w[c] * inv;
            double* gd = gx.data() + (n * C + c) * H * W;
            for (std::int64_t i = 0; i < H * W; ++i) gd[i] = v;
        }
    }
    return gx;
}

} // namespace fginpaint::nn
