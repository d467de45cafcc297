#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include <nlohmann/json.hpp>

#include "fginpaint/embedding.hpp"
#include "fginpaint/errors.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/png_io.hpp"
#include "fginpaint/rng.hpp"

namespace fginpaint {

// ---------------------------------------------------------------------------
// Pixel metrics, computed on images in [0,1]
// ---------------------------------------------------------------------------

namespace detail {

inline void check_metric_inputs(const ImageTensor& gt, const ImageTensor& pred,
                                const ForegroundMask* scope) {
    if (!gt.same_shape(pred)) throw DimensionError("metric: image shapes differ");
    if (gt.range != ValueRange::unit || pred.range != ValueRange::unit)
        throw ValueError("metric inputs must be in unit range");
    if (scope) {
        if (scope->height != gt.height || scope->width != gt.width)
            throw DimensionError("metric: scope mask shape differs from images");
        if (!scope->any()) throw ValueError("metric: scope mask excludes every pixel");
    }
}

} // namespace detail

inline double mse(const ImageTensor& gt, const ImageTensor& pred,
                  const ForegroundMask* scope = nullptr) {
    detail::check_metric_inputs(gt, pred, scope);
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::int64_t h = 0; h < gt.height; ++h)
        for (std::int64_t w = 0; w < gt.width; ++w) {
            if (scope && !scope->at(h, w)) continue;
            for (std::int64_t c = 0; c < gt.channels; ++c) {
                const double d = gt.at(h, w, c) - pred.at(h, w, c);
                acc += d * d;
                ++count;
            }
        }
    return acc / static_cast<double>(count);
}

inline double mae(const ImageTensor& gt, const ImageTensor& pred,
                  const ForegroundMask* scope = nullptr) {
    detail::check_metric_inputs(gt, pred, scope);
    double acc = 0.0;
    std::int64_t count = 0;
    for (std::int64_t h = 0; h < gt.height; ++h)
        for (std::int64_t w = 0; w < gt.width; ++w) {
            if (scope && !scope->at(h, w)) continue;
            for (std::int64_t c = 0; c < gt.channels; ++c) {
                acc += std::abs(gt.at(h, w, c) - pred.at(h, w, c));
                ++count;
            }
        }
    return acc / static_cast<double>(count);
}

inline double psnr(const ImageTensor& gt, const ImageTensor& pred,
                   const ForegroundMask* scope = nullptr) {
    const double m = mse(gt, pred, scope);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(1.0 / m);
}

// ---------------------------------------------------------------------------
// SSIM (11x11 Gaussian window, sigma 1.5, unit dynamic range)
// ---------------------------------------------------------------------------

inline constexpr std::int64_t kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

namespace detail {

inline std::vector<double> ssim_kernel() {
    std::vector<double> k(kSsimWindow);
    const double center = (kSsimWindow - 1) / 2.0;
    double sum = 0.0;
    for (std::int64_t i = 0; i < kSsimWindow; ++i) {
        const double d = static_cast<double>(i) - center;
        k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
        sum += k[static_cast<std::size_t>(i)];
    }
    for (double& v : k) v /= sum;
    return k;
}

/// Valid-region separable Gaussian filter: rows first, then columns.
/// Input is H x W, output is (H-10) x (W-10).
inline std::vector<double> gauss_valid(const std::vector<double>& in, std::int64_t H,
                                       std::int64_t W, const std::vector<double>& k) {
    const std::int64_t Wo = W - kSsimWindow + 1;
    const std::int64_t Ho = H - kSsimWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(H * Wo));
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < Wo; ++w) {
            double s = 0.0;
            for (std::int64_t i = 0; i < kSsimWindow; ++i)
                s += k[static_cast<std::size_t>(i)] * in[static_cast<std::size_t>(h * W + w + i)];
            tmp[static_cast<std::size_t>(h * Wo + w)] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(Ho * Wo));
    for (std::int64_t h = 0; h < Ho; ++h)
        for (std::int64_t w = 0; w < Wo; ++w) {
            double s = 0.0;
            for (std::int64_t i = 0; i < kSsimWindow; ++i)
                s += k[static_cast<std::size_t>(i)] *
                     tmp[static_cast<std::size_t>((h + i) * Wo + w)];
            out[static_cast<std::size_t>(h * Wo + w)] = s;
        }
    return out;
}

} // namespace detail

/// Mean local SSIM over fully interior windows, averaged across channels.
/// With a scope mask, only windows whose center pixel is in scope count.
inline double ssim(const ImageTensor& gt, const ImageTensor& pred,
                   const ForegroundMask* scope = nullptr) {
    detail::check_metric_inputs(gt, pred, scope);
    const std::int64_t H = gt.height, W = gt.width, C = gt.channels;
    if (H < kSsimWindow || W < kSsimWindow)
        throw DimensionError("ssim: image smaller than the 11x11 window");
    const auto k = detail::ssim_kernel();
    const std::int64_t Ho = H - kSsimWindow + 1, Wo = W - kSsimWindow + 1;
    const std::int64_t r = (kSsimWindow - 1) / 2;

    double acc = 0.0;
    std::int64_t count = 0;
    std::vector<double> x(static_cast<std::size_t>(H * W)), y(static_cast<std::size_t>(H * W));
    std::vector<double> xx(x.size()), yy(x.size()), xy(x.size());
    for (std::int64_t c = 0; c < C; ++c) {
        for (std::int64_t h = 0; h < H; ++h)
            for (std::int64_t w = 0; w < W; ++w) {
                const double a = gt.at(h, w, c), b = pred.at(h, w, c);
                const std::size_t i = static_cast<std::size_t>(h * W + w);
                x[i] = a;
                y[i] = b;
                xx[i] = a * a;
                yy[i] = b * b;
                xy[i] = a * b;
            }
        const auto mx = detail::gauss_valid(x, H, W, k);
        const auto my = detail::gauss_valid(y, H, W, k);
        const auto mxx = detail::gauss_valid(xx, H, W, k);
        const auto myy = detail::gauss_valid(yy, H, W, k);
        const auto mxy = detail::gauss_valid(xy, H, W, k);
        for (std::int64_t h = 0; h < Ho; ++h)
            for (std::int64_t w = 0; w < Wo; ++w) {
                if (scope && !scope->at(h + r, w + r)) continue;
                const std::size_t i = static_cast<std::size_t>(h * Wo + w);
                const double vx = mxx[i] - mx[i] * mx[i];
                const double vy = myy[i] - my[i] * my[i];
                const double cv = mxy[i] - mx[i] * my[i];
                const double num = (2.0 * mx[i] * my[i] + kSsimC1) * (2.0 * cv + kSsimC2);
                const double den =
                    (mx[i] * mx[i] + my[i] * my[i] + kSsimC1) * (vx + vy + kSsimC2);
                acc += num / den;
                ++count;
            }
    }
    if (count == 0) throw ValueError("ssim: scope mask excludes every window center");
    return acc / static_cast<double>(count);
}

// ---------------------------------------------------------------------------
// FID
// ---------------------------------------------------------------------------

namespace detail {

/// Trace of the principal square root of (cov_a · cov_b), via the symmetric
/// product sqrt(A)·B·sqrt(A). Negative eigenvalues from roundoff clamp to 0.
inline double trace_sqrt_product(const Eigen::MatrixXd& cov_a, const Eigen::MatrixXd& cov_b) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_a(cov_a);
    Eigen::VectorXd ev_a = es_a.eigenvalues();
    for (Eigen::Index i = 0; i < ev_a.size(); ++i) ev_a[i] = std::sqrt(std::max(ev_a[i], 0.0));
    const Eigen::MatrixXd sqrt_a =
        es_a.eigenvectors() * ev_a.asDiagonal() * es_a.eigenvectors().transpose();
    const Eigen::MatrixXd m = sqrt_a * cov_b * sqrt_a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es_m(0.5 * (m + m.transpose()));
    double tr = 0.0;
    for (Eigen::Index i = 0; i < es_m.eigenvalues().size(); ++i)
        tr += std::sqrt(std::max(es_m.eigenvalues()[i], 0.0));
    return tr;
}

} // namespace detail

inline double frechet_distance(const Eigen::VectorXd& mu_a, const Eigen::MatrixXd& cov_a,
                               const Eigen::VectorXd& mu_b, const Eigen::MatrixXd& cov_b) {
    if (mu_a.size() != mu_b.size() || cov_a.rows() != mu_a.size() ||
        cov_b.rows() != mu_b.size() || cov_a.rows() != cov_a.cols() ||
        cov_b.rows() != cov_b.cols())
        throw DimensionError("frechet_distance: dimension mismatch");
    const double mean_term = (mu_a - mu_b).squaredNorm();
    const double tr_term =
        cov_a.trace() + cov_b.trace() - 2.0 * detail::trace_sqrt_product(cov_a, cov_b);
    return mean_term + tr_term;
}

inline double fid_from_embeddings(const std::vector<std::vector<double>>& a,
                                  const std::vector<std::vector<double>>& b) {
    if (a.size() < 2 || b.size() < 2)
        throw ValueError("fid: each set needs at least 2 embeddings");
    const std::int64_t d = static_cast<std::int64_t>(a[0].size());
    auto stats = [d](const std::vector<std::vector<double>>& set) {
        Eigen::MatrixXd m(set.size(), d);
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (static_cast<std::int64_t>(set[i].size()) != d)
                throw DimensionError("fid: ragged embedding set");
            for (std::int64_t j = 0; j < d; ++j) {
                if (!std::isfinite(set[i][static_cast<std::size_t>(j)]))
                    throw NumericError("fid: non-finite embedding");
                m(static_cast<Eigen::Index>(i), j) = set[i][static_cast<std::size_t>(j)];
            }
        }
        Eigen::VectorXd mu = m.colwise().mean();
        Eigen::MatrixXd centered = m.rowwise() - mu.transpose();
        Eigen::MatrixXd cov =
            centered.transpose() * centered / static_cast<double>(set.size() - 1);
        return std::make_pair(mu, cov);
    };
    const auto [mu_a, cov_a] = stats(a);
    const auto [mu_b, cov_b] = stats(b);
    return frechet_distance(mu_a, cov_a, mu_b, cov_b);
}

/// Embeds both image sets (optionally multiplied by per-image scope masks
/// first) and returns the Fréchet distance between their Gaussian fits.
inline double fid(const std::vector<ImageTensor>& set_a, const std::vector<ImageTensor>& set_b,
                  const EmbeddingBackend& backend,
                  const std::vector<ForegroundMask>* masks_a = nullptr,
                  const std::vector<ForegroundMask>* masks_b = nullptr) {
    auto embed_set = [&backend](const std::vector<ImageTensor>& set,
                                const std::vector<ForegroundMask>* masks) {
        if (masks && masks->size() != set.size())
            throw DimensionError("fid: one scope mask per image required");
        std::vector<std::vector<double>> out;
        out.reserve(set.size());
        for (std::size_t i = 0; i < set.size(); ++i) {
            if (!masks) {
                out.push_back(backend.embed(set[i]));
                continue;
            }
            const ForegroundMask& m = (*masks)[i];
            if (m.height != set[i].height || m.width != set[i].width)
                throw DimensionError("fid: scope mask shape differs from image");
            ImageTensor masked = set[i];
            for (std::int64_t h = 0; h < masked.height; ++h)
                for (std::int64_t w = 0; w < masked.width; ++w)
                    if (!m.at(h, w))
                        for (std::int64_t c = 0; c < masked.channels; ++c)
                            masked.at(h, w, c) = 0.0;
            out.push_back(backend.embed(masked));
        }
        return out;
    };
    return fid_from_embeddings(embed_set(set_a, masks_a), embed_set(set_b, masks_b));
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

enum class MetricScope { global, foreground };

inline const char* scope_name(MetricScope s) {
    return s == MetricScope::global ? "global" : "foreground";
}

struct PerImageMetrics {
    double mse = 0.0;
    double mae = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

struct MetricReport {
    MetricScope scope = MetricScope::global;
    std::vector<std::pair<std::string, PerImageMetrics>> per_image;
    PerImageMetrics aggregate;
    double fid = 0.0;
    std::string backend;
};

struct EvaluateResult {
    MetricReport global;
    std::optional<MetricReport> foreground;
};

namespace detail {

inline PerImageMetrics mean_metrics(const std::vector<std::pair<std::string, PerImageMetrics>>& rows) {
    PerImageMetrics agg;
    for (const auto& [id, m] : rows) {
        agg.mse += m.mse;
        agg.mae += m.mae;
        agg.psnr += m.psnr;
        agg.ssim += m.ssim;
    }
    const double n = static_cast<double>(rows.size());
    agg.mse /= n;
    agg.mae /= n;
    agg.psnr /= n;
    agg.ssim /= n;
    return agg;
}

inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Computes matched per-image metrics plus set-level FID over two directories
/// of PNGs with equal id sets, and a foreground-scoped report when a mask
/// directory is given.
inline EvaluateResult evaluate_pairs(const std::filesystem::path& dir_gt,
                                     const std::filesystem::path& dir_pred,
                                     const std::optional<std::filesystem::path>& dir_fg,
                                     const EmbeddingBackend& backend) {
    namespace fs = std::filesystem;
    auto list_ids = [](const fs::path& dir) {
        if (!fs::is_directory(dir))
            throw IngestionError("not a directory: " + dir.string());
        std::vector<std::string> ids;
        for (const auto& e : fs::directory_iterator(dir))
            if (e.is_regular_file() && e.path().extension() == ".png")
                ids.push_back(e.path().stem().string());
        std::sort(ids.begin(), ids.end());
        return ids;
    };
    const auto ids_gt = list_ids(dir_gt);
    const auto ids_pred = list_ids(dir_pred);
    if (ids_gt != ids_pred) {
        std::string msg = "id mismatch between directories;";
        for (const auto& id : ids_gt)
            if (!std::binary_search(ids_pred.begin(), ids_pred.end(), id))
                msg += " missing-from-pred:" + id;
        for (const auto& id : ids_pred)
            if (!std::binary_search(ids_gt.begin(), ids_gt.end(), id))
                msg += " missing-from-gt:" + id;
        throw IngestionError(msg);
    }
    if (ids_gt.empty()) throw IngestionError("no PNG files in " + dir_gt.string());

    std::vector<ImageTensor> gts, preds;
    std::vector<ForegroundMask> fgs;
    for (const auto& id : ids_gt) {
        ImageTensor g = read_png_image(dir_gt / (id + ".png"), ValueRange::unit);
        ImageTensor p = read_png_image(dir_pred / (id + ".png"), ValueRange::unit);
        if (!g.same_shape(p))
            throw IngestionError("image shape mismatch for id " + id);
        if (dir_fg) {
            ForegroundMask m = read_foreground_mask_png(*dir_fg / (id + ".png"));
            if (m.height != g.height || m.width != g.width)
                m = resize_mask(m, g.height, g.width);
            fgs.push_back(std::move(m));
        }
        gts.push_back(std::move(g));
        preds.push_back(std::move(p));
    }

    EvaluateResult result;
    result.global.scope = MetricScope::global;
    result.global.backend = backend.name();
    for (std::size_t i = 0; i < gts.size(); ++i) {
        PerImageMetrics m;
        m.mse = mse(gts[i], preds[i]);
        m.mae = mae(gts[i], preds[i]);
        m.psnr = psnr(gts[i], preds[i]);
        m.ssim = ssim(gts[i], preds[i]);
        result.global.per_image.emplace_back(ids_gt[i], m);
    }
    result.global.aggregate = detail::mean_metrics(result.global.per_image);
    result.global.fid = fid(gts, preds, backend);

    if (dir_fg) {
        MetricReport fg_report;
        fg_report.scope = MetricScope::foreground;
        fg_report.backend = backend.name();
        for (std::size_t i = 0; i < gts.size(); ++i) {
            PerImageMetrics m;
            m.mse = mse(gts[i], preds[i], &fgs[i]);
            m.mae = mae(gts[i], preds[i], &fgs[i]);
            m.psnr = psnr(gts[i], preds[i], &fgs[i]);
            m.ssim = ssim(gts[i], preds[i], &fgs[i]);
            fg_report.per_image.emplace_back(ids_gt[i], m);
        }
        fg_report.aggregate = detail::mean_metrics(fg_report.per_image);
        fg_report.fid = fid(gts, preds, backend, &fgs, &fgs);
        result.foreground = std::move(fg_report);
    }
    return result;
}

/// CSV layout: per-image rows leave the set-level fid column empty; the final
/// aggregate row carries the mean metrics plus fid.
inline void write_report_csv(const std::filesystem::path& path, const MetricReport& report) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "id,mse,mae,psnr,ssim,fid\n";
    for (const auto& [id, m] : report.per_image)
        out << id << ',' << detail::fmt_double(m.mse) << ',' << detail::fmt_double(m.mae) << ','
            << detail::fmt_double(m.psnr) << ',' << detail::fmt_double(m.ssim) << ",\n";
    const auto& a = report.aggregate;
    out << "aggregate," << detail::fmt_double(a.mse) << ',' << detail::fmt_double(a.mae) << ','
        << detail::fmt_double(a.psnr) << ',' << detail::fmt_double(a.ssim) << ','
        << detail::fmt_double(report.fid) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

inline void write_report_json(const std::filesystem::path& path, const EvaluateResult& result) {
    auto as_json_number = [](double v) -> nlohmann::json {
        if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
        return v;
    };
    auto report_json = [&](const MetricReport& r) {
        nlohmann::json j;
        j["scope"] = scope_name(r.scope);
        j["aggregate"] = {{"mse", as_json_number(r.aggregate.mse)},
                          {"mae", as_json_number(r.aggregate.mae)},
                          {"psnr", as_json_number(r.aggregate.psnr)},
                          {"ssim", as_json_number(r.aggregate.ssim)},
                          {"fid", as_json_number(r.fid)}};
        return j;
    };
    std::string id_blob = result.global.backend;
    for (const auto& [id, m] : result.global.per_image) id_blob += ";" + id;

    nlohmann::json j;
    j["backend"] = result.global.backend;
    j["count"] = result.global.per_image.size();
    char hash[20];
    std::snprintf(hash, sizeof hash, "%016llx",
                  static_cast<unsigned long long>(fnv1a64(id_blob)));
    j["config_hash"] = hash;
    j["global"] = report_json(result.global);
    if (result.foreground) j["foreground"] = report_json(*result.foreground);

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

} // namespace fginpaint
