#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "fginpaint/adam.hpp"
#include "fginpaint/checkpoint.hpp"
#include "fginpaint/config.hpp"
#include "fginpaint/dataset.hpp"
#include "fginpaint/features.hpp"
#include "fginpaint/image.hpp"
#include "fginpaint/losses.hpp"
#include "fginpaint/net.hpp"
#include "fginpaint/png_io.hpp"

namespace fginpaint {

inline constexpr std::uint64_t kPerceptualSeed = 0x9e3779b97f4a7c15ULL;

struct StepLog {
    std::int64_t step = 0;
    LossBreakdown losses;
};

namespace detail {

inline ImageTensor gray_to_rgb(const ImageTensor& img) {
    if (img.channels == 3) return img;
    ImageTensor out(img.height, img.width, 3, img.range);
    for (std::int64_t h = 0; h < img.height; ++h)
        for (std::int64_t w = 0; w < img.width; ++w)
            for (std::int64_t c = 0; c < 3; ++c) out.at(h, w, c) = img.at(h, w, 0);
    return out;
}

inline void add_hwc_into_nchw(Tensor& batch, std::int64_t n, const Tensor& hwc, double scale) {
    const std::int64_t C = batch.dim(1), H = batch.dim(2), W = batch.dim(3);
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < W; ++w)
            for (std::int64_t c = 0; c < C; ++c)
                batch[((n * C + c) * H + h) * W + w] += scale * hwc[(h * W + w) * C + c];
}

inline std::string fmt_loss(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// One training sample resized to the run's resolution, network-ready.
struct PreparedSample {
    std::string id;
    ImageTensor gt_sym;
    ImageTensor masked_sym;
    ForegroundMask fg;
    HoleMask hole;
};

inline PreparedSample prepare_sample(const SamplePair& s, std::int64_t size) {
    PreparedSample p;
    p.id = s.id;
    ImageTensor img = detail::gray_to_rgb(s.image);
    if (img.height != size || img.width != size) img = resize_image(img, size, size);
    p.fg = (s.foreground.height == size && s.foreground.width == size)
               ? s.foreground
               : resize_mask(s.foreground, size, size);
    p.hole = (s.hole.height == size && s.hole.width == size) ? s.hole
                                                             : resize_mask(s.hole, size, size);
    p.gt_sym = to_range(img, ValueRange::symmetric);
    p.masked_sym = apply_hole_mask(p.gt_sym, p.hole);
    return p;
}

class Trainer {
  public:
    Trainer(RunConfig cfg, const std::vector<SamplePair>& samples)
        : cfg_(std::move(cfg)), fx_(kPerceptualSeed) {
        if (samples.empty()) throw IngestionError("trainer requires a nonempty dataset");
        for (const auto& s : samples) prepared_.push_back(prepare_sample(s, cfg_.image_size));
        params_ = init_params(cfg_.seed, cfg_.gspec(), cfg_.cspec());
    }

    const RunConfig& config() const { return cfg_; }
    const NetParams& params() const { return params_; }
    NetParams& mutable_params() { return params_; }
    std::int64_t step() const { return step_; }
    std::size_t sample_count() const { return prepared_.size(); }
    const PreparedSample& sample(std::size_t i) const { return prepared_[i]; }

    std::int64_t steps_per_epoch() const {
        const std::int64_t n = static_cast<std::int64_t>(prepared_.size());
        return (n + cfg_.batch_size - 1) / cfg_.batch_size;
    }

    /// Deterministic permutation of sample indices for one epoch.
    std::vector<std::size_t> epoch_order(std::int64_t epoch) const {
        std::vector<std::size_t> order(prepared_.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        Rng rng(mix64(mix64(cfg_.seed, fnv1a64("epoch_shuffle")),
                      static_cast<std::uint64_t>(epoch)));
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::uint64_t j = rng.uniform_int(0, static_cast<std::int64_t>(i) - 1);
            std::swap(order[i - 1], order[static_cast<std::size_t>(j)]);
        }
        return order;
    }

    std::vector<std::vector<std::size_t>> epoch_batches(std::int64_t epoch) const {
        const auto order = epoch_order(epoch);
        std::vector<std::vector<std::size_t>> batches;
        for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(cfg_.batch_size)) {
            const std::size_t end =
                std::min(order.size(), i + static_cast<std::size_t>(cfg_.batch_size));
            batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(i),
                                 order.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return batches;
    }

    /// Runs the critic updates then one generator update on the given
    /// samples. Throws NumericError with the offending term on any
    /// non-finite loss or gradient, leaving no partial logging behind.
    StepLog step_batch(const std::vector<std::size_t>& indices) {
        if (indices.empty()) throw ValueError("train step needs a nonempty batch");
        const std::int64_t N = static_cast<std::int64_t>(indices.size());
        const std::int64_t S = cfg_.image_size;
        const std::int64_t Cin = cfg_.gspec().in_channels();
        const std::int64_t next_step = step_ + 1;

        Tensor masked_batch({N, Cin, S, S});
        Tensor gt_batch({N, 3, S, S});
        for (std::int64_t n = 0; n < N; ++n) {
            const PreparedSample& p = prepared_[indices[static_cast<std::size_t>(n)]];
            for (std::int64_t h = 0; h < S; ++h)
                for (std::int64_t w = 0; w < S; ++w)
                    for (std::int64_t c = 0; c < 3; ++c) {
                        masked_batch[((n * Cin + c) * S + h) * S + w] = p.masked_sym.at(h, w, c);
                        gt_batch[((n * 3 + c) * S + h) * S + w] = p.gt_sym.at(h, w, c);
                    }
            if (cfg_.use_hole_channel)
                for (std::int64_t h = 0; h < S; ++h)
                    for (std::int64_t w = 0; w < S; ++w)
                        masked_batch[((n * Cin + 3) * S + h) * S + w] =
                            p.hole.at(h, w) ? 1.0 : 0.0;
        }

        GenCache gcache;
        const Tensor pred = generator_forward_batch(params_, masked_batch, &gcache);

        for (std::int64_t k = 0; k < cfg_.critic_steps_per_gen_step; ++k) {
            CriticCache cache_real, cache_fake;
            const auto real = critic_forward_batch(params_, gt_batch, &cache_real);
            const auto fake = critic_forward_batch(params_, pred, &cache_fake);
            const double loss_d = critic_loss(real, fake);
            if (!std::isfinite(loss_d))
                throw NumericError("step " + std::to_string(next_step) +
                                   ": non-finite critic loss");
            GradSet cg = GradSet::zeros_like(params_.critic);
            const std::vector<double> g_real(real.size(),
                                             -1.0 / static_cast<double>(real.size()));
            const std::vector<double> g_fake(fake.size(),
                                             1.0 / static_cast<double>(fake.size()));
            critic_backward_batch(params_, cache_real, g_real, &cg, false);
            critic_backward_batch(params_, cache_fake, g_fake, &cg, false);
            if (!cg.all_finite())
                throw NumericError("step " + std::to_string(next_step) +
                                   ": non-finite critic gradients");
            adam_step(params_.critic, cg, cfg_.adam_d());
            clip_params(params_.critic, cfg_.clip_value);
            last_critic_loss_ = loss_d;
        }

        CriticCache cache_adv;
        const auto adv_scores = critic_forward_batch(params_, pred, &cache_adv);

        LossWeights w = cfg_.weights();
        LossWeights w_recon = w;
        w_recon.lambda_adv = 0.0;
        const CompositeTarget target = cfg_.composite_target();
        const double inv_n = 1.0 / static_cast<double>(N);

        Tensor grad_pred(pred.shape());
        LossBreakdown bd;
        Tensor g_sample;
        for (std::int64_t n = 0; n < N; ++n) {
            const PreparedSample& p = prepared_[indices[static_cast<std::size_t>(n)]];
            const ImageTensor pred_i = nchw_to_image(pred, n, ValueRange::symmetric);
            const LossBreakdown bi =
                generator_total_loss(p.gt_sym, p.masked_sym, pred_i, p.fg, fx_, {}, w_recon,
                                     target, &g_sample);
            bd.l_cF += bi.l_cF * inv_n;
            bd.l_F += bi.l_F * inv_n;
            bd.l_pF += bi.l_pF * inv_n;
            detail::add_hwc_into_nchw(grad_pred, n, g_sample, inv_n);
        }
        bd.l_adv = generator_adv_loss(adv_scores);
        bd.total = w.lambda_cF * bd.l_cF + w.lambda_F * bd.l_F + w.lambda_pF * bd.l_pF +
                   w.lambda_adv * bd.l_adv;
        for (double v : {bd.l_cF, bd.l_F, bd.l_pF, bd.l_adv})
            if (!std::isfinite(v))
                throw NumericError("step " + std::to_string(next_step) +
                                   ": non-finite generator loss term (cF=" +
                                   std::to_string(bd.l_cF) + " F=" + std::to_string(bd.l_F) +
                                   " pF=" + std::to_string(bd.l_pF) + " adv=" +
                                   std::to_string(bd.l_adv) + ")");

        if (w.lambda_adv != 0.0) {
            const std::vector<double> g_scores(adv_scores.size(),
                                               -w.lambda_adv /
                                                   static_cast<double>(adv_scores.size()));
            const Tensor g_adv = critic_backward_batch(params_, cache_adv, g_scores, nullptr,
                                                       true);
            grad_pred.axpy(1.0, g_adv);
        }

        GradSet gg = GradSet::zeros_like(params_.gen);
        generator_backward_batch(params_, gcache, grad_pred, gg);
        if (!gg.all_finite())
            throw NumericError("step " + std::to_string(next_step) +
                               ": non-finite generator gradients");
        adam_step(params_.gen, gg, cfg_.adam_g());
        if (!params_.gen.all_finite() || !params_.critic.all_finite())
            throw NumericError("step " + std::to_string(next_step) +
                               ": non-finite parameters after update");

        step_ = next_step;
        return StepLog{step_, bd};
    }

    double last_critic_loss() const { return last_critic_loss_; }

    /// Resumes from cfg.resume when set, then runs the epoch loop with CSV
    /// logging, periodic checkpoints, and per-epoch sample grids. Returns the
    /// final checkpoint path.
    std::filesystem::path run() {
        namespace fs = std::filesystem;
        fs::create_directories(cfg_.out_dir);
        fs::create_directories(fs::path(cfg_.out_dir) / "samples");

        if (!cfg_.resume.empty()) {
            Checkpoint ck = load_checkpoint(cfg_.resume);
            check_checkpoint_specs(ck, cfg_.gspec(), cfg_.cspec());
            params_ = std::move(ck.params);
            step_ = ck.step;
        }

        const fs::path csv_path = fs::path(cfg_.out_dir) / "losses.csv";
        std::ofstream csv = open_loss_csv(csv_path);

        const std::int64_t spe = steps_per_epoch();
        std::int64_t epoch = step_ / spe;
        std::int64_t offset = step_ % spe;
        bool done = false;
        while (!done && epoch < cfg_.epochs) {
            const auto batches = epoch_batches(epoch);
            for (std::size_t b = static_cast<std::size_t>(offset); b < batches.size(); ++b) {
                if (cfg_.max_steps > 0 && step_ >= cfg_.max_steps) {
                    done = true;
                    break;
                }
                const StepLog log = step_batch(batches[b]);
                csv << log.step << ',' << detail::fmt_loss(log.losses.l_cF) << ','
                    << detail::fmt_loss(log.losses.l_F) << ','
                    << detail::fmt_loss(log.losses.l_pF) << ','
                    << detail::fmt_loss(log.losses.l_adv) << ','
                    << detail::fmt_loss(log.losses.total) << '\n';
                csv.flush();
                epoch_loss_sum_ += log.losses.total;
                ++epoch_loss_count_;
                if (step_ % cfg_.checkpoint_every == 0)
                    save_checkpoint(step_checkpoint_path(step_), params_, step_);
            }
            offset = 0;
            if (!done) {
                write_sample_grid(epoch);
                if (epoch_loss_count_ > 0) {
                    std::printf("epoch %lld  step %lld  mean total loss %.6f\n",
                                static_cast<long long>(epoch), static_cast<long long>(step_),
                                epoch_loss_sum_ / static_cast<double>(epoch_loss_count_));
                    std::fflush(stdout);
                }
                epoch_loss_sum_ = 0.0;
                epoch_loss_count_ = 0;
                ++epoch;
            }
        }

        const fs::path final_path = fs::path(cfg_.out_dir) / "ckpt_final.ckpt";
        save_checkpoint(final_path, params_, step_);
        return final_path;
    }

    std::filesystem::path step_checkpoint_path(std::int64_t step) const {
        char name[40];
        std::snprintf(name, sizeof name, "ckpt_step_%06lld.ckpt",
                      static_cast<long long>(step));
        return std::filesystem::path(cfg_.out_dir) / name;
    }

    /// Rows: masked input, prediction, composite, ground truth.
    void write_sample_grid(std::int64_t epoch) {
        const std::size_t rows = std::min<std::size_t>(prepared_.size(), 4);
        const std::int64_t S = cfg_.image_size;
        ImageTensor grid(static_cast<std::int64_t>(rows) * S, 4 * S, 3, ValueRange::unit);
        for (std::size_t r = 0; r < rows; ++r) {
            const PreparedSample& p = prepared_[r];
            const ImageTensor pred_sym = predict(p);
            const ImageTensor cols[4] = {
                to_range(p.masked_sym, ValueRange::unit),
                to_range(pred_sym, ValueRange::unit),
                composite_output(to_range(p.gt_sym, ValueRange::unit),
                                 to_range(pred_sym, ValueRange::unit), p.hole),
                to_range(p.gt_sym, ValueRange::unit)};
            for (int col = 0; col < 4; ++col)
                for (std::int64_t h = 0; h < S; ++h)
                    for (std::int64_t w = 0; w < S; ++w)
                        for (std::int64_t c = 0; c < 3; ++c)
                            grid.at(static_cast<std::int64_t>(r) * S + h, col * S + w, c) =
                                cols[col].at(h, w, c);
        }
        char name[40];
        std::snprintf(name, sizeof name, "epoch_%04lld.png", static_cast<long long>(epoch));
        write_image_png(std::filesystem::path(cfg_.out_dir) / "samples" / name, grid);
    }

    /// Generator output for one prepared sample, in symmetric range.
    ImageTensor predict(const PreparedSample& p) const {
        const std::int64_t S = cfg_.image_size;
        const std::int64_t Cin = cfg_.gspec().in_channels();
        Tensor x({1, Cin, S, S});
        for (std::int64_t h = 0; h < S; ++h)
            for (std::int64_t w = 0; w < S; ++w) {
                for (std::int64_t c = 0; c < 3; ++c)
                    x[(c * S + h) * S + w] = p.masked_sym.at(h, w, c);
                if (cfg_.use_hole_channel)
                    x[(3 * S + h) * S + w] = p.hole.at(h, w) ? 1.0 : 0.0;
            }
        const Tensor y = generator_forward_batch(params_, x, nullptr);
        return nchw_to_image(y, 0, ValueRange::symmetric);
    }

  private:
    std::ofstream open_loss_csv(const std::filesystem::path& path) {
        namespace fs = std::filesystem;
        if (step_ > 0 && fs::exists(path)) {
            // Keep rows up to the resume step so numbering stays gap-free.
            std::ifstream in(path);
            std::vector<std::string> keep;
            std::string line;
            while (std::getline(in, line)) {
                if (line.rfind("step,", 0) == 0) {
                    keep.push_back(line);
                    continue;
                }
                const std::size_t comma = line.find(',');
                if (comma == std::string::npos) continue;
                const std::int64_t s = std::strtoll(line.c_str(), nullptr, 10);
                if (s <= step_ && s > 0) keep.push_back(line);
            }
            in.close();
            std::ofstream out(path, std::ios::trunc);
            if (keep.empty() || keep[0].rfind("step,", 0) != 0)
                out << "step,l_cF,l_F,l_pF,l_adv,total\n";
            for (const auto& l : keep) out << l << '\n';
            out.close();
            std::ofstream app(path, std::ios::app);
            if (!app) throw IoError("cannot open " + path.string());
            return app;
        }
        std::ofstream out(path, std::ios::trunc);
        if (!out) throw IoError("cannot open " + path.string());
        out << "step,l_cF,l_F,l_pF,l_adv,total\n";
        return out;
    }

    RunConfig cfg_;
    FixedConvExtractor fx_;
    std::vector<PreparedSample> prepared_;
    NetParams params_;
    std::int64_t step_ = 0;
    double last_critic_loss_ = 0.0;
    double epoch_loss_sum_ = 0.0;
    std::int64_t epoch_loss_count_ = 0;
};

inline std::filesystem::path train(const RunConfig& cfg) {
    auto samples = load_dataset(cfg.data_root, Split::train, cfg.seed);
    if (samples.empty())
        throw IngestionError("dataset at " + cfg.data_root + " has no images");
    Trainer trainer(cfg, samples);
    return trainer.run();
}

/// Loads a checkpoint and inpaints one image. With composite on, pixels the
/// hole mask marks valid are copied through from the input bit-exactly.
inline void infer(const std::filesystem::path& ckpt_path,
                  const std::filesystem::path& image_path,
                  const std::filesystem::path& hole_path,
                  const std::filesystem::path& out_path, bool composite) {
    const Checkpoint ck = load_checkpoint(ckpt_path);
    const GeneratorSpec& gs = ck.params.gspec;

    ImageTensor input = detail::gray_to_rgb(read_png_image(image_path, ValueRange::unit));
    HoleMask hole = read_hole_mask_png(hole_path);
    if (hole.height != input.height || hole.width != input.width)
        hole = resize_mask(hole, input.height, input.width);
    if (input.height % gs.divisor() || input.width % gs.divisor())
        throw DimensionError("input dims must be divisible by " +
                             std::to_string(gs.divisor()));

    const ImageTensor gt_sym = to_range(input, ValueRange::symmetric);
    const ImageTensor masked_sym = apply_hole_mask(gt_sym, hole);
    const std::int64_t H = input.height, W = input.width;
    const std::int64_t Cin = gs.in_channels();
    Tensor x({1, Cin, H, W});
    for (std::int64_t h = 0; h < H; ++h)
        for (std::int64_t w = 0; w < W; ++w) {
            for (std::int64_t c = 0; c < 3; ++c)
                x[(c * H + h) * W + w] = masked_sym.at(h, w, c);
            if (gs.hole_channel) x[(3 * H + h) * W + w] = hole.at(h, w) ? 1.0 : 0.0;
        }
    const Tensor y = generator_forward_batch(ck.params, x, nullptr);
    const ImageTensor pred_unit =
        to_range(nchw_to_image(y, 0, ValueRange::symmetric), ValueRange::unit);

    const ImageTensor out =
        composite ? composite_output(input, pred_unit, hole) : pred_unit;
    write_image_png(out_path, out);
}

} // namespace fginpaint
