#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "fginpaint/fginpaint.hpp"

namespace fs = std::filesystem;
using namespace fginpaint;

namespace {

/// Registers one --key flag (plus a dashed alias) that records its value
/// into the override list in the order given on the command line.
void add_config_flag(CLI::App* cmd, std::vector<std::pair<std::string, std::string>>* sink,
                     const std::string& key) {
    std::string names = "--" + key;
    std::string dashed = key;
    for (char& c : dashed)
        if (c == '_') c = '-';
    if (dashed != key) names += ",--" + dashed;
    cmd->add_option_function<std::string>(
        names, [sink, key](const std::string& v) { sink->emplace_back(key, v); },
        "override config key " + key);
}

int run_train(const std::string& config_path,
              const std::vector<std::pair<std::string, std::string>>& overrides) {
    std::vector<std::pair<std::string, std::string>> file_entries;
    if (!config_path.empty()) file_entries = parse_config_file(config_path);
    RunConfig cfg = make_run_config(file_entries, overrides);
    cfg.validate();
    if (cfg.data_root.empty()) throw ConfigError("data_root is required");
    const fs::path final_ckpt = train(cfg);
    std::printf("final checkpoint: %s\n", final_ckpt.string().c_str());
    return 0;
}

int run_gen_masks(std::int64_t n, std::int64_t h, std::int64_t w, std::uint64_t seed,
                  const std::string& out_dir) {
    fs::create_directories(out_dir);
    StrokeConfig cfg = StrokeConfig::defaults_for(h, w);
    cfg.validate();
    for (std::int64_t i = 0; i < n; ++i) {
        const HoleMask mask = generate_freeform_mask(mix64(seed, static_cast<std::uint64_t>(i)),
                                                     h, w, cfg);
        char name[32];
        std::snprintf(name, sizeof name, "mask_%06lld.png", static_cast<long long>(i));
        write_mask_png(fs::path(out_dir) / name, mask);
    }
    std::printf("wrote %lld masks to %s\n", static_cast<long long>(n), out_dir.c_str());
    return 0;
}

int run_make_foreground(const std::string& attrs_dir, const std::string& labels_path,
                        const std::string& out_dir) {
    std::ifstream in(labels_path);
    if (!in) throw IoError("cannot open " + labels_path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("bad labels file: ") + e.what());
    }
    std::map<std::string, int> label_of;
    for (const auto& [name, value] : j.items()) {
        if (!value.is_number_integer())
            throw IngestionError("label '" + name + "' must map to an integer");
        label_of[name] = value.get<int>();
    }

    fs::create_directories(out_dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(attrs_dir))
        if (e.is_regular_file() && e.path().extension() == ".png") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IngestionError("no PNG label maps in " + attrs_dir);

    for (const auto& file : files) {
        const Png8 p = read_png_labels(file);
        AttributeMap attrs;
        attrs.height = p.height;
        attrs.width = p.width;
        attrs.labels.assign(p.pixels.begin(), p.pixels.end());
        attrs.label_of = label_of;
        attrs.validate();
        const ForegroundMask fg = foreground_from_attributes(attrs);
        write_mask_png(fs::path(out_dir) / file.filename(), fg);
    }
    std::printf("wrote %zu foreground masks to %s\n", files.size(), out_dir.c_str());
    return 0;
}

int run_evaluate(const std::string& gt, const std::string& pred, const std::string& fg,
                 const std::string& backend_name, const std::string& out_dir) {
    if (backend_name != "testconv64")
        throw ConfigError("unknown embedding backend '" + backend_name +
                          "' (available: testconv64)");
    TestConvEmbedding backend;
    std::optional<fs::path> fg_dir;
    if (!fg.empty()) fg_dir = fg;
    const EvaluateResult result = evaluate_pairs(gt, pred, fg_dir, backend);

    fs::create_directories(out_dir);
    write_report_csv(fs::path(out_dir) / "report_global.csv", result.global);
    if (result.foreground)
        write_report_csv(fs::path(out_dir) / "report_foreground.csv", *result.foreground);
    write_report_json(fs::path(out_dir) / "report.json", result);

    auto print_report = [](const MetricReport& r) {
        std::printf("%s: mse %.6g  mae %.6g  psnr %.6g  ssim %.6g  fid %.6g\n",
                    scope_name(r.scope), r.aggregate.mse, r.aggregate.mae, r.aggregate.psnr,
                    r.aggregate.ssim, r.fid);
    };
    print_report(result.global);
    if (result.foreground) print_report(*result.foreground);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"foreground-guided facial inpainting toolkit"};
    app.require_subcommand(1);

    auto* train_cmd = app.add_subcommand("train", "train a model from a run config");
    std::string config_path;
    train_cmd->add_option("--config", config_path, "flat key = value config file");
    std::vector<std::pair<std::string, std::string>> overrides;
    for (const char* key :
         {"image_size", "batch_size", "epochs", "max_steps", "lr_g", "lr_d", "beta1", "beta2",
          "seed", "lambda_cF", "lambda_F", "lambda_pF", "lambda_adv", "cF_target",
          "critic_steps_per_gen_step", "clip_value", "data_root", "out_dir", "resume",
          "checkpoint_every", "desk_scale", "depth", "base_channels", "critic_depth",
          "critic_base_channels", "use_hole_channel"})
        add_config_flag(train_cmd, &overrides, key);

    auto* infer_cmd = app.add_subcommand("infer", "inpaint one image with a checkpoint");
    std::string ckpt, image_path, hole_path, out_path;
    bool no_composite = false;
    infer_cmd->add_option("--ckpt", ckpt, "checkpoint file")->required();
    infer_cmd->add_option("--image", image_path, "input image PNG")->required();
    infer_cmd->add_option("--hole", hole_path, "hole mask PNG (255 = valid)")->required();
    infer_cmd->add_option("--out", out_path, "output PNG")->required();
    infer_cmd->add_flag("--no-composite", no_composite,
                        "write the raw prediction instead of the composite");

    auto* eval_cmd = app.add_subcommand("evaluate", "compare prediction and truth directories");
    std::string gt_dir, pred_dir, fg_dir, backend_name = "testconv64", eval_out = ".";
    eval_cmd->add_option("--gt", gt_dir, "ground-truth PNG directory")->required();
    eval_cmd->add_option("--pred", pred_dir, "prediction PNG directory")->required();
    eval_cmd->add_option("--fg", fg_dir, "foreground mask PNG directory");
    eval_cmd->add_option("--backend", backend_name, "embedding backend for FID");
    eval_cmd->add_option("--out", eval_out, "directory for report files");

    auto* masks_cmd = app.add_subcommand("gen-masks", "generate free-form hole masks");
    std::int64_t n = 0;
    std::vector<std::int64_t> size;
    std::uint64_t seed = 0;
    std::string masks_out;
    masks_cmd->add_option("--n", n, "number of masks")->required();
    masks_cmd->add_option("--size", size, "mask size as H W")->expected(2)->required();
    masks_cmd->add_option("--seed", seed, "base seed");
    masks_cmd->add_option("--out", masks_out, "output directory")->required();

    auto* fg_cmd = app.add_subcommand("make-foreground", "label maps to foreground masks");
    std::string attrs_dir, labels_path, fg_out;
    fg_cmd->add_option("--attrs", attrs_dir, "attribute label map directory")->required();
    fg_cmd->add_option("--labels", labels_path, "labels.json (name -> label index)")
        ->required();
    fg_cmd->add_option("--out", fg_out, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train_cmd->parsed()) return run_train(config_path, overrides);
        if (infer_cmd->parsed()) {
            infer(ckpt, image_path, hole_path, out_path, !no_composite);
            std::printf("wrote %s\n", out_path.c_str());
            return 0;
        }
        if (eval_cmd->parsed())
            return run_evaluate(gt_dir, pred_dir, fg_dir, backend_name, eval_out);
        if (masks_cmd->parsed()) {
            if (size.size() != 2) throw ConfigError("--size expects H W");
            return run_gen_masks(n, size[0], size[1], seed, masks_out);
        }
        if (fg_cmd->parsed()) return run_make_foreground(attrs_dir, labels_path, fg_out);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 2;
    }
    return 0;
}
