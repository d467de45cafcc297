#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "fginpaint/adam.hpp"
#include "fginpaint/errors.hpp"
#include "fginpaint/losses.hpp"
#include "fginpaint/net.hpp"

namespace fginpaint {

struct RunConfig {
    std::int64_t image_size = 256;
    std::int64_t batch_size = 5;
    std::int64_t epochs = 100;
    std::int64_t max_steps = 0; // 0 = bounded by epochs only
    double lr_g = 1e-4;
    double lr_d = 1e-12;
    double beta1 = 0.9;
    double beta2 = 0.999;
    std::uint64_t seed = 0;
    double lambda_cF = 1.0;
    double lambda_F = 10.0;
    double lambda_pF = 0.05;
    double lambda_adv = 0.01;
    std::string cF_target = "masked_input";
    std::int64_t critic_steps_per_gen_step = 1;
    double clip_value = 0.01;
    std::string data_root;
    std::string out_dir = "out";
    std::string resume;
    std::int64_t checkpoint_every = 1000;
    bool desk_scale = false;
    std::int64_t depth = 5;
    std::int64_t base_channels = 64;
    std::int64_t critic_depth = 4;
    std::int64_t critic_base_channels = 64;
    bool use_hole_channel = false;

    GeneratorSpec gspec() const {
        GeneratorSpec g;
        g.depth = depth;
        g.base_channels = base_channels;
        g.hole_channel = use_hole_channel;
        return g;
    }
    CriticSpec cspec() const {
        CriticSpec c;
        c.depth = critic_depth;
        c.base_channels = critic_base_channels;
        c.weight_clip = clip_value;
        return c;
    }
    LossWeights weights() const { return {lambda_cF, lambda_F, lambda_pF, lambda_adv}; }
    CompositeTarget composite_target() const {
        if (cF_target == "masked_input") return CompositeTarget::masked_input;
        if (cF_target == "ground_truth") return CompositeTarget::ground_truth;
        throw ConfigError("cF_target must be masked_input or ground_truth");
    }
    AdamConfig adam_g() const { return {lr_g, beta1, beta2, 1e-8}; }
    AdamConfig adam_d() const { return {lr_d, beta1, beta2, 1e-8}; }

    void validate() const {
        if (lr_g <= 0 || lr_d <= 0) throw ConfigError("learning rates must be > 0");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 0) throw ConfigError("epochs must be >= 0");
        if (max_steps < 0) throw ConfigError("max_steps must be >= 0");
        if (critic_steps_per_gen_step < 1)
            throw ConfigError("critic_steps_per_gen_step must be >= 1");
        if (checkpoint_every < 1) throw ConfigError("checkpoint_every must be >= 1");
        if (clip_value <= 0) throw ConfigError("clip_value must be > 0");
        if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1)
            throw ConfigError("adam betas must lie in [0, 1)");
        gspec().validate();
        cspec().validate();
        weights().validate();
        composite_target();
        const std::int64_t div = std::max(gspec().divisor(), cspec().divisor());
        if (image_size <= 0 || image_size % div)
            throw ConfigError("image_size must be a positive multiple of " +
                              std::to_string(div));
    }
};

/// Shrinks everything to the laptop-scale profile used by the training probe.
inline void apply_desk_profile(RunConfig& cfg) {
    cfg.image_size = 64;
    cfg.depth = 4;
    cfg.base_channels = 32;
    cfg.critic_base_channels = 32;
    cfg.batch_size = 4;
    cfg.lr_d = 1e-4;
    cfg.max_steps = 200;
    cfg.checkpoint_every = 10;
}

namespace detail {

inline std::string strip(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    std::size_t b = s.find_last_not_of(" \t\r");
    if (a == std::string::npos) return "";
    return s.substr(a, b - a + 1);
}

inline std::string unquote(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                          (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::int64_t parse_int(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::int64_t r = std::stoll(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for " + key + ": '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const std::uint64_t r = std::stoull(v, &pos);
        if (pos != v.size() || v.find('-') != std::string::npos)
            throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("invalid unsigned integer for " + key + ": '" + v + "'");
    }
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double r = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return r;
    } catch (const std::exception&) {
        throw ConfigError("invalid real for " + key + ": '" + v + "'");
    }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("invalid boolean for " + key + ": '" + v + "'");
}

} // namespace detail

/// Applies one key/value pair; unknown keys are hard errors.
inline void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& raw) {
    const std::string v = detail::unquote(detail::strip(raw));
    if (key == "image_size") cfg.image_size = detail::parse_int(key, v);
    else if (key == "batch_size") cfg.batch_size = detail::parse_int(key, v);
    else if (key == "epochs") cfg.epochs = detail::parse_int(key, v);
    else if (key == "max_steps") cfg.max_steps = detail::parse_int(key, v);
    else if (key == "lr_g") cfg.lr_g = detail::parse_real(key, v);
    else if (key == "lr_d") cfg.lr_d = detail::parse_real(key, v);
    else if (key == "beta1") cfg.beta1 = detail::parse_real(key, v);
    else if (key == "beta2") cfg.beta2 = detail::parse_real(key, v);
    else if (key == "seed") cfg.seed = detail::parse_uint(key, v);
    else if (key == "lambda_cF") cfg.lambda_cF = detail::parse_real(key, v);
    else if (key == "lambda_F") cfg.lambda_F = detail::parse_real(key, v);
    else if (key == "lambda_pF") cfg.lambda_pF = detail::parse_real(key, v);
    else if (key == "lambda_adv") cfg.lambda_adv = detail::parse_real(key, v);
    else if (key == "cF_target") cfg.cF_target = v;
    else if (key == "critic_steps_per_gen_step")
        cfg.critic_steps_per_gen_step = detail::parse_int(key, v);
    else if (key == "clip_value") cfg.clip_value = detail::parse_real(key, v);
    else if (key == "data_root") cfg.data_root = v;
    else if (key == "out_dir") cfg.out_dir = v;
    else if (key == "resume") cfg.resume = v;
    else if (key == "checkpoint_every") cfg.checkpoint_every = detail::parse_int(key, v);
    else if (key == "desk_scale") cfg.desk_scale = detail::parse_bool(key, v);
    else if (key == "depth") cfg.depth = detail::parse_int(key, v);
    else if (key == "base_channels") cfg.base_channels = detail::parse_int(key, v);
    else if (key == "critic_depth") cfg.critic_depth = detail::parse_int(key, v);
    else if (key == "critic_base_channels")
        cfg.critic_base_channels = detail::parse_int(key, v);
    else if (key == "use_hole_channel") cfg.use_hole_channel = detail::parse_bool(key, v);
    else throw ConfigError("unknown config key: " + key);
}

/// Flat key = value lines; '#' comments and blank lines are skipped.
inline std::vector<std::pair<std::string, std::string>> parse_config_file(
    const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::vector<std::pair<std::string, std::string>> entries;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string s = detail::strip(line);
        if (s.empty()) continue;
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected key = value");
        const std::string key = detail::strip(s.substr(0, eq));
        const std::string value = detail::strip(s.substr(eq + 1));
        if (key.empty())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": empty key");
        entries.emplace_back(key, value);
    }
    return entries;
}

/// Precedence: built-in defaults, then the desk profile when requested by
/// either source, then file entries in order, then command-line overrides.
inline RunConfig make_run_config(
    const std::vector<std::pair<std::string, std::string>>& file_entries,
    const std::vector<std::pair<std::string, std::string>>& cli_entries) {
    RunConfig cfg;
    bool desk = false;
    for (const auto& [k, v] : file_entries)
        if (k == "desk_scale") desk = detail::parse_bool(k, detail::unquote(detail::strip(v)));
    for (const auto& [k, v] : cli_entries)
        if (k == "desk_scale") desk = detail::parse_bool(k, detail::unquote(detail::strip(v)));
    if (desk) {
        apply_desk_profile(cfg);
        cfg.desk_scale = true;
    }
    for (const auto& [k, v] : file_entries) apply_config_entry(cfg, k, v);
    for (const auto& [k, v] : cli_entries) apply_config_entry(cfg, k, v);
    return cfg;
}

} // namespace fginpaint
