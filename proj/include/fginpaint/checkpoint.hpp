#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fginpaint/errors.hpp"
#include "fginpaint/net.hpp"

namespace fginpaint {

inline constexpr char kCheckpointMagic[8] = {'F', 'G', 'C', 'K', 'P', 'T', '0', '1'};

struct Checkpoint {
    NetParams params;
    std::int64_t step = 0;
};

namespace detail {

inline nlohmann::json gspec_json(const GeneratorSpec& g) {
    return {{"depth", g.depth},
            {"base_channels", g.base_channels},
            {"input_channels", g.input_channels},
            {"output_channels", g.output_channels},
            {"hole_channel", g.hole_channel}};
}

inline nlohmann::json cspec_json(const CriticSpec& c) {
    return {{"depth", c.depth},
            {"base_channels", c.base_channels},
            {"input_channels", c.input_channels},
            {"weight_clip", c.weight_clip}};
}

inline GeneratorSpec gspec_from_json(const nlohmann::json& j) {
    GeneratorSpec g;
    g.depth = j.at("depth").get<std::int64_t>();
    g.base_channels = j.at("base_channels").get<std::int64_t>();
    g.input_channels = j.at("input_channels").get<std::int64_t>();
    g.output_channels = j.at("output_channels").get<std::int64_t>();
    g.hole_channel = j.at("hole_channel").get<bool>();
    return g;
}

inline CriticSpec cspec_from_json(const nlohmann::json& j) {
    CriticSpec c;
    c.depth = j.at("depth").get<std::int64_t>();
    c.base_channels = j.at("base_channels").get<std::int64_t>();
    c.input_channels = j.at("input_channels").get<std::int64_t>();
    c.weight_clip = j.at("weight_clip").get<double>();
    return c;
}

inline void append_array_names(const std::string& prefix, const ParamSet& ps,
                               std::vector<std::pair<std::string, const Tensor*>>& out) {
    for (const auto& name : ps.order) {
        const ParamEntry& e = ps.entry(name);
        out.emplace_back(prefix + name, &e.value);
        out.emplace_back(prefix + name + ".m", &e.m);
        out.emplace_back(prefix + name + ".v", &e.v);
    }
}

inline void append_array_names(const std::string& prefix, ParamSet& ps,
                               std::vector<std::pair<std::string, Tensor*>>& out) {
    for (const auto& name : ps.order) {
        ParamEntry& e = ps.entry(name);
        out.emplace_back(prefix + name, &e.value);
        out.emplace_back(prefix + name + ".m", &e.m);
        out.emplace_back(prefix + name + ".v", &e.v);
    }
}

} // namespace detail

inline void save_checkpoint(const std::filesystem::path& path, const NetParams& np,
                            std::int64_t step) {
    std::vector<std::pair<std::string, const Tensor*>> arrays;
    detail::append_array_names("gen.", np.gen, arrays);
    detail::append_array_names("critic.", np.critic, arrays);

    nlohmann::json header;
    header["gspec"] = detail::gspec_json(np.gspec);
    header["cspec"] = detail::cspec_json(np.cspec);
    header["seed"] = np.seed;
    header["step"] = step;
    header["gen_adam_t"] = np.gen.adam_t;
    header["critic_adam_t"] = np.critic.adam_t;
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, t] : arrays)
        manifest.push_back({{"name", name}, {"shape", t->shape()}});
    header["arrays"] = std::move(manifest);
    const std::string header_str = header.dump();

    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(kCheckpointMagic, sizeof kCheckpointMagic);
        const std::uint64_t hlen = header_str.size();
        out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
        out.write(header_str.data(), static_cast<std::streamsize>(hlen));
        for (const auto& [name, t] : arrays)
            out.write(reinterpret_cast<const char*>(t->data()),
                      static_cast<std::streamsize>(t->numel() * sizeof(double)));
        if (!out) throw IoError("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint " + path.string());
    char magic[sizeof kCheckpointMagic];
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0)
        throw IoError("not a checkpoint file: " + path.string());
    std::uint64_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || hlen > (1u << 26)) throw IoError("corrupt checkpoint header length");
    std::string header_str(hlen, '\0');
    in.read(header_str.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw IoError("truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_str);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad checkpoint header: ") + e.what());
    }

    Checkpoint ck;
    try {
        ck.params = build_param_layout(detail::gspec_from_json(header.at("gspec")),
                                       detail::cspec_from_json(header.at("cspec")));
        ck.params.seed = header.at("seed").get<std::uint64_t>();
        ck.params.gen.adam_t = header.at("gen_adam_t").get<std::int64_t>();
        ck.params.critic.adam_t = header.at("critic_adam_t").get<std::int64_t>();
        ck.step = header.at("step").get<std::int64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("bad checkpoint header: ") + e.what());
    }

    std::vector<std::pair<std::string, Tensor*>> expected;
    detail::append_array_names("gen.", ck.params.gen, expected);
    detail::append_array_names("critic.", ck.params.critic, expected);
    const auto& manifest = header.at("arrays");
    if (manifest.size() != expected.size())
        throw IoError("checkpoint array count mismatch");
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& entry = manifest.at(i);
        const std::string name = entry.at("name").get<std::string>();
        if (name != expected[i].first)
            throw IoError("checkpoint array order mismatch at " + name + ", expected " +
                          expected[i].first);
        const auto shape = entry.at("shape").get<std::vector<std::int64_t>>();
        if (shape != expected[i].second->shape())
            throw IoError("checkpoint array shape mismatch for " + name);
        Tensor* t = expected[i].second;
        in.read(reinterpret_cast<char*>(t->data()),
                static_cast<std::streamsize>(t->numel() * sizeof(double)));
        if (!in) throw IoError("truncated checkpoint data at " + name);
    }
    return ck;
}

/// Resume-time guard: a checkpoint must match the run's architecture exactly.
inline void check_checkpoint_specs(const Checkpoint& ck, const GeneratorSpec& gspec,
                                   const CriticSpec& cspec) {
    if (!(ck.params.gspec == gspec))
        throw ConfigError("checkpoint generator spec does not match configuration");
    if (!(ck.params.cspec == cspec))
        throw ConfigError("checkpoint critic spec does not match configuration");
}

} // namespace fginpaint
