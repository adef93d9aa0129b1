#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gliomkit/common.hpp"

namespace gliomkit::net {

// One pixel-block: 3x3 conv (stride 1, pad 1) -> optional batch norm -> ReLU.
struct PixelBlockSpec {
    int out_channels = 0;
    bool batch_norm = true;
};

struct NetSpec {
    int in_channels = 4;
    std::vector<PixelBlockSpec> blocks;
    std::set<int> pool_after;      // 2x2 max-pool after these block indices
    std::set<int> hypercolumn_taps; // block outputs sampled into the hypercolumn
    std::vector<int> mlp_widths;   // exactly 3, last one = n_classes
    double bn_momentum = 0.9;      // running = m*running + (1-m)*batch
    double bn_epsilon = 1e-5;

    int n_classes() const { return mlp_widths.empty() ? 0 : mlp_widths.back(); }

    // Downscale factor of block i's output: one 2x pool per pooled block before it.
    int tap_scale(int block) const {
        int f = 1;
        for (int p : pool_after)
            if (p < block) f *= 2;
        return f;
    }

    int hypercolumn_width() const {
        int w = 0;
        for (int t : hypercolumn_taps) w += blocks[static_cast<std::size_t>(t)].out_channels;
        return w;
    }

    void validate() const {
        if (in_channels < 1) throw value_error("NetSpec: in_channels must be >= 1");
        if (blocks.empty()) throw value_error("NetSpec: at least one pixel-block required");
        for (const auto& b : blocks)
            if (b.out_channels < 1) throw value_error("NetSpec: block out_channels must be >= 1");
        const int n = static_cast<int>(blocks.size());
        for (int p : pool_after)
            if (p < 0 || p >= n) throw value_error(concat("NetSpec: pool_after index ", p, " out of range"));
        if (hypercolumn_taps.empty()) throw value_error("NetSpec: at least one hypercolumn tap required");
        for (int t : hypercolumn_taps)
            if (t < 0 || t >= n)
                throw value_error(concat("NetSpec: hypercolumn tap ", t, " out of range"));
        if (mlp_widths.size() != 3)
            throw value_error(concat("NetSpec: MLP must have exactly 3 fully connected layers, got ",
                                     mlp_widths.size()));
        for (int w : mlp_widths)
            if (w < 1) throw value_error("NetSpec: MLP widths must be >= 1");
        if (!(bn_momentum >= 0.0 && bn_momentum < 1.0))
            throw value_error("NetSpec: bn_momentum must lie in [0,1)");
        if (!(bn_epsilon > 0.0)) throw value_error("NetSpec: bn_epsilon must be positive");
    }
};

inline nlohmann::json to_json(const NetSpec& s) {
    nlohmann::json j;
    j["in_channels"] = s.in_channels;
    j["blocks"] = nlohmann::json::array();
    for (const auto& b : s.blocks)
        j["blocks"].push_back({{"out_channels", b.out_channels}, {"batch_norm", b.batch_norm}});
    j["pool_after"] = std::vector<int>(s.pool_after.begin(), s.pool_after.end());
    j["hypercolumn_taps"] =
        std::vector<int>(s.hypercolumn_taps.begin(), s.hypercolumn_taps.end());
    j["mlp_widths"] = s.mlp_widths;
    j["bn_momentum"] = s.bn_momentum;
    j["bn_epsilon"] = s.bn_epsilon;
    return j;
}

inline NetSpec netspec_from_json(const nlohmann::json& j) {
    NetSpec s;
    s.in_channels = j.at("in_channels").get<int>();
    for (const auto& b : j.at("blocks"))
        s.blocks.push_back({b.at("out_channels").get<int>(),
                            b.value("batch_norm", true)});
    for (int p : j.value("pool_after", std::vector<int>{})) s.pool_after.insert(p);
    for (int t : j.at("hypercolumn_taps").get<std::vector<int>>()) s.hypercolumn_taps.insert(t);
    s.mlp_widths = j.at("mlp_widths").get<std::vector<int>>();
    s.bn_momentum = j.value("bn_momentum", 0.9);
    s.bn_epsilon = j.value("bn_epsilon", 1e-5);
    s.validate();
    return s;
}

// Small network for the synthetic phantom task: 4 blocks, taps at every
// resolution, pools after blocks 1 and 2.
inline NetSpec toy4_preset(bool batch_norm = true) {
    NetSpec s;
    s.in_channels = 4;
    s.blocks = {{8, batch_norm}, {16, batch_norm}, {16, batch_norm}, {32, batch_norm}};
    s.pool_after = {1, 2};
    s.hypercolumn_taps = {0, 1, 2, 3};
    s.mlp_widths = {48, 48, 4};
    return s;
}

// 18-block VGG-16-style plan: channel groups 64,64 / 128,128 / 256x3 / 512x3 /
// 512x3 plus three extra 512 blocks, pools after each group, taps at the last
// block of each resolution, MLP 4096 -> 4096 -> 4.
inline NetSpec paper18_preset() {
    NetSpec s;
    s.in_channels = 4;
    const int plan[18] = {64,  64,  128, 128, 256, 256, 256, 512, 512,
                          512, 512, 512, 512, 512, 512, 512, 512, 512};
    for (int c : plan) s.blocks.push_back({c, true});
    s.pool_after = {1, 3, 6, 9, 12};
    s.hypercolumn_taps = {1, 3, 6, 9, 12, 17};
    s.mlp_widths = {4096, 4096, 4};
    return s;
}

inline NetSpec preset(const std::string& name) {
    if (name == "toy4") return toy4_preset();
    if (name == "toy4_nobn") return toy4_preset(false);
    if (name == "paper18") return paper18_preset();
    throw value_error(concat("unknown NetSpec preset '", name, "'"));
}

} // namespace gliomkit::net
