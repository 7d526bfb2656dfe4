#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "exad/forest.hpp"
#include "exad/io_util.hpp"

namespace exad {

inline constexpr int kModelFormatVersion = 1;
inline constexpr const char* kModelFormatName = "exad-forest";

inline std::string to_hex(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) out[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return out;
}

inline std::uint64_t from_hex(const std::string& s) {
    std::uint64_t v = 0;
    for (char c : s) {
        v <<= 4;
        if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
        else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
        else throw std::runtime_error("model file: bad hex digit in fingerprint");
    }
    return v;
}

inline nlohmann::json config_to_json(const ForestConfig& c) {
    nlohmann::json j{
        {"model", to_string(c.model)}, {"n_trees", c.n_trees},   {"subsample", c.subsample},
        {"eta", c.eta},                {"dof", c.dof},           {"seed", c.seed},
    };
    if (c.max_depth) j["max_depth"] = *c.max_depth;
    else j["max_depth"] = nullptr;
    return j;
}

inline ForestConfig config_from_json(const nlohmann::json& j) {
    ForestConfig c;
    c.model = parse_model(j.at("model").get<std::string>());
    c.n_trees = j.at("n_trees").get<std::size_t>();
    c.subsample = j.at("subsample").get<std::size_t>();
    c.eta = j.at("eta").get<double>();
    c.dof = j.at("dof").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("max_depth") && !j.at("max_depth").is_null())
        c.max_depth = j.at("max_depth").get<std::size_t>();
    return c;
}

/// Model -> JSON. Node order inside each tree is the stored pre-order, with
/// explicit child indices; doubles round-trip exactly (shortest form).
inline nlohmann::json serialize_model(const Forest& forest) {
    nlohmann::json j;
    j["format"] = kModelFormatName;
    j["version"] = kModelFormatVersion;
    j["config"] = config_to_json(forest.config);
    j["p"] = forest.p;
    j["psi"] = forest.psi;
    j["max_depth"] = forest.max_depth;
    j["fitted_on"] = forest.fitted_on;
    j["data_fingerprint"] = to_hex(forest.data_fingerprint);

    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : forest.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes) {
            nlohmann::json node{{"size", n.size}, {"depth", n.depth}};
            if (!n.is_leaf()) {
                node["normal"] = n.plane.normal;
                node["intercept"] = n.plane.intercept;
                node["left"] = n.left;
                node["right"] = n.right;
            }
            nodes.push_back(std::move(node));
        }
        trees.push_back(nlohmann::json{{"psi", tree.nodes.empty() ? 0 : tree.nodes[0].size},
                                       {"nodes", std::move(nodes)}});
    }
    j["trees"] = std::move(trees);
    return j;
}

namespace detail {

/// Structural checks on a deserialized tree: children exist, come after their
/// parent (pre-order), are referenced exactly once, sizes add up, depths
/// increase by one, and split normals are unit length (one-hot for iforest).
inline void validate_tree(const IsolationTree& tree, std::size_t p, ModelKind model,
                          std::size_t max_depth) {
    if (tree.nodes.empty()) throw std::runtime_error("model file: tree with no nodes");
    if (tree.nodes[0].depth != 0) throw std::runtime_error("model file: root depth must be 0");
    std::vector<int> referenced(tree.nodes.size(), 0);
    referenced[0] = 1;
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
        const auto& n = tree.nodes[i];
        if (n.depth > max_depth) throw std::runtime_error("model file: node beyond depth cap");
        if (n.is_leaf()) {
            if (n.right >= 0 || !n.plane.normal.empty())
                throw std::runtime_error("model file: malformed leaf node");
            continue;
        }
        if (n.right < 0) throw std::runtime_error("model file: internal node missing a child");
        const auto l = static_cast<std::size_t>(n.left), r = static_cast<std::size_t>(n.right);
        if (l >= tree.nodes.size() || r >= tree.nodes.size() || l <= i || r <= i || l == r)
            throw std::runtime_error("model file: child index out of pre-order bounds");
        referenced[l] += 1;
        referenced[r] += 1;
        if (tree.nodes[l].size + tree.nodes[r].size != n.size)
            throw std::runtime_error("model file: child sizes do not add up");
        if (tree.nodes[l].depth != n.depth + 1 || tree.nodes[r].depth != n.depth + 1)
            throw std::runtime_error("model file: child depth mismatch");
        if (n.plane.normal.size() != p)
            throw std::runtime_error("model file: split normal has wrong dimension");
        double norm2 = 0.0;
        std::size_t nonzero = 0;
        for (double v : n.plane.normal) {
            if (!std::isfinite(v)) throw std::runtime_error("model file: non-finite normal");
            norm2 += v * v;
            nonzero += (v != 0.0);
        }
        if (std::abs(std::sqrt(norm2) - 1.0) > 1e-9)
            throw std::runtime_error("model file: split normal is not unit length");
        if (model == ModelKind::iforest && nonzero != 1)
            throw std::runtime_error("model file: iforest split normal must be one-hot");
        if (!std::isfinite(n.plane.intercept))
            throw std::runtime_error("model file: non-finite intercept");
    }
    for (std::size_t i = 0; i < referenced.size(); ++i)
        if (referenced[i] != 1)
            throw std::runtime_error("model file: node referenced " +
                                     std::to_string(referenced[i]) + " times");
}

} // namespace detail

inline Forest deserialize_model(const nlohmann::json& j) {
    if (!j.is_object() || j.value("format", std::string{}) != kModelFormatName)
        throw std::runtime_error("model file: not an " + std::string(kModelFormatName) + " file");
    const int version = j.at("version").get<int>();
    if (version != kModelFormatVersion)
        throw std::runtime_error("model file: unsupported version " + std::to_string(version) +
                                 " (expected " + std::to_string(kModelFormatVersion) + ")");

    Forest forest;
    forest.config = config_from_json(j.at("config"));
    forest.config.validate();
    forest.p = j.at("p").get<std::size_t>();
    forest.psi = j.at("psi").get<std::size_t>();
    forest.max_depth = j.at("max_depth").get<std::size_t>();
    forest.fitted_on = j.value("fitted_on", std::string{});
    forest.data_fingerprint = from_hex(j.value("data_fingerprint", std::string{"0"}));
    if (forest.p == 0) throw std::runtime_error("model file: p must be >= 1");

    for (const auto& jt : j.at("trees")) {
        IsolationTree tree;
        for (const auto& jn : jt.at("nodes")) {
            TreeNode n;
            n.size = jn.at("size").get<std::uint32_t>();
            n.depth = jn.at("depth").get<std::uint32_t>();
            if (jn.contains("left")) {
                n.left = jn.at("left").get<std::int32_t>();
                n.right = jn.at("right").get<std::int32_t>();
                n.plane.normal = jn.at("normal").get<std::vector<double>>();
                n.plane.intercept = jn.at("intercept").get<double>();
            }
            tree.nodes.push_back(std::move(n));
        }
        detail::validate_tree(tree, forest.p, forest.config.model, forest.max_depth);
        forest.trees.push_back(std::move(tree));
    }
    if (forest.trees.empty()) throw std::runtime_error("model file: no trees");
    return forest;
}

inline void save_model(const Forest& forest, const std::string& path) {
    write_text_file(path, serialize_model(forest).dump(2) + "\n");
}

inline Forest load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + ": " + e.what());
    }
    try {
        return deserialize_model(j);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("model file " + path + ": missing or mistyped field: " + e.what());
    }
}

} // namespace exad
