#include "gmarl/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace gmarl {

namespace {

constexpr const char* kFormat = "gmarl-checkpoint";
constexpr int kVersion = 1;

} // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
    nlohmann::ordered_json j;
    j["format"] = kFormat;
    j["version"] = kVersion;
    j["strategy"] = ckpt.strategy;
    j["seed"] = ckpt.seed;
    j["config_digest"] = ckpt.config_digest;
    j["attributes"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : ckpt.attributes) j["attributes"][k] = v;
    auto& params = j["parameters"] = nlohmann::ordered_json::object();
    for (const auto& [name, t] : ckpt.params.entries()) {
        if (!t.all_finite()) throw NumericError("refusing to checkpoint non-finite parameter '" + name + "'");
        params[name] = {{"shape", t.shape()}, {"data", t.values()}};
    }
    return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
    if (j.value("format", "") != kFormat) throw IoError("not a gmarl checkpoint");
    if (j.value("version", 0) != kVersion) throw IoError("unsupported checkpoint version");
    Checkpoint ckpt;
    try {
        ckpt.strategy = j.at("strategy").get<std::string>();
        ckpt.seed = j.at("seed").get<std::uint64_t>();
        ckpt.config_digest = j.at("config_digest").get<std::string>();
        for (const auto& [k, v] : j.at("attributes").items()) ckpt.attributes[k] = v.get<std::string>();
        for (const auto& [name, p] : j.at("parameters").items()) {
            ckpt.params.add(name, Tensor(p.at("shape").get<Shape>(), p.at("data").get<std::vector<double>>()));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("malformed checkpoint: ") + e.what());
    }
    return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << checkpoint_to_string(ckpt);
    if (!out) throw IoError("failed writing '" + path.string() + "'");
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

} // namespace gmarl
