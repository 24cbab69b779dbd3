#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "gmarl/tensor.hpp"

namespace gmarl {

/// Serialized policy state. Parameter values are written in shortest
/// round-trip decimal form, so save/load reproduces every double bit for bit.
struct Checkpoint {
    ParamStore params;
    std::string strategy;
    std::string config_digest;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> attributes;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

} // namespace gmarl
