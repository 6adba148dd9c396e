#pragma once

#include "procwarm/param_store.hpp"

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace procwarm::model {

// Single-file checkpoint: a one-line header carrying the manifest size, a
// key=value manifest (stage, step, seed, config, tensor list with shapes
// and frozen flags), then each tensor's values as little-endian 32-bit
// floats concatenated in manifest order. Round-trips bit-exactly.
void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(const std::filesystem::path& path);

// Header and manifest only; used for stage guards and config-hash checks
// without loading the payload.
struct CheckpointMeta {
    ModelConfig config;
    Stage stage = Stage::Warmup;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> order;
    std::map<std::string, std::vector<std::int64_t>> shapes;
    std::set<std::string> frozen;
};

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path);

}  // namespace procwarm::model
