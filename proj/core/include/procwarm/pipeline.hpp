#pragma once

#include "procwarm/kv.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace procwarm::pipeline {

// Hash of a canonical key=value rendering; every stage records it in its
// outputs so reruns can be detected and chained stages can verify their
// inputs.
std::string config_hash_of(const KvMap& kv);

// Provenance sidecar written next to a stage's outputs: the producing
// stage name, its config hash, and free-form extras (input file hashes,
// plan text hash, seeds).
void write_provenance(const std::filesystem::path& path, const std::string& stage,
                      const std::string& config_hash, const KvMap& extra);
KvMap read_provenance(const std::filesystem::path& path);

// True when the provenance file exists, records exactly `config_hash`,
// and every listed output file exists: the stage can be skipped.
bool stage_up_to_date(const std::filesystem::path& provenance_path,
                      const std::string& config_hash,
                      const std::vector<std::filesystem::path>& outputs);

}  // namespace procwarm::pipeline
