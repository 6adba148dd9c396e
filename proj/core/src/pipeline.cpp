#include "procwarm/pipeline.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"
#include "procwarm/hash.hpp"

namespace procwarm::pipeline {

std::string config_hash_of(const KvMap& kv) { return hex64(fnv1a64(kv_serialize(kv))); }

void write_provenance(const std::filesystem::path& path, const std::string& stage,
                      const std::string& config_hash, const KvMap& extra) {
    KvMap kv = extra;
    kv["format"] = "procwarm-provenance";
    kv["stage"] = stage;
    kv["config_hash"] = config_hash;
    write_file_atomic(path, kv_serialize(kv));
}

KvMap read_provenance(const std::filesystem::path& path) {
    return kv_parse(read_file(path));
}

bool stage_up_to_date(const std::filesystem::path& provenance_path,
                      const std::string& config_hash,
                      const std::vector<std::filesystem::path>& outputs) {
    std::error_code ec;
    if (!std::filesystem::exists(provenance_path, ec)) return false;
    KvMap kv;
    try {
        kv = read_provenance(provenance_path);
    } catch (const Error&) {
        return false;
    }
    if (kv_get_or(kv, "config_hash", "") != config_hash) return false;
    for (const auto& out : outputs) {
        if (!std::filesystem::exists(out, ec)) return false;
    }
    return true;
}

}  // namespace procwarm::pipeline
