#include "procwarm/checkpoint_io.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"

#include <cstdlib>
#include <sstream>

namespace procwarm::model {

namespace {

constexpr const char* kMagic = "procwarm-checkpoint";
constexpr int kVersion = 1;

std::string shape_to_string(const std::vector<std::int64_t>& shape) {
    std::string out;
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out += "x";
        out += std::to_string(shape[i]);
    }
    return out.empty() ? "1" : out;
}

std::vector<std::int64_t> shape_from_string(const std::string& text) {
    std::vector<std::int64_t> shape;
    const char* p = text.c_str();
    while (*p) {
        char* end = nullptr;
        const long long v = std::strtoll(p, &end, 10);
        if (end == p || v < 1) throw FormatError("bad tensor shape: " + text);
        shape.push_back(v);
        p = end;
        if (*p == 'x') ++p;
        else if (*p) throw FormatError("bad tensor shape: " + text);
    }
    if (shape.empty()) throw FormatError("bad tensor shape: " + text);
    return shape;
}

KvMap manifest_kv(const Checkpoint& ckpt) {
    KvMap kv = config_to_kv(ckpt.config, "config.");
    kv["stage"] = to_string(ckpt.stage);
    kv["step"] = std::to_string(ckpt.step);
    kv["seed"] = std::to_string(ckpt.seed);
    kv["tensor_count"] = std::to_string(ckpt.order.size());
    for (std::size_t i = 0; i < ckpt.order.size(); ++i) {
        const std::string& name = ckpt.order[i];
        const std::string key = "tensor." + std::to_string(i) + ".";
        kv[key + "name"] = name;
        kv[key + "shape"] = shape_to_string(ckpt.at(name).shape);
        kv[key + "frozen"] = ckpt.is_frozen(name) ? "1" : "0";
    }
    return kv;
}

struct ParsedHeader {
    CheckpointMeta meta;
    std::size_t payload_offset = 0;
    std::size_t payload_floats = 0;
};

ParsedHeader parse_header(const std::string& bytes, const std::filesystem::path& path) {
    const auto eol = bytes.find('\n');
    if (eol == std::string::npos) throw FormatError("not a checkpoint file: " + path.string());
    std::istringstream head(bytes.substr(0, eol));
    std::string magic;
    int version = 0;
    std::size_t manifest_bytes = 0;
    head >> magic >> version >> manifest_bytes;
    if (magic != kMagic) throw FormatError("not a checkpoint file: " + path.string());
    if (version != kVersion) {
        throw FormatError("checkpoint version mismatch: file has " + std::to_string(version) +
                          ", reader supports " + std::to_string(kVersion));
    }
    if (bytes.size() < eol + 1 + manifest_bytes) {
        throw FormatError("truncated payload: checkpoint manifest cut short");
    }
    const KvMap kv = kv_parse(bytes.substr(eol + 1, manifest_bytes));

    ParsedHeader out;
    out.meta.config = config_from_kv(kv, "config.");
    out.meta.stage = stage_from_string(kv_get(kv, "stage"));
    out.meta.step = kv_get_u64(kv, "step");
    out.meta.seed = kv_get_u64(kv, "seed");
    const auto count = static_cast<std::size_t>(kv_get_u64(kv, "tensor_count"));
    for (std::size_t i = 0; i < count; ++i) {
        const std::string key = "tensor." + std::to_string(i) + ".";
        const std::string name = kv_get(kv, key + "name");
        if (out.meta.shapes.count(name)) throw FormatError("duplicate tensor name: " + name);
        out.meta.order.push_back(name);
        const auto shape = shape_from_string(kv_get(kv, key + "shape"));
        std::size_t numel = 1;
        for (auto s : shape) numel *= static_cast<std::size_t>(s);
        out.payload_floats += numel;
        out.meta.shapes[name] = shape;
        if (kv_get_int(kv, key + "frozen") != 0) out.meta.frozen.insert(name);
    }
    out.payload_offset = eol + 1 + manifest_bytes;
    return out;
}

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
    ckpt.config.validate();
    const std::string manifest = kv_serialize(manifest_kv(ckpt));
    std::string out = std::string(kMagic) + " " + std::to_string(kVersion) + " " +
                      std::to_string(manifest.size()) + "\n" + manifest;
    std::vector<std::uint8_t> payload;
    std::size_t total = 0;
    for (const std::string& name : ckpt.order) total += ckpt.at(name).data.size();
    payload.reserve(total * 4);
    for (const std::string& name : ckpt.order) {
        for (float v : ckpt.at(name).data) put_f32(payload, v);
    }
    out.append(reinterpret_cast<const char*>(payload.data()), payload.size());
    write_file_atomic(path, out);
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
    const std::string bytes = read_file(path);
    const ParsedHeader h = parse_header(bytes, path);

    const std::size_t expect = h.payload_floats * 4;
    const std::size_t have = bytes.size() - h.payload_offset;
    if (have < expect) {
        throw FormatError("truncated payload: checkpoint has " + std::to_string(have) +
                          " payload bytes, expected " + std::to_string(expect));
    }
    if (have > expect) {
        throw FormatError("payload size mismatch: checkpoint has " + std::to_string(have) +
                          " payload bytes, expected " + std::to_string(expect));
    }

    Checkpoint ckpt;
    ckpt.config = h.meta.config;
    ckpt.stage = h.meta.stage;
    ckpt.step = h.meta.step;
    ckpt.seed = h.meta.seed;
    const auto* p = reinterpret_cast<const std::uint8_t*>(bytes.data()) + h.payload_offset;
    for (const std::string& name : h.meta.order) {
        Tensor<float>& t = ckpt.add(name, h.meta.shapes.at(name), h.meta.frozen.count(name) != 0);
        for (float& v : t.data) {
            v = get_f32(p);
            p += 4;
        }
    }
    return ckpt;
}

CheckpointMeta read_checkpoint_meta(const std::filesystem::path& path) {
    return parse_header(read_file(path), path).meta;
}

}  // namespace procwarm::model
