#include "procwarm/dataset.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"
#include "procwarm/kv.hpp"
#include "procwarm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace procwarm::data {

void ImageDataset::validate() const {
    if (num_classes < 2) throw ValidationError("dataset needs at least 2 classes");
    if (channels < 1 || height < 1 || width < 1) {
        throw ValidationError("dataset dimensions must be positive");
    }
    if (images.size() != count() * image_elems()) {
        throw ValidationError("image payload size does not match count: " +
                              std::to_string(images.size()) + " floats for " +
                              std::to_string(count()) + " examples");
    }
    for (std::uint16_t l : labels) {
        if (l >= num_classes) throw ValidationError("label out of range: " + std::to_string(l));
    }
}

namespace {

constexpr int kSide = 32;

struct ShapeParams {
    int label;
    double cx, cy, r, thick;
    int period, phase_x, phase_y, cell;
    double color[3], bg[3];
};

bool shape_hit(const ShapeParams& s, int x, int y) {
    const double dx = x - s.cx;
    const double dy = y - s.cy;
    const double ax = std::abs(dx);
    const double ay = std::abs(dy);
    switch (s.label) {
        case 0:  // filled disk
            return dx * dx + dy * dy <= s.r * s.r;
        case 1:  // square frame
            return std::max(ax, ay) <= s.r && std::max(ax, ay) >= s.r - s.thick;
        case 2:  // plus
            return (ax <= s.thick && ay <= s.r) || (ay <= s.thick && ax <= s.r);
        case 3:  // diagonal cross
            return std::abs(ax - ay) <= s.thick && std::max(ax, ay) <= s.r;
        case 4: {  // filled triangle, apex up
            const double row = y - (s.cy - s.r);
            if (row < 0.0 || row > 2.0 * s.r) return false;
            return ax <= row * 0.5;
        }
        case 5:  // horizontal stripes
            return ((y + s.phase_y) / s.period) % 2 == 0;
        case 6:  // vertical stripes
            return ((x + s.phase_x) / s.period) % 2 == 0;
        case 7: {  // ring
            const double d2 = dx * dx + dy * dy;
            const double inner = s.r - 2.0 * s.thick;
            return d2 <= s.r * s.r && d2 >= inner * inner;
        }
        case 8:  // checkerboard
            return (((x + s.phase_x) / s.cell) + ((y + s.phase_y) / s.cell)) % 2 == 0;
        default: {  // corner L
            const bool vert = std::abs(x - (s.cx - s.r)) <= s.thick && ay <= s.r;
            const bool horiz = std::abs(y - (s.cy + s.r)) <= s.thick && ax <= s.r;
            return vert || horiz;
        }
    }
}

void render_example(std::uint64_t seed, std::uint64_t index, float* out, std::uint16_t* label) {
    CounterRng rng(derive_key(seed, Stream::Dataset, index));
    ShapeParams s;
    s.label = static_cast<int>(index % 10);
    s.cx = 16.0 + (rng.next_double() * 8.0 - 4.0);
    s.cy = 16.0 + (rng.next_double() * 8.0 - 4.0);
    s.r = 6.0 + rng.next_double() * 4.0;
    s.thick = 1.5 + rng.next_double();
    s.period = 3 + static_cast<int>(rng.next_below(3));
    s.phase_x = static_cast<int>(rng.next_below(8));
    s.phase_y = static_cast<int>(rng.next_below(8));
    s.cell = 3 + static_cast<int>(rng.next_below(3));
    for (double& c : s.color) c = 0.55 + rng.next_double() * 0.45;
    for (double& b : s.bg) b = 0.10 + rng.next_double() * 0.25;

    for (int ch = 0; ch < 3; ++ch) {
        for (int y = 0; y < kSide; ++y) {
            for (int x = 0; x < kSide; ++x) {
                const double base = shape_hit(s, x, y) ? s.color[ch] : s.bg[ch];
                const double noise = (rng.next_double() - 0.5) * 0.10;
                out[(ch * kSide + y) * kSide + x] =
                    static_cast<float>(std::clamp(base + noise, 0.0, 1.0));
            }
        }
    }
    *label = static_cast<std::uint16_t>(s.label);
}

constexpr int kDatasetVersion = 1;

}  // namespace

ImageDataset make_synthetic_shapes(std::size_t count, std::uint64_t seed) {
    ImageDataset ds;
    ds.name = "synthetic-shapes";
    ds.images.resize(count * ds.image_elems());
    ds.labels.resize(count);
    for (std::size_t i = 0; i < count; ++i) {
        render_example(seed, i, ds.images.data() + i * ds.image_elems(), &ds.labels[i]);
    }
    return ds;
}

void write_dataset(const ImageDataset& ds, const std::filesystem::path& dir) {
    ds.validate();
    std::vector<std::uint8_t> images;
    images.reserve(ds.images.size() * 4);
    for (float v : ds.images) put_f32(images, v);
    std::vector<std::uint8_t> labels;
    labels.reserve(ds.labels.size() * 2);
    for (std::uint16_t l : ds.labels) put_u16(labels, l);

    KvMap kv;
    kv["format"] = "procwarm-dataset";
    kv["version"] = std::to_string(kDatasetVersion);
    kv["name"] = ds.name;
    kv["count"] = std::to_string(ds.count());
    kv["num_classes"] = std::to_string(ds.num_classes);
    kv["channels"] = std::to_string(ds.channels);
    kv["height"] = std::to_string(ds.height);
    kv["width"] = std::to_string(ds.width);
    kv["images_bytes"] = std::to_string(images.size());
    kv["labels_bytes"] = std::to_string(labels.size());

    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "images.bin", images.data(), images.size());
    write_file_atomic(dir / "labels.bin", labels.data(), labels.size());
    write_file_atomic(dir / "manifest.txt", kv_serialize(kv));
}

ImageDataset read_dataset(const std::filesystem::path& dir) {
    const KvMap kv = kv_parse(read_file(dir / "manifest.txt"));
    if (kv_get_or(kv, "format", "") != "procwarm-dataset") {
        throw FormatError("not a dataset manifest: " + (dir / "manifest.txt").string());
    }
    if (kv_get_int(kv, "version") != kDatasetVersion) {
        throw FormatError("dataset version mismatch: file has " + kv_get(kv, "version") +
                          ", reader supports " + std::to_string(kDatasetVersion));
    }
    ImageDataset ds;
    ds.name = kv_get(kv, "name");
    ds.num_classes = static_cast<int>(kv_get_int(kv, "num_classes"));
    ds.channels = static_cast<int>(kv_get_int(kv, "channels"));
    ds.height = static_cast<int>(kv_get_int(kv, "height"));
    ds.width = static_cast<int>(kv_get_int(kv, "width"));
    const auto count = static_cast<std::size_t>(kv_get_u64(kv, "count"));

    const std::string images = read_file(dir / "images.bin");
    const auto want_img = count * ds.image_elems() * 4;
    if (kv_get_u64(kv, "images_bytes") != want_img) {
        throw FormatError("manifest/payload length mismatch in dataset manifest");
    }
    if (images.size() < want_img) throw FormatError("truncated payload: images.bin");
    if (images.size() > want_img) throw FormatError("payload size mismatch: images.bin");

    const std::string labels = read_file(dir / "labels.bin");
    const auto want_lab = count * 2;
    if (labels.size() < want_lab) throw FormatError("truncated payload: labels.bin");
    if (labels.size() > want_lab) throw FormatError("payload size mismatch: labels.bin");

    ds.images.resize(count * ds.image_elems());
    const auto* ip = reinterpret_cast<const std::uint8_t*>(images.data());
    for (std::size_t i = 0; i < ds.images.size(); ++i) ds.images[i] = get_f32(ip + i * 4);
    ds.labels.resize(count);
    const auto* lp = reinterpret_cast<const std::uint8_t*>(labels.data());
    for (std::size_t i = 0; i < count; ++i) ds.labels[i] = get_u16(lp + i * 2);
    ds.validate();
    return ds;
}

}  // namespace procwarm::data
