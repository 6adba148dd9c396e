#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace procwarm::data {

// Raw-tensor image dataset: values in [0,1], stored (count, channels,
// height, width) row-major.
struct ImageDataset {
    std::string name;
    int num_classes = 10;
    int channels = 3;
    int height = 32;
    int width = 32;
    std::vector<float> images;
    std::vector<std::uint16_t> labels;

    bool operator==(const ImageDataset&) const = default;

    std::size_t count() const { return labels.size(); }
    std::size_t image_elems() const {
        return static_cast<std::size_t>(channels) * height * width;
    }
    const float* image(std::size_t i) const { return images.data() + i * image_elems(); }

    void validate() const;
};

// Built-in 10-class synthetic task: geometric shapes rendered into 32x32
// RGB with jittered position, size and color over a noisy background.
// Example i is a pure function of (seed, i), so the dataset needs no
// downloads and regenerates bit-identically.
ImageDataset make_synthetic_shapes(std::size_t count, std::uint64_t seed);

// Directory layout: manifest.txt, images.bin (little-endian f32),
// labels.bin (little-endian u16). Round-trips exactly.
void write_dataset(const ImageDataset& ds, const std::filesystem::path& dir);
ImageDataset read_dataset(const std::filesystem::path& dir);

}  // namespace procwarm::data
