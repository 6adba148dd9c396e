#pragma once

#include "procwarm/kv.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace procwarm::train {

struct MetricRecord {
    std::uint64_t step = 0;
    std::string split = "train";  // train | eval
    double lr = 0.0;
    double loss = 0.0;
    double accuracy = 0.0;
    double wall_ms = 0.0;  // recorded as 0 in reference mode

    bool operator==(const MetricRecord&) const = default;
};

// One training run's per-step records plus identifying metadata.
struct RunMetrics {
    std::string run_id;
    std::string config_hash;
    KvMap meta;  // free-form run annotations (augmentation policy etc.)
    std::vector<MetricRecord> records;

    bool operator==(const RunMetrics&) const = default;

    // Steps strictly increasing within each split; losses finite.
    void validate() const;

    // Accuracy of the last record in `split`; throws if there is none.
    double final_accuracy(const std::string& split) const;
};

// Line-delimited text: '#' header lines for metadata, then one
// "step=... split=... lr=... loss=... acc=... wall_ms=..." line per record.
void write_metrics(const RunMetrics& m, const std::filesystem::path& path);
RunMetrics read_metrics(const std::filesystem::path& path);

}  // namespace procwarm::train
