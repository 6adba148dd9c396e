#pragma once

#include "procwarm/grammar.hpp"
#include "procwarm/kv.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace procwarm::corpus {

// Data ablation from the warm-up analysis: SequenceShuffled permutes the
// tokens inside every sequence before masking, destroying structure while
// keeping the overall symbol distribution.
enum class Ablation { None, SequenceShuffled };

const char* to_string(Ablation a);
Ablation ablation_from_string(const std::string& name);

struct Corpus {
    grammar::GrammarSpec spec;
    std::uint64_t global_seed = 0;
    double mask_ratio = 0.5;
    Ablation ablation = Ablation::None;
    std::vector<grammar::MaskedExample> examples;

    bool operator==(const Corpus&) const = default;
};

// The streaming unit: example `index` of the corpus identified by
// (spec, global_seed, mask_ratio, ablation). Materialized and streamed
// generation agree exactly because all randomness is keyed by index.
//
// Under SequenceShuffled the mask is re-derived from the shuffled
// sequence: close-only positions for the Dyck family, and a uniformly
// random ceil(mask_ratio * N) positions for WW (whose structural mask
// would be meaningless after shuffling).
grammar::MaskedExample make_example(const grammar::GrammarSpec& spec, std::uint64_t global_seed,
                                    std::uint64_t index, double mask_ratio, Ablation ablation);

Corpus build_corpus(const grammar::GrammarSpec& spec, std::uint64_t count, double mask_ratio,
                    std::uint64_t global_seed, Ablation ablation);

struct CorpusStats {
    std::vector<std::uint64_t> histogram;     // symbol id -> count over sources
    std::uint64_t token_total = 0;            // == count * seq_len
    double validity_rate = 0.0;               // fraction of sources recognize() accepts
    double mean_depth = 0.0;                  // Dyck family: mean depth over all positions
    double mean_max_depth = 0.0;              // Dyck family: mean of per-sequence max depth
    std::uint32_t max_depth = 0;              // Dyck family: global max
    std::vector<double> per_position_entropy; // bits, one per position
    double masked_fraction = 0.0;             // masked positions / all positions
};

CorpusStats corpus_stats(const Corpus& c);

// Human-readable flat report and the machine-readable key/value form.
std::string stats_report(const Corpus& c, const CorpusStats& s);
KvMap stats_kv(const Corpus& c, const CorpusStats& s);

// On-disk layout under `dir`:
//   manifest.txt  key=value: spec, seed, count, payload sizes, config hash
//   tokens.bin    count * seq_len little-endian u16 source symbol ids
//   masks.bin     per example: u16 mask count, then that many u16 positions
// Writes are atomic per file (temp + rename). read(write(c)) == c.
void write_corpus(const Corpus& c, const std::filesystem::path& dir);
Corpus read_corpus(const std::filesystem::path& dir);

// Hash recorded in the manifest; stable across runs for identical inputs.
std::string corpus_config_hash(const grammar::GrammarSpec& spec, std::uint64_t count,
                               double mask_ratio, std::uint64_t global_seed, Ablation ablation);

}  // namespace procwarm::corpus
