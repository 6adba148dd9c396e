#include "procwarm/corpus.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"
#include "procwarm/hash.hpp"
#include "procwarm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace procwarm::corpus {

using grammar::GrammarSpec;
using grammar::Language;
using grammar::MaskedExample;
using grammar::TokenId;
using grammar::TokenSequence;

const char* to_string(Ablation a) {
    return a == Ablation::None ? "none" : "sequence-shuffled";
}

Ablation ablation_from_string(const std::string& name) {
    if (name == "none") return Ablation::None;
    if (name == "sequence-shuffled" || name == "shuffle" || name == "sequence_shuffled") {
        return Ablation::SequenceShuffled;
    }
    throw ValidationError("unknown ablation: " + name + " (expected none|sequence-shuffled)");
}

namespace {

// WW loses its copy structure under shuffling, so the ablation masks a
// uniformly random ceil(mask_ratio * N) positions instead.
MaskedExample uniform_position_mask(const GrammarSpec& spec, const TokenSequence& seq,
                                    double mask_ratio, std::uint64_t seed) {
    const std::size_t n = seq.size();
    std::vector<std::uint32_t> positions(n);
    for (std::size_t i = 0; i < n; ++i) positions[i] = static_cast<std::uint32_t>(i);
    const auto count = std::min<std::size_t>(
        static_cast<std::size_t>(std::ceil(mask_ratio * static_cast<double>(n))), n);
    CounterRng rng(derive_key(seed, Stream::Mask, 0));
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
        std::swap(positions[i], positions[j]);
    }
    positions.resize(count);
    std::sort(positions.begin(), positions.end());

    MaskedExample ex;
    ex.source = seq;
    ex.input_tokens = seq;
    for (std::uint32_t pos : positions) {
        ex.targets.push_back({pos, seq[pos]});
        ex.input_tokens[pos] = spec.mask_id();
    }
    return ex;
}

}  // namespace

MaskedExample make_example(const GrammarSpec& spec, std::uint64_t global_seed,
                           std::uint64_t index, double mask_ratio, Ablation ablation) {
    const std::uint64_t sample_seed = derive_key(global_seed, Stream::Sample, index);
    const std::uint64_t mask_seed = derive_key(global_seed, Stream::Mask, index);
    TokenSequence seq = grammar::sample_sequence(spec, sample_seed);
    if (ablation == Ablation::SequenceShuffled) {
        seq = grammar::shuffle_within_sequence(seq, derive_key(global_seed, Stream::Shuffle, index));
        if (spec.language == Language::WW) {
            return uniform_position_mask(spec, seq, mask_ratio, mask_seed);
        }
    }
    return grammar::build_mask(spec, seq, mask_ratio, mask_seed);
}

Corpus build_corpus(const GrammarSpec& spec, std::uint64_t count, double mask_ratio,
                    std::uint64_t global_seed, Ablation ablation) {
    spec.validate();
    if (count < 1) throw ValidationError("corpus count must be at least 1");
    Corpus c;
    c.spec = spec;
    c.global_seed = global_seed;
    c.mask_ratio = mask_ratio;
    c.ablation = ablation;
    c.examples.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        c.examples.push_back(make_example(spec, global_seed, i, mask_ratio, ablation));
    }
    return c;
}

// ---------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------

CorpusStats corpus_stats(const Corpus& c) {
    if (c.examples.empty()) throw ValidationError("corpus_stats requires a nonempty corpus");
    const auto n = static_cast<std::size_t>(c.spec.seq_len);
    const std::size_t count = c.examples.size();

    CorpusStats s;
    s.histogram.assign(static_cast<std::size_t>(c.spec.vocab_size), 0);
    s.token_total = count * n;

    std::vector<std::vector<std::uint64_t>> pos_counts(
        n, std::vector<std::uint64_t>(static_cast<std::size_t>(c.spec.vocab_size), 0));

    std::uint64_t valid = 0;
    std::uint64_t masked_total = 0;
    double depth_sum = 0.0;
    double max_depth_sum = 0.0;

    for (const MaskedExample& ex : c.examples) {
        if (grammar::recognize(c.spec, ex.source)) ++valid;
        masked_total += ex.targets.size();

        std::int64_t depth = 0;
        std::int64_t seq_max = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const TokenId t = ex.source[i];
            ++s.histogram[t];
            ++pos_counts[i][t];
            if (c.spec.dyck_family()) {
                depth += c.spec.is_opener(t) ? 1 : -1;
                seq_max = std::max(seq_max, depth);
                depth_sum += static_cast<double>(depth);
            }
        }
        if (c.spec.dyck_family()) {
            max_depth_sum += static_cast<double>(seq_max);
            s.max_depth = std::max(s.max_depth, static_cast<std::uint32_t>(seq_max));
        }
    }

    s.validity_rate = static_cast<double>(valid) / static_cast<double>(count);
    s.masked_fraction = static_cast<double>(masked_total) / static_cast<double>(s.token_total);
    if (c.spec.dyck_family()) {
        s.mean_depth = depth_sum / static_cast<double>(s.token_total);
        s.mean_max_depth = max_depth_sum / static_cast<double>(count);
    }

    s.per_position_entropy.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        double h = 0.0;
        for (std::uint64_t cnt : pos_counts[i]) {
            if (cnt == 0) continue;
            const double p = static_cast<double>(cnt) / static_cast<double>(count);
            h -= p * std::log2(p);
        }
        s.per_position_entropy[i] = h;
    }
    return s;
}

std::string stats_report(const Corpus& c, const CorpusStats& s) {
    std::ostringstream out;
    out << "corpus: language=" << grammar::to_string(c.spec.language)
        << " k=" << c.spec.k << " vocab=" << c.spec.vocab_size
        << " seq_len=" << c.spec.seq_len << " count=" << c.examples.size()
        << " ablation=" << to_string(c.ablation) << "\n";
    out << "tokens total: " << s.token_total << "\n";
    out << "validity rate: " << s.validity_rate << "\n";
    out << "masked fraction: " << s.masked_fraction << "\n";
    if (c.spec.dyck_family()) {
        out << "depth: mean=" << s.mean_depth << " mean_max=" << s.mean_max_depth
            << " max=" << s.max_depth << "\n";
    }
    double hmin = s.per_position_entropy.empty() ? 0.0 : s.per_position_entropy[0];
    double hmax = hmin, hsum = 0.0;
    for (double h : s.per_position_entropy) {
        hmin = std::min(hmin, h);
        hmax = std::max(hmax, h);
        hsum += h;
    }
    out << "per-position entropy (bits): mean="
        << hsum / static_cast<double>(s.per_position_entropy.size()) << " min=" << hmin
        << " max=" << hmax << "\n";
    out << "token histogram (id count share):\n";
    for (std::size_t id = 0; id < s.histogram.size(); ++id) {
        if (s.histogram[id] == 0) continue;
        out << "  " << id << " " << s.histogram[id] << " "
            << static_cast<double>(s.histogram[id]) / static_cast<double>(s.token_total) << "\n";
    }
    return out.str();
}

KvMap stats_kv(const Corpus& c, const CorpusStats& s) {
    KvMap kv;
    kv["language"] = grammar::to_string(c.spec.language);
    kv["k"] = std::to_string(c.spec.k);
    kv["vocab_size"] = std::to_string(c.spec.vocab_size);
    kv["seq_len"] = std::to_string(c.spec.seq_len);
    kv["count"] = std::to_string(c.examples.size());
    kv["ablation"] = to_string(c.ablation);
    kv["token_total"] = std::to_string(s.token_total);
    kv["validity_rate"] = format_double(s.validity_rate);
    kv["masked_fraction"] = format_double(s.masked_fraction);
    if (c.spec.dyck_family()) {
        kv["mean_depth"] = format_double(s.mean_depth);
        kv["mean_max_depth"] = format_double(s.mean_max_depth);
        kv["max_depth"] = std::to_string(s.max_depth);
    }
    double hsum = 0.0;
    for (double h : s.per_position_entropy) hsum += h;
    kv["entropy_mean_bits"] =
        format_double(hsum / static_cast<double>(s.per_position_entropy.size()));
    for (std::size_t id = 0; id < s.histogram.size(); ++id) {
        kv["hist_" + std::to_string(id)] = std::to_string(s.histogram[id]);
    }
    return kv;
}

// ---------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------

namespace {
constexpr int kCorpusVersion = 1;
}

std::string corpus_config_hash(const GrammarSpec& spec, std::uint64_t count, double mask_ratio,
                               std::uint64_t global_seed, Ablation ablation) {
    KvMap kv;
    kv["language"] = grammar::to_string(spec.language);
    kv["k"] = std::to_string(spec.k);
    kv["vocab_size"] = std::to_string(spec.vocab_size);
    kv["p_open"] = format_double(spec.p_open);
    kv["seq_len"] = std::to_string(spec.seq_len);
    kv["count"] = std::to_string(count);
    kv["mask_ratio"] = format_double(mask_ratio);
    kv["global_seed"] = std::to_string(global_seed);
    kv["ablation"] = to_string(ablation);
    return hex64(fnv1a64(kv_serialize(kv)));
}

void write_corpus(const Corpus& c, const std::filesystem::path& dir) {
    c.spec.validate();
    const auto n = static_cast<std::size_t>(c.spec.seq_len);

    std::vector<std::uint8_t> tokens;
    tokens.reserve(c.examples.size() * n * 2);
    std::vector<std::uint8_t> masks;
    for (const MaskedExample& ex : c.examples) {
        for (TokenId t : ex.source) put_u16(tokens, t);
        put_u16(masks, static_cast<std::uint16_t>(ex.targets.size()));
        for (const auto& tgt : ex.targets) put_u16(masks, static_cast<std::uint16_t>(tgt.position));
    }

    KvMap kv;
    kv["format"] = "procwarm-corpus";
    kv["version"] = std::to_string(kCorpusVersion);
    kv["language"] = grammar::to_string(c.spec.language);
    kv["k"] = std::to_string(c.spec.k);
    kv["vocab_size"] = std::to_string(c.spec.vocab_size);
    kv["p_open"] = format_double(c.spec.p_open);
    kv["seq_len"] = std::to_string(c.spec.seq_len);
    kv["count"] = std::to_string(c.examples.size());
    kv["global_seed"] = std::to_string(c.global_seed);
    kv["mask_ratio"] = format_double(c.mask_ratio);
    kv["ablation"] = to_string(c.ablation);
    kv["tokens_bytes"] = std::to_string(tokens.size());
    kv["masks_bytes"] = std::to_string(masks.size());
    kv["config_hash"] = corpus_config_hash(c.spec, c.examples.size(), c.mask_ratio,
                                           c.global_seed, c.ablation);

    std::filesystem::create_directories(dir);
    write_file_atomic(dir / "tokens.bin", tokens.data(), tokens.size());
    write_file_atomic(dir / "masks.bin", masks.data(), masks.size());
    write_file_atomic(dir / "manifest.txt", kv_serialize(kv));
}

Corpus read_corpus(const std::filesystem::path& dir) {
    const KvMap kv = kv_parse(read_file(dir / "manifest.txt"));
    if (kv_get_or(kv, "format", "") != "procwarm-corpus") {
        throw FormatError("not a corpus manifest: " + (dir / "manifest.txt").string());
    }
    if (kv_get_int(kv, "version") != kCorpusVersion) {
        throw FormatError("corpus version mismatch: file has " + kv_get(kv, "version") +
                          ", reader supports " + std::to_string(kCorpusVersion));
    }

    Corpus c;
    c.spec.language = grammar::language_from_string(kv_get(kv, "language"));
    c.spec.k = static_cast<int>(kv_get_int(kv, "k"));
    c.spec.vocab_size = static_cast<int>(kv_get_int(kv, "vocab_size"));
    c.spec.p_open = kv_get_double(kv, "p_open");
    c.spec.seq_len = static_cast<int>(kv_get_int(kv, "seq_len"));
    c.spec.validate();
    c.global_seed = kv_get_u64(kv, "global_seed");
    c.mask_ratio = kv_get_double(kv, "mask_ratio");
    c.ablation = ablation_from_string(kv_get(kv, "ablation"));

    const auto count = static_cast<std::size_t>(kv_get_u64(kv, "count"));
    const auto n = static_cast<std::size_t>(c.spec.seq_len);
    const auto tokens_bytes = static_cast<std::size_t>(kv_get_u64(kv, "tokens_bytes"));
    if (tokens_bytes != count * n * 2) {
        throw FormatError("manifest/payload length mismatch: tokens_bytes=" +
                          std::to_string(tokens_bytes) + " but count*seq_len*2=" +
                          std::to_string(count * n * 2));
    }

    const std::string tokens = read_file(dir / "tokens.bin");
    if (tokens.size() < tokens_bytes) {
        throw FormatError("truncated payload: tokens.bin has " + std::to_string(tokens.size()) +
                          " bytes, expected " + std::to_string(tokens_bytes));
    }
    if (tokens.size() > tokens_bytes) {
        throw FormatError("payload size mismatch: tokens.bin has " + std::to_string(tokens.size()) +
                          " bytes, expected " + std::to_string(tokens_bytes));
    }

    const std::string masks = read_file(dir / "masks.bin");
    const auto masks_bytes = static_cast<std::size_t>(kv_get_u64(kv, "masks_bytes"));
    if (masks.size() < masks_bytes) {
        throw FormatError("truncated payload: masks.bin has " + std::to_string(masks.size()) +
                          " bytes, expected " + std::to_string(masks_bytes));
    }
    if (masks.size() > masks_bytes) {
        throw FormatError("payload size mismatch: masks.bin has " + std::to_string(masks.size()) +
                          " bytes, expected " + std::to_string(masks_bytes));
    }

    const auto* tp = reinterpret_cast<const std::uint8_t*>(tokens.data());
    const auto* mp = reinterpret_cast<const std::uint8_t*>(masks.data());
    std::size_t moff = 0;
    c.examples.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        MaskedExample ex;
        ex.source.resize(n);
        for (std::size_t j = 0; j < n; ++j) ex.source[j] = get_u16(tp + (i * n + j) * 2);
        ex.input_tokens = ex.source;

        if (moff + 2 > masks.size()) throw FormatError("truncated payload: masks.bin ends early");
        const std::uint16_t m = get_u16(mp + moff);
        moff += 2;
        if (moff + 2 * static_cast<std::size_t>(m) > masks.size()) {
            throw FormatError("truncated payload: masks.bin ends early");
        }
        std::uint32_t prev = 0;
        bool first = true;
        for (std::uint16_t j = 0; j < m; ++j) {
            const std::uint16_t pos = get_u16(mp + moff);
            moff += 2;
            if (pos >= n || (!first && pos <= prev)) {
                throw FormatError("corrupt mask payload: positions not strictly increasing");
            }
            first = false;
            prev = pos;
            ex.targets.push_back({pos, ex.source[pos]});
            ex.input_tokens[pos] = c.spec.mask_id();
        }
        c.examples.push_back(std::move(ex));
    }
    if (moff != masks.size()) {
        throw FormatError("payload size mismatch: masks.bin has trailing bytes");
    }
    return c;
}

}  // namespace procwarm::corpus
