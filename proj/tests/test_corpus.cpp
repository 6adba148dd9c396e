#include "doctest.h"

#include "procwarm/corpus.hpp"
#include "procwarm/errors.hpp"
#include "procwarm/fsio.hpp"

#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

using namespace procwarm;
using namespace procwarm::corpus;
using namespace procwarm::grammar;

namespace {

GrammarSpec dyck_spec(int k, int n, Language lang = Language::Dyck) {
    GrammarSpec spec;
    spec.language = lang;
    spec.k = k;
    spec.vocab_size = 2 * k;
    spec.seq_len = n;
    return spec;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void spit(const std::filesystem::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    REQUIRE(out.good());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// Expected mean of the per-sequence maximum depth under the sampler's
// decision process, computed by exact dynamic programming over
// (position, depth, running max) states.
double expected_max_depth(int n, double p_open) {
    std::map<std::pair<int, int>, double> states;  // (depth, maxdepth) -> prob
    states[{0, 0}] = 1.0;
    for (int pos = 0; pos < n; ++pos) {
        std::map<std::pair<int, int>, double> next;
        const int remaining = n - pos;
        for (const auto& [key, prob] : states) {
            const auto [depth, maxd] = key;
            const bool can_open = depth + 2 <= remaining;
            const bool can_close = depth > 0;
            double open_p;
            if (!can_close) {
                open_p = 1.0;
            } else if (!can_open) {
                open_p = 0.0;
            } else {
                open_p = p_open;
            }
            if (open_p > 0.0) next[{depth + 1, std::max(maxd, depth + 1)}] += prob * open_p;
            if (open_p < 1.0) next[{depth - 1, maxd}] += prob * (1.0 - open_p);
        }
        states = std::move(next);
    }
    double mean = 0.0;
    for (const auto& [key, prob] : states) {
        REQUIRE(key.first == 0);
        mean += key.second * prob;
    }
    return mean;
}

}  // namespace

// ====================================================================
// Construction and streaming
// ====================================================================

TEST_CASE("materialized and streamed generation agree") {
    struct Case {
        GrammarSpec spec;
        Ablation ablation;
    };
    std::vector<Case> cases;
    cases.push_back({dyck_spec(2, 12), Ablation::None});
    cases.push_back({dyck_spec(2, 12), Ablation::SequenceShuffled});
    cases.push_back({dyck_spec(3, 10, Language::DyckShuffle), Ablation::None});
    GrammarSpec ww;
    ww.language = Language::WW;
    ww.vocab_size = 16;
    ww.seq_len = 12;
    cases.push_back({ww, Ablation::None});
    cases.push_back({ww, Ablation::SequenceShuffled});

    for (const auto& [spec, ablation] : cases) {
        const auto built = build_corpus(spec, 40, 0.5, 99, ablation);
        REQUIRE(built.examples.size() == 40);
        for (std::uint64_t i = 0; i < 40; ++i) {
            CHECK(built.examples[i] == make_example(spec, 99, i, 0.5, ablation));
        }
    }
}

TEST_CASE("examples differ across indices and seeds") {
    const auto spec = dyck_spec(4, 32);
    const auto a = make_example(spec, 1, 0, 0.5, Ablation::None);
    const auto b = make_example(spec, 1, 1, 0.5, Ablation::None);
    const auto c = make_example(spec, 2, 0, 0.5, Ablation::None);
    CHECK(a == make_example(spec, 1, 0, 0.5, Ablation::None));
    CHECK_FALSE(a == b);
    CHECK_FALSE(a == c);
}

TEST_CASE("unshuffled corpora are fully valid; shuffling preserves symbols") {
    const auto spec = dyck_spec(1, 8);
    const auto plain = build_corpus(spec, 500, 1.0, 7, Ablation::None);
    const auto mixed = build_corpus(spec, 500, 1.0, 7, Ablation::SequenceShuffled);

    const auto ps = corpus_stats(plain);
    const auto ms = corpus_stats(mixed);
    CHECK(ps.validity_rate == 1.0);
    CHECK(ps.histogram == ms.histogram);

    for (std::size_t i = 0; i < plain.examples.size(); ++i) {
        auto a = plain.examples[i].source;
        auto b = mixed.examples[i].source;
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        CHECK(a == b);
    }
}

TEST_CASE("shuffled single-pair corpora hit the balanced-arrangement validity rate") {
    const auto spec = dyck_spec(1, 8);
    const auto mixed = build_corpus(spec, 20000, 1.0, 3, Ablation::SequenceShuffled);
    const auto s = corpus_stats(mixed);
    CHECK(s.validity_rate > 0.18);  // exact rate is 14/70 = 0.2
    CHECK(s.validity_rate < 0.22);
}

TEST_CASE("shuffled copy-language examples re-derive a uniform mask") {
    GrammarSpec spec;
    spec.language = Language::WW;
    spec.vocab_size = 16;
    spec.seq_len = 12;
    const auto ex = make_example(spec, 5, 0, 0.5, Ablation::SequenceShuffled);
    CHECK(ex.targets.size() == 6);  // ceil(0.5 * 12)
    for (std::size_t i = 0; i + 1 < ex.targets.size(); ++i) {
        CHECK(ex.targets[i].position < ex.targets[i + 1].position);
    }
    // masked positions need not sit in the second half
    const auto& t = ex.targets;
    const bool any_first_half =
        std::any_of(t.begin(), t.end(), [](const MaskTarget& m) { return m.position < 6; });
    CHECK(any_first_half);
}

// ====================================================================
// Statistics
// ====================================================================

TEST_CASE("length-2 corpora split symbols evenly") {
    const auto spec = dyck_spec(1, 2);
    const auto c = build_corpus(spec, 300, 1.0, 11, Ablation::None);
    const auto s = corpus_stats(c);
    REQUIRE(s.histogram.size() == 2);
    CHECK(s.histogram[0] == 300);
    CHECK(s.histogram[1] == 300);
    CHECK(s.token_total == 600);
    CHECK(s.mean_depth == 0.5);      // depth profile is 1, 0
    CHECK(s.mean_max_depth == 1.0);
    CHECK(s.max_depth == 1);
    CHECK(s.masked_fraction == 0.5);
    // both positions are constant
    REQUIRE(s.per_position_entropy.size() == 2);
    CHECK(s.per_position_entropy[0] == 0.0);
    CHECK(s.per_position_entropy[1] == 0.0);
}

TEST_CASE("sampled mean max depth matches the process dynamics") {
    const auto spec = dyck_spec(1, 8);  // p_open = 0.6 default
    const double expect = expected_max_depth(8, 0.6);
    const auto c = build_corpus(spec, 100000, 1.0, 17, Ablation::None);
    const auto s = corpus_stats(c);
    CHECK(std::abs(s.mean_max_depth - expect) / expect < 0.02);
}

TEST_CASE("copy-language positions carry full symbol entropy") {
    GrammarSpec spec;
    spec.language = Language::WW;
    spec.vocab_size = 4;
    spec.seq_len = 4;
    const auto c = build_corpus(spec, 8000, 0.5, 23, Ablation::None);
    const auto s = corpus_stats(c);
    for (double h : s.per_position_entropy) {
        CHECK(h > 1.9);  // uniform over 4 symbols approaches 2 bits
        CHECK(h <= 2.0 + 1e-9);
    }
    CHECK(s.masked_fraction == 0.5);
}

TEST_CASE("stats reports carry the headline numbers") {
    const auto spec = dyck_spec(2, 8);
    const auto c = build_corpus(spec, 64, 0.5, 1, Ablation::None);
    const auto s = corpus_stats(c);
    const auto text = stats_report(c, s);
    CHECK(text.find("validity") != std::string::npos);
    CHECK(text.find("dyck") != std::string::npos);

    const auto kv = stats_kv(c, s);
    CHECK(kv.at("language") == "dyck");
    CHECK(kv.at("count") == "64");
    CHECK(kv.at("validity_rate") == "1");
    CHECK(kv.count("hist_0") == 1);
    CHECK(kv.count("entropy_mean_bits") == 1);
}

// ====================================================================
// Persistence
// ====================================================================

TEST_CASE("write/read round-trips exactly and rewrites are byte-identical") {
    TempDir tmp;
    const auto spec = dyck_spec(2, 12);
    const auto c = build_corpus(spec, 50, 0.5, 42, Ablation::SequenceShuffled);

    write_corpus(c, tmp.sub("c1"));
    const auto back = read_corpus(tmp.sub("c1"));
    CHECK(back == c);

    write_corpus(c, tmp.sub("c2"));
    for (const char* name : {"manifest.txt", "tokens.bin", "masks.bin"}) {
        CHECK(slurp(tmp.path() / "c1" / name) == slurp(tmp.path() / "c2" / name));
    }
}

TEST_CASE("manifest records the config hash") {
    TempDir tmp;
    const auto spec = dyck_spec(2, 8);
    const auto c = build_corpus(spec, 10, 0.5, 1, Ablation::None);
    write_corpus(c, tmp.sub("c"));
    const auto kv = kv_parse(slurp(tmp.path() / "c" / "manifest.txt"));
    CHECK(kv.at("format") == "procwarm-corpus");
    CHECK(kv.at("config_hash") ==
          corpus_config_hash(spec, 10, 0.5, 1, Ablation::None));
    CHECK(kv.at("count") == "10");
}

TEST_CASE("config hashes separate every generation parameter") {
    const auto spec = dyck_spec(2, 8);
    const auto base = corpus_config_hash(spec, 10, 0.5, 1, Ablation::None);
    CHECK(base == corpus_config_hash(spec, 10, 0.5, 1, Ablation::None));
    CHECK(base != corpus_config_hash(spec, 11, 0.5, 1, Ablation::None));
    CHECK(base != corpus_config_hash(spec, 10, 0.25, 1, Ablation::None));
    CHECK(base != corpus_config_hash(spec, 10, 0.5, 2, Ablation::None));
    CHECK(base != corpus_config_hash(spec, 10, 0.5, 1, Ablation::SequenceShuffled));
    auto other = spec;
    other.seq_len = 10;
    CHECK(base != corpus_config_hash(other, 10, 0.5, 1, Ablation::None));
}

TEST_CASE("reading a missing corpus fails with an io error") {
    TempDir tmp;
    CHECK_THROWS_AS(read_corpus(tmp.sub("nope")), IoError);
}

TEST_CASE("corrupted corpora are rejected with precise diagnoses") {
    TempDir tmp;
    const auto spec = dyck_spec(2, 8);
    const auto c = build_corpus(spec, 10, 0.5, 1, Ablation::None);
    const auto dir = tmp.path() / "c";
    write_corpus(c, dir);
    const auto manifest = slurp(dir / "manifest.txt");
    const auto tokens = slurp(dir / "tokens.bin");
    const auto masks = slurp(dir / "masks.bin");

    auto expect_message = [&](const std::string& needle) {
        try {
            read_corpus(dir);
            FAIL("expected a FormatError mentioning: " << needle);
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find(needle) != std::string::npos);
        }
    };

    SUBCASE("wrong format tag") {
        spit(dir / "manifest.txt", "format=other\n");
        expect_message("not a corpus manifest");
    }
    SUBCASE("future version") {
        auto kv = kv_parse(manifest);
        kv["version"] = "2";
        spit(dir / "manifest.txt", kv_serialize(kv));
        expect_message("version mismatch");
    }
    SUBCASE("manifest disagrees with its own length fields") {
        auto kv = kv_parse(manifest);
        kv["tokens_bytes"] = "6";
        spit(dir / "manifest.txt", kv_serialize(kv));
        expect_message("manifest/payload length mismatch");
    }
    SUBCASE("token payload truncated") {
        spit(dir / "tokens.bin", tokens.substr(0, tokens.size() - 2));
        expect_message("truncated payload");
    }
    SUBCASE("token payload oversized") {
        spit(dir / "tokens.bin", tokens + std::string(2, '\0'));
        expect_message("payload size mismatch");
    }
    SUBCASE("mask payload truncated") {
        spit(dir / "masks.bin", masks.substr(0, masks.size() - 1));
        expect_message("truncated payload");
    }
    SUBCASE("mask positions out of order") {
        auto bad = masks;
        REQUIRE(bad.size() >= 6);
        // first record: count, then positions; swap the first two positions
        std::swap(bad[2], bad[4]);
        std::swap(bad[3], bad[5]);
        spit(dir / "masks.bin", bad);
        expect_message("not strictly increasing");
    }
}

TEST_CASE("ablation names round-trip") {
    CHECK(ablation_from_string(to_string(Ablation::None)) == Ablation::None);
    CHECK(ablation_from_string(to_string(Ablation::SequenceShuffled)) == Ablation::SequenceShuffled);
    CHECK_THROWS_AS(ablation_from_string("garbled"), ValidationError);
}
