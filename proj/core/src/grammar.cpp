#include "procwarm/grammar.hpp"

#include "procwarm/errors.hpp"
#include "procwarm/rng.hpp"

#include <algorithm>
#include <cmath>

namespace procwarm::grammar {

const char* to_string(Language lang) {
    switch (lang) {
        case Language::WW: return "ww";
        case Language::Dyck: return "dyck";
        case Language::DyckShuffle: return "dyck-shuffle";
    }
    return "?";
}

Language language_from_string(const std::string& name) {
    if (name == "ww") return Language::WW;
    if (name == "dyck") return Language::Dyck;
    if (name == "dyck-shuffle" || name == "dyck_shuffle") return Language::DyckShuffle;
    throw ValidationError("unknown language: " + name + " (expected ww|dyck|dyck-shuffle)");
}

void GrammarSpec::validate() const {
    if (vocab_size < 1) throw ValidationError("vocab_size must be positive");
    if (vocab_size >= 0xffff) throw ValidationError("vocab_size too large for 16-bit symbol ids");
    if (seq_len < 2) throw ValidationError("seq_len must be at least 2");
    if (seq_len % 2 != 0) {
        throw ValidationError("seq_len must be even: no valid " + std::string(to_string(language)) +
                              " string of odd length " + std::to_string(seq_len) + " exists");
    }
    if (dyck_family()) {
        if (k < 1) throw ValidationError("k must be positive");
        if (vocab_size != 2 * k) {
            throw ValidationError("Dyck variants require vocab_size == 2k (got vocab_size=" +
                                  std::to_string(vocab_size) + ", k=" + std::to_string(k) + ")");
        }
        if (!(p_open > 0.0 && p_open < 1.0)) throw ValidationError("p_open must lie in (0,1)");
    }
}

// ---------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------

namespace {

TokenSequence sample_ww(const GrammarSpec& spec, CounterRng& rng) {
    const int half = spec.seq_len / 2;
    TokenSequence seq(static_cast<std::size_t>(spec.seq_len));
    for (int i = 0; i < half; ++i) {
        seq[static_cast<std::size_t>(i)] =
            static_cast<TokenId>(rng.next_below(static_cast<std::uint64_t>(spec.vocab_size)));
    }
    std::copy(seq.begin(), seq.begin() + half, seq.begin() + half);
    return seq;
}

TokenSequence sample_dyck(const GrammarSpec& spec, CounterRng& rng) {
    const int n = spec.seq_len;
    const auto k = static_cast<std::uint64_t>(spec.k);
    TokenSequence seq;
    seq.reserve(static_cast<std::size_t>(n));

    std::vector<TokenId> stack;              // Dyck: opener types in nesting order
    std::vector<std::uint32_t> open_count;   // DyckShuffle: outstanding per type
    std::uint32_t open_types = 0;            // types with outstanding > 0
    if (spec.language == Language::DyckShuffle) open_count.assign(k, 0);

    int depth = 0;
    for (int pos = 0; pos < n; ++pos) {
        const int remaining = n - pos;
        // Opening leaves depth+1 brackets to close in remaining-1 slots.
        const bool can_open = depth + 2 <= remaining;
        const bool can_close = depth > 0;

        bool do_open;
        if (!can_close) {
            do_open = true;
        } else if (!can_open) {
            do_open = false;
        } else {
            do_open = rng.next_double() < spec.p_open;
        }

        if (do_open) {
            const auto type = static_cast<TokenId>(rng.next_below(k));
            seq.push_back(type);
            ++depth;
            if (spec.language == Language::Dyck) {
                stack.push_back(type);
            } else {
                if (open_count[type]++ == 0) ++open_types;
            }
        } else {
            TokenId type;
            if (spec.language == Language::Dyck) {
                type = stack.back();
                stack.pop_back();
            } else {
                // uniform over currently open types
                std::uint64_t pick = rng.next_below(open_types);
                std::size_t t = 0;
                for (;; ++t) {
                    if (open_count[t] == 0) continue;
                    if (pick == 0) break;
                    --pick;
                }
                type = static_cast<TokenId>(t);
                if (--open_count[type] == 0) --open_types;
            }
            seq.push_back(spec.closer_for(type));
            --depth;
        }
    }
    return seq;
}

}  // namespace

TokenSequence sample_sequence(const GrammarSpec& spec, std::uint64_t seed) {
    spec.validate();
    CounterRng rng(derive_key(seed, Stream::Sample, 0));
    if (spec.language == Language::WW) return sample_ww(spec, rng);
    return sample_dyck(spec, rng);
}

// ---------------------------------------------------------------------
// Recognition
// ---------------------------------------------------------------------

bool recognize(const GrammarSpec& spec, const TokenSequence& seq) {
    if (seq.size() != static_cast<std::size_t>(spec.seq_len)) return false;

    if (spec.language == Language::WW) {
        const std::size_t half = seq.size() / 2;
        for (std::size_t i = 0; i < half; ++i) {
            if (seq[i] >= spec.vocab_size || seq[i] != seq[half + i]) return false;
        }
        return true;
    }

    if (spec.language == Language::Dyck) {
        std::vector<TokenId> stack;
        for (TokenId t : seq) {
            if (spec.is_opener(t)) {
                stack.push_back(t);
            } else if (spec.is_closer(t)) {
                if (stack.empty() || stack.back() != spec.opener_for(t)) return false;
                stack.pop_back();
            } else {
                return false;
            }
        }
        return stack.empty();
    }

    // DyckShuffle: per-type prefix balance, totals zero at the end.
    std::vector<std::int64_t> balance(static_cast<std::size_t>(spec.k), 0);
    for (TokenId t : seq) {
        if (spec.is_opener(t)) {
            ++balance[t];
        } else if (spec.is_closer(t)) {
            if (--balance[spec.opener_for(t)] < 0) return false;
        } else {
            return false;
        }
    }
    return std::all_of(balance.begin(), balance.end(), [](std::int64_t b) { return b == 0; });
}

// ---------------------------------------------------------------------
// Masking
// ---------------------------------------------------------------------

MaskedExample build_mask(const GrammarSpec& spec, const TokenSequence& seq,
                         double mask_ratio, std::uint64_t seed) {
    spec.validate();
    if (seq.size() != static_cast<std::size_t>(spec.seq_len)) {
        throw ValidationError("sequence length does not match spec.seq_len");
    }
    if (!(mask_ratio > 0.0 && mask_ratio <= 1.0)) {
        throw ValidationError("mask_ratio must lie in (0,1]");
    }

    std::vector<std::uint32_t> positions;
    if (spec.language == Language::WW) {
        // the repeated copy is masked regardless of mask_ratio
        for (std::uint32_t i = static_cast<std::uint32_t>(seq.size() / 2); i < seq.size(); ++i) {
            positions.push_back(i);
        }
    } else {
        std::vector<std::uint32_t> maskable;
        for (std::uint32_t i = 0; i < seq.size(); ++i) {
            if (spec.is_closer(seq[i])) maskable.push_back(i);
        }
        if (maskable.empty()) {
            throw ValidationError("sequence has no maskable (closing) positions");
        }
        const auto want = static_cast<std::size_t>(
            std::ceil(mask_ratio * static_cast<double>(maskable.size())));
        const std::size_t count = std::min(want, maskable.size());

        // partial Fisher-Yates, then sort for strictly increasing targets
        CounterRng rng(derive_key(seed, Stream::Mask, 0));
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.next_below(maskable.size() - i));
            std::swap(maskable[i], maskable[j]);
        }
        positions.assign(maskable.begin(), maskable.begin() + static_cast<std::ptrdiff_t>(count));
        std::sort(positions.begin(), positions.end());
    }

    MaskedExample ex;
    ex.source = seq;
    ex.input_tokens = seq;
    ex.targets.reserve(positions.size());
    for (std::uint32_t pos : positions) {
        ex.targets.push_back({pos, seq[pos]});
        ex.input_tokens[pos] = spec.mask_id();
    }
    return ex;
}

// ---------------------------------------------------------------------
// Completion enumeration
// ---------------------------------------------------------------------

namespace {

// Depth-first fill of masked positions in position order, candidates in
// ascending id order, so results come out lexicographically sorted.
struct CompletionSearch {
    const GrammarSpec& spec;
    TokenSequence buf;
    std::vector<std::size_t> masked;  // ascending positions
    std::size_t limit;
    std::vector<TokenSequence> out;

    // incremental language state
    std::vector<TokenId> stack;            // Dyck
    std::vector<std::int64_t> balance;     // DyckShuffle
    std::int64_t open_total = 0;

    bool feasible_suffix(std::size_t next_pos) const {
        if (!spec.dyck_family()) return true;
        const auto remaining = static_cast<std::int64_t>(buf.size() - next_pos);
        const std::int64_t depth =
            spec.language == Language::Dyck ? static_cast<std::int64_t>(stack.size()) : open_total;
        return depth <= remaining && (remaining - depth) % 2 == 0;
    }

    // Applies buf[pos]; returns false if the prefix is already invalid.
    bool apply(std::size_t pos) {
        const TokenId t = buf[pos];
        switch (spec.language) {
            case Language::WW: {
                const std::size_t half = buf.size() / 2;
                if (t >= spec.vocab_size) return false;
                if (pos >= half && buf[pos - half] != t) return false;
                return true;
            }
            case Language::Dyck:
                if (spec.is_opener(t)) {
                    stack.push_back(t);
                    return true;
                }
                if (spec.is_closer(t)) {
                    if (stack.empty() || stack.back() != spec.opener_for(t)) return false;
                    stack.pop_back();
                    return true;
                }
                return false;
            case Language::DyckShuffle:
                if (spec.is_opener(t)) {
                    ++balance[t];
                    ++open_total;
                    return true;
                }
                if (spec.is_closer(t)) {
                    if (balance[spec.opener_for(t)] == 0) return false;
                    --balance[spec.opener_for(t)];
                    --open_total;
                    return true;
                }
                return false;
        }
        return false;
    }

    void undo(std::size_t pos) {
        const TokenId t = buf[pos];
        if (spec.language == Language::Dyck) {
            if (spec.is_opener(t)) {
                stack.pop_back();
            } else {
                stack.push_back(spec.opener_for(t));
            }
        } else if (spec.language == Language::DyckShuffle) {
            if (spec.is_opener(t)) {
                --balance[t];
                --open_total;
            } else {
                ++balance[spec.opener_for(t)];
                ++open_total;
            }
        }
    }

    // Walks positions [pos, end), branching at masked ones.
    void search(std::size_t pos, std::size_t next_mask) {
        if (out.size() >= limit) return;
        if (pos == buf.size()) {
            const bool complete = spec.language == Language::Dyck ? stack.empty()
                                : spec.language == Language::DyckShuffle ? open_total == 0
                                : true;
            if (complete) out.push_back(buf);
            return;
        }
        if (!feasible_suffix(pos)) return;

        const bool is_masked = next_mask < masked.size() && masked[next_mask] == pos;
        if (!is_masked) {
            if (apply(pos)) {
                search(pos + 1, next_mask);
                undo(pos);
            }
            return;
        }

        const int lo = spec.dyck_family() ? spec.k : 0;
        const int hi = spec.dyck_family() ? 2 * spec.k : spec.vocab_size;
        for (int c = lo; c < hi && out.size() < limit; ++c) {
            buf[pos] = static_cast<TokenId>(c);
            if (apply(pos)) {
                search(pos + 1, next_mask + 1);
                undo(pos);
            }
        }
        buf[pos] = spec.mask_id();
    }
};

}  // namespace

std::vector<TokenSequence> enumerate_completions(const GrammarSpec& spec,
                                                 const MaskedExample& example,
                                                 std::size_t limit) {
    spec.validate();
    if (example.input_tokens.size() != static_cast<std::size_t>(spec.seq_len)) {
        throw ValidationError("masked example length does not match spec.seq_len");
    }

    CompletionSearch search{.spec = spec,
                            .buf = example.input_tokens,
                            .masked = {},
                            .limit = limit,
                            .out = {},
                            .stack = {},
                            .balance = {},
                            .open_total = 0};
    for (std::size_t i = 0; i < search.buf.size(); ++i) {
        if (search.buf[i] == spec.mask_id()) search.masked.push_back(i);
    }
    if (search.masked.size() > 16) {
        throw ValidationError("instance too large: " + std::to_string(search.masked.size()) +
                              " masked positions exceed the enumeration guard of 16");
    }
    if (spec.language == Language::DyckShuffle) {
        search.balance.assign(static_cast<std::size_t>(spec.k), 0);
    }
    if (limit == 0) return {};
    search.search(0, 0);
    return search.out;
}

TokenSequence shuffle_within_sequence(const TokenSequence& seq, std::uint64_t seed) {
    TokenSequence out = seq;
    CounterRng rng(derive_key(seed, Stream::Shuffle, 0));
    for (std::size_t i = out.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(rng.next_below(i));
        std::swap(out[i - 1], out[j]);
    }
    return out;
}

}  // namespace procwarm::grammar
