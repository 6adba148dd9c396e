#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace procwarm::grammar {

// The three symbolic languages. WW is regular (a string followed by its
// exact copy), Dyck is context-free (properly nested brackets over k
// pair types), DyckShuffle is context-sensitive (per-type balance with
// crossing allowed).
enum class Language { WW, Dyck, DyckShuffle };

const char* to_string(Language lang);
Language language_from_string(const std::string& name);

using TokenId = std::uint16_t;
using TokenSequence = std::vector<TokenId>;

// Which language to sample, its alphabet split and sampling parameters.
//
// Symbol layout for the Dyck family: ids [0,k) are openers, [k,2k) are
// closers, and opener i pairs with closer k+i, so matching is arithmetic.
// WW uses the full range [0, vocab_size). Id vocab_size is reserved for
// the mask symbol and never appears in a sampled sequence.
struct GrammarSpec {
    Language language = Language::Dyck;
    int k = 64;
    int vocab_size = 128;
    double p_open = 0.6;
    int seq_len = 196;

    // Throws ValidationError on violated invariants (vocab_size != 2k for
    // Dyck variants, odd seq_len, p_open outside (0,1), ...).
    void validate() const;

    bool operator==(const GrammarSpec&) const = default;

    bool dyck_family() const { return language != Language::WW; }
    TokenId mask_id() const { return static_cast<TokenId>(vocab_size); }
    bool is_opener(TokenId t) const { return dyck_family() && t < static_cast<TokenId>(k); }
    bool is_closer(TokenId t) const {
        return dyck_family() && t >= static_cast<TokenId>(k) && t < static_cast<TokenId>(2 * k);
    }
    TokenId closer_for(TokenId opener) const { return static_cast<TokenId>(opener + k); }
    TokenId opener_for(TokenId closer) const { return static_cast<TokenId>(closer - k); }
};

struct MaskTarget {
    std::uint32_t position;
    TokenId symbol;  // the original symbol at that position

    bool operator==(const MaskTarget&) const = default;
};

// A training example: the source sequence with selected positions
// replaced by the mask symbol, plus the prediction targets.
struct MaskedExample {
    TokenSequence input_tokens;       // length N; mask_id at target positions
    std::vector<MaskTarget> targets;  // strictly increasing positions
    TokenSequence source;             // the unmasked sequence

    bool operator==(const MaskedExample&) const = default;
};

// Draws one valid fixed-length sequence. Deterministic in (spec, seed).
//
// Dyck: stack-based sampling; at each step a uniformly random bracket
// type is opened with probability p_open when the remaining budget
// allows, otherwise the top of stack is closed. Closing is forced when
// the remaining positions equal the stack depth; opening is forced when
// the stack is empty. DyckShuffle closes a uniformly random currently
// open type instead of the top of stack. WW samples N/2 symbols and
// appends an exact copy.
TokenSequence sample_sequence(const GrammarSpec& spec, std::uint64_t seed);

// Membership test for the spec's language. Total on sequences of
// length spec.seq_len whose ids lie in the alphabet; anything outside
// the alphabet is simply not in the language.
bool recognize(const GrammarSpec& spec, const TokenSequence& seq);

// Selects mask positions and returns the masked example. For the Dyck
// family the maskable positions are exactly the closing tokens and
// ceil(mask_ratio * #closers) of them are drawn uniformly without
// replacement; for WW the entire second half is masked regardless of
// mask_ratio. Deterministic in seed. The caller is expected to pass a
// sequence accepted by recognize (the corpus ablation path deliberately
// passes shuffled sequences; the close-only rule still applies).
MaskedExample build_mask(const GrammarSpec& spec, const TokenSequence& seq,
                         double mask_ratio, std::uint64_t seed);

// All fillings of the masked positions with symbols from the maskable
// sub-alphabet (closers for the Dyck family, the full alphabet for WW)
// that make recognize succeed, in lexicographic order, truncated to
// `limit`. Guarded: throws ValidationError ("instance too large") when
// more than 16 positions are masked.
std::vector<TokenSequence> enumerate_completions(const GrammarSpec& spec,
                                                 const MaskedExample& example,
                                                 std::size_t limit);

// Uniformly random permutation of the tokens; the symbol multiset is
// preserved exactly. Deterministic in seed.
TokenSequence shuffle_within_sequence(const TokenSequence& seq, std::uint64_t seed);

}  // namespace procwarm::grammar
