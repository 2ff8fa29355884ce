#pragma once

#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace smellmap::lex {

struct SmellTerm {
    std::string surface;   // normalized, tokens joined by single spaces
    std::string language;  // ISO 639-1 two-letter code
    std::string notes;
};

struct SmellLexicon {
    std::vector<SmellTerm> terms;  // sorted by (language, surface)
    std::string version;

    std::set<std::string> languages() const;
    std::vector<std::string> surfaces(const std::string& language) const;
};

struct LoadReport {
    SmellLexicon lexicon;
    std::size_t blocked_removed = 0;  // rows dropped by the blocklist
};

// Lowercase + compose + strip edge punctuation; see textnorm.
std::string normalize_token(const std::string& raw);

// Canonical form of a possibly multi-word term: normalized tokens joined
// by single spaces.
std::string normalize_term(const std::string& raw);

// Conservative combiner for independently produced annotation lists: keeps
// only terms present in every list. Requires at least 3 lists; output is
// normalized, deduplicated and sorted.
std::vector<std::string> intersect_annotations(
    const std::vector<std::vector<std::string>>& lists);

// CSV header `term,language,notes`. Blocklisted terms (normalized match,
// any language) are dropped and counted. Duplicate (term, language) pairs
// and malformed language codes are validation errors.
LoadReport load_lexicon(const std::string& path,
                        const std::vector<std::string>& blocklist);

std::vector<std::string> load_blocklist(const std::string& path);

void write_lexicon(const SmellLexicon& lexicon, const std::string& path);

// Compiled matcher over one language's terms. Immutable after construction;
// concurrent match_text calls are safe.
class TermMatcher {
public:
    TermMatcher() = default;
    TermMatcher(const SmellLexicon& lexicon, const std::string& language);
    explicit TermMatcher(const std::vector<std::string>& terms);

    // Token-exact matching: a term matches iff its normalized token sequence
    // occurs contiguously in the tokenized text. Output is the set of
    // matched canonical terms, sorted; repetitions collapse.
    std::vector<std::string> match_text(const std::string& text) const;

    std::size_t term_count() const { return single_.size() + phrase_count_; }

private:
    std::unordered_set<std::string> single_;
    // first token -> full token sequences of multi-word terms
    std::unordered_map<std::string, std::vector<std::vector<std::string>>> phrases_;
    std::size_t phrase_count_ = 0;
    std::size_t max_phrase_len_ = 1;
};

}  // namespace smellmap::lex
