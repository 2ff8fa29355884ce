#include "smellmap/lexicon.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <tuple>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"
#include "smellmap/textnorm.hpp"

namespace smellmap::lex {

namespace {

bool valid_language_code(const std::string& code) {
    return code.size() == 2 && code[0] >= 'a' && code[0] <= 'z' &&
           code[1] >= 'a' && code[1] <= 'z';
}

std::string join(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

}  // namespace

std::string normalize_token(const std::string& raw) {
    return text::normalize_token(raw);
}

std::string normalize_term(const std::string& raw) {
    return join(text::tokenize(raw));
}

std::set<std::string> SmellLexicon::languages() const {
    std::set<std::string> out;
    for (const auto& t : terms) out.insert(t.language);
    return out;
}

std::vector<std::string> SmellLexicon::surfaces(const std::string& language) const {
    std::vector<std::string> out;
    for (const auto& t : terms) {
        if (t.language == language) out.push_back(t.surface);
    }
    return out;
}

std::vector<std::string> intersect_annotations(
    const std::vector<std::vector<std::string>>& lists) {
    if (lists.size() < 3) {
        throw ValidationError("intersect_annotations: need at least 3 lists, got " +
                              std::to_string(lists.size()));
    }
    std::set<std::string> acc;
    for (const auto& raw : lists[0]) {
        const std::string t = normalize_term(raw);
        if (!t.empty()) acc.insert(t);
    }
    for (std::size_t i = 1; i < lists.size(); ++i) {
        std::set<std::string> cur;
        for (const auto& raw : lists[i]) {
            const std::string t = normalize_term(raw);
            if (!t.empty() && acc.count(t)) cur.insert(t);
        }
        acc = std::move(cur);
    }
    return {acc.begin(), acc.end()};
}

std::vector<std::string> load_blocklist(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open blocklist: " + path);
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = normalize_term(line);
        if (!t.empty()) out.push_back(t);
    }
    return out;
}

LoadReport load_lexicon(const std::string& path,
                        const std::vector<std::string>& blocklist) {
    const auto rows = csv::read_file(path);
    if (rows.empty()) throw ValidationError("lexicon file is empty: " + path);
    const auto& header = rows[0];
    if (header.size() < 2 || header[0] != "term" || header[1] != "language") {
        throw ValidationError("lexicon CSV must start with header term,language,notes");
    }

    std::set<std::string> blocked(blocklist.begin(), blocklist.end());

    LoadReport report;
    std::set<std::pair<std::string, std::string>> seen;
    std::vector<std::string> duplicates;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 2) {
            throw ValidationError("lexicon row " + std::to_string(i + 1) +
                                  ": expected term,language[,notes]");
        }
        SmellTerm term;
        term.surface = normalize_term(row[0]);
        term.language = normalize_term(row[1]);
        term.notes = row.size() > 2 ? row[2] : "";
        if (term.surface.empty()) {
            throw ValidationError("lexicon row " + std::to_string(i + 1) +
                                  ": term is empty after normalization");
        }
        if (!valid_language_code(term.language)) {
            throw ValidationError("lexicon row " + std::to_string(i + 1) +
                                  ": unknown language code '" + row[1] + "'");
        }
        if (!seen.insert({term.surface, term.language}).second) {
            duplicates.push_back(term.surface + "," + term.language);
            continue;
        }
        if (blocked.count(term.surface)) {
            ++report.blocked_removed;
            continue;
        }
        report.lexicon.terms.push_back(std::move(term));
    }
    if (!duplicates.empty()) {
        std::string msg = "lexicon has duplicate (term,language) rows:";
        for (const auto& d : duplicates) msg += " [" + d + "]";
        throw ValidationError(msg);
    }
    if (report.lexicon.terms.empty()) {
        throw ValidationError("lexicon has no usable terms: " + path);
    }
    std::sort(report.lexicon.terms.begin(), report.lexicon.terms.end(),
              [](const SmellTerm& a, const SmellTerm& b) {
                  return std::tie(a.language, a.surface) < std::tie(b.language, b.surface);
              });
    report.lexicon.version = "1";
    return report;
}

void write_lexicon(const SmellLexicon& lexicon, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write lexicon: " + path);
    out << "term,language,notes\n";
    for (const auto& t : lexicon.terms) {
        out << csv::format_row({t.surface, t.language, t.notes});
    }
}

TermMatcher::TermMatcher(const SmellLexicon& lexicon, const std::string& language)
    : TermMatcher(lexicon.surfaces(language)) {}

TermMatcher::TermMatcher(const std::vector<std::string>& terms) {
    for (const auto& raw : terms) {
        const std::vector<std::string> tokens = text::tokenize(raw);
        if (tokens.empty()) continue;
        if (tokens.size() == 1) {
            single_.insert(tokens[0]);
        } else {
            max_phrase_len_ = std::max(max_phrase_len_, tokens.size());
            phrases_[tokens[0]].push_back(tokens);
            ++phrase_count_;
        }
    }
}

std::vector<std::string> TermMatcher::match_text(const std::string& text) const {
    const std::vector<std::string> tokens = text::tokenize(text);
    std::set<std::string> matched;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (single_.count(tokens[i])) matched.insert(tokens[i]);
        if (phrases_.empty()) continue;
        const auto it = phrases_.find(tokens[i]);
        if (it == phrases_.end()) continue;
        for (const auto& seq : it->second) {
            if (i + seq.size() > tokens.size()) continue;
            if (std::equal(seq.begin(), seq.end(), tokens.begin() + i)) {
                matched.insert(join(seq));
            }
        }
    }
    return {matched.begin(), matched.end()};
}

}  // namespace smellmap::lex
