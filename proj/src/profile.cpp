#include "smellmap/profile.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"

namespace smellmap::profile {

Taxonomy Taxonomy::from_word_map(const std::map<std::string, std::string>& word_to_cat) {
    Taxonomy t;
    std::set<std::string> names;
    for (const auto& [word, cat] : word_to_cat) {
        (void)word;
        names.insert(cat);
    }
    t.categories.assign(names.begin(), names.end());
    for (const auto& [word, cat] : word_to_cat) {
        const auto it = std::lower_bound(t.categories.begin(), t.categories.end(), cat);
        t.word_category[word] = static_cast<std::uint32_t>(it - t.categories.begin());
    }
    return t;
}

namespace {

struct TagCounts {
    std::vector<std::size_t> per_category;
    std::size_t categorized = 0;
    std::size_t uncategorized = 0;
};

TagCounts count_tags(const std::vector<std::string>& tags, const Taxonomy& taxonomy) {
    TagCounts c;
    c.per_category.assign(taxonomy.size(), 0);
    for (const auto& tag : tags) {
        const auto it = taxonomy.word_category.find(tag);
        if (it == taxonomy.word_category.end()) {
            ++c.uncategorized;
        } else {
            ++c.per_category[it->second];
            ++c.categorized;
        }
    }
    return c;
}

}  // namespace

std::optional<SmellVector> segment_smell_vector(const std::string& segment_id,
                                                const std::vector<std::string>& tags,
                                                const Taxonomy& taxonomy,
                                                std::size_t min_tags,
                                                bool count_uncategorized) {
    const TagCounts c = count_tags(tags, taxonomy);
    const std::size_t denom = count_uncategorized ? c.categorized + c.uncategorized
                                                  : c.categorized;
    if (denom < min_tags || denom == 0) return std::nullopt;

    SmellVector v;
    v.segment_id = segment_id;
    v.tag_count = denom;
    v.fractions.resize(taxonomy.size());
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        v.fractions[i] = static_cast<double>(c.per_category[i]) / static_cast<double>(denom);
    }
    return v;
}

CityDistribution city_distribution(const std::vector<std::string>& tags,
                                   const Taxonomy& taxonomy) {
    const TagCounts c = count_tags(tags, taxonomy);
    if (c.categorized == 0) {
        throw ValidationError("city_distribution: no categorized tags");
    }
    CityDistribution d;
    d.total_tags = c.categorized;
    d.fractions.resize(taxonomy.size());
    for (std::size_t i = 0; i < taxonomy.size(); ++i) {
        d.fractions[i] =
            static_cast<double>(c.per_category[i]) / static_cast<double>(c.categorized);
    }
    return d;
}

std::vector<double> zscore(const std::vector<double>& values) {
    if (values.size() < 2) throw ValidationError("zscore needs at least 2 values");
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    if (var <= 0.0) throw ValidationError("zscore of a constant field");
    const double sigma = std::sqrt(var);
    std::vector<double> out;
    out.reserve(values.size());
    for (const double v : values) out.push_back((v - mean) / sigma);
    return out;
}

void write_smell_vectors(const std::vector<SmellVector>& vectors,
                         const Taxonomy& taxonomy, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write smell vectors: " + path);
    std::vector<std::string> header{"segment_id", "tag_count"};
    header.insert(header.end(), taxonomy.categories.begin(), taxonomy.categories.end());
    out << csv::format_row(header);

    std::vector<const SmellVector*> sorted;
    for (const auto& v : vectors) sorted.push_back(&v);
    std::sort(sorted.begin(), sorted.end(),
              [](const SmellVector* a, const SmellVector* b) {
                  return a->segment_id < b->segment_id;
              });
    for (const auto* v : sorted) {
        if (v->fractions.size() != taxonomy.size()) {
            throw ValidationError("smell vector width mismatch for segment " +
                                  v->segment_id);
        }
        std::vector<std::string> row{v->segment_id, std::to_string(v->tag_count)};
        for (const double f : v->fractions) row.push_back(csv::format_double(f));
        out << csv::format_row(row);
    }
}

SmellVectorFile read_smell_vectors(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].size() < 2 || rows[0][0] != "segment_id" ||
        rows[0][1] != "tag_count") {
        throw ValidationError("smell vector file missing header: " + path);
    }
    SmellVectorFile f;
    f.categories.assign(rows[0].begin() + 2, rows[0].end());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) {
            throw ValidationError("smell vector row " + std::to_string(i + 1) +
                                  " has wrong width");
        }
        SmellVector v;
        v.segment_id = rows[i][0];
        try {
            v.tag_count = std::stoull(rows[i][1]);
        } catch (const std::exception&) {
            throw ValidationError("smell vector row " + std::to_string(i + 1) +
                                  " has non-integer tag_count");
        }
        for (std::size_t j = 2; j < rows[i].size(); ++j) {
            try {
                v.fractions.push_back(std::stod(rows[i][j]));
            } catch (const std::exception&) {
                throw ValidationError("smell vector row " + std::to_string(i + 1) +
                                      " has a non-numeric fraction");
            }
        }
        f.vectors.push_back(std::move(v));
    }
    return f;
}

}  // namespace smellmap::profile
