#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smellmap::profile {

// Flat view of the top taxonomy level: category names in a fixed column
// order plus the word -> category mapping used to bucket matched tags.
struct Taxonomy {
    std::vector<std::string> categories;                 // sorted, unique
    std::map<std::string, std::uint32_t> word_category;  // word -> index

    static Taxonomy from_word_map(const std::map<std::string, std::string>& word_to_cat);

    std::size_t size() const { return categories.size(); }
};

struct SmellVector {
    std::string segment_id;
    std::vector<double> fractions;  // aligned with Taxonomy::categories
    std::size_t tag_count = 0;      // the denominator behind the fractions
};

// fraction_c = (#tags in category c) / denominator. Words outside the
// taxonomy are dropped from both counts unless count_uncategorized, which
// adds them to the denominator only. Returns nothing below min_tags.
std::optional<SmellVector> segment_smell_vector(const std::string& segment_id,
                                                const std::vector<std::string>& tags,
                                                const Taxonomy& taxonomy,
                                                std::size_t min_tags,
                                                bool count_uncategorized = false);

struct CityDistribution {
    std::vector<double> fractions;  // aligned with Taxonomy::categories, sums to 1
    std::size_t total_tags = 0;     // categorized tags only
};

CityDistribution city_distribution(const std::vector<std::string>& tags,
                                   const Taxonomy& taxonomy);

// (v - mean) / population sigma. Throws on fewer than 2 values or zero
// dispersion.
std::vector<double> zscore(const std::vector<double>& values);

void write_smell_vectors(const std::vector<SmellVector>& vectors,
                         const Taxonomy& taxonomy, const std::string& path);

struct SmellVectorFile {
    std::vector<std::string> categories;
    std::vector<SmellVector> vectors;
};

SmellVectorFile read_smell_vectors(const std::string& path);

}  // namespace smellmap::profile
