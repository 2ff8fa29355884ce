#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "smellmap/geo.hpp"
#include "smellmap/ingest.hpp"
#include "smellmap/lexicon.hpp"
#include "smellmap/profile.hpp"
#include "smellmap/spatialstats.hpp"

namespace smellmap::pipeline {

// Loaded from TOML (or JSON with the same section/key layout). Relative
// paths resolve against the config file's directory. The SMELLMAP_OUTPUT_DIR
// environment variable overrides output_dir; nothing else is overridable
// from the environment.
struct PipelineConfig {
    std::string city_name = "city";
    std::optional<ingest::BoundingBox> bbox;

    // Declared source per items file; a per-line "source" field wins.
    std::vector<std::pair<ingest::Source, std::string>> item_inputs;
    std::string segments_path;
    std::string air_path;       // empty: correlation stages are skipped
    std::string lexicon_path;
    std::string blocklist_path;  // optional
    std::string merge_path;      // optional
    std::string labels_path;     // optional
    std::string bands_path;      // optional, defaults to the built-in AQI bands

    double buffer_width = 22.5;
    std::size_t min_tags = 30;
    std::size_t size_threshold = 30;
    std::size_t distance_classes = 20;
    std::uint64_t seed = 0;
    std::string language = "en";
    std::uint64_t min_edge_weight = 1;
    double station_max_distance = 1000.0;
    bool drop_retweets_replies = true;
    bool nearest_only = false;
    bool count_uncategorized = false;
    std::string output_dir = "out";
    std::vector<double> sweep_sizes = {10.0, 25.0, 50.0, 100.0};

    static PipelineConfig load(const std::string& path);
    void validate() const;
};

// A geo-item that matched at least one lexicon term.
struct MatchedItem {
    std::string id;
    ingest::Source source = ingest::Source::other;
    double lat = 0.0;
    double lon = 0.0;
    std::vector<std::string> terms;  // canonical forms, sorted, unique
};

// NDJSON, one object per item, sorted by id.
void write_matches(const std::vector<MatchedItem>& items, const std::string& path);
std::vector<MatchedItem> read_matches(const std::string& path);

struct MatchOutput {
    lex::LoadReport lexicon;
    std::vector<MatchedItem> items;  // sorted by id
    nlohmann::json ingest_counts;    // per input file: parsed/skipped/reasons
    std::size_t items_read = 0;
    std::size_t cross_file_duplicates = 0;
    std::size_t term_occurrences = 0;
    std::vector<std::string> warnings;
};

// Reads every items input, filters, matches against the lexicon, drops
// cross-file duplicate ids (first occurrence wins).
MatchOutput match_items(const PipelineConfig& config);

struct ProfileBundle {
    std::vector<profile::SmellVector> all;
    std::map<std::string, std::vector<profile::SmellVector>> by_source;
};

// Smell vectors for the combined item set and per item source. Throws if the
// assignment references an item id absent from `matched`.
ProfileBundle profile_assignment(const std::vector<MatchedItem>& matched,
                                 const geo::Assignment& assignment,
                                 const profile::Taxonomy& taxonomy,
                                 std::size_t min_tags, bool count_uncategorized);

struct AirFields {
    ingest::AirQualityReadReport report;
    ingest::AqiBandTable bands;
    // field name ("NO2", "NO2_station_aqi") -> segment id -> value
    std::map<std::string, std::map<std::string, double>> fields;
    std::size_t rows_for_unknown_segments = 0;
};

// Per-segment pollutant fields: direct concentrations from segment rows plus
// station AQI attributed via the nearest station to each segment midpoint.
AirFields load_air_fields(const PipelineConfig& config,
                          const std::vector<geo::ProjectedSegment>& segments,
                          const geo::LocalProjection& proj);

// Segment pollution rows with their AQI band, air-quality CSV layout.
// Returns the number of rows written.
std::size_t write_segment_aqi(const ingest::AirQualityReadReport& air,
                              const ingest::AqiBandTable& bands,
                              const std::map<std::string, std::pair<double, double>>& midpoints,
                              const std::string& path);

// One LineString feature per field entry; segments present in the field but
// absent from `segments` are skipped and counted in the return value.
std::size_t emit_heatmap(const std::map<std::string, double>& zscores,
                         const std::vector<ingest::StreetSegment>& segments,
                         const std::string& layer_name, const std::string& path);

// Writes one z-scored GeoJSON layer per category fraction and per pollutant
// field into out_dir. Constant or undersized fields are skipped. Returns
// {"layers": [...], "skipped_layers": {...}, "files": {...}}.
nlohmann::json emit_heatmaps(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::vector<ingest::StreetSegment>& segments, const std::string& out_dir,
    std::vector<std::string>* warnings);

struct BaseNote {
    std::string category;
    double fraction = 0.0;
};

// Categories by descending fraction, ties broken alphabetically.
std::vector<BaseNote> report_base_notes(const profile::CityDistribution& dist,
                                        const std::vector<std::string>& categories);

void write_base_notes(const std::vector<BaseNote>& notes, const std::string& csv_path,
                      const std::string& text_path);

// Runs match -> graph -> classify -> assign -> profile -> correlate -> emit,
// materializing every stage's output under output_dir, and returns the run
// manifest (also written as manifest.json). Identical inputs and seed give
// byte-identical outputs.
nlohmann::json run_pipeline(const PipelineConfig& config);

// Re-runs assignment, profiling and correlation per buffer size and writes
// sweep.csv under output_dir. Empty pairs means every (category, pollutant)
// combination.
std::vector<stats::SweepRow> run_sweep(
    const PipelineConfig& config, const std::vector<double>& sizes,
    const std::vector<std::pair<std::string, std::string>>& pairs = {});

}  // namespace smellmap::pipeline
