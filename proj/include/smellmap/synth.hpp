#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace smellmap::synth {

// Axis-aligned zone in projected meters; the first listed zone containing a
// segment midpoint wins, anything uncovered is "mixed".
struct ZoneRect {
    std::string kind;  // "industrial", "park" or "mixed"
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    bool contains(double x, double y) const {
        return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
    }
};

struct SynthSpec {
    std::size_t grid = 12;            // intersections per side, >= 2
    double spacing = 100.0;           // meters between intersections
    double origin_lat = 51.5;         // geographic anchor of grid corner (0,0)
    double origin_lon = -0.12;
    double items_per_segment = 28.0;  // Poisson mean; 0 gives an empty city
    double jitter = 8.0;              // max perpendicular offset of items, meters
    double cross_category_rate = 0.15;  // chance a word ignores the item's category
    double no2_noise = 2.5;             // sd around the zone mean, ug/m3

    std::vector<ZoneRect> zones;                           // empty -> default layout
    std::map<std::string, double> zone_no2;                // kind -> mean ug/m3
    std::map<std::string, std::vector<double>> zone_mixture;  // kind -> category weights
};

// Spec with the default scattered industrial/park layout and word mixtures.
SynthSpec default_spec();

// The ten planted category names, sorted; vocab rows align with them.
const std::vector<std::string>& category_names();
const std::vector<std::vector<std::string>>& category_vocab();

struct SynthOutputs {
    std::string items_path;
    std::string segments_path;
    std::string air_path;
    std::string lexicon_path;
    std::string labels_path;
    std::string ground_truth_path;
    std::string config_path;
};

// Writes a complete, self-contained city under out_dir: social items, street
// grid, air quality, a matching lexicon, labels, a pipeline config pointing
// at all of it, and the ground truth needed by oracle tests. Byte-identical
// for a fixed spec and seed.
SynthOutputs generate_synthetic_city(const SynthSpec& spec, std::uint64_t seed,
                                     const std::string& out_dir);

}  // namespace smellmap::synth
