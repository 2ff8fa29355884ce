#include "smellmap/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <tuple>

#include <nlohmann/json.hpp>

#include "smellmap/errors.hpp"
#include "smellmap/geo.hpp"
#include "smellmap/ingest.hpp"
#include "smellmap/lexicon.hpp"
#include "smellmap/rng.hpp"

namespace smellmap::synth {

using nlohmann::json;

const std::vector<std::string>& category_names() {
    static const std::vector<std::string> names = {
        "animals", "chemical", "cleaning", "emissions", "food",
        "industry", "metro",    "nature",   "smoking",   "waste"};
    return names;
}

const std::vector<std::vector<std::string>>& category_vocab() {
    // First word of each row doubles as the category's exemplar in labels.json.
    static const std::vector<std::vector<std::string>> vocab = {
        {"dog", "horse", "manure", "stable", "kennel", "fur", "dung", "hamster"},
        {"paint", "solvent", "glue", "tar", "varnish", "chlorine", "sulfur", "plastic"},
        {"soap", "bleach", "detergent", "shampoo", "polish", "ammonia", "disinfectant",
         "laundry"},
        {"exhaust", "smoke", "fumes", "petrol", "diesel", "smog", "soot", "tailpipe"},
        {"bread", "coffee", "bacon", "curry", "chocolate", "vanilla", "garlic", "pastry"},
        {"factory", "foundry", "coal", "steel", "brewery", "refinery", "forge", "kiln"},
        {"subway", "brakes", "rails", "tunnel", "musty", "underground", "platform", "dust"},
        {"grass", "trees", "flowers", "pine", "earth", "hay", "lavender", "moss"},
        {"cigarette", "tobacco", "cigar", "nicotine", "ashtray", "hookah", "shisha",
         "vape"},
        {"garbage", "sewage", "trash", "rubbish", "landfill", "rot", "compost", "drains"}};
    return vocab;
}

namespace {

// Zone layout as fractions of the grid extent; scattered blocks keep the
// spatial autocorrelation range short relative to the city.
std::vector<ZoneRect> default_zones(double extent) {
    const auto rect = [extent](const char* kind, double x0, double y0, double x1,
                               double y1) {
        return ZoneRect{kind, x0 * extent, y0 * extent, x1 * extent, y1 * extent};
    };
    return {
        rect("industrial", 0.00, 0.00, 0.27, 0.27),
        rect("industrial", 0.64, 0.18, 1.00, 0.45),
        rect("industrial", 0.18, 0.64, 0.45, 0.91),
        rect("industrial", 0.73, 0.73, 1.00, 1.00),
        rect("park", 0.36, 0.00, 0.64, 0.27),
        rect("park", 0.00, 0.36, 0.27, 0.64),
        rect("park", 0.45, 0.45, 0.73, 0.73),
        rect("park", 0.00, 0.73, 0.18, 1.00),
    };
}

}  // namespace

SynthSpec default_spec() {
    SynthSpec spec;
    spec.zone_no2 = {{"industrial", 55.0}, {"mixed", 28.0}, {"park", 12.0}};
    // Weights align with category_names() order:
    // animals chemical cleaning emissions food industry metro nature smoking waste
    spec.zone_mixture = {
        {"industrial", {0.005, 0.12, 0.02, 0.40, 0.03, 0.25, 0.04, 0.005, 0.05, 0.08}},
        {"park", {0.15, 0.01, 0.02, 0.03, 0.12, 0.01, 0.02, 0.55, 0.05, 0.04}},
        {"mixed", {0.05, 0.06, 0.08, 0.12, 0.28, 0.03, 0.08, 0.10, 0.10, 0.10}},
    };
    return spec;
}

namespace {

struct Mixture {
    std::vector<double> cumulative;

    explicit Mixture(const std::vector<double>& weights) {
        double total = 0.0;
        for (const double w : weights) total += w;
        double acc = 0.0;
        for (const double w : weights) {
            acc += w / total;
            cumulative.push_back(acc);
        }
        cumulative.back() = 1.0;
    }

    std::size_t sample(Rng& rng) const {
        const double u = rng.uniform();
        return static_cast<std::size_t>(
            std::lower_bound(cumulative.begin(), cumulative.end(), u) -
            cumulative.begin());
    }
};

std::string pad2(std::size_t v) {
    std::string s = std::to_string(v);
    return s.size() < 2 ? "0" + s : s;
}

void validate_spec(const SynthSpec& spec) {
    if (spec.grid < 2) throw ValidationError("synth: grid needs at least 2 intersections");
    if (spec.spacing <= 0.0) throw ValidationError("synth: spacing must be positive");
    if (spec.items_per_segment < 0.0) {
        throw ValidationError("synth: items_per_segment must be non-negative");
    }
    if (spec.jitter < 0.0) throw ValidationError("synth: jitter must be non-negative");
    if (spec.cross_category_rate < 0.0 || spec.cross_category_rate > 1.0) {
        throw ValidationError("synth: cross_category_rate must be in [0, 1]");
    }
    if (spec.no2_noise < 0.0) throw ValidationError("synth: no2_noise must be non-negative");
    for (const auto& [kind, weights] : spec.zone_mixture) {
        if (weights.size() != category_names().size()) {
            throw ValidationError("synth: mixture for zone '" + kind + "' needs " +
                                  std::to_string(category_names().size()) + " weights");
        }
        double total = 0.0;
        for (const double w : weights) {
            if (w < 0.0) {
                throw ValidationError("synth: negative word rate in zone '" + kind + "'");
            }
            total += w;
        }
        if (total <= 0.0) {
            throw ValidationError("synth: zone '" + kind + "' has all-zero word rates");
        }
    }
}

const ZoneRect* zone_at(const std::vector<ZoneRect>& zones, double x, double y) {
    for (const auto& z : zones) {
        if (z.contains(x, y)) return &z;
    }
    return nullptr;
}

}  // namespace

SynthOutputs generate_synthetic_city(const SynthSpec& user_spec, std::uint64_t seed,
                                     const std::string& out_dir) {
    SynthSpec spec = user_spec;
    {
        const SynthSpec defaults = default_spec();
        if (spec.zone_no2.empty()) spec.zone_no2 = defaults.zone_no2;
        if (spec.zone_mixture.empty()) spec.zone_mixture = defaults.zone_mixture;
    }
    const double extent = spec.spacing * static_cast<double>(spec.grid - 1);
    if (spec.zones.empty()) spec.zones = default_zones(extent);
    validate_spec(spec);
    for (const auto& z : spec.zones) {
        if (!spec.zone_mixture.count(z.kind) || !spec.zone_no2.count(z.kind)) {
            throw ValidationError("synth: zone kind '" + z.kind + "' has no mixture or NO2 mean");
        }
    }
    if (!spec.zone_mixture.count("mixed") || !spec.zone_no2.count("mixed")) {
        throw ValidationError("synth: the fallback 'mixed' zone needs a mixture and NO2 mean");
    }

    std::filesystem::create_directories(out_dir);
    const auto proj = geo::LocalProjection::centered_on(spec.origin_lat, spec.origin_lon);
    Rng rng(seed);

    // Street grid: horizontal segments h-<row>-<col>, vertical v-<col>-<row>.
    struct SegmentPlan {
        ingest::StreetSegment segment;
        double mx = 0.0, my = 0.0;  // projected midpoint
        std::pair<double, double> a, b;  // projected endpoints
        std::string zone;
        double no2 = 0.0;
        const Mixture* mixture = nullptr;
    };
    std::map<std::string, Mixture> mixtures;
    for (const auto& [kind, weights] : spec.zone_mixture) mixtures.emplace(kind, Mixture(weights));

    std::vector<SegmentPlan> plans;
    const auto add_segment = [&](const std::string& id, double x0, double y0, double x1,
                                 double y1) {
        SegmentPlan p;
        p.segment.id = id;
        p.segment.city = "synthville";
        const auto [lat0, lon0] = proj.unproject(x0, y0);
        const auto [lat1, lon1] = proj.unproject(x1, y1);
        p.segment.polyline = {{lat0, lon0}, {lat1, lon1}};
        p.a = {x0, y0};
        p.b = {x1, y1};
        p.mx = (x0 + x1) / 2.0;
        p.my = (y0 + y1) / 2.0;
        const ZoneRect* z = zone_at(spec.zones, p.mx, p.my);
        p.zone = z ? z->kind : "mixed";
        p.mixture = &mixtures.at(p.zone);
        plans.push_back(std::move(p));
    };
    for (std::size_t row = 0; row < spec.grid; ++row) {
        for (std::size_t col = 0; col + 1 < spec.grid; ++col) {
            add_segment("h-" + pad2(row) + "-" + pad2(col),
                        static_cast<double>(col) * spec.spacing,
                        static_cast<double>(row) * spec.spacing,
                        static_cast<double>(col + 1) * spec.spacing,
                        static_cast<double>(row) * spec.spacing);
        }
    }
    for (std::size_t col = 0; col < spec.grid; ++col) {
        for (std::size_t row = 0; row + 1 < spec.grid; ++row) {
            add_segment("v-" + pad2(col) + "-" + pad2(row),
                        static_cast<double>(col) * spec.spacing,
                        static_cast<double>(row) * spec.spacing,
                        static_cast<double>(col) * spec.spacing,
                        static_cast<double>(row + 1) * spec.spacing);
        }
    }
    std::sort(plans.begin(), plans.end(),
              [](const SegmentPlan& a, const SegmentPlan& b) {
                  return a.segment.id < b.segment.id;
              });
    for (auto& p : plans) {
        p.no2 = std::max(1.0, spec.zone_no2.at(p.zone) + rng.normal() * spec.no2_noise);
    }

    // Items: a Poisson count per segment, each a point jittered off the
    // centerline carrying 2-4 words drawn mostly from one category.
    const auto& cats = category_names();
    const auto& vocab = category_vocab();
    std::vector<ingest::GeoItem> items;
    std::vector<std::uint64_t> city_counts(cats.size(), 0);
    std::map<std::string, std::vector<std::uint64_t>> segment_counts;
    std::map<std::string, std::string> home_segment;
    std::size_t item_index = 0;
    for (const auto& p : plans) {
        auto& seg_counts =
            segment_counts.emplace(p.segment.id, std::vector<std::uint64_t>(cats.size(), 0))
                .first->second;
        const std::size_t count = rng.poisson(spec.items_per_segment);
        const double dx = p.b.first - p.a.first, dy = p.b.second - p.a.second;
        const double len = std::hypot(dx, dy);
        for (std::size_t k = 0; k < count; ++k) {
            const double t = rng.uniform();
            const double off = rng.uniform(-spec.jitter, spec.jitter);
            // Unit normal to the segment direction.
            const double nx = -dy / len, ny = dx / len;
            const double x = p.a.first + t * dx + off * nx;
            const double y = p.a.second + t * dy + off * ny;

            const std::size_t primary = p.mixture->sample(rng);
            const std::size_t want = 2 + rng.below(3);
            std::vector<std::string> words;
            std::vector<std::size_t> word_cats;
            for (std::size_t w = 0; w < want; ++w) {
                for (int attempt = 0; attempt < 10; ++attempt) {
                    std::size_t cat = primary;
                    if (rng.uniform() < spec.cross_category_rate) cat = p.mixture->sample(rng);
                    const auto& pool = vocab[cat];
                    const std::string& word = pool[rng.below(pool.size())];
                    if (std::find(words.begin(), words.end(), word) == words.end()) {
                        words.push_back(word);
                        word_cats.push_back(cat);
                        break;
                    }
                }
            }

            ingest::GeoItem item;
            char idbuf[16];
            std::snprintf(idbuf, sizeof idbuf, "it-%06zu", item_index);
            item.id = idbuf;
            const double su = rng.uniform();
            item.source = su < 0.7   ? ingest::Source::flickr
                          : su < 0.9 ? ingest::Source::instagram
                                     : ingest::Source::twitter;
            item.user = "user-" + std::to_string(rng.below(400));
            const auto item_ll = proj.unproject(x, y);
            item.lat = item_ll.first;
            item.lon = item_ll.second;
            item.timestamp = 1600000000 + static_cast<std::int64_t>(item_index);
            std::string text;
            for (const auto& w : words) {
                if (!text.empty()) text.push_back(' ');
                text += w;
            }
            item.text = text;
            item.language = "en";
            items.push_back(std::move(item));
            ++item_index;

            home_segment[items.back().id] = p.segment.id;
            for (const auto c : word_cats) {
                ++city_counts[c];
                ++seg_counts[c];
            }
        }
    }

    // Air quality: per-segment predicted NO2 plus a few stations placed at
    // zone centers, banded with the default AQI table.
    const auto bands = ingest::default_aqi_bands();
    std::vector<ingest::SegmentPollution> segment_values;
    for (const auto& p : plans) {
        segment_values.push_back({p.segment.id, ingest::Pollutant::NO2, p.no2});
    }
    std::vector<ingest::StationReading> stations;
    for (std::size_t i = 0; i < spec.zones.size() && i < 6; ++i) {
        const auto& z = spec.zones[i];
        const double cx = (z.min_x + z.max_x) / 2.0, cy = (z.min_y + z.max_y) / 2.0;
        ingest::StationReading st;
        st.station_id = "station-" + pad2(i + 1);
        const auto st_ll = proj.unproject(cx, cy);
        st.lat = st_ll.first;
        st.lon = st_ll.second;
        st.pollutant = ingest::Pollutant::NO2;
        const double conc =
            std::max(1.0, spec.zone_no2.at(z.kind) + rng.normal() * spec.no2_noise);
        st.concentration = conc;
        st.aqi = ingest::compute_aqi(ingest::Pollutant::NO2, conc, bands);
        stations.push_back(std::move(st));
    }

    const std::filesystem::path dir(out_dir);
    SynthOutputs paths;
    paths.items_path = (dir / "items.ndjson").string();
    paths.segments_path = (dir / "segments.geojson").string();
    paths.air_path = (dir / "air_quality.csv").string();
    paths.lexicon_path = (dir / "lexicon.csv").string();
    paths.labels_path = (dir / "labels.json").string();
    paths.ground_truth_path = (dir / "ground_truth.json").string();
    paths.config_path = (dir / "config.toml").string();

    ingest::write_items(items, paths.items_path);
    {
        std::vector<ingest::StreetSegment> segments;
        for (const auto& p : plans) segments.push_back(p.segment);
        ingest::write_segments(segments, paths.segments_path);
    }
    ingest::write_air_quality(stations, segment_values, paths.air_path);
    {
        lex::SmellLexicon lexicon;
        for (std::size_t c = 0; c < cats.size(); ++c) {
            for (const auto& w : vocab[c]) lexicon.terms.push_back({w, "en", cats[c]});
        }
        std::sort(lexicon.terms.begin(), lexicon.terms.end(),
                  [](const lex::SmellTerm& a, const lex::SmellTerm& b) {
                      return std::tie(a.language, a.surface) < std::tie(b.language, b.surface);
                  });
        lexicon.version = "synth";
        lex::write_lexicon(lexicon, paths.lexicon_path);
    }
    {
        json by_word;
        for (std::size_t c = 0; c < cats.size(); ++c) by_word[vocab[c][0]] = cats[c];
        json labels;
        labels["by_word"] = by_word;
        std::ofstream out(paths.labels_path, std::ios::binary);
        out << labels.dump(2) << '\n';
    }
    {
        json gt;
        gt["seed"] = seed;
        gt["origin"] = {{"lat", spec.origin_lat}, {"lon", spec.origin_lon}};
        gt["grid"] = spec.grid;
        gt["spacing"] = spec.spacing;
        gt["categories"] = cats;
        json zones = json::array();
        for (const auto& z : spec.zones) {
            zones.push_back({{"kind", z.kind},
                             {"min_x", z.min_x},
                             {"min_y", z.min_y},
                             {"max_x", z.max_x},
                             {"max_y", z.max_y}});
        }
        gt["zones"] = std::move(zones);
        json city;
        for (std::size_t c = 0; c < cats.size(); ++c) city[cats[c]] = city_counts[c];
        gt["city_tag_counts"] = std::move(city);
        json segs;
        for (const auto& p : plans) {
            json s;
            s["zone"] = p.zone;
            s["no2"] = p.no2;
            s["midpoint"] = {{"x", p.mx}, {"y", p.my}};
            json mix;
            const auto& weights = spec.zone_mixture.at(p.zone);
            double total = 0.0;
            for (const double w : weights) total += w;
            for (std::size_t c = 0; c < cats.size(); ++c) mix[cats[c]] = weights[c] / total;
            s["mixture"] = std::move(mix);
            json counts;
            const auto& sc = segment_counts.at(p.segment.id);
            for (std::size_t c = 0; c < cats.size(); ++c) counts[cats[c]] = sc[c];
            s["tag_counts"] = std::move(counts);
            segs[p.segment.id] = std::move(s);
        }
        gt["segments"] = std::move(segs);
        json homes;
        for (const auto& [id, seg] : home_segment) homes[id] = seg;
        gt["item_home_segment"] = std::move(homes);
        json exemplars;
        for (std::size_t c = 0; c < cats.size(); ++c) exemplars[cats[c]] = vocab[c][0];
        gt["exemplars"] = std::move(exemplars);
        std::ofstream out(paths.ground_truth_path, std::ios::binary);
        out << gt.dump(2) << '\n';
    }
    {
        std::ofstream out(paths.config_path, std::ios::binary);
        out << "# pipeline configuration for the synthetic city\n"
            << "[city]\n"
            << "name = \"synthville\"\n\n"
            << "[inputs]\n"
            << "items = \"items.ndjson\"\n"
            << "segments = \"segments.geojson\"\n"
            << "air_quality = \"air_quality.csv\"\n"
            << "lexicon = \"lexicon.csv\"\n"
            << "labels = \"labels.json\"\n\n"
            << "[params]\n"
            << "buffer_width = 22.5\n"
            << "min_tags = 30\n"
            << "size_threshold = 30\n"
            << "distance_classes = 20\n"
            << "seed = " << seed << "\n"
            << "language = \"en\"\n\n"
            << "[output]\n"
            << "dir = \"pipeline_out\"\n";
    }
    return paths;
}

}  // namespace smellmap::synth
