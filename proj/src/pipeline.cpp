#include "smellmap/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include "smellmap/cograph.hpp"
#include "smellmap/community.hpp"
#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"
#include "smellmap/toml.hpp"

namespace smellmap::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Flattens one or two levels of JSON into the dotted-key table the TOML
// reader produces, so both config formats share a mapping path.
toml::Value json_to_value(const json& j, const std::string& key) {
    toml::Value v;
    if (j.is_string()) {
        v.kind = toml::Value::Kind::string;
        v.str = j.get<std::string>();
    } else if (j.is_boolean()) {
        v.kind = toml::Value::Kind::boolean;
        v.flag = j.get<bool>();
    } else if (j.is_number()) {
        v.kind = toml::Value::Kind::number;
        v.num = j.get<double>();
    } else if (j.is_array()) {
        v.kind = toml::Value::Kind::array;
        for (const auto& e : j) v.items.push_back(json_to_value(e, key));
    } else {
        throw ValidationError("config key '" + key + "' has an unsupported JSON type");
    }
    return v;
}

toml::Table load_config_table(const std::string& path) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw ValidationError("cannot open config: " + path);
        json j = json::parse(in, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw ValidationError("config is not a JSON object: " + path);
        }
        toml::Table table;
        for (const auto& [section, body] : j.items()) {
            if (body.is_object()) {
                for (const auto& [key, value] : body.items()) {
                    table[section + "." + key] = json_to_value(value, section + "." + key);
                }
            } else {
                table[section] = json_to_value(body, section);
            }
        }
        return table;
    }
    return toml::read_file(path);
}

std::size_t to_count(double v, const std::string& key) {
    if (v < 0.0 || v != std::floor(v)) {
        throw ValidationError("config key '" + key + "' must be a non-negative integer");
    }
    return static_cast<std::size_t>(v);
}

void require_file(const std::string& path, const std::string& what) {
    if (path.empty()) throw ValidationError("config is missing the " + what + " path");
    if (!fs::exists(path)) throw ValidationError(what + " file does not exist: " + path);
}

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError("stage " + std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error("stage " + std::string(name) + ": " + e.what());
    }
}

json report_to_json(std::size_t parsed, std::size_t skipped,
                    const std::map<std::string, std::size_t>& reasons) {
    json j;
    j["parsed"] = parsed;
    j["skipped"] = skipped;
    j["skip_reasons"] = json::object();
    for (const auto& [reason, count] : reasons) j["skip_reasons"][reason] = count;
    return j;
}

std::string sanitize_layer(const std::string& name) {
    std::string out;
    for (const char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        } else {
            out.push_back('_');
        }
    }
    return out;
}

// Everything run_pipeline and run_sweep need in memory, computed without
// touching the output directory.
struct Prepared {
    MatchOutput match;
    cograph::CooccurrenceGraph graph;

    community::CategoryHierarchy hierarchy;
    profile::Taxonomy taxonomy;
    std::size_t unclustered_words = 0;
    std::vector<std::string> classify_warnings;

    ingest::SegmentReadReport segment_report;
    std::vector<ingest::StreetSegment> segments;
    geo::LocalProjection proj;
    std::vector<geo::ProjectedSegment> projected;
    std::map<std::string, std::pair<double, double>> midpoints;

    bool has_air = false;
    AirFields air;

    std::vector<std::string> warnings;
};

Prepared prepare(const PipelineConfig& config) {
    Prepared p;

    stage("match", [&] {
        p.match = match_items(config);
        return 0;
    });
    p.warnings = p.match.warnings;

    stage("graph", [&] {
        std::vector<std::vector<std::string>> item_terms;
        item_terms.reserve(p.match.items.size());
        for (const auto& m : p.match.items) item_terms.push_back(m.terms);
        p.graph = cograph::build_cooccurrence(item_terms);
        if (config.min_edge_weight > 1) {
            p.graph = cograph::filter_edges(p.graph, config.min_edge_weight);
        }
        return 0;
    });

    stage("classify", [&] {
        if (p.graph.node_count() == 0) {
            throw ValidationError("no lexicon words matched, nothing to classify");
        }
        auto h = community::hierarchical_classify(p.graph, config.size_threshold,
                                                  config.seed, &p.classify_warnings);
        if (!config.merge_path.empty()) {
            h = community::merge_subcommunities(h,
                                                community::load_merge_spec(config.merge_path));
        }
        std::map<std::string, std::string> labels;
        if (!config.labels_path.empty()) {
            labels = community::load_label_map(config.labels_path, h);
        }
        p.hierarchy = community::assign_categories(h, labels);
        for (const auto* top : p.hierarchy.top_level()) {
            if (top->unclustered) p.unclustered_words += top->members.size();
        }
        const auto word_cat = p.hierarchy.word_to_category(false);
        if (word_cat.empty()) {
            throw ValidationError("every matched word is unclustered; no categories");
        }
        p.taxonomy = profile::Taxonomy::from_word_map(word_cat);
        return 0;
    });

    stage("segments", [&] {
        p.segment_report = ingest::read_segments(config.segments_path);
        p.segments = p.segment_report.segments;
        if (p.segments.empty()) {
            throw ValidationError("no usable street segments in " + config.segments_path);
        }
        p.proj = geo::LocalProjection::for_segments(p.segments);
        p.projected = geo::project_segments(p.segments, p.proj);
        for (const auto& s : p.projected) p.midpoints[s.id] = s.midpoint();
        return 0;
    });

    if (!config.air_path.empty()) {
        stage("air", [&] {
            p.has_air = true;
            p.air = load_air_fields(config, p.projected, p.proj);
            if (p.air.rows_for_unknown_segments > 0) {
                p.warnings.push_back(
                    std::to_string(p.air.rows_for_unknown_segments) +
                    " air quality rows reference segments absent from the network");
            }
            return 0;
        });
    }
    return p;
}

}  // namespace

PipelineConfig PipelineConfig::load(const std::string& path) {
    const toml::Table table = load_config_table(path);
    std::set<std::string> consumed;
    const auto get = [&](const std::string& key) -> const toml::Value* {
        const auto it = table.find(key);
        if (it == table.end()) return nullptr;
        consumed.insert(key);
        return &it->second;
    };

    PipelineConfig c;
    if (const auto* v = get("city.name")) c.city_name = v->as_string("city.name");
    if (const auto* v = get("city.bbox")) {
        const auto nums = v->as_number_array("city.bbox");
        if (nums.size() != 4) {
            throw ValidationError("city.bbox must be [min_lat, min_lon, max_lat, max_lon]");
        }
        c.bbox = ingest::BoundingBox{nums[0], nums[1], nums[2], nums[3]};
    }

    const fs::path dir = fs::path(path).parent_path();
    const auto resolve = [&](const std::string& p) -> std::string {
        if (p.empty()) return p;
        const fs::path fp(p);
        if (fp.is_absolute()) return p;
        return (dir / fp).lexically_normal().string();
    };
    const auto path_key = [&](const char* key, std::string& target) {
        if (const auto* v = get(key)) target = resolve(v->as_string(key));
    };
    struct SourceKey {
        const char* key;
        ingest::Source source;
    };
    for (const auto& [key, source] : {SourceKey{"inputs.items", ingest::Source::other},
                                      SourceKey{"inputs.flickr", ingest::Source::flickr},
                                      SourceKey{"inputs.instagram", ingest::Source::instagram},
                                      SourceKey{"inputs.twitter", ingest::Source::twitter},
                                      SourceKey{"inputs.other", ingest::Source::other}}) {
        if (const auto* v = get(key)) {
            c.item_inputs.emplace_back(source, resolve(v->as_string(key)));
        }
    }
    path_key("inputs.segments", c.segments_path);
    path_key("inputs.air_quality", c.air_path);
    path_key("inputs.lexicon", c.lexicon_path);
    path_key("inputs.blocklist", c.blocklist_path);
    path_key("inputs.merge_spec", c.merge_path);
    path_key("inputs.labels", c.labels_path);
    path_key("inputs.aqi_bands", c.bands_path);

    if (const auto* v = get("params.buffer_width"))
        c.buffer_width = v->as_number("params.buffer_width");
    if (const auto* v = get("params.min_tags"))
        c.min_tags = to_count(v->as_number("params.min_tags"), "params.min_tags");
    if (const auto* v = get("params.size_threshold"))
        c.size_threshold =
            to_count(v->as_number("params.size_threshold"), "params.size_threshold");
    if (const auto* v = get("params.distance_classes"))
        c.distance_classes =
            to_count(v->as_number("params.distance_classes"), "params.distance_classes");
    if (const auto* v = get("params.seed"))
        c.seed = to_count(v->as_number("params.seed"), "params.seed");
    if (const auto* v = get("params.language")) c.language = v->as_string("params.language");
    if (const auto* v = get("params.min_edge_weight"))
        c.min_edge_weight =
            to_count(v->as_number("params.min_edge_weight"), "params.min_edge_weight");
    if (const auto* v = get("params.station_max_distance"))
        c.station_max_distance = v->as_number("params.station_max_distance");
    if (const auto* v = get("params.drop_retweets_replies"))
        c.drop_retweets_replies = v->as_bool("params.drop_retweets_replies");
    if (const auto* v = get("params.nearest_only"))
        c.nearest_only = v->as_bool("params.nearest_only");
    if (const auto* v = get("params.count_uncategorized"))
        c.count_uncategorized = v->as_bool("params.count_uncategorized");
    if (const auto* v = get("params.sweep_sizes"))
        c.sweep_sizes = v->as_number_array("params.sweep_sizes");
    if (const auto* v = get("output.dir")) c.output_dir = resolve(v->as_string("output.dir"));

    for (const auto& [key, value] : table) {
        (void)value;
        if (!consumed.count(key)) {
            throw ValidationError("unknown config key '" + key + "'");
        }
    }

    if (const char* env = std::getenv("SMELLMAP_OUTPUT_DIR")) {
        if (*env) c.output_dir = env;
    }
    return c;
}

void PipelineConfig::validate() const {
    if (item_inputs.empty()) {
        throw ValidationError("config lists no items inputs");
    }
    for (const auto& [source, path] : item_inputs) {
        (void)source;
        require_file(path, "items");
    }
    require_file(segments_path, "segments");
    require_file(lexicon_path, "lexicon");
    if (!air_path.empty()) require_file(air_path, "air quality");
    if (!blocklist_path.empty()) require_file(blocklist_path, "blocklist");
    if (!merge_path.empty()) require_file(merge_path, "merge spec");
    if (!labels_path.empty()) require_file(labels_path, "labels");
    if (!bands_path.empty()) require_file(bands_path, "AQI bands");
    if (buffer_width <= 0.0) throw ValidationError("buffer_width must be positive");
    if (min_tags < 1) throw ValidationError("min_tags must be at least 1");
    if (size_threshold < 2) throw ValidationError("size_threshold must be at least 2");
    if (distance_classes < 1) throw ValidationError("distance_classes must be at least 1");
    if (station_max_distance <= 0.0) {
        throw ValidationError("station_max_distance must be positive");
    }
    if (language.size() != 2 ||
        !std::all_of(language.begin(), language.end(),
                     [](unsigned char ch) { return std::islower(ch); })) {
        throw ValidationError("language must be a two-letter lowercase code");
    }
    if (bbox && (bbox->min_lat > bbox->max_lat || bbox->min_lon > bbox->max_lon)) {
        throw ValidationError("city.bbox has min above max");
    }
}

void write_matches(const std::vector<MatchedItem>& items, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write matches: " + path);
    for (const auto& m : items) {
        json j;
        j["id"] = m.id;
        j["source"] = ingest::source_name(m.source);
        j["lat"] = m.lat;
        j["lon"] = m.lon;
        j["terms"] = m.terms;
        out << j.dump() << '\n';
    }
}

std::vector<MatchedItem> read_matches(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open matches: " + path);
    std::vector<MatchedItem> items;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const json j = json::parse(line, nullptr, false);
        const auto fail = [&](const std::string& why) {
            throw ValidationError(path + ":" + std::to_string(line_no) + ": " + why);
        };
        if (j.is_discarded() || !j.is_object()) fail("not a JSON object");
        if (!j.contains("id") || !j["id"].is_string()) fail("missing id");
        if (!j.contains("lat") || !j["lat"].is_number()) fail("missing lat");
        if (!j.contains("lon") || !j["lon"].is_number()) fail("missing lon");
        if (!j.contains("terms") || !j["terms"].is_array()) fail("missing terms");
        MatchedItem m;
        m.id = j["id"].get<std::string>();
        if (j.contains("source")) {
            m.source = ingest::parse_source(j["source"].get<std::string>());
        }
        m.lat = j["lat"].get<double>();
        m.lon = j["lon"].get<double>();
        for (const auto& t : j["terms"]) {
            if (!t.is_string()) fail("non-string term");
            m.terms.push_back(t.get<std::string>());
        }
        items.push_back(std::move(m));
    }
    return items;
}

MatchOutput match_items(const PipelineConfig& config) {
    MatchOutput out;
    std::vector<std::string> blocklist;
    if (!config.blocklist_path.empty()) {
        blocklist = lex::load_blocklist(config.blocklist_path);
    }
    out.lexicon = lex::load_lexicon(config.lexicon_path, blocklist);
    if (!out.lexicon.lexicon.languages().count(config.language)) {
        throw ValidationError("lexicon has no terms for language '" + config.language + "'");
    }
    const lex::TermMatcher matcher(out.lexicon.lexicon, config.language);

    ingest::ReadFilters filters;
    filters.drop_retweets_replies = config.drop_retweets_replies;
    filters.bbox = config.bbox;
    out.ingest_counts = json::object();
    std::set<std::string> seen;
    for (const auto& [source, path] : config.item_inputs) {
        const auto report = ingest::read_items(path, source, filters);
        json entry = report_to_json(report.parsed, report.skipped, report.skip_reasons);
        entry["declared_source"] = ingest::source_name(source);
        out.ingest_counts[path] = std::move(entry);
        out.items_read += report.parsed;
        for (const auto& item : report.items) {
            if (!seen.insert(item.id).second) {
                ++out.cross_file_duplicates;
                continue;
            }
            auto terms = matcher.match_text(item.text);
            if (terms.empty()) continue;
            out.term_occurrences += terms.size();
            out.items.push_back({item.id, item.source, item.lat, item.lon, std::move(terms)});
        }
    }
    std::sort(out.items.begin(), out.items.end(),
              [](const MatchedItem& a, const MatchedItem& b) { return a.id < b.id; });
    if (out.cross_file_duplicates > 0) {
        out.warnings.push_back(std::to_string(out.cross_file_duplicates) +
                               " duplicate item ids across input files were dropped");
    }
    return out;
}

ProfileBundle profile_assignment(const std::vector<MatchedItem>& matched,
                                 const geo::Assignment& assignment,
                                 const profile::Taxonomy& taxonomy,
                                 std::size_t min_tags, bool count_uncategorized) {
    std::unordered_map<std::string, const MatchedItem*> by_id;
    for (const auto& m : matched) by_id[m.id] = &m;

    ProfileBundle out;
    for (const auto& [seg, ids] : assignment.items_by_segment) {
        std::vector<std::string> tags;
        std::map<std::string, std::vector<std::string>> source_tags;
        for (const auto& id : ids) {
            const auto it = by_id.find(id);
            if (it == by_id.end()) {
                throw ValidationError("assignment references unknown item id '" + id + "'");
            }
            const auto* m = it->second;
            tags.insert(tags.end(), m->terms.begin(), m->terms.end());
            auto& st = source_tags[ingest::source_name(m->source)];
            st.insert(st.end(), m->terms.begin(), m->terms.end());
        }
        if (auto v = profile::segment_smell_vector(seg, tags, taxonomy, min_tags,
                                                   count_uncategorized)) {
            out.all.push_back(std::move(*v));
        }
        for (const auto& [source, st] : source_tags) {
            if (auto v = profile::segment_smell_vector(seg, st, taxonomy, min_tags,
                                                       count_uncategorized)) {
                out.by_source[source].push_back(std::move(*v));
            }
        }
    }
    return out;
}

AirFields load_air_fields(const PipelineConfig& config,
                          const std::vector<geo::ProjectedSegment>& segments,
                          const geo::LocalProjection& proj) {
    AirFields out;
    out.report = ingest::read_air_quality(config.air_path);
    out.bands = config.bands_path.empty() ? ingest::default_aqi_bands()
                                          : ingest::load_aqi_bands(config.bands_path);
    std::set<std::string> known;
    for (const auto& s : segments) known.insert(s.id);
    for (const auto& sp : out.report.segment_values) {
        if (!known.count(sp.segment_id)) {
            ++out.rows_for_unknown_segments;
            continue;
        }
        out.fields[ingest::pollutant_name(sp.pollutant)][sp.segment_id] = sp.concentration;
    }
    if (!out.report.stations.empty()) {
        std::map<std::string, std::map<std::string, int>> station_aqi;
        for (const auto& st : out.report.stations) {
            station_aqi[st.station_id].emplace(ingest::pollutant_name(st.pollutant), st.aqi);
        }
        for (const auto& s : segments) {
            const auto station = geo::nearest_station(s, out.report.stations, proj,
                                                      config.station_max_distance);
            if (!station) continue;
            for (const auto& [pol, aqi] : station_aqi.at(*station)) {
                out.fields[pol + "_station_aqi"][s.id] = static_cast<double>(aqi);
            }
        }
    }
    return out;
}

std::size_t write_segment_aqi(const ingest::AirQualityReadReport& air,
                              const ingest::AqiBandTable& bands,
                              const std::map<std::string, std::pair<double, double>>& midpoints,
                              const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write segment AQI: " + path);
    out << "station_or_segment_id,lat,lon,pollutant,aqi,concentration\n";
    std::vector<const ingest::SegmentPollution*> sorted;
    for (const auto& sp : air.segment_values) {
        if (midpoints.count(sp.segment_id)) sorted.push_back(&sp);
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const ingest::SegmentPollution* a, const ingest::SegmentPollution* b) {
                  return std::tie(a->segment_id, a->pollutant) <
                         std::tie(b->segment_id, b->pollutant);
              });
    for (const auto* sp : sorted) {
        const int band = ingest::compute_aqi(sp->pollutant, sp->concentration, bands);
        out << csv::format_row({sp->segment_id, "", "",
                                ingest::pollutant_name(sp->pollutant), std::to_string(band),
                                csv::format_double(sp->concentration)});
    }
    return sorted.size();
}

std::size_t emit_heatmap(const std::map<std::string, double>& zscores,
                         const std::vector<ingest::StreetSegment>& segments,
                         const std::string& layer_name, const std::string& path) {
    std::map<std::string, const ingest::StreetSegment*> by_id;
    for (const auto& s : segments) by_id[s.id] = &s;

    std::size_t skipped = 0;
    json features = json::array();
    for (const auto& [seg_id, z] : zscores) {
        const auto it = by_id.find(seg_id);
        if (it == by_id.end()) {
            ++skipped;
            continue;
        }
        json coords = json::array();
        for (const auto& [lat, lon] : it->second->polyline) {
            coords.push_back(json::array({lon, lat}));
        }
        json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
        feature["properties"] = {{"segment_id", seg_id},
                                 {"category_or_pollutant", layer_name},
                                 {"zscore", z}};
        features.push_back(std::move(feature));
    }
    json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = std::move(features);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write heatmap: " + path);
    out << fc.dump(2) << '\n';
    return skipped;
}

nlohmann::json emit_heatmaps(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::vector<ingest::StreetSegment>& segments, const std::string& out_dir,
    std::vector<std::string>* warnings) {
    json layers = json::array();
    json skipped_layers = json::object();
    json files = json::object();

    const auto emit_layer = [&](const std::string& layer,
                                const std::map<std::string, double>& field) {
        if (field.size() < 2) {
            skipped_layers[layer] = "fewer than 2 segments";
            return;
        }
        std::vector<double> values;
        values.reserve(field.size());
        for (const auto& [seg, v] : field) values.push_back(v);
        std::vector<double> z;
        try {
            z = profile::zscore(values);
        } catch (const ValidationError& e) {
            skipped_layers[layer] = e.what();
            return;
        }
        std::map<std::string, double> zfield;
        std::size_t i = 0;
        for (const auto& [seg, v] : field) {
            (void)v;
            zfield[seg] = z[i++];
        }
        const std::string name = "heatmap_" + sanitize_layer(layer) + ".geojson";
        const std::size_t missing =
            emit_heatmap(zfield, segments, layer, (fs::path(out_dir) / name).string());
        if (missing > 0 && warnings != nullptr) {
            warnings->push_back("heatmap " + layer + ": " + std::to_string(missing) +
                                " segments lacked geometry");
        }
        layers.push_back(layer);
        files["heatmap_" + sanitize_layer(layer)] = name;
    };

    for (std::size_t c = 0; c < categories.size(); ++c) {
        std::map<std::string, double> field;
        for (const auto& v : vectors) field[v.segment_id] = v.fractions[c];
        emit_layer(categories[c], field);
    }
    for (const auto& [pol, field] : pollutant_fields) emit_layer(pol, field);

    json out;
    out["layers"] = std::move(layers);
    out["skipped_layers"] = std::move(skipped_layers);
    out["files"] = std::move(files);
    return out;
}

std::vector<BaseNote> report_base_notes(const profile::CityDistribution& dist,
                                        const std::vector<std::string>& categories) {
    if (dist.fractions.size() != categories.size()) {
        throw ValidationError("base notes: distribution width mismatch");
    }
    std::vector<BaseNote> notes;
    for (std::size_t i = 0; i < categories.size(); ++i) {
        notes.push_back({categories[i], dist.fractions[i]});
    }
    std::sort(notes.begin(), notes.end(), [](const BaseNote& a, const BaseNote& b) {
        if (a.fraction != b.fraction) return a.fraction > b.fraction;
        return a.category < b.category;
    });
    return notes;
}

void write_base_notes(const std::vector<BaseNote>& notes, const std::string& csv_path,
                      const std::string& text_path) {
    {
        std::ofstream out(csv_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write base notes: " + csv_path);
        out << "category,fraction\n";
        for (const auto& n : notes) {
            out << csv::format_row({n.category, csv::format_double(n.fraction)});
        }
    }
    {
        std::ofstream out(text_path, std::ios::binary);
        if (!out) throw ValidationError("cannot write base notes: " + text_path);
        out << "City base notes, strongest first:\n";
        std::size_t rank = 1;
        for (const auto& n : notes) {
            std::ostringstream line;
            line.precision(4);
            line << std::fixed << n.fraction * 100.0;
            out << "  " << rank++ << ". " << n.category << "  " << line.str() << "%\n";
        }
    }
}

json run_pipeline(const PipelineConfig& config) {
    config.validate();
    fs::create_directories(config.output_dir);
    const auto out_path = [&](const std::string& name) {
        return (fs::path(config.output_dir) / name).string();
    };

    json manifest;
    manifest["tool"] = "smellmap";
    manifest["version"] = SMELLMAP_VERSION;
    manifest["city"] = config.city_name;
    manifest["seed"] = config.seed;
    {
        json cfg;
        cfg["buffer_width"] = config.buffer_width;
        cfg["min_tags"] = config.min_tags;
        cfg["size_threshold"] = config.size_threshold;
        cfg["distance_classes"] = config.distance_classes;
        cfg["language"] = config.language;
        cfg["min_edge_weight"] = config.min_edge_weight;
        cfg["station_max_distance"] = config.station_max_distance;
        cfg["drop_retweets_replies"] = config.drop_retweets_replies;
        cfg["nearest_only"] = config.nearest_only;
        cfg["count_uncategorized"] = config.count_uncategorized;
        json inputs = json::object();
        for (const auto& [source, path] : config.item_inputs) {
            inputs["items:" + std::string(ingest::source_name(source))] = path;
        }
        inputs["segments"] = config.segments_path;
        if (!config.air_path.empty()) inputs["air_quality"] = config.air_path;
        inputs["lexicon"] = config.lexicon_path;
        if (!config.blocklist_path.empty()) inputs["blocklist"] = config.blocklist_path;
        if (!config.merge_path.empty()) inputs["merge_spec"] = config.merge_path;
        if (!config.labels_path.empty()) inputs["labels"] = config.labels_path;
        if (!config.bands_path.empty()) inputs["aqi_bands"] = config.bands_path;
        cfg["inputs"] = std::move(inputs);
        manifest["config"] = std::move(cfg);
    }
    json stages;
    json outputs = json::object();

    Prepared p = prepare(config);

    {
        json s;
        s["inputs"] = p.match.ingest_counts;
        s["items_read"] = p.match.items_read;
        s["cross_file_duplicates"] = p.match.cross_file_duplicates;
        stages["ingest"] = std::move(s);
    }
    {
        json s;
        s["terms"] = p.match.lexicon.lexicon.terms.size();
        s["blocked_removed"] = p.match.lexicon.blocked_removed;
        stages["lexicon"] = std::move(s);
    }

    stage("match", [&] {
        write_matches(p.match.items, out_path("matches.ndjson"));
        json s;
        s["matched_items"] = p.match.items.size();
        s["term_occurrences"] = p.match.term_occurrences;
        stages["match"] = std::move(s);
        outputs["matches"] = "matches.ndjson";
        return 0;
    });

    stage("graph", [&] {
        cograph::write_graph(p.graph, out_path("graph_edges.csv"),
                             out_path("graph_nodes.csv"));
        const auto gs = cograph::graph_stats(p.graph);
        json s;
        s["nodes"] = gs.nodes;
        s["edges"] = gs.edges;
        s["total_weight"] = gs.total_weight;
        stages["graph"] = std::move(s);
        outputs["graph_edges"] = "graph_edges.csv";
        outputs["graph_nodes"] = "graph_nodes.csv";
        return 0;
    });

    stage("classify", [&] {
        community::write_hierarchy(p.hierarchy, out_path("hierarchy.json"));
        json s;
        s["top_level_categories"] = p.taxonomy.categories;
        s["unclustered_words"] = p.unclustered_words;
        s["warnings"] = p.classify_warnings;
        stages["classify"] = std::move(s);
        outputs["hierarchy"] = "hierarchy.json";
        return 0;
    });

    {
        json s = report_to_json(p.segment_report.parsed, p.segment_report.skipped,
                                p.segment_report.skip_reasons);
        s["origin"] = {{"lat", p.proj.origin_lat}, {"lon", p.proj.origin_lon}};
        stages["segments"] = std::move(s);
    }

    geo::Assignment assignment;
    stage("assign", [&] {
        const geo::SpatialIndex index = geo::build_index(p.projected, config.buffer_width);
        std::vector<ingest::GeoItem> gitems;
        gitems.reserve(p.match.items.size());
        for (const auto& m : p.match.items) {
            ingest::GeoItem g;
            g.id = m.id;
            g.source = m.source;
            g.lat = m.lat;
            g.lon = m.lon;
            gitems.push_back(std::move(g));
        }
        assignment = geo::assign_items(gitems, index, p.proj, config.nearest_only);
        geo::write_assignment(assignment, out_path("assignment.csv"));
        json s;
        s["assigned_items"] = assignment.assigned;
        s["unassigned_items"] = assignment.unassigned;
        s["segments_with_items"] = assignment.items_by_segment.size();
        stages["assign"] = std::move(s);
        outputs["assignment"] = "assignment.csv";
        return 0;
    });

    ProfileBundle profiles;
    stage("profile", [&] {
        profiles = profile_assignment(p.match.items, assignment, p.taxonomy,
                                      config.min_tags, config.count_uncategorized);
        profile::write_smell_vectors(profiles.all, p.taxonomy, out_path("smell_vectors.csv"));
        outputs["smell_vectors"] = "smell_vectors.csv";
        json per_source = json::object();
        for (const auto& [source, vectors] : profiles.by_source) {
            const std::string name = "smell_vectors_" + source + ".csv";
            profile::write_smell_vectors(vectors, p.taxonomy, out_path(name));
            outputs["smell_vectors_" + source] = name;
            per_source[source] = vectors.size();
        }
        std::vector<std::string> all_tags;
        for (const auto& m : p.match.items) {
            all_tags.insert(all_tags.end(), m.terms.begin(), m.terms.end());
        }
        const auto dist = profile::city_distribution(all_tags, p.taxonomy);
        const auto notes = report_base_notes(dist, p.taxonomy.categories);
        write_base_notes(notes, out_path("base_notes.csv"), out_path("base_notes.txt"));
        outputs["base_notes"] = "base_notes.csv";
        outputs["base_notes_text"] = "base_notes.txt";
        json s;
        s["segments_retained"] = profiles.all.size();
        s["segments_retained_by_source"] = std::move(per_source);
        s["city_tags"] = dist.total_tags;
        stages["profile"] = std::move(s);
        return 0;
    });

    if (p.has_air) {
        stage("aqi", [&] {
            const std::size_t rows = write_segment_aqi(p.air.report, p.air.bands,
                                                       p.midpoints, out_path("segment_aqi.csv"));
            json s;
            s["air"] = report_to_json(p.air.report.parsed, p.air.report.skipped,
                                      p.air.report.skip_reasons);
            s["stations"] = p.air.report.stations.size();
            s["segment_rows"] = rows;
            s["rows_for_unknown_segments"] = p.air.rows_for_unknown_segments;
            stages["aqi"] = std::move(s);
            outputs["segment_aqi"] = "segment_aqi.csv";
            return 0;
        });

        stage("correlate", [&] {
            std::vector<stats::ReportRow> rows = stats::category_pollutant_report(
                profiles.all, p.taxonomy.categories, p.midpoints, p.air.fields, "all",
                config.distance_classes);
            for (const auto& [source, vectors] : profiles.by_source) {
                auto more = stats::category_pollutant_report(
                    vectors, p.taxonomy.categories, p.midpoints, p.air.fields, source,
                    config.distance_classes);
                rows.insert(rows.end(), more.begin(), more.end());
            }
            stats::write_report(rows, out_path("report.csv"));
            outputs["report"] = "report.csv";
            std::size_t skipped = 0;
            json skips = json::object();
            for (const auto& row : rows) {
                if (!row.skipped) continue;
                ++skipped;
                skips[row.source + "/" + row.category + "/" + row.pollutant] =
                    row.skip_reason;
            }
            json s;
            s["rows"] = rows.size() - skipped;
            s["skipped_pairs"] = std::move(skips);
            try {
                const auto matrix = stats::category_cross_correlation(
                    profiles.all, p.taxonomy.categories, p.midpoints,
                    config.distance_classes);
                stats::write_matrix(matrix, out_path("cross_correlation.csv"));
                outputs["cross_correlation"] = "cross_correlation.csv";
            } catch (const ValidationError& e) {
                p.warnings.push_back(std::string("cross correlation skipped: ") + e.what());
            }
            stages["correlate"] = std::move(s);
            return 0;
        });
    } else {
        p.warnings.push_back("no air quality input; correlation stages skipped");
    }

    stage("heatmap", [&] {
        json result = emit_heatmaps(profiles.all, p.taxonomy.categories, p.air.fields,
                                    p.segments, config.output_dir, &p.warnings);
        for (const auto& [key, name] : result["files"].items()) outputs[key] = name;
        json s;
        s["layers"] = result["layers"];
        s["skipped_layers"] = result["skipped_layers"];
        stages["heatmap"] = std::move(s);
        return 0;
    });

    manifest["stages"] = std::move(stages);
    manifest["outputs"] = std::move(outputs);
    manifest["warnings"] = p.warnings;

    std::ofstream out(out_path("manifest.json"), std::ios::binary);
    if (!out) throw ValidationError("cannot write manifest.json");
    out << manifest.dump(2) << '\n';
    return manifest;
}

std::vector<stats::SweepRow> run_sweep(
    const PipelineConfig& config, const std::vector<double>& sizes,
    const std::vector<std::pair<std::string, std::string>>& pairs) {
    config.validate();
    if (config.air_path.empty()) {
        throw ValidationError("sweep requires an air quality input");
    }
    Prepared p = prepare(config);

    std::vector<stats::TaggedPoint> points;
    for (const auto& m : p.match.items) {
        if (!p.proj.valid(m.lat, m.lon)) continue;
        const auto [x, y] = p.proj.project(m.lat, m.lon);
        points.push_back({m.id, x, y, m.terms});
    }
    const auto rows = stats::buffer_sweep(p.projected, points, p.taxonomy, p.air.fields,
                                          pairs, sizes, config.min_tags,
                                          config.distance_classes);
    fs::create_directories(config.output_dir);
    stats::write_sweep(rows, (fs::path(config.output_dir) / "sweep.csv").string());
    return rows;
}

}  // namespace smellmap::pipeline
