#include "smellmap/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"

namespace smellmap::ingest {

using nlohmann::json;

const char* source_name(Source s) {
    switch (s) {
        case Source::flickr: return "flickr";
        case Source::instagram: return "instagram";
        case Source::twitter: return "twitter";
        case Source::other: return "other";
    }
    return "other";
}

Source parse_source(const std::string& s) {
    if (s == "flickr") return Source::flickr;
    if (s == "instagram") return Source::instagram;
    if (s == "twitter") return Source::twitter;
    return Source::other;
}

const char* pollutant_name(Pollutant p) {
    switch (p) {
        case Pollutant::CO: return "CO";
        case Pollutant::NO2: return "NO2";
        case Pollutant::O3: return "O3";
        case Pollutant::PM10: return "PM10";
        case Pollutant::PM25: return "PM2.5";
        case Pollutant::SO2: return "SO2";
    }
    return "NO2";
}

std::optional<Pollutant> parse_pollutant(const std::string& s) {
    std::string up = s;
    std::transform(up.begin(), up.end(), up.begin(),
                   [](unsigned char c) { return std::toupper(c); });
    if (up == "CO") return Pollutant::CO;
    if (up == "NO2") return Pollutant::NO2;
    if (up == "O3") return Pollutant::O3;
    if (up == "PM10") return Pollutant::PM10;
    if (up == "PM2.5" || up == "PM25") return Pollutant::PM25;
    if (up == "SO2") return Pollutant::SO2;
    return std::nullopt;
}

std::vector<Pollutant> all_pollutants() {
    return {Pollutant::CO, Pollutant::NO2, Pollutant::O3,
            Pollutant::PM10, Pollutant::PM25, Pollutant::SO2};
}

namespace {

void count_skip(std::map<std::string, std::size_t>& reasons, std::size_t& skipped,
                const std::string& reason) {
    ++skipped;
    ++reasons[reason];
}

bool get_bool(const json& j, const char* key) {
    const auto it = j.find(key);
    return it != j.end() && it->is_boolean() && it->get<bool>();
}

}  // namespace

ItemReadReport read_items(const std::string& path, Source source,
                          const ReadFilters& filters) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open items file: " + path);

    ItemReadReport report;
    std::set<std::string> seen_ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            count_skip(report.skip_reasons, report.skipped, "empty line");
            continue;
        }
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            count_skip(report.skip_reasons, report.skipped, "malformed json");
            continue;
        }
        GeoItem item;
        try {
            item.id = j.at("id").get<std::string>();
            item.lat = j.at("lat").get<double>();
            item.lon = j.at("lon").get<double>();
            item.timestamp = j.at("ts").get<std::int64_t>();
            item.text = j.at("text").get<std::string>();
            item.language = j.at("lang").get<std::string>();
            item.user = j.value("user", std::string{});
            item.source = j.contains("source")
                              ? parse_source(j.at("source").get<std::string>())
                              : source;
        } catch (const json::exception&) {
            count_skip(report.skip_reasons, report.skipped, "missing or mistyped field");
            continue;
        }
        if (!(item.lat >= -90.0 && item.lat <= 90.0) ||
            !(item.lon >= -180.0 && item.lon <= 180.0) ||
            !std::isfinite(item.lat) || !std::isfinite(item.lon)) {
            count_skip(report.skip_reasons, report.skipped, "coordinates out of range");
            continue;
        }
        if (!seen_ids.insert(item.id).second) {
            count_skip(report.skip_reasons, report.skipped, "duplicate id");
            continue;
        }
        if (filters.drop_retweets_replies && item.source == Source::twitter &&
            (get_bool(j, "is_retweet") || get_bool(j, "is_reply"))) {
            count_skip(report.skip_reasons, report.skipped, "retweet or reply");
            continue;
        }
        if (filters.bbox && !filters.bbox->contains(item.lat, item.lon)) {
            count_skip(report.skip_reasons, report.skipped, "outside bounding box");
            continue;
        }
        ++report.parsed;
        report.items.push_back(std::move(item));
    }
    return report;
}

void write_items(const std::vector<GeoItem>& items, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write items: " + path);
    for (const auto& item : items) {
        json j;
        j["id"] = item.id;
        j["source"] = source_name(item.source);
        j["user"] = item.user;
        j["lat"] = item.lat;
        j["lon"] = item.lon;
        j["ts"] = item.timestamp;
        j["text"] = item.text;
        j["lang"] = item.language;
        out << j.dump() << '\n';
    }
}

SegmentReadReport read_segments(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open segments file: " + path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("type", "") != "FeatureCollection" ||
        !j.contains("features") || !j["features"].is_array()) {
        throw ValidationError("segments file is not a GeoJSON FeatureCollection: " + path);
    }

    SegmentReadReport report;
    std::set<std::string> seen_ids;
    for (const auto& feature : j["features"]) {
        if (!feature.is_object() || feature.value("type", "") != "Feature") {
            count_skip(report.skip_reasons, report.skipped, "not a feature");
            continue;
        }
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || !geom->is_object() ||
            geom->value("type", "") != "LineString") {
            count_skip(report.skip_reasons, report.skipped, "geometry not a LineString");
            continue;
        }
        StreetSegment seg;
        const auto props = feature.find("properties");
        if (props != feature.end() && props->is_object() && props->contains("id")) {
            const auto& idv = (*props)["id"];
            if (idv.is_string()) seg.id = idv.get<std::string>();
            else if (idv.is_number_integer()) seg.id = std::to_string(idv.get<std::int64_t>());
        }
        if (seg.id.empty()) {
            count_skip(report.skip_reasons, report.skipped, "missing id");
            continue;
        }
        if (props->contains("city") && (*props)["city"].is_string()) {
            seg.city = (*props)["city"].get<std::string>();
        }
        if (!geom->contains("coordinates") || !(*geom)["coordinates"].is_array()) {
            count_skip(report.skip_reasons, report.skipped, "malformed coordinates");
            continue;
        }
        bool bad = false;
        for (const auto& coord : (*geom)["coordinates"]) {
            if (!coord.is_array() || coord.size() < 2 || !coord[0].is_number() ||
                !coord[1].is_number()) {
                bad = true;
                break;
            }
            // GeoJSON order is [lon, lat].
            seg.polyline.emplace_back(coord[1].get<double>(), coord[0].get<double>());
        }
        if (bad) {
            count_skip(report.skip_reasons, report.skipped, "malformed coordinates");
            continue;
        }
        if (seg.polyline.size() < 2) {
            count_skip(report.skip_reasons, report.skipped, "fewer than 2 points");
            continue;
        }
        bool degenerate = false;
        for (std::size_t i = 1; i < seg.polyline.size(); ++i) {
            if (seg.polyline[i] == seg.polyline[i - 1]) {
                degenerate = true;
                break;
            }
        }
        if (degenerate) {
            count_skip(report.skip_reasons, report.skipped, "degenerate geometry");
            continue;
        }
        if (!seen_ids.insert(seg.id).second) {
            count_skip(report.skip_reasons, report.skipped, "duplicate id");
            continue;
        }
        ++report.parsed;
        report.segments.push_back(std::move(seg));
    }
    return report;
}

void write_segments(const std::vector<StreetSegment>& segments, const std::string& path) {
    json features = json::array();
    for (const auto& seg : segments) {
        json coords = json::array();
        for (const auto& [lat, lon] : seg.polyline) {
            coords.push_back(json::array({lon, lat}));  // GeoJSON order is [lon, lat]
        }
        json props;
        props["id"] = seg.id;
        if (!seg.city.empty()) props["city"] = seg.city;
        json feature;
        feature["type"] = "Feature";
        feature["geometry"] = {{"type", "LineString"}, {"coordinates", coords}};
        feature["properties"] = props;
        features.push_back(std::move(feature));
    }
    json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = std::move(features);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write segments: " + path);
    out << fc.dump(2) << '\n';
}

AirQualityReadReport read_air_quality(const std::string& path) {
    const auto rows = csv::read_file(path);
    AirQualityReadReport report;
    std::size_t start = 0;
    if (!rows.empty() && !rows[0].empty() && rows[0][0] == "station_or_segment_id") {
        start = 1;
    }
    for (std::size_t i = start; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 6) {
            count_skip(report.skip_reasons, report.skipped, "too few columns");
            continue;
        }
        const std::string& id = row[0];
        if (id.empty()) {
            count_skip(report.skip_reasons, report.skipped, "missing id");
            continue;
        }
        const auto pollutant = parse_pollutant(row[3]);
        if (!pollutant) {
            count_skip(report.skip_reasons, report.skipped, "unknown pollutant");
            continue;
        }
        const bool has_latlon = !row[1].empty() && !row[2].empty();
        try {
            if (has_latlon) {
                StationReading st;
                st.station_id = id;
                st.lat = std::stod(row[1]);
                st.lon = std::stod(row[2]);
                st.pollutant = *pollutant;
                if (row[4].empty()) {
                    count_skip(report.skip_reasons, report.skipped, "station missing aqi");
                    continue;
                }
                st.aqi = std::stoi(row[4]);
                if (st.aqi < 1) {
                    count_skip(report.skip_reasons, report.skipped, "aqi below 1");
                    continue;
                }
                if (!row[5].empty()) {
                    const double conc = std::stod(row[5]);
                    if (conc < 0) {
                        count_skip(report.skip_reasons, report.skipped,
                                   "negative concentration");
                        continue;
                    }
                    st.concentration = conc;
                }
                ++report.parsed;
                report.stations.push_back(std::move(st));
            } else {
                if (row[5].empty()) {
                    count_skip(report.skip_reasons, report.skipped,
                               "segment missing concentration");
                    continue;
                }
                SegmentPollution sp;
                sp.segment_id = id;
                sp.pollutant = *pollutant;
                sp.concentration = std::stod(row[5]);
                if (sp.concentration < 0) {
                    count_skip(report.skip_reasons, report.skipped,
                               "negative concentration");
                    continue;
                }
                ++report.parsed;
                report.segment_values.push_back(std::move(sp));
            }
        } catch (const std::exception&) {
            count_skip(report.skip_reasons, report.skipped, "unparseable number");
        }
    }
    return report;
}

void write_air_quality(const std::vector<StationReading>& stations,
                       const std::vector<SegmentPollution>& segment_values,
                       const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write air quality: " + path);
    out << "station_or_segment_id,lat,lon,pollutant,aqi,concentration\n";
    for (const auto& st : stations) {
        out << csv::format_row({st.station_id, csv::format_double(st.lat),
                                csv::format_double(st.lon), pollutant_name(st.pollutant),
                                std::to_string(st.aqi),
                                st.concentration ? csv::format_double(*st.concentration)
                                                 : std::string{}});
    }
    for (const auto& sp : segment_values) {
        out << csv::format_row({sp.segment_id, "", "", pollutant_name(sp.pollutant), "",
                                csv::format_double(sp.concentration)});
    }
}

AqiBandTable default_aqi_bands() {
    // Ten bands per pollutant; indicative boundaries, replaceable via
    // load_aqi_bands. Units ug/m3 except CO (mg/m3).
    AqiBandTable t;
    t[Pollutant::NO2] = {67, 134, 200, 267, 334, 400, 467, 534, 600, 700};
    t[Pollutant::PM10] = {16, 33, 50, 58, 66, 75, 83, 91, 100, 120};
    t[Pollutant::PM25] = {11, 23, 35, 41, 47, 53, 58, 64, 70, 85};
    t[Pollutant::O3] = {33, 66, 100, 120, 140, 160, 187, 213, 240, 280};
    t[Pollutant::SO2] = {88, 177, 266, 354, 443, 532, 710, 887, 1064, 1200};
    t[Pollutant::CO] = {1, 2, 3, 4, 5, 7, 10, 15, 20, 30};
    return t;
}

AqiBandTable load_aqi_bands(const std::string& path) {
    const auto rows = csv::read_file(path);
    AqiBandTable t;
    std::size_t start = 0;
    if (!rows.empty() && !rows[0].empty() && rows[0][0] == "pollutant") start = 1;
    for (std::size_t i = start; i < rows.size(); ++i) {
        const auto& row = rows[i];
        if (row.size() < 2) continue;
        const auto pollutant = parse_pollutant(row[0]);
        if (!pollutant) {
            throw ValidationError("aqi bands: unknown pollutant '" + row[0] + "'");
        }
        std::vector<double> bounds;
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (row[c].empty()) continue;
            bounds.push_back(std::stod(row[c]));
        }
        for (std::size_t c = 1; c < bounds.size(); ++c) {
            if (bounds[c] <= bounds[c - 1]) {
                throw ValidationError("aqi bands for " + row[0] +
                                      " are not strictly increasing");
            }
        }
        if (bounds.empty()) {
            throw ValidationError("aqi bands for " + row[0] + " are empty");
        }
        t[*pollutant] = std::move(bounds);
    }
    return t;
}

int compute_aqi(Pollutant pollutant, double concentration, const AqiBandTable& bands) {
    if (concentration < 0 || !std::isfinite(concentration)) {
        throw ValidationError("compute_aqi: concentration must be non-negative");
    }
    const auto it = bands.find(pollutant);
    if (it == bands.end()) {
        throw ValidationError(std::string("compute_aqi: no band table for ") +
                              pollutant_name(pollutant));
    }
    const auto& bounds = it->second;
    const auto pos = std::lower_bound(bounds.begin(), bounds.end(), concentration);
    return static_cast<int>(pos - bounds.begin()) + 1;
}

}  // namespace smellmap::ingest
