#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace smellmap::ingest {

enum class Source { flickr, instagram, twitter, other };

const char* source_name(Source s);
Source parse_source(const std::string& s);

enum class Pollutant { CO, NO2, O3, PM10, PM25, SO2 };

const char* pollutant_name(Pollutant p);
std::optional<Pollutant> parse_pollutant(const std::string& s);
std::vector<Pollutant> all_pollutants();

struct GeoItem {
    std::string id;
    Source source = Source::other;
    std::string user;
    double lat = 0.0;
    double lon = 0.0;
    std::int64_t timestamp = 0;  // UTC seconds
    std::string text;            // joined tags / caption+hashtags / tweet body
    std::string language;
};

struct StreetSegment {
    std::string id;
    std::vector<std::pair<double, double>> polyline;  // (lat, lon), >= 2 points
    std::string city;
};

struct StationReading {
    std::string station_id;
    double lat = 0.0;
    double lon = 0.0;
    Pollutant pollutant = Pollutant::NO2;
    int aqi = 1;
    std::optional<double> concentration;  // ug/m3
};

struct SegmentPollution {
    std::string segment_id;
    Pollutant pollutant = Pollutant::NO2;
    double concentration = 0.0;  // ug/m3
};

struct BoundingBox {
    double min_lat = -90.0, min_lon = -180.0, max_lat = 90.0, max_lon = 180.0;
    bool contains(double lat, double lon) const {
        return lat >= min_lat && lat <= max_lat && lon >= min_lon && lon <= max_lon;
    }
};

struct ReadFilters {
    bool drop_retweets_replies = true;  // applied to twitter items only
    std::optional<BoundingBox> bbox;
};

// parsed + skipped always equals the number of input lines.
struct ItemReadReport {
    std::vector<GeoItem> items;
    std::size_t parsed = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

struct SegmentReadReport {
    std::vector<StreetSegment> segments;
    std::size_t parsed = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

struct AirQualityReadReport {
    std::vector<StationReading> stations;
    std::vector<SegmentPollution> segment_values;
    std::size_t parsed = 0;
    std::size_t skipped = 0;
    std::map<std::string, std::size_t> skip_reasons;
};

// NDJSON, one item per line: id, source, user, lat, lon, ts, text, lang,
// and optional is_retweet / is_reply booleans. Malformed or invalid lines
// are skipped and counted, never fatal; an unreadable file is.
ItemReadReport read_items(const std::string& path, Source source,
                          const ReadFilters& filters);

void write_items(const std::vector<GeoItem>& items, const std::string& path);

// GeoJSON FeatureCollection of LineStrings carrying properties.id.
SegmentReadReport read_segments(const std::string& path);

void write_segments(const std::vector<StreetSegment>& segments, const std::string& path);

// CSV `station_or_segment_id,lat,lon,pollutant,aqi,concentration`.
// Rows with lat/lon are station readings; rows without are per-segment
// predicted concentrations.
AirQualityReadReport read_air_quality(const std::string& path);

void write_air_quality(const std::vector<StationReading>& stations,
                       const std::vector<SegmentPollution>& segment_values,
                       const std::string& path);

// Strictly increasing concentration upper bounds per pollutant; band i+1
// covers (bounds[i-1], bounds[i]], values above the last bound land in the
// overflow band (the "10+" of a 1..10+ index).
using AqiBandTable = std::map<Pollutant, std::vector<double>>;

AqiBandTable default_aqi_bands();
AqiBandTable load_aqi_bands(const std::string& path);

int compute_aqi(Pollutant pollutant, double concentration,
                const AqiBandTable& bands);

}  // namespace smellmap::ingest
