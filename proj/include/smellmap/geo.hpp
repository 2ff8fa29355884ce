#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "smellmap/ingest.hpp"

namespace smellmap::geo {

// Equirectangular projection around a city-scale origin: y grows north,
// x grows east, both in meters. Valid within 150 km of the origin, where
// the flat-earth error stays below 0.1%; city extents sit well inside that.
struct LocalProjection {
    double origin_lat = 0.0;
    double origin_lon = 0.0;

    static LocalProjection centered_on(double lat, double lon);
    // Origin at the centroid of the segments' bounding box.
    static LocalProjection for_segments(const std::vector<ingest::StreetSegment>& segments);

    bool valid(double lat, double lon) const;
    std::pair<double, double> project(double lat, double lon) const;    // (x, y)
    std::pair<double, double> unproject(double x, double y) const;      // (lat, lon)
};

struct ProjectedSegment {
    std::string id;
    std::vector<std::pair<double, double>> points;  // (x, y) meters
    double min_x = 0.0, min_y = 0.0, max_x = 0.0, max_y = 0.0;

    void recompute_bbox();
    std::pair<double, double> midpoint() const;  // halfway along arc length
};

std::vector<ProjectedSegment> project_segments(
    const std::vector<ingest::StreetSegment>& segments, const LocalProjection& proj);

// Minimum Euclidean distance from (px, py) to the polyline (endpoints
// included).
double point_segment_distance(double px, double py,
                              const std::vector<std::pair<double, double>>& polyline);

// Uniform grid over buffer-inflated segment bounding boxes. query() exact-
// filters its candidates, so it returns precisely the segments whose buffer
// contains the point.
class SpatialIndex {
public:
    // Returns indices into segments(), ascending.
    std::vector<std::uint32_t> query(double x, double y) const;

    const std::vector<ProjectedSegment>& segments() const { return segments_; }
    double buffer_width() const { return buffer_width_; }

private:
    friend SpatialIndex build_index(std::vector<ProjectedSegment> segments,
                                    double buffer_width);

    std::vector<ProjectedSegment> segments_;
    double buffer_width_ = 0.0;
    double min_x_ = 0.0, min_y_ = 0.0;
    double cell_ = 1.0;
    std::size_t nx_ = 1, ny_ = 1;
    std::vector<std::vector<std::uint32_t>> cells_;
};

SpatialIndex build_index(std::vector<ProjectedSegment> segments, double buffer_width);

struct Assignment {
    std::map<std::string, std::vector<std::string>> items_by_segment;  // sorted ids
    std::size_t assigned = 0;    // items landing in >= 1 buffer
    std::size_t unassigned = 0;
};

// Assigns every item to every segment whose buffer contains it. With
// nearest_only, an item inside several buffers goes only to the closest
// segment (ties to the lexicographically smallest id).
Assignment assign_items(const std::vector<ingest::GeoItem>& items,
                        const SpatialIndex& index, const LocalProjection& proj,
                        bool nearest_only = false);

// Station closest to the segment's midpoint, if within max_distance meters.
// Distance ties go to the lowest station id. Stations outside the projection
// extent are ignored.
std::optional<std::string> nearest_station(const ProjectedSegment& segment,
                                           const std::vector<ingest::StationReading>& stations,
                                           const LocalProjection& proj,
                                           double max_distance);

void write_assignment(const Assignment& a, const std::string& path);
Assignment read_assignment(const std::string& path);

}  // namespace smellmap::geo
