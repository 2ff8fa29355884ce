#include "smellmap/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"

namespace smellmap::geo {

namespace {

constexpr double kEarthRadius = 6371000.0;
constexpr double kMetersPerDegree = M_PI / 180.0 * kEarthRadius;
constexpr double kValidityRadius = 150000.0;  // meters

}  // namespace

LocalProjection LocalProjection::centered_on(double lat, double lon) {
    if (!(lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0)) {
        throw ValidationError("projection origin outside WGS84 range");
    }
    if (std::abs(lat) > 85.0) {
        throw ValidationError("projection origin too close to a pole");
    }
    return LocalProjection{lat, lon};
}

LocalProjection LocalProjection::for_segments(
    const std::vector<ingest::StreetSegment>& segments) {
    double min_lat = 1e9, min_lon = 1e9, max_lat = -1e9, max_lon = -1e9;
    for (const auto& s : segments) {
        for (const auto& [lat, lon] : s.polyline) {
            min_lat = std::min(min_lat, lat);
            max_lat = std::max(max_lat, lat);
            min_lon = std::min(min_lon, lon);
            max_lon = std::max(max_lon, lon);
        }
    }
    if (min_lat > max_lat) throw ValidationError("no segment vertices to project");
    return centered_on((min_lat + max_lat) / 2.0, (min_lon + max_lon) / 2.0);
}

bool LocalProjection::valid(double lat, double lon) const {
    if (!(lat >= -90.0 && lat <= 90.0 && lon >= -180.0 && lon <= 180.0)) return false;
    const double y = (lat - origin_lat) * kMetersPerDegree;
    const double x =
        (lon - origin_lon) * kMetersPerDegree * std::cos(origin_lat * M_PI / 180.0);
    return std::hypot(x, y) < kValidityRadius;
}

std::pair<double, double> LocalProjection::project(double lat, double lon) const {
    if (!valid(lat, lon)) {
        throw ValidationError("point outside projection validity extent");
    }
    const double y = (lat - origin_lat) * kMetersPerDegree;
    const double x =
        (lon - origin_lon) * kMetersPerDegree * std::cos(origin_lat * M_PI / 180.0);
    return {x, y};
}

std::pair<double, double> LocalProjection::unproject(double x, double y) const {
    const double lat = origin_lat + y / kMetersPerDegree;
    const double lon =
        origin_lon + x / (kMetersPerDegree * std::cos(origin_lat * M_PI / 180.0));
    return {lat, lon};
}

void ProjectedSegment::recompute_bbox() {
    min_x = min_y = 1e18;
    max_x = max_y = -1e18;
    for (const auto& [x, y] : points) {
        min_x = std::min(min_x, x);
        max_x = std::max(max_x, x);
        min_y = std::min(min_y, y);
        max_y = std::max(max_y, y);
    }
}

std::pair<double, double> ProjectedSegment::midpoint() const {
    if (points.empty()) throw ValidationError("midpoint of empty polyline");
    double total = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        total += std::hypot(points[i].first - points[i - 1].first,
                            points[i].second - points[i - 1].second);
    }
    if (total <= 0.0) return points.front();
    double remaining = total / 2.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const double len = std::hypot(points[i].first - points[i - 1].first,
                                      points[i].second - points[i - 1].second);
        if (remaining <= len) {
            const double t = len > 0.0 ? remaining / len : 0.0;
            return {points[i - 1].first + t * (points[i].first - points[i - 1].first),
                    points[i - 1].second + t * (points[i].second - points[i - 1].second)};
        }
        remaining -= len;
    }
    return points.back();
}

std::vector<ProjectedSegment> project_segments(
    const std::vector<ingest::StreetSegment>& segments, const LocalProjection& proj) {
    std::vector<ProjectedSegment> out;
    out.reserve(segments.size());
    for (const auto& s : segments) {
        ProjectedSegment ps;
        ps.id = s.id;
        ps.points.reserve(s.polyline.size());
        for (const auto& [lat, lon] : s.polyline) {
            ps.points.push_back(proj.project(lat, lon));
        }
        ps.recompute_bbox();
        out.push_back(std::move(ps));
    }
    return out;
}

double point_segment_distance(double px, double py,
                              const std::vector<std::pair<double, double>>& polyline) {
    if (polyline.empty()) throw ValidationError("distance to empty polyline");
    if (polyline.size() == 1) {
        return std::hypot(px - polyline[0].first, py - polyline[0].second);
    }
    double best = 1e18;
    for (std::size_t i = 1; i < polyline.size(); ++i) {
        const auto [ax, ay] = polyline[i - 1];
        const auto [bx, by] = polyline[i];
        const double dx = bx - ax, dy = by - ay;
        const double len2 = dx * dx + dy * dy;
        double t = 0.0;
        if (len2 > 0.0) {
            t = ((px - ax) * dx + (py - ay) * dy) / len2;
            t = std::clamp(t, 0.0, 1.0);
        }
        best = std::min(best, std::hypot(px - (ax + t * dx), py - (ay + t * dy)));
    }
    return best;
}

SpatialIndex build_index(std::vector<ProjectedSegment> segments, double buffer_width) {
    if (buffer_width <= 0.0) throw ValidationError("buffer_width must be positive");
    SpatialIndex idx;
    idx.segments_ = std::move(segments);
    idx.buffer_width_ = buffer_width;
    if (idx.segments_.empty()) {
        idx.cells_.assign(1, {});
        return idx;
    }

    double min_x = 1e18, min_y = 1e18, max_x = -1e18, max_y = -1e18;
    for (const auto& s : idx.segments_) {
        min_x = std::min(min_x, s.min_x - buffer_width);
        min_y = std::min(min_y, s.min_y - buffer_width);
        max_x = std::max(max_x, s.max_x + buffer_width);
        max_y = std::max(max_y, s.max_y + buffer_width);
    }
    const double extent = std::max({max_x - min_x, max_y - min_y, 1.0});
    const std::size_t target =
        std::clamp<std::size_t>(
            static_cast<std::size_t>(std::ceil(std::sqrt(double(idx.segments_.size())))) * 2,
            1, 512);
    idx.min_x_ = min_x;
    idx.min_y_ = min_y;
    idx.cell_ = extent / static_cast<double>(target);
    idx.nx_ = static_cast<std::size_t>((max_x - min_x) / idx.cell_) + 1;
    idx.ny_ = static_cast<std::size_t>((max_y - min_y) / idx.cell_) + 1;
    idx.cells_.assign(idx.nx_ * idx.ny_, {});

    for (std::uint32_t i = 0; i < idx.segments_.size(); ++i) {
        const auto& s = idx.segments_[i];
        const auto cx0 = static_cast<std::size_t>((s.min_x - buffer_width - min_x) / idx.cell_);
        const auto cx1 = static_cast<std::size_t>((s.max_x + buffer_width - min_x) / idx.cell_);
        const auto cy0 = static_cast<std::size_t>((s.min_y - buffer_width - min_y) / idx.cell_);
        const auto cy1 = static_cast<std::size_t>((s.max_y + buffer_width - min_y) / idx.cell_);
        for (std::size_t cy = cy0; cy <= std::min(cy1, idx.ny_ - 1); ++cy) {
            for (std::size_t cx = cx0; cx <= std::min(cx1, idx.nx_ - 1); ++cx) {
                idx.cells_[cy * idx.nx_ + cx].push_back(i);
            }
        }
    }
    return idx;
}

std::vector<std::uint32_t> SpatialIndex::query(double x, double y) const {
    std::vector<std::uint32_t> out;
    if (segments_.empty()) return out;
    if (x < min_x_ || y < min_y_) return out;
    const auto cx = static_cast<std::size_t>((x - min_x_) / cell_);
    const auto cy = static_cast<std::size_t>((y - min_y_) / cell_);
    if (cx >= nx_ || cy >= ny_) return out;
    for (const auto i : cells_[cy * nx_ + cx]) {
        if (point_segment_distance(x, y, segments_[i].points) <= buffer_width_) {
            out.push_back(i);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

Assignment assign_items(const std::vector<ingest::GeoItem>& items,
                        const SpatialIndex& index, const LocalProjection& proj,
                        bool nearest_only) {
    // Stable result regardless of input order: process items sorted by id.
    std::vector<const ingest::GeoItem*> sorted;
    sorted.reserve(items.size());
    for (const auto& item : items) sorted.push_back(&item);
    std::sort(sorted.begin(), sorted.end(),
              [](const ingest::GeoItem* a, const ingest::GeoItem* b) { return a->id < b->id; });

    Assignment a;
    for (const auto* item : sorted) {
        if (!proj.valid(item->lat, item->lon)) {
            ++a.unassigned;
            continue;
        }
        const auto [x, y] = proj.project(item->lat, item->lon);
        auto hits = index.query(x, y);
        if (hits.empty()) {
            ++a.unassigned;
            continue;
        }
        if (nearest_only && hits.size() > 1) {
            double best = 1e18;
            std::uint32_t keep = hits.front();
            for (const auto i : hits) {
                const double d = point_segment_distance(x, y, index.segments()[i].points);
                if (d < best - 1e-12 ||
                    (d < best + 1e-12 && index.segments()[i].id < index.segments()[keep].id)) {
                    best = std::min(best, d);
                    keep = i;
                }
            }
            hits = {keep};
        }
        ++a.assigned;
        for (const auto i : hits) {
            a.items_by_segment[index.segments()[i].id].push_back(item->id);
        }
    }
    for (auto& [seg, ids] : a.items_by_segment) std::sort(ids.begin(), ids.end());
    return a;
}

std::optional<std::string> nearest_station(const ProjectedSegment& segment,
                                           const std::vector<ingest::StationReading>& stations,
                                           const LocalProjection& proj,
                                           double max_distance) {
    const auto [mx, my] = segment.midpoint();
    std::optional<std::string> best_id;
    double best = max_distance;
    std::set<std::string> seen;
    for (const auto& st : stations) {
        if (!seen.insert(st.station_id).second) continue;  // one location per station
        if (!proj.valid(st.lat, st.lon)) continue;
        const auto [x, y] = proj.project(st.lat, st.lon);
        const double d = std::hypot(x - mx, y - my);
        if (d > max_distance) continue;
        if (!best_id || d < best - 1e-9) {
            best = d;
            best_id = st.station_id;
        } else if (d < best + 1e-9 && st.station_id < *best_id) {
            best = std::min(best, d);
            best_id = st.station_id;
        }
    }
    return best_id;
}

void write_assignment(const Assignment& a, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write assignment: " + path);
    out << "segment_id,item_id\n";
    for (const auto& [seg, ids] : a.items_by_segment) {
        for (const auto& id : ids) {
            out << csv::format_row({seg, id});
        }
    }
}

Assignment read_assignment(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0] != std::vector<std::string>{"segment_id", "item_id"}) {
        throw ValidationError("assignment file missing segment_id,item_id header: " + path);
    }
    Assignment a;
    std::set<std::string> items;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != 2) {
            throw ValidationError("assignment row " + std::to_string(i + 1) +
                                  " does not have 2 fields");
        }
        a.items_by_segment[rows[i][0]].push_back(rows[i][1]);
        items.insert(rows[i][1]);
    }
    for (auto& [seg, ids] : a.items_by_segment) std::sort(ids.begin(), ids.end());
    a.assigned = items.size();
    return a;
}

}  // namespace smellmap::geo
