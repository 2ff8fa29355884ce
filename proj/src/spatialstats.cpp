#include "smellmap/spatialstats.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <boost/math/special_functions/beta.hpp>

#include "smellmap/csv.hpp"
#include "smellmap/errors.hpp"

namespace smellmap::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> standardize(const std::vector<double>& values) {
    double mean = 0.0;
    for (const double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    if (var <= 0.0) throw ValidationError("constant field has no autocorrelation");
    const double sigma = std::sqrt(var);
    std::vector<double> z;
    z.reserve(values.size());
    for (const double v : values) z.push_back((v - mean) / sigma);
    return z;
}

}  // namespace

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw ValidationError("pearson: length mismatch");
    if (x.size() < 3) throw ValidationError("pearson: need at least 3 samples");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) throw ValidationError("pearson: zero-variance input");
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> equal_width_bounds(
    const std::vector<std::pair<double, double>>& locations, std::size_t n_classes) {
    if (n_classes == 0) throw ValidationError("need at least one distance class");
    double max_d = 0.0;
    for (std::size_t i = 0; i < locations.size(); ++i) {
        for (std::size_t j = i + 1; j < locations.size(); ++j) {
            max_d = std::max(max_d, std::hypot(locations[i].first - locations[j].first,
                                               locations[i].second - locations[j].second));
        }
    }
    if (max_d <= 0.0) max_d = 1.0;  // coincident locations: one degenerate bin set
    std::vector<double> bounds;
    bounds.reserve(n_classes);
    for (std::size_t k = 1; k < n_classes; ++k) {
        bounds.push_back(max_d * static_cast<double>(k) / static_cast<double>(n_classes));
    }
    // The last bound is max_d itself; scaling it up and back down can round
    // below max_d and leave the largest pair uncovered.
    bounds.push_back(max_d);
    return bounds;
}

namespace {

void check_bounds(const std::vector<double>& bounds) {
    if (bounds.empty()) throw ValidationError("empty distance class bounds");
    for (std::size_t i = 0; i < bounds.size(); ++i) {
        if (bounds[i] <= 0.0 || (i > 0 && bounds[i] <= bounds[i - 1])) {
            throw ValidationError("distance class bounds must be positive and strictly increasing");
        }
    }
}

std::size_t class_of(double d, const std::vector<double>& bounds) {
    const auto it = std::lower_bound(bounds.begin(), bounds.end(), d);
    if (it == bounds.end()) {
        throw ValidationError("distance classes do not cover observed distances");
    }
    return static_cast<std::size_t>(it - bounds.begin());
}

}  // namespace

Correlogram spatial_autocorr(const std::vector<double>& values,
                             const std::vector<std::pair<double, double>>& locations,
                             const std::vector<double>& class_bounds) {
    if (values.size() != locations.size()) {
        throw ValidationError("spatial_autocorr: values and locations differ in length");
    }
    if (values.size() < 2) throw ValidationError("spatial_autocorr: need at least 2 samples");
    check_bounds(class_bounds);
    {
        std::set<std::pair<double, double>> distinct(locations.begin(), locations.end());
        if (distinct.size() < 2) {
            throw ValidationError("spatial_autocorr: need at least 2 distinct locations");
        }
    }
    const std::vector<double> z = standardize(values);

    Correlogram cg;
    cg.upper = class_bounds;
    cg.rho.assign(class_bounds.size(), 0.0);
    cg.pairs.assign(class_bounds.size(), 0);
    for (std::size_t i = 0; i < z.size(); ++i) {
        for (std::size_t j = i + 1; j < z.size(); ++j) {
            const double d = std::hypot(locations[i].first - locations[j].first,
                                        locations[i].second - locations[j].second);
            const std::size_t k = class_of(d, class_bounds);
            cg.rho[k] += z[i] * z[j];
            cg.pairs[k] += 1;
        }
    }
    for (std::size_t k = 0; k < cg.rho.size(); ++k) {
        if (cg.pairs[k] == 0) {
            cg.rho[k] = kNaN;
        } else {
            cg.rho[k] = std::clamp(cg.rho[k] / static_cast<double>(cg.pairs[k]), -1.0, 1.0);
        }
    }
    return cg;
}

double student_t_pvalue(double t, double df) {
    if (df <= 0.0) throw ValidationError("t test needs positive degrees of freedom");
    if (std::isinf(t)) return 0.0;
    if (std::isnan(t)) return kNaN;
    const double x = df / (df + t * t);
    return boost::math::ibeta(df / 2.0, 0.5, x);
}

CorrelationResult corrected_correlation(const std::vector<double>& x,
                                        const std::vector<double>& y,
                                        const std::vector<std::pair<double, double>>& locations,
                                        const std::vector<double>& class_bounds) {
    if (x.size() != y.size() || x.size() != locations.size()) {
        throw ValidationError("corrected_correlation: input lengths differ");
    }
    const std::size_t n = x.size();
    if (n < 10) throw ValidationError("corrected_correlation: need at least 10 samples");

    const std::vector<double> bounds =
        class_bounds.empty() ? equal_width_bounds(locations, 20) : class_bounds;

    CorrelationResult res;
    res.n = n;
    res.r = pearson(x, y);

    const Correlogram cx = spatial_autocorr(x, locations, bounds);
    const Correlogram cy = spatial_autocorr(y, locations, bounds);

    // var(r) = (1/n^2) * sum over ordered pairs of rho_x * rho_y; the i = j
    // "zero-distance" terms contribute n * 1 * 1, each unordered pair twice.
    double var = static_cast<double>(n);
    for (std::size_t k = 0; k < bounds.size(); ++k) {
        if (cx.pairs[k] == 0) continue;
        var += 2.0 * static_cast<double>(cx.pairs[k]) * cx.rho[k] * cy.rho[k];
    }
    var /= static_cast<double>(n) * static_cast<double>(n);

    if (var <= 0.0) {
        res.fallback = true;
        res.n_eff = static_cast<double>(n);
    } else {
        res.n_eff = std::clamp(1.0 + 1.0 / var, 3.0, static_cast<double>(n));
    }

    if (std::abs(res.r) >= 1.0) {
        res.t = std::numeric_limits<double>::infinity() * (res.r > 0 ? 1.0 : -1.0);
        res.p = 0.0;
    } else {
        res.t = res.r * std::sqrt((res.n_eff - 2.0) / (1.0 - res.r * res.r));
        res.p = student_t_pvalue(res.t, res.n_eff - 2.0);
    }
    return res;
}

CorrelationResult corrected_correlation(const SpatialField& x, const SpatialField& y,
                                        const std::vector<double>& class_bounds) {
    if (x.ids.size() != x.values.size() || x.ids.size() != x.locations.size() ||
        y.ids.size() != y.values.size() || y.ids.size() != y.locations.size()) {
        throw ValidationError("corrected_correlation: ragged SpatialField");
    }
    std::map<std::string, std::size_t> y_pos;
    for (std::size_t i = 0; i < y.ids.size(); ++i) y_pos[y.ids[i]] = i;

    std::vector<double> xv, yv;
    std::vector<std::pair<double, double>> loc;
    for (std::size_t i = 0; i < x.ids.size(); ++i) {
        const auto it = y_pos.find(x.ids[i]);
        if (it == y_pos.end()) continue;
        xv.push_back(x.values[i]);
        yv.push_back(y.values[it->second]);
        loc.push_back(x.locations[i]);
    }
    return corrected_correlation(xv, yv, loc, class_bounds);
}

std::vector<ReportRow> category_pollutant_report(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::pair<double, double>>& midpoints,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::string& source_label, std::size_t n_classes) {
    std::vector<ReportRow> rows;
    for (const auto& [pollutant, by_segment] : pollutant_fields) {
        // Segments with a smell vector, a midpoint, and a pollutant value.
        std::vector<const profile::SmellVector*> usable;
        std::vector<std::pair<double, double>> loc;
        std::vector<double> pol;
        for (const auto& v : vectors) {
            const auto mit = midpoints.find(v.segment_id);
            const auto pit = by_segment.find(v.segment_id);
            if (mit == midpoints.end() || pit == by_segment.end()) continue;
            usable.push_back(&v);
            loc.push_back(mit->second);
            pol.push_back(pit->second);
        }
        std::vector<double> bounds;
        if (usable.size() >= 10) bounds = equal_width_bounds(loc, n_classes);

        for (std::size_t c = 0; c < categories.size(); ++c) {
            ReportRow row;
            row.category = categories[c];
            row.pollutant = pollutant;
            row.source = source_label;
            if (usable.size() < 10) {
                row.skipped = true;
                row.skip_reason = "fewer than 10 segments with data";
                rows.push_back(std::move(row));
                continue;
            }
            std::vector<double> frac;
            frac.reserve(usable.size());
            for (const auto* v : usable) frac.push_back(v->fractions.at(c));
            try {
                row.result = corrected_correlation(frac, pol, loc, bounds);
            } catch (const ValidationError& e) {
                row.skipped = true;
                row.skip_reason = e.what();
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

CrossMatrix category_cross_correlation(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::pair<double, double>>& midpoints,
    std::size_t n_classes) {
    std::vector<const profile::SmellVector*> usable;
    std::vector<std::pair<double, double>> loc;
    for (const auto& v : vectors) {
        const auto mit = midpoints.find(v.segment_id);
        if (mit == midpoints.end()) continue;
        usable.push_back(&v);
        loc.push_back(mit->second);
    }
    if (usable.size() < 10) {
        throw ValidationError("cross correlation needs at least 10 segments");
    }

    const std::size_t K = categories.size();
    CrossMatrix m;
    m.categories = categories;
    m.r.assign(K, std::vector<double>(K, kNaN));

    std::vector<std::vector<double>> frac(K);
    std::vector<bool> degenerate(K, false);
    for (std::size_t c = 0; c < K; ++c) {
        for (const auto* v : usable) frac[c].push_back(v->fractions.at(c));
        const double first = frac[c].front();
        degenerate[c] = std::all_of(frac[c].begin(), frac[c].end(),
                                    [&](double x) { return x == first; });
    }
    const std::vector<double> bounds = equal_width_bounds(loc, n_classes);
    for (std::size_t a = 0; a < K; ++a) {
        if (degenerate[a]) continue;
        m.r[a][a] = 1.0;
        for (std::size_t b = a + 1; b < K; ++b) {
            if (degenerate[b]) continue;
            const auto res = corrected_correlation(frac[a], frac[b], loc, bounds);
            m.r[a][b] = m.r[b][a] = res.r;
        }
    }
    return m;
}

std::vector<SweepRow> buffer_sweep(
    const std::vector<geo::ProjectedSegment>& segments,
    const std::vector<TaggedPoint>& items, const profile::Taxonomy& taxonomy,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<double>& sizes, std::size_t min_tags, std::size_t n_classes) {
    if (sizes.empty()) throw ValidationError("buffer_sweep: no sizes given");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
        if (sizes[i] <= 0.0 || (i > 0 && sizes[i] <= sizes[i - 1])) {
            throw ValidationError("buffer_sweep: sizes must be positive and strictly increasing");
        }
    }
    std::vector<std::pair<std::string, std::string>> wanted = pairs;
    if (wanted.empty()) {
        for (const auto& cat : taxonomy.categories) {
            for (const auto& [pol, f] : pollutant_fields) {
                (void)f;
                wanted.emplace_back(cat, pol);
            }
        }
    }
    for (const auto& [cat, pol] : wanted) {
        if (std::find(taxonomy.categories.begin(), taxonomy.categories.end(), cat) ==
            taxonomy.categories.end()) {
            throw ValidationError("buffer_sweep: unknown category '" + cat + "'");
        }
        if (!pollutant_fields.count(pol)) {
            throw ValidationError("buffer_sweep: no field for pollutant '" + pol + "'");
        }
    }

    std::map<std::string, std::pair<double, double>> midpoints;
    for (const auto& s : segments) midpoints[s.id] = s.midpoint();

    std::vector<SweepRow> rows;
    for (const double size : sizes) {
        const geo::SpatialIndex index = geo::build_index(segments, size);
        std::map<std::string, std::vector<std::string>> tags_by_segment;
        for (const auto& item : items) {
            for (const auto i : index.query(item.x, item.y)) {
                auto& tags = tags_by_segment[index.segments()[i].id];
                tags.insert(tags.end(), item.tags.begin(), item.tags.end());
            }
        }
        std::vector<profile::SmellVector> vectors;
        for (const auto& [seg, tags] : tags_by_segment) {
            auto v = profile::segment_smell_vector(seg, tags, taxonomy, min_tags);
            if (v) vectors.push_back(std::move(*v));
        }

        for (const auto& [cat, pol] : wanted) {
            SweepRow row;
            row.size = size;
            row.category = cat;
            row.pollutant = pol;
            const auto& by_segment = pollutant_fields.at(pol);
            std::vector<double> frac, polv;
            std::vector<std::pair<double, double>> loc;
            const std::size_t c = static_cast<std::size_t>(
                std::find(taxonomy.categories.begin(), taxonomy.categories.end(), cat) -
                taxonomy.categories.begin());
            for (const auto& v : vectors) {
                const auto pit = by_segment.find(v.segment_id);
                if (pit == by_segment.end()) continue;
                frac.push_back(v.fractions.at(c));
                polv.push_back(pit->second);
                loc.push_back(midpoints.at(v.segment_id));
            }
            row.segments_retained = frac.size();
            if (frac.size() < 10) {
                row.flagged = true;
                row.reason = "fewer than 10 eligible segments";
                row.r = kNaN;
                row.n_eff = kNaN;
            } else {
                try {
                    const auto res =
                        corrected_correlation(frac, polv, loc,
                                              equal_width_bounds(loc, n_classes));
                    row.r = res.r;
                    row.n_eff = res.n_eff;
                } catch (const ValidationError& e) {
                    row.flagged = true;
                    row.reason = e.what();
                    row.r = kNaN;
                    row.n_eff = kNaN;
                }
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

void write_report(const std::vector<ReportRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write report: " + path);
    out << "category,pollutant,source,r,n,n_eff,t,p\n";
    for (const auto& row : rows) {
        if (row.skipped) continue;
        out << csv::format_row({row.category, row.pollutant, row.source,
                                csv::format_double(row.result.r),
                                std::to_string(row.result.n),
                                csv::format_double(row.result.n_eff),
                                csv::format_double(row.result.t),
                                csv::format_double(row.result.p)});
    }
}

std::vector<ReportRow> read_report(const std::string& path) {
    const auto rows = csv::read_file(path);
    const std::vector<std::string> header{"category", "pollutant", "source",
                                          "r",        "n",         "n_eff",
                                          "t",        "p"};
    if (rows.empty() || rows[0] != header) {
        throw ValidationError("report file missing expected header: " + path);
    }
    std::vector<ReportRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            throw ValidationError("report row " + std::to_string(i + 1) + " has wrong width");
        }
        ReportRow row;
        row.category = rows[i][0];
        row.pollutant = rows[i][1];
        row.source = rows[i][2];
        try {
            row.result.r = std::stod(rows[i][3]);
            row.result.n = std::stoull(rows[i][4]);
            row.result.n_eff = std::stod(rows[i][5]);
            row.result.t = std::stod(rows[i][6]);
            row.result.p = std::stod(rows[i][7]);
        } catch (const std::exception&) {
            throw ValidationError("report row " + std::to_string(i + 1) +
                                  " has a non-numeric value");
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_matrix(const CrossMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write matrix: " + path);
    std::vector<std::string> header{"category"};
    header.insert(header.end(), m.categories.begin(), m.categories.end());
    out << csv::format_row(header);
    for (std::size_t a = 0; a < m.categories.size(); ++a) {
        std::vector<std::string> row{m.categories[a]};
        for (const double v : m.r.at(a)) row.push_back(csv::format_double(v));
        out << csv::format_row(row);
    }
}

CrossMatrix read_matrix(const std::string& path) {
    const auto rows = csv::read_file(path);
    if (rows.empty() || rows[0].empty() || rows[0][0] != "category") {
        throw ValidationError("matrix file missing header: " + path);
    }
    CrossMatrix m;
    m.categories.assign(rows[0].begin() + 1, rows[0].end());
    if (rows.size() != m.categories.size() + 1) {
        throw ValidationError("matrix file is not square: " + path);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size() || rows[i][0] != m.categories[i - 1]) {
            throw ValidationError("matrix row " + std::to_string(i + 1) +
                                  " does not mirror the header");
        }
        std::vector<double> vals;
        for (std::size_t j = 1; j < rows[i].size(); ++j) {
            try {
                vals.push_back(std::stod(rows[i][j]));
            } catch (const std::exception&) {
                throw ValidationError("matrix row " + std::to_string(i + 1) +
                                      " has a non-numeric value");
            }
        }
        m.r.push_back(std::move(vals));
    }
    return m;
}

void write_sweep(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot write sweep: " + path);
    out << "size,category,pollutant,r,n_eff,segments_retained\n";
    for (const auto& row : rows) {
        out << csv::format_row({csv::format_double(row.size), row.category, row.pollutant,
                                csv::format_double(row.r), csv::format_double(row.n_eff),
                                std::to_string(row.segments_retained)});
    }
}

std::vector<SweepRow> read_sweep(const std::string& path) {
    const auto rows = csv::read_file(path);
    const std::vector<std::string> header{"size",  "category", "pollutant",
                                          "r",     "n_eff",    "segments_retained"};
    if (rows.empty() || rows[0] != header) {
        throw ValidationError("sweep file missing expected header: " + path);
    }
    std::vector<SweepRow> out;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].size() != header.size()) {
            throw ValidationError("sweep row " + std::to_string(i + 1) + " has wrong width");
        }
        SweepRow row;
        row.category = rows[i][1];
        row.pollutant = rows[i][2];
        try {
            row.size = std::stod(rows[i][0]);
            row.r = std::stod(rows[i][3]);
            row.n_eff = std::stod(rows[i][4]);
            row.segments_retained = std::stoull(rows[i][5]);
        } catch (const std::exception&) {
            throw ValidationError("sweep row " + std::to_string(i + 1) +
                                  " has a non-numeric value");
        }
        row.flagged = std::isnan(row.r);
        out.push_back(std::move(row));
    }
    return out;
}

}  // namespace smellmap::stats
