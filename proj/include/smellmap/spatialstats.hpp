#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "smellmap/geo.hpp"
#include "smellmap/profile.hpp"

namespace smellmap::stats {

// Per-segment scalar field sampled at segment midpoints (projected meters).
struct SpatialField {
    std::vector<std::string> ids;
    std::vector<double> values;
    std::vector<std::pair<double, double>> locations;

    std::size_t size() const { return ids.size(); }
};

double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Distance-class autocorrelation estimates. Class k covers
// (upper[k-1], upper[k]], the first class starts at 0 inclusive.
struct Correlogram {
    std::vector<double> upper;        // strictly increasing upper bounds
    std::vector<double> rho;          // clamped to [-1, 1]; NaN when no pairs
    std::vector<std::size_t> pairs;   // unordered pair count per class
};

// 20 (or n_classes) equal-width bounds spanning [0, max pairwise distance].
std::vector<double> equal_width_bounds(
    const std::vector<std::pair<double, double>>& locations, std::size_t n_classes);

// Estimate per class k: mean of z_i * z_j over pairs whose distance
// falls in class k, with z the population-standardized values.
Correlogram spatial_autocorr(const std::vector<double>& values,
                             const std::vector<std::pair<double, double>>& locations,
                             const std::vector<double>& class_bounds);

struct CorrelationResult {
    double r = 0.0;
    std::size_t n = 0;
    double n_eff = 0.0;  // in [3, n]
    double t = 0.0;
    double p = 1.0;
    bool fallback = false;  // variance estimate was non-positive; n_eff = n
};

// Pearson r with significance corrected for spatial autocorrelation: the
// correlogram products estimate var(r), the effective sample size
// n_eff = 1 + 1/var(r) replaces n in the t test (fractional df allowed).
// Pass empty class_bounds for the default 20 equal-width classes.
CorrelationResult corrected_correlation(const std::vector<double>& x,
                                        const std::vector<double>& y,
                                        const std::vector<std::pair<double, double>>& locations,
                                        const std::vector<double>& class_bounds = {});

// Aligns the two fields on shared segment ids first.
CorrelationResult corrected_correlation(const SpatialField& x, const SpatialField& y,
                                        const std::vector<double>& class_bounds = {});

// Two-sided p-value of a t statistic with (possibly fractional) df > 0.
double student_t_pvalue(double t, double df);

struct ReportRow {
    std::string category;
    std::string pollutant;
    std::string source;
    CorrelationResult result;
    bool skipped = false;
    std::string skip_reason;
};

// One corrected correlation per (category fraction, pollutant value) over
// the segments present in both inputs. Pairs with fewer than 10 shared
// segments or a constant field are skipped with a reason, never fatal.
std::vector<ReportRow> category_pollutant_report(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::pair<double, double>>& midpoints,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::string& source_label, std::size_t n_classes = 20);

struct CrossMatrix {
    std::vector<std::string> categories;
    std::vector<std::vector<double>> r;  // K x K, symmetric; NaN = undefined
};

// Corrected correlations between category fractions; diagonal 1. A category
// with zero variance gets a NaN row and column.
CrossMatrix category_cross_correlation(
    const std::vector<profile::SmellVector>& vectors,
    const std::vector<std::string>& categories,
    const std::map<std::string, std::pair<double, double>>& midpoints,
    std::size_t n_classes = 20);

struct TaggedPoint {
    std::string id;
    double x = 0.0, y = 0.0;
    std::vector<std::string> tags;  // matched smell words on this item
};

struct SweepRow {
    double size = 0.0;
    std::string category;
    std::string pollutant;
    double r = 0.0;
    double n_eff = 0.0;
    std::size_t segments_retained = 0;
    bool flagged = false;  // under 10 eligible segments or degenerate field
    std::string reason;
};

// Re-runs assignment, profiling, and corrected correlation once per buffer
// size. Sizes must be strictly increasing. Pairs empty means every
// (category, pollutant) combination.
std::vector<SweepRow> buffer_sweep(
    const std::vector<geo::ProjectedSegment>& segments,
    const std::vector<TaggedPoint>& items, const profile::Taxonomy& taxonomy,
    const std::map<std::string, std::map<std::string, double>>& pollutant_fields,
    const std::vector<std::pair<std::string, std::string>>& pairs,
    const std::vector<double>& sizes, std::size_t min_tags, std::size_t n_classes = 20);

void write_report(const std::vector<ReportRow>& rows, const std::string& path);
std::vector<ReportRow> read_report(const std::string& path);

void write_matrix(const CrossMatrix& m, const std::string& path);
CrossMatrix read_matrix(const std::string& path);

void write_sweep(const std::vector<SweepRow>& rows, const std::string& path);
std::vector<SweepRow> read_sweep(const std::string& path);

}  // namespace smellmap::stats
